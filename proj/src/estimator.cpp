#include "latnet/estimator.hpp"

#include "latnet/error.hpp"
#include "latnet/parallel.hpp"
#include "latnet/stats.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace latnet {

namespace {

void check_panel(const PanelData& panel) {
  if (panel.prices.rows() != panel.consumption.rows() ||
      panel.prices.cols() != panel.consumption.cols())
    throw StructuralError("panel: prices and consumption differ in shape");
  if (panel.n() < 2 || panel.n_observable() < 1)
    throw StructuralError("panel: need n >= 2 and at least one observable node");
}

RowDiagnostics diagnose(const char* stage, Index row, const SolveResult& r) {
  return {stage, row, r.status, r.iterations, r.objective, r.feasibility_residual,
          r.certificate_gap};
}

void require_optimal(const char* stage, Index row, const SolveResult& r) {
  if (r.status != SolveResult::Status::optimal)
    throw ConvergenceError(std::string(stage) + " row " + std::to_string(row) + ": " +
                           to_string(r.status) + " after " + std::to_string(r.iterations) +
                           " Newton steps (feasibility " + std::to_string(r.feasibility_residual) +
                           ", gap " + std::to_string(r.certificate_gap) + ")");
}

// Residuals e_t = y_t - (v - W p_t), n x |V_O|.
Matrix residuals(const PanelData& panel, const Vector& v, const Matrix& w) {
  Matrix e = panel.consumption + panel.prices * w.transpose();
  e.rowwise() -= v.transpose();
  return e;
}

struct Scores {
  Matrix a;  ///< X Psi^T, n x d
  Matrix e;  ///< residuals, n x |V_O|
};

Scores scores(const PanelData& panel, const Vector& v_hat, const Matrix& w_hat,
              const Matrix& psi_hat) {
  const Index d = panel.n_observable() + 1;
  if (psi_hat.rows() != d || psi_hat.cols() != d || w_hat.rows() != d - 1 ||
      w_hat.cols() != d - 1 || v_hat.size() != d - 1)
    throw StructuralError("thresholds: estimate shapes do not match the panel");
  return {intercept_design(panel.prices) * psi_hat.transpose(), residuals(panel, v_hat, w_hat)};
}

// sigma(k, j)^2 = mean_t (A_{t, j+1} e_{t, k})^2.
Matrix sigma_from_scores(const Scores& s) {
  const double inv_n = 1.0 / static_cast<double>(s.e.rows());
  Matrix a2 = s.a.rightCols(s.a.cols() - 1).array().square();
  Matrix e2 = s.e.array().square();
  return (inv_n * (e2.transpose() * a2)).cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

PivotalConstants pivotal_constants(const PanelData& panel) {
  check_panel(panel);
  const double n = static_cast<double>(panel.n());
  const double vo = static_cast<double>(panel.n_observable());
  double fourth = panel.prices.array().square().square().colwise().mean().maxCoeff();
  PivotalConstants c;
  c.m_n = std::sqrt(std::max(1.0, fourth));
  c.tau = 1.0 / (4.0 * c.m_n);
  c.lambda = stats::normal_quantile(1.0 - 1.0 / (3.0 * n * vo * vo)) / std::sqrt(n);
  return c;
}

Step1Result step1_preliminary(const PanelData& panel, const PivotalConstants& constants,
                              const StageOptions& options) {
  check_panel(panel);
  const Index vo = panel.n_observable();
  const double lambda = options.lambda_override.value_or(constants.lambda);
  auto design = DesignMoments::from_design(intercept_design(panel.prices));
  std::vector<SolveResult> rows(static_cast<std::size_t>(vo));
  parallel_for(static_cast<std::size_t>(vo), options.threads, [&](std::size_t k) {
    auto program = make_dantzig_row(design, panel.consumption.col(static_cast<Index>(k)),
                                    static_cast<Index>(k), lambda, constants.tau);
    rows[k] = solve_row(program, options.solver);
  });
  Step1Result out;
  out.v_hat.resize(vo);
  out.w_hat.resize(vo, vo);
  out.z_hat.resize(vo);
  for (Index k = 0; k < vo; ++k) {
    const SolveResult& r = rows[static_cast<std::size_t>(k)];
    out.diagnostics.push_back(diagnose("step1", k, r));
    require_optimal("step1", k, r);
    out.v_hat(k) = r.solution(0);
    out.w_hat.row(k) = r.solution.tail(vo).transpose();
    out.z_hat(k) = r.z;
  }
  return out;
}

Step2Result step2_debias(const PanelData& panel, const PivotalConstants& constants,
                         const StageOptions& options) {
  check_panel(panel);
  const Index d = panel.n_observable() + 1;
  const double lambda = options.lambda_override.value_or(constants.lambda);
  auto design = DesignMoments::from_design(intercept_design(panel.prices));
  std::vector<SolveResult> rows(static_cast<std::size_t>(d));
  parallel_for(static_cast<std::size_t>(d), options.threads, [&](std::size_t k) {
    rows[k] = solve_row(make_debias_row(design, static_cast<Index>(k), lambda), options.solver);
  });
  Step2Result out;
  out.psi_hat.resize(d, d);
  out.z_hat.resize(d);
  for (Index k = 0; k < d; ++k) {
    const SolveResult& r = rows[static_cast<std::size_t>(k)];
    out.diagnostics.push_back(diagnose("step2", k, r));
    require_optimal("step2", k, r);
    out.psi_hat.row(k) = r.solution.transpose();
    out.z_hat(k) = r.z;
  }
  return out;
}

Debiased step3_debiased(const PanelData& panel, const Vector& v_hat, const Matrix& w_hat,
                        const Matrix& psi_hat) {
  check_panel(panel);
  const Index vo = panel.n_observable();
  if (v_hat.size() != vo || w_hat.rows() != vo || w_hat.cols() != vo ||
      psi_hat.rows() != vo + 1 || psi_hat.cols() != vo + 1)
    throw StructuralError("step3: shapes do not match the panel");
  Matrix x = intercept_design(panel.prices);
  Matrix cross = x.transpose() * residuals(panel, v_hat, w_hat) / static_cast<double>(panel.n());
  Matrix stacked(vo + 1, vo);  // (-v^T; W^T)
  stacked.row(0) = -v_hat.transpose();
  stacked.bottomRows(vo) = w_hat.transpose();
  stacked -= psi_hat * cross;
  return {-stacked.row(0).transpose(), stacked.bottomRows(vo).transpose()};
}

Thresholds thresholds_self_normalized(const PanelData& panel, const Vector& v_hat,
                                      const Matrix& w_hat, const Matrix& psi_hat,
                                      const PivotalConstants& constants) {
  check_panel(panel);
  if (panel.n() < 8) throw ConfigError("self-normalized thresholds need n >= 8");
  Thresholds t;
  t.sigma_hat = sigma_from_scores(scores(panel, v_hat, w_hat, psi_hat));
  double factor = 2.0 * (1.0 + 1.0 / std::log(static_cast<double>(panel.n())));
  t.mu = factor * constants.lambda * t.sigma_hat;
  t.cv_star = std::numeric_limits<double>::quiet_NaN();
  return t;
}

Thresholds thresholds_bootstrap(const PanelData& panel, const Vector& v_hat, const Matrix& w_hat,
                                const Matrix& psi_hat, double alpha, int draws,
                                std::uint64_t seed, unsigned threads) {
  check_panel(panel);
  if (draws < 200) throw ConfigError("bootstrap needs at least 200 draws");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("bootstrap alpha must lie in [0, 1]");
  const Index n = panel.n();
  const Index vo = panel.n_observable();
  Scores s = scores(panel, v_hat, w_hat, psi_hat);
  Thresholds t;
  t.sigma_hat = sigma_from_scores(s);

  Matrix inv_sigma = Matrix::Zero(vo, vo);
  for (Index k = 0; k < vo; ++k)
    for (Index j = 0; j < vo; ++j) {
      if (t.sigma_hat(k, j) > 0.0) inv_sigma(k, j) = 1.0 / t.sigma_hat(k, j);
      else ++t.excluded;
    }
  if (t.excluded > 0)
    t.warnings.push_back(std::to_string(t.excluded) +
                         " entries with sigma_hat = 0 excluded from the bootstrap maximum");

  Matrix a = s.a.rightCols(vo);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  stats::RngStream root = stats::RngStream(seed).child("bootstrap");
  std::vector<double> maxima(static_cast<std::size_t>(draws));
  parallel_for(maxima.size(), threads, [&](std::size_t b) {
    stats::RngStream rng = root.child(static_cast<std::uint64_t>(b));
    Vector xi(n);
    for (Index i = 0; i < n; ++i) xi(i) = rng.normal();
    Matrix stat = scale * (s.e.transpose() * (a.array().colwise() * xi.array()).matrix());
    maxima[b] = stat.cwiseProduct(inv_sigma).cwiseAbs().maxCoeff();
  });
  t.cv_star = alpha >= 1.0 ? 0.0 : stats::empirical_quantile(maxima, 1.0 - alpha);
  t.mu = (2.0 * t.cv_star * scale) * t.sigma_hat;
  return t;
}

Matrix step4_threshold(const Matrix& w_check, const Matrix& mu) {
  if (w_check.rows() != mu.rows() || w_check.cols() != mu.cols())
    throw StructuralError("step4: W and mu differ in shape");
  return (w_check.array().abs() > mu.array()).select(w_check, 0.0);
}

std::string to_string(ThresholdMode m) {
  return m == ThresholdMode::bootstrap ? "bootstrap" : "self_normalized";
}

ThresholdMode threshold_mode_from_string(const std::string& s) {
  if (s == "self_normalized") return ThresholdMode::self_normalized;
  if (s == "bootstrap") return ThresholdMode::bootstrap;
  throw ConfigError("unknown threshold mode '" + s + "'");
}

EstimationResult estimate(const PanelData& panel, const EstimatorOptions& options) {
  using clock = std::chrono::steady_clock;
  EstimationResult res;
  res.options = options;
  auto stage = [&](const char* name, auto&& fn) {
    auto start = clock::now();
    try {
      fn();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(name) + ": " + e.what());
    } catch (const StructuralError& e) {
      throw StructuralError(std::string(name) + ": " + e.what());
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string(name) + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError(std::string(name) + ": " + e.what());
    }
    res.seconds[name] = std::chrono::duration<double>(clock::now() - start).count();
  };

  stage("constants", [&] { res.constants = pivotal_constants(panel); });
  stage("step1", [&] {
    Step1Result s1 = step1_preliminary(panel, res.constants, options.stage);
    res.v_hat = std::move(s1.v_hat);
    res.w_hat = std::move(s1.w_hat);
    res.z_hat = std::move(s1.z_hat);
    res.diagnostics = std::move(s1.diagnostics);
  });
  stage("step2", [&] {
    Step2Result s2 = step2_debias(panel, res.constants, options.stage);
    res.psi_hat = std::move(s2.psi_hat);
    res.psi_z_hat = std::move(s2.z_hat);
    res.diagnostics.insert(res.diagnostics.end(), s2.diagnostics.begin(), s2.diagnostics.end());
  });
  stage("step3", [&] {
    Debiased d = step3_debiased(panel, res.v_hat, res.w_hat, res.psi_hat);
    res.v_check = std::move(d.v_check);
    res.w_check = std::move(d.w_check);
  });
  stage("thresholds", [&] {
    if (options.mode == ThresholdMode::bootstrap) {
      res.thresholds = thresholds_bootstrap(panel, res.v_hat, res.w_hat, res.psi_hat,
                                            options.alpha, options.bootstrap_draws, options.seed,
                                            options.stage.threads);
      Matrix half = (res.thresholds.cv_star / std::sqrt(static_cast<double>(panel.n()))) *
                    res.thresholds.sigma_hat;
      res.ci_lower = res.w_check - half;
      res.ci_upper = res.w_check + half;
    } else {
      res.thresholds =
          thresholds_self_normalized(panel, res.v_hat, res.w_hat, res.psi_hat, res.constants);
    }
  });
  stage("step4", [&] { res.w_check_mu = step4_threshold(res.w_check, res.thresholds.mu); });
  return res;
}

}  // namespace latnet
