#include "latnet/equilibrium.hpp"
#include "latnet/error.hpp"
#include "latnet/estimator.hpp"
#include "support/examples.hpp"

#include <doctest.h>

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

using namespace latnet;

namespace {

PanelData manual_panel(Matrix prices, Matrix consumption) {
  PanelData p;
  p.observable_ids.resize(static_cast<std::size_t>(prices.cols()));
  for (Index j = 0; j < prices.cols(); ++j) p.observable_ids[static_cast<std::size_t>(j)] = j;
  p.prices = std::move(prices);
  p.consumption = std::move(consumption);
  return p;
}

PanelData simulated(Index nodes, Index n, double sigma, std::uint64_t seed, Index bandwidth = 2) {
  auto inst = generate_banded(fixtures::common(nodes, seed), bandwidth);
  return simulate_panel(inst, n, PriceSampler{}, ShockModel::defaults(inst, sigma), seed + 1);
}

Matrix ols(const PanelData& p) {
  Matrix x(p.n(), p.n_observable() + 1);
  x.col(0).setOnes();
  x.rightCols(p.n_observable()) = p.prices;
  return (x.transpose() * x).ldlt().solve(x.transpose() * p.consumption);
}

}  // namespace

TEST_CASE("pivotal constants") {
  Matrix prices = Matrix::Constant(10, 3, 0.9);
  auto c = pivotal_constants(manual_panel(prices, prices));
  CHECK(c.m_n == 1.0);
  CHECK(c.tau == 0.25);
  auto two = pivotal_constants(manual_panel(Matrix::Constant(10, 3, 2.0), prices));
  CHECK(two.m_n == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(two.tau == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  auto big = pivotal_constants(manual_panel(Matrix::Constant(100, 10, 0.5), Matrix::Zero(100, 10)));
  // Phi^{-1}(1 - 1/30000) / 10 from a 30-digit reference.
  CHECK(std::abs(big.lambda - 0.39878789366069174216) < 1e-12);
  CHECK(std::abs(big.lambda - 0.3985) < 5e-4);
}

TEST_CASE("step 1 dominates the truth on a noiseless panel") {
  auto inst = generate_banded(fixtures::common(8, 3), 1);
  auto d = derive(inst);
  auto panel = simulate_panel(inst, 40, PriceSampler{}, ShockModel::defaults(inst, 0.0), 2);
  auto c = pivotal_constants(panel);
  auto s1 = step1_preliminary(panel, c);
  const Index vo = panel.n_observable();
  for (Index k = 0; k < vo; ++k) {
    double est = std::abs(s1.v_hat(k)) + s1.w_hat.row(k).cwiseAbs().sum() + c.tau * s1.z_hat(k);
    double truth = std::abs(d.v_o(k)) + d.h_inv.row(k).cwiseAbs().sum();  // residuals vanish, so z = 0
    CHECK(est <= truth + 1e-6);
  }
}

TEST_CASE("step 1 with lambda forced to zero reproduces least squares") {
  auto panel = simulated(10, 60, 0.0, 4);
  auto c = pivotal_constants(panel);
  StageOptions opt;
  opt.lambda_override = 0.0;
  auto s1 = step1_preliminary(panel, c, opt);
  Matrix beta = ols(panel);
  CHECK((s1.v_hat - beta.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((s1.w_hat + beta.bottomRows(panel.n_observable()).transpose()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("step 1 returns points satisfying the moment constraints") {
  auto panel = simulated(12, 200, 0.1, 5);
  auto c = pivotal_constants(panel);
  auto s1 = step1_preliminary(panel, c);
  Matrix x = intercept_design(panel.prices);
  Matrix e = panel.consumption - (Vector::Ones(panel.n()) * s1.v_hat.transpose() - panel.prices * s1.w_hat.transpose());
  Matrix moments = x.transpose() * e / static_cast<double>(panel.n());
  for (Index k = 0; k < panel.n_observable(); ++k)
    CHECK(moments.col(k).cwiseAbs().maxCoeff() <= c.lambda * s1.z_hat(k) + 1e-7);
  for (const auto& diag : s1.diagnostics) CHECK(diag.status == SolveResult::Status::optimal);
}

TEST_CASE("steps 1 and 2 ignore the order of observations") {
  auto panel = simulated(10, 120, 0.1, 6);
  auto shuffled = panel;
  for (Index t = 0; t < panel.n(); ++t) {
    Index s = (t * 37 + 11) % panel.n();
    shuffled.prices.row(s) = panel.prices.row(t);
    shuffled.consumption.row(s) = panel.consumption.row(t);
  }
  auto c = pivotal_constants(panel);
  auto a1 = step1_preliminary(panel, c), b1 = step1_preliminary(shuffled, c);
  CHECK((a1.w_hat - b1.w_hat).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a1.v_hat - b1.v_hat).cwiseAbs().maxCoeff() < 1e-10);
  auto a2 = step2_debias(panel, c), b2 = step2_debias(shuffled, c);
  CHECK((a2.psi_hat - b2.psi_hat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("step 2 debiasing matrix is feasible and close to the inverse Gram") {
  auto panel = simulated(10, 2000, 0.1, 7);
  auto c = pivotal_constants(panel);
  auto s2 = step2_debias(panel, c);
  Matrix x = intercept_design(panel.prices);
  Matrix sigma = x.transpose() * x / static_cast<double>(panel.n());
  Matrix gap = s2.psi_hat * sigma - Matrix::Identity(sigma.rows(), sigma.cols());
  for (Index k = 0; k < gap.rows(); ++k) CHECK(gap.row(k).cwiseAbs().maxCoeff() <= c.lambda * s2.z_hat(k) + 1e-7);
}

TEST_CASE("step 2 on an orthonormal design is nearly diagonal") {
  // Columns +-1 in a balanced pattern: the Gram matrix is exactly the identity.
  const Index n = 4096;
  Matrix prices(n, 2);
  for (Index t = 0; t < n; ++t) {
    prices(t, 0) = (t % 2) ? 1.0 : -1.0;
    prices(t, 1) = ((t / 2) % 2) ? 1.0 : -1.0;
  }
  auto panel = manual_panel(prices, Matrix::Zero(n, 2));
  auto c = pivotal_constants(panel);
  auto s2 = step2_debias(panel, c);
  Matrix off = s2.psi_hat - Matrix(s2.psi_hat.diagonal().asDiagonal());
  CHECK(off.cwiseAbs().maxCoeff() <= 5.0 * c.lambda);
  CHECK((s2.psi_hat.diagonal() - Vector::Ones(3)).cwiseAbs().maxCoeff() <= 5.0 * c.lambda);
}

TEST_CASE("step 3 by hand") {
  Matrix prices(2, 1), y(2, 1);
  prices << 0.5, 1.0;
  y << 1.0, 0.6;
  Vector v_hat = Vector::Constant(1, 1.2);
  Matrix w_hat = Matrix::Constant(1, 1, 0.5);
  Matrix psi(2, 2);
  psi << 1.0, 0.2, 0.3, 2.0;
  // Residuals 0.05 and -0.1; (1/n) sum x_t e_t = (-0.025, -0.0375).
  auto out = step3_debiased(manual_panel(prices, y), v_hat, w_hat, psi);
  CHECK(out.v_check(0) == doctest::Approx(1.1675).epsilon(1e-14));
  CHECK(out.w_check(0, 0) == doctest::Approx(0.5825).epsilon(1e-14));
  auto none = step3_debiased(manual_panel(prices, y), v_hat, w_hat, Matrix::Zero(2, 2));
  CHECK(none.w_check == w_hat);
  Matrix exact_y = (1.2 - 0.5 * prices.array()).matrix();
  auto exact = step3_debiased(manual_panel(prices, exact_y), v_hat, w_hat, psi);
  CHECK(std::abs(exact.w_check(0, 0) - 0.5) < 1e-15);
  CHECK(std::abs(exact.v_check(0) - 1.2) < 1e-15);
  CHECK_THROWS_AS(step3_debiased(manual_panel(prices, y), v_hat, w_hat, Matrix::Zero(3, 3)), StructuralError);
}

TEST_CASE("self-normalized thresholds") {
  auto panel = simulated(8, 64, 0.1, 9);
  auto c = pivotal_constants(panel);
  auto s1 = step1_preliminary(panel, c);
  auto s2 = step2_debias(panel, c);
  auto t = thresholds_self_normalized(panel, s1.v_hat, s1.w_hat, s2.psi_hat, c);
  double factor = 2.0 * (1.0 + 1.0 / std::log(64.0));
  CHECK((t.mu - factor * c.lambda * t.sigma_hat).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(2.0 * (1.0 + 1.0 / std::log(8.0)) == doctest::Approx(2.961796693925976).epsilon(1e-15));
  // sigma_hat(k, j) from Psi row j+1 and the residual of node k.
  Matrix x = intercept_design(panel.prices);
  Matrix e = panel.consumption - (Vector::Ones(panel.n()) * s1.v_hat.transpose() - panel.prices * s1.w_hat.transpose());
  Index k = 2, j = 5;
  double acc = 0.0;
  for (Index s = 0; s < panel.n(); ++s) {
    double score = s2.psi_hat.row(j + 1).dot(x.row(s)) * e(s, k);
    acc += score * score;
  }
  CHECK(t.sigma_hat(k, j) == doctest::Approx(std::sqrt(acc / 64.0)).epsilon(1e-12));
  const Index d = panel.n_observable() + 1;
  auto zero = thresholds_self_normalized(panel, s1.v_hat, s1.w_hat, Matrix::Zero(d, d), c);
  CHECK(zero.mu.isZero(0.0));
  auto small = panel;
  small.prices = panel.prices.topRows(7);
  small.consumption = panel.consumption.topRows(7);
  CHECK_THROWS_AS(thresholds_self_normalized(small, s1.v_hat, s1.w_hat, s2.psi_hat, c), ConfigError);
}

TEST_CASE("bootstrap critical value for one Gaussian statistic") {
  const Index n = 400;
  stats::RngStream rng(10);
  Matrix prices(n, 1), y(n, 1);
  for (Index t = 0; t < n; ++t) {
    prices(t, 0) = rng.uniform(0.2, 1.0);
    y(t, 0) = 1.0 - 0.5 * prices(t, 0) + rng.normal(0.0, 0.1);
  }
  auto panel = manual_panel(prices, y);
  Matrix x = intercept_design(prices);
  Matrix psi = (x.transpose() * x / static_cast<double>(n)).inverse();
  Vector v = Vector::Constant(1, 1.0);
  Matrix w = Matrix::Constant(1, 1, 0.5);
  auto t = thresholds_bootstrap(panel, v, w, psi, 0.05, 4000, 3);
  CHECK(std::abs(t.cv_star / 1.959963984540054 - 1.0) < 0.05);
  CHECK(t.mu(0, 0) == doctest::Approx(2.0 * t.cv_star * t.sigma_hat(0, 0) / std::sqrt(400.0)).epsilon(1e-14));
  auto again = thresholds_bootstrap(panel, v, w, psi, 0.05, 4000, 3, 2);
  CHECK(again.cv_star == t.cv_star);
  auto other = thresholds_bootstrap(panel, v, w, psi, 0.05, 4000, 4);
  CHECK(other.cv_star != t.cv_star);
  auto all = thresholds_bootstrap(panel, v, w, psi, 1.0, 200, 3);
  CHECK(all.cv_star == 0.0);
  CHECK(all.mu.isZero(0.0));
  CHECK_THROWS_AS(thresholds_bootstrap(panel, v, w, psi, 0.05, 100, 3), ConfigError);
}

TEST_CASE("bootstrap leaves out degenerate entries with a warning") {
  const Index n = 50;
  Matrix prices(n, 1);
  for (Index t = 0; t < n; ++t) prices(t, 0) = 0.2 + 0.8 * static_cast<double>(t) / n;
  Matrix y = (1.0 - 0.5 * prices.array()).matrix();
  auto t = thresholds_bootstrap(manual_panel(prices, y), Vector::Constant(1, 1.0), Matrix::Constant(1, 1, 0.5),
                                Matrix::Identity(2, 2), 0.05, 200, 1);
  CHECK(t.excluded == 1);
  CHECK_FALSE(t.warnings.empty());
  CHECK(t.mu(0, 0) == 0.0);
}

TEST_CASE("hard thresholding") {
  Matrix w(2, 2);
  w << 0.5, -0.1, 0.2, 0.05;
  Matrix expect(2, 2);
  expect << 0.5, 0.0, 0.2, 0.0;
  CHECK(step4_threshold(w, Matrix::Constant(2, 2, 0.15)) == expect);
  CHECK(step4_threshold(w, Matrix::Zero(2, 2)) == w);
  CHECK(step4_threshold(w, Matrix::Constant(2, 2, std::numeric_limits<double>::infinity())).isZero(0.0));
  Matrix mu = Matrix::Constant(2, 2, 0.15);
  CHECK(step4_threshold(step4_threshold(w, mu), mu) == step4_threshold(w, mu));
  Matrix bigger = mu;
  bigger(0, 0) = 0.3;
  Matrix a = step4_threshold(w, mu), b = step4_threshold(w, bigger);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j)
      if (a(i, j) == 0.0) CHECK(b(i, j) == 0.0);
}

// Expected to fail: at n = 4 |V_O| the pivotal lambda is about 0.7, the
// zero preliminary estimate is optimal (tau z is cheaper than the l1 norm of
// the exact fit), and debiasing alone cannot reach 1e-3.
TEST_CASE("noiseless panel with n = 4 |V_O| recovers the inverse" * doctest::should_fail()) {
  auto inst = generate_banded(fixtures::common(7, 12), 1);
  auto d = derive(inst);
  const Index vo = static_cast<Index>(d.observable.size());
  auto panel = simulate_panel(inst, std::max<Index>(8, 4 * vo), PriceSampler{}, ShockModel::defaults(inst, 0.0), 3);
  auto r = estimate(panel);
  CHECK(r.w_hat.cwiseAbs().maxCoeff() < 1e-6);
  CHECK((r.w_check - d.h_inv).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("estimate is deterministic and labels stage errors") {
  auto panel = simulated(8, 80, 0.1, 13);
  EstimatorOptions opt;
  opt.mode = ThresholdMode::bootstrap;
  opt.bootstrap_draws = 300;
  opt.seed = 5;
  auto a = estimate(panel, opt);
  opt.stage.threads = 2;
  auto b = estimate(panel, opt);
  CHECK(a.w_check_mu == b.w_check_mu);
  CHECK(a.thresholds.cv_star == b.thresholds.cv_star);
  CHECK(((a.ci_upper - a.ci_lower) - 2.0 * a.thresholds.cv_star * a.thresholds.sigma_hat / std::sqrt(80.0))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  opt.stage.solver.max_iter = 1;
  try {
    estimate(panel, opt);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("step1") != std::string::npos);
  }
  CHECK(threshold_mode_from_string(to_string(ThresholdMode::bootstrap)) == ThresholdMode::bootstrap);
  CHECK_THROWS_AS(threshold_mode_from_string("lasso"), ConfigError);
}
