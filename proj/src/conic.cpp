#include "latnet/conic.hpp"

#include "latnet/error.hpp"
#include "latnet/stats.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace latnet {

namespace {

/// U with U^T U = a for a symmetric positive semidefinite a.
Matrix psd_factor(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix intercept_design(const Matrix& prices) {
  Matrix x(prices.rows(), prices.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(prices.cols()) = prices;
  return x;
}

std::shared_ptr<const DesignMoments> DesignMoments::from_design(Matrix x) {
  auto dm = std::make_shared<DesignMoments>();
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 2 || d < 1) throw StructuralError("DesignMoments: need at least 2 rows and 1 column");
  const double inv_n = 1.0 / static_cast<double>(n);
  dm->sigma_hat = inv_n * (x.transpose() * x);
  dm->weighted_gram.resize(static_cast<std::size_t>(d));
  dm->debias_factor.resize(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    Matrix wx = x.array().colwise() * x.col(j).array();
    Matrix bj = Matrix::Zero(d, d);
    bj.selfadjointView<Eigen::Lower>().rankUpdate(wx.transpose(), inv_n);
    bj = bj.selfadjointView<Eigen::Lower>();
    Matrix aug(d + 1, d + 1);
    aug.topLeftCorner(d, d) = bj;
    aug.topRightCorner(d, 1) = dm->sigma_hat.col(j);
    aug.bottomLeftCorner(1, d) = dm->sigma_hat.col(j).transpose();
    aug(d, d) = 1.0;
    dm->weighted_gram[static_cast<std::size_t>(j)] = std::move(bj);
    dm->debias_factor[static_cast<std::size_t>(j)] = psd_factor(aug);
  }
  dm->x = std::move(x);
  return dm;
}

std::string to_string(RowProgram::Kind kind) {
  return kind == RowProgram::Kind::dantzig_row ? "dantzig_row" : "debias_row";
}

std::string to_string(SolveResult::Status s) {
  switch (s) {
    case SolveResult::Status::optimal: return "optimal";
    case SolveResult::Status::max_iter: return "max_iter";
    case SolveResult::Status::infeasible_detected: return "infeasible_detected";
  }
  return "unknown";
}

RowProgram make_dantzig_row(std::shared_ptr<const DesignMoments> design, Vector response,
                            Index target, double lambda, double tau) {
  if (!design) throw StructuralError("make_dantzig_row: missing design");
  if (response.size() != design->n()) throw StructuralError("make_dantzig_row: response length");
  if (!(lambda >= 0.0) || !(tau > 0.0)) throw ConfigError("make_dantzig_row: need lambda >= 0, tau > 0");
  RowProgram p;
  p.kind = RowProgram::Kind::dantzig_row;
  p.design = std::move(design);
  p.response = std::move(response);
  p.target = target;
  p.lambda = lambda;
  p.tau = tau;
  return p;
}

RowProgram make_debias_row(std::shared_ptr<const DesignMoments> design, Index target,
                           double lambda) {
  if (!design) throw StructuralError("make_debias_row: missing design");
  if (target < 0 || target >= design->d()) throw StructuralError("make_debias_row: target out of range");
  if (!(lambda >= 0.0)) throw ConfigError("make_debias_row: need lambda >= 0");
  RowProgram p;
  p.kind = RowProgram::Kind::debias_row;
  p.design = std::move(design);
  p.target = target;
  p.lambda = lambda;
  p.tau = 0.0;
  return p;
}

// ---- raw-data evaluation ----------------------------------------------

namespace {

// Internal coefficient: dantzig rows use beta = (v, -W) so that r = y - X beta.
Vector to_internal(const RowProgram& p, const Vector& theta) {
  Vector beta = theta;
  if (p.kind == RowProgram::Kind::dantzig_row) beta.tail(beta.size() - 1) *= -1.0;
  return beta;
}

Vector from_internal(const RowProgram& p, const Vector& beta) { return to_internal(p, beta); }

double four_norm(const Matrix& x, const Vector& psi, double smoothing = 0.0) {
  Vector u = x * psi;
  double q = u.array().square().square().mean();
  double s4 = smoothing * smoothing * smoothing * smoothing;
  return std::pow(q + s4, 0.25);
}

}  // namespace

double RowProgram::base_objective(const Vector& theta) const {
  if (kind == Kind::dantzig_row) return theta.lpNorm<1>();
  return four_norm(design->x, theta);
}

void RowProgram::constraint_values(const Vector& theta, Vector& linear, Vector& cone) const {
  const Matrix& x = design->x;
  const Index d = x.cols();
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  linear.resize(d);
  cone.resize(d);
  if (kind == Kind::dantzig_row) {
    Vector r = response - x * to_internal(*this, theta);
    linear = (inv_n * (x.transpose() * r)).cwiseAbs();
    Vector r2 = r.array().square();
    cone = (inv_n * (x.array().square().matrix().transpose() * r2)).cwiseMax(0.0).cwiseSqrt();
  } else {
    Vector u = x * theta;
    for (Index j = 0; j < d; ++j) {
      double unit = j == target ? 1.0 : 0.0;
      linear(j) = std::abs(design->sigma_hat.col(j).dot(theta) - unit);
      cone(j) = std::sqrt((u.array() * x.col(j).array() - unit).square().mean());
    }
  }
}

double RowProgram::minimal_z(const Vector& theta) const {
  Vector lin, cone;
  constraint_values(theta, lin, cone);
  double z = cone.size() ? cone.maxCoeff() : 0.0;
  if (lin.size()) {
    double lmax = lin.maxCoeff();
    if (lambda > 0.0) z = std::max(z, lmax / lambda);
    else if (lmax > 0.0) z = std::max(z, 0.0);  // exact-fit mode: residual reported separately
  }
  return z;
}

double RowProgram::objective(const Vector& theta) const {
  return base_objective(theta) + z_weight() * minimal_z(theta);
}

double RowProgram::feasibility_residual(const Vector& theta, double z) const {
  Vector lin, cone;
  constraint_values(theta, lin, cone);
  double worst = std::max(0.0, -z);
  for (Index j = 0; j < lin.size(); ++j) {
    worst = std::max(worst, lin(j) - lambda * z);
    worst = std::max(worst, cone(j) - z);
  }
  return worst;
}

// ---- barrier solver ----------------------------------------------------

namespace {

struct Reduced {
  bool l1 = true;
  Index d = 0;
  double lambda = 0;
  double z_weight = 1;
  Matrix a;  // row j: a_j
  Vector b;
  std::vector<Matrix> r;
  std::vector<Vector> off;
  std::vector<Matrix> rtr;
  const Matrix* x = nullptr;
  double smoothing = 0;

  Index nv() const { return l1 ? 2 * d + 1 : d + 1; }
  Index zi() const { return nv() - 1; }
  double barrier_param() const { return static_cast<double>((l1 ? 2 * d : 0) + 2 * d + 2 * d); }
};

Reduced reduce(const RowProgram& p, double smoothing) {
  const DesignMoments& dm = *p.design;
  const Index d = dm.d();
  const Index n = dm.n();
  const double inv_n = 1.0 / static_cast<double>(n);
  Reduced red;
  red.d = d;
  red.lambda = p.lambda;
  red.z_weight = p.z_weight();
  red.a = dm.sigma_hat;
  red.r.resize(static_cast<std::size_t>(d));
  red.off.resize(static_cast<std::size_t>(d));
  red.rtr.resize(static_cast<std::size_t>(d));
  if (p.kind == RowProgram::Kind::dantzig_row) {
    red.l1 = true;
    const Matrix& x = dm.x;
    const Vector& y = p.response;
    red.b = inv_n * (x.transpose() * y);
    Matrix xsq = x.array().square();
    // e_j = X^T diag(x_j^2 y) 1 / n stacked as columns; f_j = sum x_tj^2 y_t^2 / n.
    Matrix e = inv_n * (x.transpose() * (xsq.array().colwise() * y.array()).matrix());
    Vector f = inv_n * (xsq.transpose() * y.array().square().matrix());
    for (Index j = 0; j < d; ++j) {
      Matrix aug(d + 1, d + 1);
      aug.topLeftCorner(d, d) = dm.weighted_gram[static_cast<std::size_t>(j)];
      aug.topRightCorner(d, 1) = e.col(j);
      aug.bottomLeftCorner(1, d) = e.col(j).transpose();
      aug(d, d) = f(j);
      Matrix u = psd_factor(aug);
      auto js = static_cast<std::size_t>(j);
      red.r[js] = u.leftCols(d);
      red.off[js] = -u.col(d);
      red.rtr[js] = red.r[js].transpose() * red.r[js];
    }
  } else {
    red.l1 = false;
    red.x = &dm.x;
    red.smoothing = smoothing;
    red.b = Vector::Zero(d);
    red.b(p.target) = 1.0;
    for (Index j = 0; j < d; ++j) {
      auto js = static_cast<std::size_t>(j);
      const Matrix& u = dm.debias_factor[js];
      red.r[js] = u.leftCols(d);
      red.off[js] = (j == p.target ? -1.0 : 0.0) * u.col(d);
      red.rtr[js] = red.r[js].transpose() * red.r[js];
    }
  }
  return red;
}

// Objective F0 on the barrier variables.
double f0(const Reduced& red, const Vector& v) {
  const Index d = red.d;
  double z = v(red.zi());
  if (red.l1) return v.segment(d, d).sum() + red.z_weight * z;
  return four_norm(*red.x, v.head(d), red.smoothing) + red.z_weight * z;
}

// t * F0 + barrier; returns false outside the domain.
bool evaluate(const Reduced& red, const Vector& v, double t, bool derivs, double& value,
              Vector& grad, Matrix& hess) {
  const Index d = red.d;
  const Index nv = red.nv();
  const Index zi = red.zi();
  const double z = v(zi);
  if (!(z > 0.0)) return false;
  auto beta = v.head(d);
  value = 0.0;
  if (derivs) {
    grad = Vector::Zero(nv);
    hess = Matrix::Zero(nv, nv);
  }

  if (red.l1) {
    auto s = v.segment(d, d);
    for (Index i = 0; i < d; ++i) {
      double lo = s(i) - beta(i);
      double hi = s(i) + beta(i);
      if (!(lo > 0.0 && hi > 0.0)) return false;
      value -= std::log(lo) + std::log(hi);
      if (derivs) {
        double il = 1.0 / lo, ih = 1.0 / hi;
        grad(i) += il - ih;
        grad(d + i) += -il - ih;
        double l2 = il * il, h2 = ih * ih;
        hess(i, i) += l2 + h2;
        hess(d + i, d + i) += l2 + h2;
        hess(i, d + i) += -l2 + h2;
        hess(d + i, i) += -l2 + h2;
      }
    }
    value += t * (s.sum() + red.z_weight * z);
    if (derivs) {
      grad.segment(d, d).array() += t;
      grad(zi) += t * red.z_weight;
    }
  } else {
    const Matrix& x = *red.x;
    Vector u = x * beta;
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    double s4 = std::pow(red.smoothing, 4);
    Vector u2 = u.array().square();
    double q = inv_n * u2.dot(u2) + s4;
    double f = std::pow(q, 0.25);
    value += t * (f + red.z_weight * z);
    if (derivs) {
      Vector u3 = u2.cwiseProduct(u);
      Vector gq = (4.0 * inv_n) * (x.transpose() * u3);
      double d1 = 0.25 * std::pow(q, -0.75);
      double d2 = -(3.0 / 16.0) * std::pow(q, -1.75);
      Matrix y = x.array().colwise() * u.array();
      Matrix hq = Matrix::Zero(d, d);
      hq.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 12.0 * inv_n);
      hq = hq.selfadjointView<Eigen::Lower>();
      grad.head(d) += t * d1 * gq;
      hess.topLeftCorner(d, d) += t * (d1 * hq + d2 * gq * gq.transpose());
      grad(zi) += t * red.z_weight;
    }
  }

  // Linear pairs: lambda z -/+ (a_j beta - b_j) > 0.
  for (Index j = 0; j < d; ++j) {
    double res = red.a.row(j).dot(beta) - red.b(j);
    double lp = red.lambda * z - res;
    double lm = red.lambda * z + res;
    if (!(lp > 0.0 && lm > 0.0)) return false;
    value -= std::log(lp) + std::log(lm);
    if (derivs) {
      double ip = 1.0 / lp, im = 1.0 / lm;
      // grad of -log(lp): -(1/lp) * (-a_j, lambda); of -log(lm): -(1/lm) * (a_j, lambda)
      grad.head(d) += (ip - im) * red.a.row(j).transpose();
      grad(zi) += -(ip + im) * red.lambda;
      double p2 = ip * ip, m2 = im * im;
      hess.topLeftCorner(d, d) += (p2 + m2) * red.a.row(j).transpose() * red.a.row(j);
      Vector cross = (m2 - p2) * red.lambda * red.a.row(j).transpose();
      hess.block(0, zi, d, 1) += cross;
      hess.block(zi, 0, 1, d) += cross.transpose();
      hess(zi, zi) += (p2 + m2) * red.lambda * red.lambda;
    }
  }

  // Cones: z^2 - ||R_j beta + off_j||^2 > 0.
  for (Index j = 0; j < d; ++j) {
    auto js = static_cast<std::size_t>(j);
    Vector rr = red.r[js] * beta + red.off[js];
    double w = z * z - rr.squaredNorm();
    if (!(w > 0.0)) return false;
    value -= std::log(w);
    if (derivs) {
      Vector dw(nv);
      dw.setZero();
      dw.head(d) = -2.0 * (red.r[js].transpose() * rr);
      dw(zi) = 2.0 * z;
      grad -= dw / w;
      hess.topLeftCorner(d, d) += (2.0 / w) * red.rtr[js];
      hess(zi, zi) -= 2.0 / w;
      hess += (dw * dw.transpose()) / (w * w);
    }
  }
  return std::isfinite(value);
}

Vector barrier_start(const Reduced& red) {
  const Index d = red.d;
  Vector v = Vector::Zero(red.nv());
  if (red.l1) v.segment(d, d).setOnes();
  double z = 0.0;
  for (Index j = 0; j < d; ++j) {
    if (red.lambda > 0.0) z = std::max(z, std::abs(red.b(j)) / red.lambda);
    z = std::max(z, red.off[static_cast<std::size_t>(j)].norm());
  }
  v(red.zi()) = 2.0 * z + 1.0;
  return v;
}

SolveResult exact_fit(const RowProgram& p) {
  // lambda = 0 forces the normal equations Sigma beta = b exactly.
  const DesignMoments& dm = *p.design;
  Eigen::FullPivLU<Matrix> lu(dm.sigma_hat);
  if (lu.rank() < dm.d())
    throw ConfigError("solve_row: lambda = 0 needs a full-rank design");
  Vector rhs;
  if (p.kind == RowProgram::Kind::dantzig_row) {
    rhs = dm.x.transpose() * p.response / static_cast<double>(dm.n());
  } else {
    rhs = Vector::Zero(dm.d());
    rhs(p.target) = 1.0;
  }
  SolveResult res;
  res.solution = from_internal(p, lu.solve(rhs));
  Vector lin, cone;
  p.constraint_values(res.solution, lin, cone);
  res.z = cone.maxCoeff();
  res.objective = p.base_objective(res.solution) + p.z_weight() * res.z;
  res.feasibility_residual = p.feasibility_residual(res.solution, res.z);
  res.certificate_gap = 0.0;
  res.iterations = 0;
  res.multipliers = Vector::Zero(2 * dm.d());
  res.status = SolveResult::Status::optimal;
  return res;
}

}  // namespace

SolveResult solve_row(const RowProgram& p, const SolveOptions& opt) {
  if (!p.design) throw StructuralError("solve_row: program has no design");
  if (p.n() < 2 || p.d() < 1) throw StructuralError("solve_row: need n >= 2 and d >= 1");
  if (p.lambda == 0.0) return exact_fit(p);
  if (!(p.lambda > 0.0)) throw ConfigError("solve_row: lambda must be positive");
  if (p.kind == RowProgram::Kind::dantzig_row && !(p.tau > 0.0))
    throw ConfigError("solve_row: tau must be positive");

  Reduced red = reduce(p, opt.smoothing);
  const double m = red.barrier_param();
  Vector v = barrier_start(red);
  double t = m / std::max(1.0, std::abs(f0(red, v)));
  constexpr double kGrowth = 16.0;
  constexpr double kNewtonTol = 1e-10;
  constexpr double kArmijo = 0.01;

  double value = 0.0;
  Vector grad;
  Matrix hess;
  int iter = 0;
  bool capped = false;
  for (;;) {
    for (int inner = 0; inner < 100; ++inner) {
      if (!evaluate(red, v, t, true, value, grad, hess))
        throw NumericError("solve_row: iterate left the barrier domain");
      Eigen::LDLT<Matrix> ldlt(hess);
      Vector dv = ldlt.solve(-grad);
      if (!dv.allFinite()) throw NumericError("solve_row: Newton system is not finite");
      double dec2 = -grad.dot(dv);
      if (dec2 <= 2.0 * kNewtonTol) break;
      double step = 1.0;
      double trial = 0.0;
      Vector g2;
      Matrix h2;
      bool moved = false;
      while (step > 1e-14) {
        Vector cand = v + step * dv;
        if (evaluate(red, cand, t, false, trial, g2, h2) && trial <= value - kArmijo * step * dec2) {
          v = std::move(cand);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      ++iter;
      if (opt.trace) opt.trace->push_back({iter, f0(red, v), 0.0});
      if (!moved) break;  // no representable decrease left
      if (iter >= opt.max_iter) {
        capped = true;
        break;
      }
    }
    if (capped) break;
    double obj = f0(red, v);
    if (m / t <= opt.tol_opt * std::max(1.0, std::abs(obj))) break;
    t *= kGrowth;
  }

  SolveResult res;
  Vector beta = v.head(red.d);
  res.solution = from_internal(p, beta);
  res.z = p.minimal_z(res.solution);
  res.objective = p.base_objective(res.solution) + p.z_weight() * res.z;
  res.feasibility_residual = p.feasibility_residual(res.solution, res.z);
  res.iterations = iter;
  double gap_abs = m / t + (red.l1 ? 0.0 : opt.smoothing);
  res.certificate_gap = gap_abs / std::max(1.0, std::abs(res.objective));

  // Barrier dual estimates at the last centered point.
  const double zc = v(red.zi());
  res.multipliers.resize(2 * red.d);
  for (Index j = 0; j < red.d; ++j) {
    double r = red.a.row(j).dot(beta) - red.b(j);
    res.multipliers(j) = 1.0 / (t * (red.lambda * zc - r)) + 1.0 / (t * (red.lambda * zc + r));
    auto js = static_cast<std::size_t>(j);
    double w = zc * zc - (red.r[js] * beta + red.off[js]).squaredNorm();
    res.multipliers(red.d + j) = 2.0 * zc / (t * w);
  }

  if (!std::isfinite(res.objective)) throw NumericError("solve_row: objective is not finite");
  bool ok = res.feasibility_residual <= opt.tol_feas && res.certificate_gap <= opt.tol_opt;
  res.status = (ok && !capped) ? SolveResult::Status::optimal : SolveResult::Status::max_iter;
  return res;
}

KktReport verify_kkt(const RowProgram& p, const SolveResult& res, double tol_feas, double tol_opt,
                     int probes, double probe_size) {
  KktReport rep;
  rep.feasibility = p.feasibility_residual(res.solution, res.z);
  rep.feasible = rep.feasibility <= tol_feas;

  Vector lin, cone;
  p.constraint_values(res.solution, lin, cone);
  const Index d = p.d();
  for (Index j = 0; j < d && res.multipliers.size() == 2 * d; ++j) {
    rep.complementarity = std::max(rep.complementarity,
                                   res.multipliers(j) * std::abs(p.lambda * res.z - lin(j)));
    rep.complementarity = std::max(rep.complementarity,
                                   res.multipliers(d + j) * std::abs(res.z - cone(j)));
  }

  double base = p.base_objective(res.solution) +
                p.z_weight() * std::max(res.z, p.minimal_z(res.solution));
  stats::RngStream rng(0x6b6b74ULL);
  rep.probes = probes;
  for (int k = 0; k < probes; ++k) {
    Vector dir(d);
    for (Index i = 0; i < d; ++i) dir(i) = rng.normal();
    dir *= probe_size / dir.norm();
    double probe = p.objective(res.solution + dir);
    rep.worst_probe_decrease = std::max(rep.worst_probe_decrease, base - probe);
  }
  rep.locally_optimal = rep.worst_probe_decrease <= tol_opt * std::max(1.0, std::abs(base));
  return rep;
}

}  // namespace latnet
