#include "latnet/pricing.hpp"

#include "latnet/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace latnet {

namespace {

constexpr double kPrecondition = 1e-12;

Matrix sym_inverse(const DerivedMatrices& d) { return d.h_inv + d.h_inv.transpose(); }

void finish(PriceSolution& s, const DerivedMatrices* d, double p_bar) {
  s.binding_set.clear();
  for (Index i = 0; i < s.prices.size(); ++i)
    if (s.prices(i) >= p_bar) s.binding_set.push_back(i);
  if (!d) return;
  s.expected_revenue = expected_revenue(*d, s.prices);
  Vector g = revenue_gradient(*d, s.prices);
  s.foc_residual = 0.0;
  for (Index i = 0; i < g.size(); ++i)
    if (s.prices(i) > 0.0 && s.prices(i) < p_bar)
      s.foc_residual = std::max(s.foc_residual, std::abs(g(i)));
}

// Maximizes the strongly concave Pi over the box with FISTA-style
// projected gradient ascent.
Vector box_qp(const DerivedMatrices& d, Vector start) {
  Matrix q = sym_inverse(d);
  Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
  double lip = es.eigenvalues().maxCoeff();
  if (!(lip > 0.0)) throw SingularityError("benchmark_prices: H^{-1} + H^{-T} is not positive definite");
  auto project = [&](Vector p) { return Vector(p.cwiseMax(0.0).cwiseMin(d.p_bar)); };
  auto stationarity = [&](const Vector& p) {
    return (project(p + revenue_gradient(d, p)) - p).lpNorm<Eigen::Infinity>();
  };
  Vector x = project(std::move(start));
  Vector y = x;
  double t = 1.0;
  for (int it = 0; it < 200000; ++it) {
    Vector next = project(y + revenue_gradient(d, y) / lip);
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    // Restart momentum when it stops helping.
    if ((next - x).dot(revenue_gradient(d, next)) < 0.0) {
      y = next;
      t_next = 1.0;
    }
    x = std::move(next);
    t = t_next;
    if (stationarity(x) <= 1e-10) return x;
  }
  throw ConvergenceError("benchmark_prices: projected gradient did not reach 1e-10 stationarity");
}

struct Homogeneous {
  double a;
  double b;
};

Homogeneous check_symmetric(const NetworkInstance& inst) {
  if ((inst.g - inst.g.transpose()).cwiseAbs().maxCoeff() > kPrecondition)
    throw ModelError("symmetric pricing needs G = G^T");
  double a = inst.a(0), b = inst.b(0);
  if ((inst.a.array() - a).abs().maxCoeff() > kPrecondition ||
      (inst.b.array() - b).abs().maxCoeff() > kPrecondition)
    throw ModelError("symmetric pricing needs equal a_i and equal b_i");
  return {a, b};
}

PriceSolution interior_only(Vector p, const NetworkInstance& inst, PriceSolution::Method m) {
  if ((p.array() >= inst.p_bar).any())
    throw ModelError("closed-form prices reach p_bar; the interior formula does not apply");
  PriceSolution s;
  s.prices = std::move(p);
  s.method = m;
  DerivedMatrices d = derive(inst);
  finish(s, &d, inst.p_bar);
  return s;
}

}  // namespace

std::string to_string(PriceSolution::Method m) {
  switch (m) {
    case PriceSolution::Method::benchmark: return "benchmark";
    case PriceSolution::Method::symmetric: return "symmetric";
    case PriceSolution::Method::bonacich: return "bonacich";
    case PriceSolution::Method::estimated: return "estimated";
    case PriceSolution::Method::grid: return "grid";
  }
  return "unknown";
}

double expected_revenue(const DerivedMatrices& d, const Vector& p) {
  if (p.size() != d.v_o.size()) throw StructuralError("expected_revenue: price length");
  return p.dot(d.v_o) - p.dot(d.h_inv * p);
}

Vector revenue_gradient(const DerivedMatrices& d, const Vector& p) {
  if (p.size() != d.v_o.size()) throw StructuralError("revenue_gradient: price length");
  return d.v_o - sym_inverse(d) * p;
}

PriceSolution benchmark_prices(const DerivedMatrices& d) {
  Matrix sym = d.h + d.h.transpose();
  Eigen::FullPivLU<Matrix> lu(sym);
  if (!lu.isInvertible() || 1.0 / lu.rcond() > kSingularCondition)
    throw SingularityError("benchmark_prices: H + H^T is numerically singular");
  Vector rhs = d.a(d.observable);
  if (!d.latent.empty()) {
    Vector al = d.a(d.latent).array() - d.p_bar;
    rhs -= d.s_ol * al;
  }
  PriceSolution s;
  s.method = PriceSolution::Method::benchmark;
  s.prices = d.h.transpose() * lu.solve(rhs);
  if ((s.prices.array() >= d.p_bar).any() || (s.prices.array() <= 0.0).any()) {
    s.prices = box_qp(d, s.prices);
  }
  finish(s, &d, d.p_bar);
  return s;
}

PriceSolution symmetric_prices(const NetworkInstance& inst) {
  Homogeneous h = check_symmetric(inst);
  DerivedMatrices d = derive(inst);
  Vector q = Vector::Constant(static_cast<Index>(d.observable.size()), h.a / 2.0);
  if (!d.latent.empty())
    q -= 0.5 * (h.a - inst.p_bar) * d.s_ol * Vector::Ones(static_cast<Index>(d.latent.size()));
  return interior_only(std::move(q), inst, PriceSolution::Method::symmetric);
}

PriceSolution bonacich_prices(const NetworkInstance& inst) {
  Homogeneous h = check_symmetric(inst);
  IndexList obs = inst.observable;
  IndexList lat = inst.latent();
  Vector p = Vector::Constant(static_cast<Index>(obs.size()), h.a / 2.0);
  if (!lat.empty()) {
    Matrix g_ll = inst.g(lat, lat);
    Matrix g_ol = inst.g(obs, lat);
    p += ((h.a - inst.p_bar) / (4.0 * h.b)) * g_ol * bonacich(1.0 / (2.0 * h.b), g_ll);
  }
  return interior_only(std::move(p), inst, PriceSolution::Method::bonacich);
}

PriceSolution estimated_prices(const Vector& v_check, const Matrix& w_mu, double p_bar,
                               const DerivedMatrices* d) {
  if (w_mu.rows() != w_mu.cols() || w_mu.rows() != v_check.size())
    throw StructuralError("estimated_prices: shapes");
  Matrix sym = w_mu + w_mu.transpose();
  Eigen::FullPivLU<Matrix> lu(sym);
  if (!lu.isInvertible() || 1.0 / lu.rcond() > 1e10)
    throw SingularityError("estimated_prices: W + W^T is near singular; more data is needed");
  PriceSolution s;
  s.method = PriceSolution::Method::estimated;
  s.prices = lu.solve(v_check);
  for (Index i = 0; i < s.prices.size(); ++i) {
    if (s.prices(i) < 0.0) {
      s.prices(i) = 0.0;
      s.clamped_set.push_back(i);
    }
    s.prices(i) = std::min(s.prices(i), p_bar);
  }
  finish(s, d, p_bar);
  return s;
}

PriceSolution estimated_prices(const EstimationResult& r, double p_bar, const DerivedMatrices* d) {
  return estimated_prices(r.v_check, r.w_check_mu, p_bar, d);
}

double revenue_gap(const DerivedMatrices& d, const Vector& p_hat) {
  double best = benchmark_prices(d).expected_revenue;
  if (!(best > 0.0)) throw ModelError("revenue_gap: optimal revenue is not positive");
  return (best - expected_revenue(d, p_hat)) / best;
}

PriceSolution grid_search_prices(const DerivedMatrices& d, double h) {
  const Index vo = d.v_o.size();
  if (vo < 1 || vo > 3) throw ConfigError("grid_search_prices: supports 1 to 3 observable agents");
  if (!(h > 0.0)) throw ConfigError("grid_search_prices: resolution must be positive");
  const Index steps = static_cast<Index>(std::floor(d.p_bar / h + 1e-9)) + 1;
  const Matrix a = 0.5 * (d.h_inv + d.h_inv.transpose());
  const Index last = vo - 1;
  Index outer = 1;
  for (Index i = 0; i < last; ++i) outer *= steps;
  Vector p(vo), best_p = Vector::Zero(vo);
  double best = -std::numeric_limits<double>::infinity();
  for (Index code = 0; code < outer; ++code) {
    Index c = code;
    for (Index i = 0; i < last; ++i) {
      p(i) = static_cast<double>(c % steps) * h;
      c /= steps;
    }
    // Revenue along the last coordinate is a concave parabola, so the best
    // grid point is one of the two neighbors of its vertex.
    double cross = 0.0;
    for (Index i = 0; i < last; ++i) cross += a(last, i) * p(i);
    Index lo = 0, hi = steps - 1;
    if (a(last, last) > 0.0) {
      double vertex = (d.v_o(last) - 2.0 * cross) / (2.0 * a(last, last)) / h;
      auto k = static_cast<Index>(std::floor(std::clamp(vertex, 0.0, static_cast<double>(steps - 1))));
      lo = k;
      hi = std::min(k + 1, steps - 1);
    }
    for (Index k = lo; k <= hi; ++k) {
      p(last) = static_cast<double>(k) * h;
      double r = expected_revenue(d, p);
      if (r > best) {
        best = r;
        best_p = p;
      }
    }
  }
  PriceSolution s;
  s.method = PriceSolution::Method::grid;
  s.prices = best_p;
  finish(s, &d, d.p_bar);
  return s;
}

}  // namespace latnet
