#include "latnet/sparsity.hpp"

#include "latnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace latnet {

namespace {

SparseApproximation measured(const Matrix& h_inv, Matrix w, Index s, std::string tag) {
  SparseApproximation a;
  Matrix diff = h_inv - w;
  a.err_1 = norm_1(diff);
  a.err_inf = norm_inf(diff);
  a.err_2 = norm_2(diff);
  a.w_bar = std::move(w);
  a.s = s;
  a.construction = std::move(tag);
  return a;
}

void check_s(Index s) {
  if (s < 1) throw ConfigError("sparse approximation needs s >= 1");
}

}  // namespace

Index max_nonzeros(const Matrix& w) {
  auto nz = (w.array().abs() >= kZeroEntry).cast<Index>();
  Index rows = w.rows() ? nz.rowwise().sum().maxCoeff() : 0;
  Index cols = w.cols() ? nz.colwise().sum().maxCoeff() : 0;
  return std::max(rows, cols);
}

SparseApproximation banded_truncation(const Matrix& h_inv, const IndexList& labels, Index s) {
  check_s(s);
  if (static_cast<Index>(labels.size()) != h_inv.rows() || h_inv.rows() != h_inv.cols())
    throw StructuralError("banded_truncation: labels must match a square matrix");
  const Index half = (s - 1) / 2;
  Matrix w = Matrix::Zero(h_inv.rows(), h_inv.cols());
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j)
      if (std::abs(labels[static_cast<std::size_t>(i)] - labels[static_cast<std::size_t>(j)]) <= half)
        w(i, j) = h_inv(i, j);
  return measured(h_inv, std::move(w), s, "banded");
}

SparseApproximation magnitude_truncation(const Matrix& h_inv, Index s) {
  check_s(s);
  const Index r = h_inv.rows(), c = h_inv.cols();
  std::vector<Index> order(static_cast<std::size_t>(r * c));
  std::iota(order.begin(), order.end(), Index{0});
  // Column-major linear index; ties broken by index for determinism.
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return std::abs(h_inv(x)) > std::abs(h_inv(y));
  });
  std::vector<Index> row_count(static_cast<std::size_t>(r)), col_count(static_cast<std::size_t>(c));
  Matrix w = Matrix::Zero(r, c);
  for (Index idx : order) {
    Index i = idx % r, j = idx / r;
    auto& rc = row_count[static_cast<std::size_t>(i)];
    auto& cc = col_count[static_cast<std::size_t>(j)];
    if (rc < s && cc < s) {
      w(i, j) = h_inv(i, j);
      ++rc;
      ++cc;
    }
  }
  return measured(h_inv, std::move(w), s, "magnitude");
}

double ChebyshevInverse::operator()(double x) const {
  double y = (2.0 * x - lo - hi) / (hi - lo);
  double b1 = 0.0, b2 = 0.0;
  for (Index j = degree(); j >= 1; --j) {
    double b0 = coeffs(j) + 2.0 * y * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs(0) + y * b1 - b2;
}

Matrix ChebyshevInverse::apply(const Matrix& m) const {
  const Index n = m.rows();
  if (m.cols() != n) throw StructuralError("ChebyshevInverse::apply: square matrix required");
  Matrix eye = Matrix::Identity(n, n);
  Matrix y = (2.0 * m - (lo + hi) * eye) / (hi - lo);
  Matrix b1 = Matrix::Zero(n, n), b2 = Matrix::Zero(n, n);
  for (Index j = degree(); j >= 1; --j) {
    Matrix b0 = coeffs(j) * eye + 2.0 * y * b1 - b2;
    b2 = std::move(b1);
    b1 = std::move(b0);
  }
  return coeffs(0) * eye + y * b1 - b2;
}

ChebyshevInverse chebyshev_inverse(double zeta, double b_max, Index k) {
  if (k < 0) throw ConfigError("chebyshev_inverse: degree must be nonnegative");
  double lo = zeta, hi = 4.0 * b_max - zeta;
  if (!(lo > 0.0 && hi > lo)) throw ConfigError("chebyshev_inverse: need 0 < zeta < 2 b_max");
  ChebyshevInverse p;
  p.lo = lo;
  p.hi = hi;
  p.coeffs = Vector::Zero(k + 1);
  const double nodes = static_cast<double>(k + 1);
  for (Index i = 0; i <= k; ++i) {
    double angle = std::numbers::pi * (static_cast<double>(i) + 0.5) / nodes;
    double y = std::cos(angle);
    double fx = 1.0 / (0.5 * (hi - lo) * y + 0.5 * (hi + lo));
    for (Index j = 0; j <= k; ++j) p.coeffs(j) += fx * std::cos(static_cast<double>(j) * angle);
  }
  p.coeffs *= 2.0 / nodes;
  p.coeffs(0) *= 0.5;
  return p;
}

double chebyshev_rate(double zeta, double b_max) {
  double root = std::sqrt((4.0 * b_max - zeta) / zeta);
  return (root - 1.0) / (root + 1.0);
}

ChebyshevApproximation chebyshev_inverse_approx(const Matrix& m, double zeta, double b_max,
                                                Index k, const IndexList& observable) {
  ChebyshevApproximation out;
  out.poly = chebyshev_inverse(zeta, b_max, k);
  out.g_m = out.poly.apply(m);
  out.w_bar = submatrix(out.g_m, observable, observable);
  return out;
}

double DecayBound::at(Index distance) const {
  return c1 * std::pow(rate, static_cast<double>(distance));
}

DecayBound banded_decay_bound(Index m, double b_max, double zeta) {
  if (m < 1) throw ConfigError("banded_decay_bound: bandwidth must be at least 1");
  if (!(zeta > 0.0 && zeta < 2.0 * b_max)) throw ConfigError("banded_decay_bound: need 0 < zeta < 2 b_max");
  DecayBound d;
  const double mm = static_cast<double>(m);
  d.c1 = 4.0 * (mm + 1.0) * b_max * (4.0 * b_max - zeta) / (zeta * zeta * (2.0 * b_max - zeta));
  d.rate = std::pow((2.0 * b_max - zeta) / (2.0 * b_max), 1.0 / mm);
  return d;
}

std::string to_string(Construction c) { return c == Construction::banded ? "banded" : "magnitude"; }

std::vector<ProfileRow> measure_sparsity_profile(const Matrix& h_inv, Construction construction,
                                                 const std::vector<Index>& s_grid,
                                                 const IndexList& labels) {
  if (s_grid.empty()) throw ConfigError("measure_sparsity_profile: empty grid");
  IndexList lab = labels;
  if (lab.empty()) {
    lab.resize(static_cast<std::size_t>(h_inv.rows()));
    std::iota(lab.begin(), lab.end(), Index{0});
  }
  std::vector<ProfileRow> rows;
  for (Index s : s_grid) {
    SparseApproximation a = construction == Construction::banded ? banded_truncation(h_inv, lab, s)
                                                                 : magnitude_truncation(h_inv, s);
    rows.push_back({construction, s, a.err_1, a.err_inf, a.err_2});
  }
  std::vector<ProfileRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.s < y.s; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].r1() > sorted[i - 1].r1() + 1e-12)
      throw NumericError("measure_sparsity_profile: r1 increased from s = " +
                         std::to_string(sorted[i - 1].s) + " to s = " + std::to_string(sorted[i].s));
  return rows;
}

Vector decay_by_distance(const Matrix& x, const IndexList& labels) {
  if (static_cast<Index>(labels.size()) != x.rows() || x.rows() != x.cols())
    throw StructuralError("decay_by_distance: labels must match a square matrix");
  Index span = 0;
  for (Index a : labels)
    for (Index b : labels) span = std::max(span, std::abs(a - b));
  Vector out = Vector::Zero(span + 1);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) {
      Index dist = std::abs(labels[static_cast<std::size_t>(i)] - labels[static_cast<std::size_t>(j)]);
      out(dist) = std::max(out(dist), std::abs(x(i, j)));
    }
  return out;
}

LogLinearFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y,
                            double floor) {
  if (x.size() != y.size()) throw StructuralError("fit_log_linear: length mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  Index k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > floor)) continue;
    double ly = std::log(y[i]);
    sx += x[i];
    sy += ly;
    sxx += x[i] * x[i];
    sxy += x[i] * ly;
    ++k;
  }
  if (k < 2) throw NumericError("fit_log_linear: fewer than two usable points");
  const double kk = static_cast<double>(k);
  double denom = kk * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw NumericError("fit_log_linear: degenerate abscissae");
  LogLinearFit f;
  f.slope = (kk * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / kk;
  f.points = k;
  return f;
}

}  // namespace latnet
