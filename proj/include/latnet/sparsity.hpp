#pragma once

#include "latnet/types.hpp"

#include <string>
#include <vector>

namespace latnet {

inline constexpr double kZeroEntry = 1e-14;

/// An approximation W of H^{-1} with at most `s` nonzeros in every row and column.
struct SparseApproximation {
  Matrix w_bar;
  Index s = 0;
  double err_1 = 0;
  double err_inf = 0;
  double err_2 = 0;
  std::string construction;

  double r1() const { return std::max(err_1, err_inf); }
};

/// Largest count of entries with |x| >= kZeroEntry over all rows and columns.
Index max_nonzeros(const Matrix& w);

/// Keeps (H^{-1})_ij with |l(i) - l(j)| <= (s - 1)/2. `labels` gives the
/// line position of each row/column of h_inv.
SparseApproximation banded_truncation(const Matrix& h_inv, const IndexList& labels, Index s);

/// Visits entries by decreasing magnitude and keeps each one whose row and
/// column still hold fewer than s kept entries.
SparseApproximation magnitude_truncation(const Matrix& h_inv, Index s);

/// Degree-k Chebyshev interpolant of 1/x on [lo, hi].
struct ChebyshevInverse {
  double lo = 0;
  double hi = 0;
  Vector coeffs;  ///< f(x) = sum_j coeffs_j T_j(y), y = (2x - lo - hi)/(hi - lo)

  Index degree() const { return coeffs.size() - 1; }
  double operator()(double x) const;
  /// g_k(M) by the Clenshaw recurrence.
  Matrix apply(const Matrix& m) const;
};

/// Interpolant on [zeta, 4 b_max - zeta]. Throws ConfigError for k < 0.
ChebyshevInverse chebyshev_inverse(double zeta, double b_max, Index k);

/// (sqrt(r) - 1)/(sqrt(r) + 1) with r = (4 b_max - zeta)/zeta.
double chebyshev_rate(double zeta, double b_max);

struct ChebyshevApproximation {
  ChebyshevInverse poly;
  Matrix g_m;    ///< g_k(M)
  Matrix w_bar;  ///< observable block of g_k(M)
};

ChebyshevApproximation chebyshev_inverse_approx(const Matrix& m, double zeta, double b_max,
                                                Index k, const IndexList& observable);

/// |(M^{-1})_ij| <= c1 * rate^{|l(i) - l(j)|} for m-banded networks.
struct DecayBound {
  double c1 = 0;
  double rate = 0;
  double at(Index distance) const;
};

DecayBound banded_decay_bound(Index bandwidth, double b_max, double zeta);

enum class Construction { banded, magnitude };
std::string to_string(Construction c);

struct ProfileRow {
  Construction construction;
  Index s = 0;
  double err_1 = 0;
  double err_inf = 0;
  double err_2 = 0;
  double r1() const { return std::max(err_1, err_inf); }
};

/// Evaluates a construction across `s_grid`. Throws NumericError if r1
/// grows with s, which no valid construction allows.
std::vector<ProfileRow> measure_sparsity_profile(const Matrix& h_inv, Construction construction,
                                                 const std::vector<Index>& s_grid,
                                                 const IndexList& labels = {});

/// Largest |x_ij| among pairs at each label distance 0, 1, ...
Vector decay_by_distance(const Matrix& x, const IndexList& labels);

/// Least-squares slope and intercept of log(y) against x; points with
/// y <= floor are skipped. Throws NumericError with fewer than 2 points.
struct LogLinearFit {
  double slope = 0;
  double intercept = 0;
  Index points = 0;
};
LogLinearFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y,
                            double floor = 0.0);

}  // namespace latnet
