#pragma once

#include "latnet/estimator.hpp"
#include "latnet/network.hpp"

#include <string>

namespace latnet {

struct PriceSolution {
  enum class Method { benchmark, symmetric, bonacich, estimated, grid };
  Vector prices;
  double expected_revenue = 0;
  /// ||grad Pi||_inf over coordinates strictly inside (0, p_bar).
  double foc_residual = 0;
  IndexList binding_set;  ///< p_i = p_bar
  IndexList clamped_set;  ///< estimated prices raised to 0
  Method method = Method::benchmark;
};

std::string to_string(PriceSolution::Method m);

/// Pi(p) = p^T v_O - p^T H^{-1} p (the symmetrized form of the quadratic).
double expected_revenue(const DerivedMatrices& d, const Vector& p_o);
/// v_O - (H^{-1} + H^{-T}) p.
Vector revenue_gradient(const DerivedMatrices& d, const Vector& p_o);

/// Complete-information optimum. Uses H^T (H + H^T)^{-1}(a_O - S_OL(a_L - p_bar))
/// when interior, otherwise maximizes Pi over [0, p_bar]^{|V_O|} by
/// accelerated projected gradient.
PriceSolution benchmark_prices(const DerivedMatrices& d);

/// (a/2) e - (1/2) S_OL e (a - p_bar) for symmetric homogeneous instances.
PriceSolution symmetric_prices(const NetworkInstance& instance);

/// (a/2) e + ((a - p_bar)/(4 b)) G_OL K(1/(2b), G_LL).
PriceSolution bonacich_prices(const NetworkInstance& instance);

/// [(W + W^T)^{-1} v] capped at p_bar and floored at 0. `d` is optional and
/// only used to fill in revenue and gradient diagnostics.
PriceSolution estimated_prices(const Vector& v_check, const Matrix& w_mu, double p_bar,
                               const DerivedMatrices* d = nullptr);
PriceSolution estimated_prices(const EstimationResult& result, double p_bar,
                               const DerivedMatrices* d = nullptr);

/// (Pi(p*) - Pi(p)) / Pi(p*).
double revenue_gap(const DerivedMatrices& d, const Vector& p_hat);

/// Exhaustive maximization of Pi on the grid {0, h, 2h, ...} n [0, p_bar]
/// in each coordinate; for |V_O| <= 3.
PriceSolution grid_search_prices(const DerivedMatrices& d, double resolution);

}  // namespace latnet
