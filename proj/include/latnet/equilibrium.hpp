#pragma once

#include "latnet/network.hpp"
#include "latnet/stats.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace latnet {

/// Zero-mean taste shocks, bounded so that a_i + xi_i > p_bar always.
struct ShockModel {
  enum class Family { gaussian_truncated, uniform };
  Family family = Family::gaussian_truncated;
  Vector scale;         ///< per-node standard deviation before truncation
  double rho = 0.2;     ///< equicorrelation across nodes
  double bound = 0.0;   ///< |xi_i| <= bound

  /// Default model for an instance: equicorrelated Gaussian truncated at
  /// 0.99 * min_i (a_i - p_bar).
  static ShockModel defaults(const NetworkInstance& instance, double sigma, double rho = 0.2);

  /// One shock vector. Coordinates exceeding `bound` are redrawn, which keeps
  /// the law symmetric and hence mean zero.
  Vector draw(stats::RngStream& rng) const;

  std::string describe() const;
};

std::string to_string(ShockModel::Family f);
ShockModel::Family shock_family_from_string(const std::string& s);

/// i.i.d. uniform prices on [low * p_bar, high * p_bar] for every observable node.
struct PriceSampler {
  double low_fraction = 0.2;
  double high_fraction = 1.0;

  Vector draw(Index n_observable, double p_bar, stats::RngStream& rng) const;
};

/// Observable-agent panel: row t holds prices and equilibrium consumption.
struct PanelData {
  IndexList observable_ids;
  Matrix prices;       ///< n x |V_O|
  Matrix consumption;  ///< n x |V_O|
  std::uint64_t seed = 0;
  std::string shock_meta;
  /// Generating network, absent for blind estimation.
  std::shared_ptr<const NetworkInstance> truth;
  /// File the truth was loaded from, if any.
  std::string instance_ref;

  Index n() const { return prices.rows(); }
  Index n_observable() const { return prices.cols(); }
};

/// Full price vector: p_O on observable nodes and p_bar on latent ones.
Vector full_prices(const DerivedMatrices& d, const Vector& p_o);

/// y = M^{-1}(a + xi - p). Throws ModelError if any y_i <= 0.
Vector solve_equilibrium(const DerivedMatrices& d, const Vector& p, const Vector& xi);

struct BestResponseResult {
  Vector y;
  /// Sweeps performed before the one that confirmed convergence.
  int iterations = 0;
  /// Iterates never decreased in any coordinate.
  bool monotone = true;
};

/// Jacobi best-response dynamics from y = 0:
/// y_i <- max(0, (a_i + xi_i - p_i + sum_j G_ij y_j) / (2 b_i)).
BestResponseResult best_response_iterate(const NetworkInstance& instance, const Vector& p,
                                         const Vector& xi, double tol = 1e-10,
                                         int max_iter = 100000);

struct SimulatedPanel {
  PanelData panel;
  /// Realized consumption shocks eps_O per row (not part of the data).
  Matrix epsilon;
};

/// Simulates n independent periods. Row t uses its own substream, so the
/// result does not depend on `threads`.
SimulatedPanel simulate_panel_detailed(const NetworkInstance& instance, Index n,
                                       const PriceSampler& prices, const ShockModel& shocks,
                                       std::uint64_t seed, unsigned threads = 1);

PanelData simulate_panel(const NetworkInstance& instance, Index n, const PriceSampler& prices,
                         const ShockModel& shocks, std::uint64_t seed, unsigned threads = 1);

}  // namespace latnet
