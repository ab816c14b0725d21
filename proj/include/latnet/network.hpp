#pragma once

#include "latnet/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace latnet {

struct GeneratorInfo {
  std::string generator;  ///< empty for hand-built instances
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
};

/// A directed weighted influence network with an observable/latent split.
///
/// g(i, j) is the marginal effect of j's consumption on i's payoff. Payoffs
/// are (a_i + xi_i) y_i - b_i y_i^2 + sum_j g_ij y_i y_j - p_i y_i.
struct NetworkInstance {
  Matrix g;
  Vector a;
  Vector b;
  IndexList observable;  ///< sorted
  double p_bar = 0;
  double zeta = 0;
  /// Position of each node on the line; identity for the generators.
  IndexList labeling;
  GeneratorInfo metadata;

  Index size() const { return g.rows(); }
  /// Complement of `observable`, sorted.
  IndexList latent() const;
};

/// Builds an instance with identity labeling and the given observable set.
NetworkInstance make_instance(Matrix g, Vector a, Vector b, IndexList observable, double p_bar,
                              double zeta);

struct Violation {
  enum class Kind {
    negative_weight,
    nonzero_diagonal,
    row_dominance,
    column_dominance,
    outside_option,
    partition,
    nonpositive_parameter,
  };
  Kind kind;
  Index node;     ///< -1 when the violation is not tied to a node
  double margin;  ///< how far the inequality is missed (positive)
};

std::string to_string(Violation::Kind kind);

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
};

/// Checks every model invariant. Throws StructuralError on shape mismatch.
ValidationReport validate(const NetworkInstance& instance);

/// Matrices derived from an instance; observable block first (O), latent (L).
struct DerivedMatrices {
  IndexList observable;
  IndexList latent;
  Matrix m;      ///< Lambda - G, Lambda = diag(2 b)
  Matrix m_inv;
  Matrix h;      ///< M_OO - M_OL M_LL^{-1} M_LO
  Matrix h_inv;  ///< equals [M^{-1}]_OO
  Matrix s_ol;   ///< M_OL M_LL^{-1}
  Matrix s_lo;   ///< M_LL^{-1} M_LO
  Matrix m_ll_inv;
  Vector v_o;    ///< H^{-1} a_O - H^{-1} S_OL (a_L - p_bar e_L)
  Vector a;
  double p_bar = 0;
  double zeta = 0;
};

inline constexpr double kSingularCondition = 1e12;

/// Throws ModelError if the instance is invalid and SingularityError when
/// M, M_LL or H are numerically singular.
DerivedMatrices derive(const NetworkInstance& instance);

/// Reassembles M^{-1} from its blocks {H^{-1}, -H^{-1}S_OL, -S_LO H^{-1},
/// M_LL^{-1} + S_LO H^{-1} S_OL}, in the original node order.
Matrix assemble_inverse_from_blocks(const DerivedMatrices& d);

/// Bonacich centrality (I - alpha G)^{-1} 1.
///
/// Throws DivergenceError when the spectral radius of alpha G is at least 1
/// and ModelError when (I - alpha G)^{-1} has a negative entry.
Vector bonacich(double alpha, const Matrix& g);

/// Upper estimate of the spectral radius via Gelfand's formula on repeated
/// squaring; exact in the limit.
double spectral_radius_estimate(const Matrix& a, int squarings = 40);

// ---- generators -------------------------------------------------------

struct GeneratorCommon {
  Index n_nodes = 50;
  double latent_fraction = 0.3;
  double b_value = 1.0;
  double a_value = 2.0;
  double p_bar = 1.5;
  /// Dominance gap requested as a fraction of b: zeta >= b * weight_margin.
  double weight_margin = 0.5;
  double weight_scale = 1.0;
  /// Symmetrize G before rescaling.
  bool symmetric = false;
  /// Relative per-node jitter of a and b (uniform in [1-jitter, 1+jitter]).
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

NetworkInstance generate_banded(const GeneratorCommon& common, Index bandwidth);

NetworkInstance generate_polynomial_decay(const GeneratorCommon& common, double theta,
                                          double c_scale);

struct GrowthBound {
  enum class Family { exponential, polynomial };
  Family family = Family::polynomial;
  double constant = 3.0;  ///< C_e or C_p
  double degree = 1.0;    ///< d_e or d_p

  /// Allowed neighborhood size at hop radius k (k >= 1).
  double at(Index k) const;
};

/// Random graph whose union in/out hop neighborhoods obey `growth`.
/// `extra_edges` random candidate edges are proposed on top of a
/// bidirected path and kept only if the bound still holds.
NetworkInstance generate_bounded_growth(const GeneratorCommon& common, const GrowthBound& growth,
                                        Index extra_edges);

/// Hop distances rho(i, j) along directed edges g(i, j) > 0; -1 if unreachable.
Eigen::MatrixXi hop_distances(const Matrix& g);

/// True iff |{j : rho(i,j) <= k} u {j : rho(j,i) <= k}| <= growth.at(k)
/// for every node i and every k in [1, |V|].
bool satisfies_growth(const Matrix& g, const GrowthBound& growth);

bool strongly_connected(const Matrix& g);

/// Same network with nodes renamed: node i becomes perm[i]. Labeling moves
/// with the nodes, so banded structure is preserved in label space.
NetworkInstance relabel(const NetworkInstance& instance, const IndexList& perm);

/// Largest zeta for which the dominance conditions hold.
double realized_gap(const Matrix& g, const Vector& b);

}  // namespace latnet
