#pragma once

#include "latnet/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace latnet {

/// Moments of a design matrix X (rows x_t = (1; p_t)) shared by every row
/// program built on it.
struct DesignMoments {
  Matrix x;                          ///< n x d
  Matrix sigma_hat;                  ///< X^T X / n
  std::vector<Matrix> weighted_gram; ///< B_j = X^T diag(X_j^2) X / n
  /// U_j with U_j^T U_j = [[B_j, Sigma_j], [Sigma_j^T, 1]] (debias cones).
  std::vector<Matrix> debias_factor;

  Index n() const { return x.rows(); }
  Index d() const { return x.cols(); }

  static std::shared_ptr<const DesignMoments> from_design(Matrix x);
};

/// Design with an intercept column: rows (1; p_t).
Matrix intercept_design(const Matrix& prices);

/// One row of either convex program of the estimator.
///
/// dantzig_row: minimize ||theta||_1 + tau z over theta = (v_k, W_k.), z, with
///   |(1/n) sum_t r_t x_tj| <= lambda z  and  ((1/n) sum_t r_t^2 x_tj^2)^(1/2) <= z
/// for every column j, where r_t = y_t - (v_k - W_k. p_t).
///
/// debias_row: minimize ((1/n) sum_t |psi x_t|^4)^(1/4) + z over psi, z, with
///   |psi Sigma_.j - 1{k=j}| <= lambda z  and
///   ((1/n) sum_t (psi x_t x_tj - 1{k=j})^2)^(1/2) <= z.
struct RowProgram {
  enum class Kind { dantzig_row, debias_row };
  Kind kind = Kind::dantzig_row;
  std::shared_ptr<const DesignMoments> design;
  Vector response;    ///< dantzig only
  Index target = 0;   ///< k; for debias rows the column of the unit target
  double lambda = 0;
  double tau = 0;     ///< dantzig only

  Index d() const { return design->d(); }
  Index n() const { return design->n(); }

  /// Objective term that does not involve z.
  double base_objective(const Vector& theta) const;
  /// Per-column constraint values (L_j, S_j) at theta, computed from the raw data.
  void constraint_values(const Vector& theta, Vector& linear, Vector& cone) const;
  /// Smallest z making theta feasible.
  double minimal_z(const Vector& theta) const;
  /// Objective with z at its minimal feasible value.
  double objective(const Vector& theta) const;
  /// Largest constraint violation at (theta, z).
  double feasibility_residual(const Vector& theta, double z) const;
  double z_weight() const { return kind == Kind::dantzig_row ? tau : 1.0; }
};

std::string to_string(RowProgram::Kind kind);

RowProgram make_dantzig_row(std::shared_ptr<const DesignMoments> design, Vector response,
                            Index target, double lambda, double tau);
RowProgram make_debias_row(std::shared_ptr<const DesignMoments> design, Index target,
                           double lambda);

struct SolveOptions {
  double tol_feas = 1e-7;
  double tol_opt = 1e-6;
  /// Cap on Newton steps across all barrier stages.
  int max_iter = 500;
  /// Smoothing of the 4-norm at the origin; shifts the objective by at most this.
  double smoothing = 1e-9;
  struct TraceRow {
    int iter;
    double objective;
    double feas_residual;
  };
  std::vector<TraceRow>* trace = nullptr;
};

struct SolveResult {
  enum class Status { optimal, max_iter, infeasible_detected };
  Vector solution;
  double z = 0;
  double objective = 0;
  double feasibility_residual = 0;
  /// Duality-gap bound from the barrier path, relative to max(1, |objective|).
  double certificate_gap = 0;
  int iterations = 0;
  Status status = Status::max_iter;
  /// Barrier dual estimates, one per constraint: [linear j (both sides summed)..., cone j...].
  Vector multipliers;
};

std::string to_string(SolveResult::Status s);

/// Solves one row program by a primal log-barrier method with Newton
/// centering on a reduced form whose size does not depend on n. The result
/// is re-polished so that z equals the smallest feasible value for the
/// returned theta. Deterministic: no randomness, fixed schedule.
SolveResult solve_row(const RowProgram& program, const SolveOptions& options = {});

struct KktReport {
  double feasibility = 0;
  /// max_j multiplier_j * slack_j at the returned point.
  double complementarity = 0;
  /// Largest objective decrease seen among random feasible probes.
  double worst_probe_decrease = 0;
  int probes = 0;
  bool feasible = false;
  bool locally_optimal = false;
  bool ok() const { return feasible && locally_optimal; }
};

/// Diagnostic re-check of a solution: feasibility from the raw data,
/// complementarity proxies and `probes` random perturbations of size
/// `probe_size` with z re-minimized.
KktReport verify_kkt(const RowProgram& program, const SolveResult& result, double tol_feas = 1e-7,
                     double tol_opt = 1e-6, int probes = 50, double probe_size = 1e-4);

}  // namespace latnet
