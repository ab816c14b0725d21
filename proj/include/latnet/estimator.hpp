#pragma once

#include "latnet/conic.hpp"
#include "latnet/equilibrium.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace latnet {

struct PivotalConstants {
  double m_n = 1;     ///< sqrt(1 v max_k mean_t p_k^4)
  double tau = 0.25;  ///< 1 / (4 m_n)
  double lambda = 0;  ///< Phi^{-1}(1 - 1/(3 n |V_O|^2)) / sqrt(n)
};

PivotalConstants pivotal_constants(const PanelData& panel);

struct RowDiagnostics {
  std::string stage;  ///< "step1" or "step2"
  Index row = 0;
  SolveResult::Status status = SolveResult::Status::optimal;
  int iterations = 0;
  double objective = 0;
  double feasibility_residual = 0;
  double certificate_gap = 0;
};

struct Step1Result {
  Vector v_hat;
  Matrix w_hat;  ///< |V_O| x |V_O|, demand y = v - W p
  Vector z_hat;
  std::vector<RowDiagnostics> diagnostics;
};

struct Step2Result {
  Matrix psi_hat;  ///< (|V_O|+1)^2; row 0 is the intercept
  Vector z_hat;
  std::vector<RowDiagnostics> diagnostics;
};

/// Everything the solver stages need besides the data.
struct StageOptions {
  SolveOptions solver;
  unsigned threads = 1;
  /// Replaces the pivotal lambda when set (0 forces an exact fit).
  std::optional<double> lambda_override;
};

/// One dantzig_row program per observable node. Throws ConvergenceError
/// naming the row when a program does not reach the tolerances.
Step1Result step1_preliminary(const PanelData& panel, const PivotalConstants& constants,
                              const StageOptions& options = {});

/// One debias_row program per row of {intercept} u V_O.
Step2Result step2_debias(const PanelData& panel, const PivotalConstants& constants,
                         const StageOptions& options = {});

struct Debiased {
  Vector v_check;
  Matrix w_check;
};

/// (-v^T; W^T) <- (-v_hat^T; W_hat^T) - Psi (1/n) sum_t (1; p_t) e_t^T with
/// e_t = y_t - (v_hat - W_hat p_t).
Debiased step3_debiased(const PanelData& panel, const Vector& v_hat, const Matrix& w_hat,
                        const Matrix& psi_hat);

/// Thresholds in the layout of W: entry (k, j) belongs to W_kj, whose
/// correction combines row j+1 of Psi with the residual of node k.
struct Thresholds {
  Matrix sigma_hat;
  Matrix mu;
  /// Bootstrap critical value; NaN for the self-normalized rule.
  double cv_star = 0;
  /// Entries with sigma_hat = 0 left out of the bootstrap maximum.
  Index excluded = 0;
  std::vector<std::string> warnings;
};

/// Self-normalized rule mu = 2 (1 + 1/log n) sigma_hat lambda. Needs n >= 8.
Thresholds thresholds_self_normalized(const PanelData& panel, const Vector& v_hat,
                                      const Matrix& w_hat, const Matrix& psi_hat,
                                      const PivotalConstants& constants);

/// Gaussian multiplier bootstrap of max |T_kj|; mu = 2 cv* sigma_hat / sqrt(n).
/// Draw b uses the stream RngStream(seed).child("bootstrap").child(b).
Thresholds thresholds_bootstrap(const PanelData& panel, const Vector& v_hat, const Matrix& w_hat,
                                const Matrix& psi_hat, double alpha, int draws,
                                std::uint64_t seed, unsigned threads = 1);

/// W_kj 1{|W_kj| > mu_kj}.
Matrix step4_threshold(const Matrix& w_check, const Matrix& mu);

enum class ThresholdMode { self_normalized, bootstrap };
std::string to_string(ThresholdMode m);
ThresholdMode threshold_mode_from_string(const std::string& s);

struct EstimatorOptions {
  ThresholdMode mode = ThresholdMode::self_normalized;
  double alpha = 0.05;
  int bootstrap_draws = 1000;
  std::uint64_t seed = 0;
  StageOptions stage;
};

struct EstimationResult {
  PivotalConstants constants;
  Vector v_hat;
  Matrix w_hat;
  Vector z_hat;
  Matrix psi_hat;
  Vector psi_z_hat;
  Vector v_check;
  Matrix w_check;
  Thresholds thresholds;
  Matrix w_check_mu;
  /// Simultaneous intervals W_check +- cv* sigma_hat / sqrt(n); bootstrap mode only.
  Matrix ci_lower;
  Matrix ci_upper;
  std::vector<RowDiagnostics> diagnostics;
  std::map<std::string, double> seconds;
  EstimatorOptions options;
};

/// Full pipeline. Stage failures are rethrown with the stage name prefixed.
EstimationResult estimate(const PanelData& panel, const EstimatorOptions& options = {});

}  // namespace latnet
