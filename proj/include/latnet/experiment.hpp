#pragma once

#include "latnet/estimator.hpp"
#include "latnet/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace latnet {

struct GeneratorSpec {
  std::string family = "banded";  ///< banded | polynomial_decay | bounded_growth
  GeneratorCommon common;
  /// Exact observable count; overrides common.latent_fraction when > 0.
  Index n_observable = 0;
  Index bandwidth = 2;
  double theta = 2.0;
  double c_scale = 1.0;
  GrowthBound growth;
  Index extra_edges = 0;

  NetworkInstance build(std::uint64_t seed) const;
};

struct ShockSpec {
  ShockModel::Family family = ShockModel::Family::gaussian_truncated;
  double sigma = 0.1;
  double rho = 0.2;

  ShockModel model(const NetworkInstance& inst) const;
};

struct ExperimentConfig {
  GeneratorSpec generator;
  ShockSpec shock;
  PriceSampler prices;
  std::vector<Index> n_grid{400};
  int replications = 1;
  EstimatorOptions estimator;
  std::uint64_t seed = 0;
  /// Store panel.json and estimation.json for every cell.
  bool write_cell_artifacts = true;

  /// Validates as it parses; throws ConfigError naming the offending field.
  static ExperimentConfig from_json(const io::json& j);
  io::json to_json() const;
  /// FNV-1a of the canonical JSON dump.
  std::string hash() const;

  std::uint64_t network_seed() const;
  std::uint64_t panel_seed(Index n, int replication) const;
  std::uint64_t bootstrap_seed(Index n, int replication) const;
};

/// Outcome of one (n, replication) cell.
struct CellRecord {
  Index n = 0;
  int replication = 0;
  double max_entry_error = 0;  ///< max |W_check - H^{-1}|
  double err1_mu = 0;          ///< ||W_check_mu - H^{-1}||_1
  double errinf_mu = 0;
  double row_col_error = 0;    ///< max of the two above
  double revenue_gap = 0;
  Index binding = 0;           ///< estimated prices at p_bar
  Index clamped = 0;           ///< estimated prices raised to 0
  /// Bootstrap mode: 1 if every interval covers its H^{-1} entry; NaN otherwise.
  double simultaneous_coverage = 0;
  double entry_coverage = 0;
  Index newton_steps = 0;
  double seconds = 0;  ///< wall time; not part of the numeric payload

  io::json to_json(bool with_time) const;
  static CellRecord from_json(const io::json& j);
};

/// Non-finite values (failed pricing) rank above every finite value.
struct Summary {
  double median = 0;
  double iqr = 0;
  double mean = 0;
};

struct Aggregate {
  Index n = 0;
  int count = 0;
  std::map<std::string, Summary> metrics;
};

inline const std::vector<std::string> kSweepMetrics = {
    "max_entry_error", "row_col_error", "revenue_gap", "simultaneous_coverage", "entry_coverage"};

struct SweepReport {
  std::string config_hash;
  std::vector<CellRecord> records;  ///< sorted by (n, replication)
  std::vector<Aggregate> aggregates;

  /// Report without timings; identical across runs and thread counts.
  io::json numeric_json() const;
  std::string records_csv() const;
  const Aggregate& at(Index n) const;
};

std::vector<Aggregate> aggregate(const std::vector<CellRecord>& records);

/// Runs one cell and, if `dir` is non-empty, writes its artifacts there.
CellRecord run_cell(const ExperimentConfig& config, const NetworkInstance& instance,
                    const DerivedMatrices& derived, Index n, int replication,
                    const std::filesystem::path& dir);

struct SweepOptions {
  unsigned threads = 1;
  bool resume = false;
  std::ostream* log = nullptr;
};

/// Generates the network, runs every cell into out/cells/..., and writes
/// network.json, sweep_report.{json,csv}, prices.csv and MANIFEST.json.
/// Cells run in parallel; each finished cell is committed to the manifest.
SweepReport run_sweep(const ExperimentConfig& config, const std::filesystem::path& out,
                      const SweepOptions& options = {});

/// Loads sweep_report.json and checks that its aggregates match the records.
SweepReport load_report(const std::filesystem::path& path);

/// Plain-text table of medians and IQRs per n.
std::string render_report(const SweepReport& report);
/// n,metric,median,iqr,mean
std::string summary_csv(const SweepReport& report);

}  // namespace latnet
