#include "latnet/experiment.hpp"

#include "latnet/error.hpp"
#include "latnet/parallel.hpp"
#include "latnet/pricing.hpp"
#include "latnet/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

namespace latnet {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, const char* where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(std::string("unknown field '") + k + "' in " + where);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string cell_id(Index n, int r) {
  std::ostringstream os;
  os << "n" << n << "_r" << std::setw(4) << std::setfill('0') << r;
  return os.str();
}

json maybe(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

Summary summarize(std::vector<double> xs) {
  Summary s{kNaN, kNaN, kNaN};
  bool all_nan = std::all_of(xs.begin(), xs.end(), [](double x) { return std::isnan(x); });
  if (xs.empty() || all_nan) return s;
  for (double& x : xs)
    if (!std::isfinite(x)) x = std::numeric_limits<double>::infinity();
  s.median = stats::median(xs);
  s.iqr = stats::iqr(xs);
  s.mean = stats::mean(xs);
  return s;
}

bool same(double x, double y) { return (!std::isfinite(x) && !std::isfinite(y)) || x == y; }

}  // namespace

NetworkInstance GeneratorSpec::build(std::uint64_t seed) const {
  GeneratorCommon c = common;
  c.seed = seed;
  if (n_observable > 0) {
    if (n_observable > c.n_nodes) throw ConfigError("generator: n_observable exceeds n_nodes");
    c.latent_fraction =
        static_cast<double>(c.n_nodes - n_observable) / static_cast<double>(c.n_nodes);
  }
  if (family == "banded") return generate_banded(c, bandwidth);
  if (family == "polynomial_decay") return generate_polynomial_decay(c, theta, c_scale);
  if (family == "bounded_growth") return generate_bounded_growth(c, growth, extra_edges);
  throw ConfigError("unknown generator family '" + family + "'");
}

ShockModel ShockSpec::model(const NetworkInstance& inst) const {
  ShockModel m = ShockModel::defaults(inst, sigma, rho);
  m.family = family;
  return m;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j, "config",
                 {"generator", "shock", "prices", "n_grid", "replications", "estimator", "seed",
                  "write_cell_artifacts"});
  ExperimentConfig c;
  try {
    if (j.contains("generator")) {
      const json& g = j["generator"];
      reject_unknown(g, "generator",
                     {"family", "n_nodes", "n_observable", "latent_fraction", "b", "a", "p_bar",
                      "weight_margin", "weight_scale", "symmetric", "jitter", "bandwidth", "theta",
                      "c_scale", "growth", "extra_edges"});
      GeneratorSpec& s = c.generator;
      s.family = get_or(g, "family", s.family);
      s.common.n_nodes = get_or(g, "n_nodes", s.common.n_nodes);
      s.n_observable = get_or(g, "n_observable", s.n_observable);
      s.common.latent_fraction = get_or(g, "latent_fraction", s.common.latent_fraction);
      s.common.b_value = get_or(g, "b", s.common.b_value);
      s.common.a_value = get_or(g, "a", s.common.a_value);
      s.common.p_bar = get_or(g, "p_bar", s.common.p_bar);
      s.common.weight_margin = get_or(g, "weight_margin", s.common.weight_margin);
      s.common.weight_scale = get_or(g, "weight_scale", s.common.weight_scale);
      s.common.symmetric = get_or(g, "symmetric", s.common.symmetric);
      s.common.jitter = get_or(g, "jitter", s.common.jitter);
      s.bandwidth = get_or(g, "bandwidth", s.bandwidth);
      s.theta = get_or(g, "theta", s.theta);
      s.c_scale = get_or(g, "c_scale", s.c_scale);
      s.extra_edges = get_or(g, "extra_edges", s.extra_edges);
      if (g.contains("growth")) {
        const json& gr = g["growth"];
        reject_unknown(gr, "generator.growth", {"family", "constant", "degree"});
        std::string fam = get_or<std::string>(gr, "family", "polynomial");
        if (fam == "polynomial") s.growth.family = GrowthBound::Family::polynomial;
        else if (fam == "exponential") s.growth.family = GrowthBound::Family::exponential;
        else throw ConfigError("unknown growth family '" + fam + "'");
        s.growth.constant = get_or(gr, "constant", s.growth.constant);
        s.growth.degree = get_or(gr, "degree", s.growth.degree);
      }
    }
    if (j.contains("shock")) {
      const json& s = j["shock"];
      reject_unknown(s, "shock", {"family", "sigma", "rho"});
      c.shock.family = shock_family_from_string(get_or<std::string>(s, "family", "gaussian_truncated"));
      c.shock.sigma = get_or(s, "sigma", c.shock.sigma);
      c.shock.rho = get_or(s, "rho", c.shock.rho);
      if (!(c.shock.sigma >= 0.0)) throw ConfigError("shock.sigma must be nonnegative");
      if (!(c.shock.rho >= 0.0 && c.shock.rho < 1.0)) throw ConfigError("shock.rho must lie in [0,1)");
    }
    if (j.contains("prices")) {
      const json& p = j["prices"];
      reject_unknown(p, "prices", {"low_fraction", "high_fraction"});
      c.prices.low_fraction = get_or(p, "low_fraction", c.prices.low_fraction);
      c.prices.high_fraction = get_or(p, "high_fraction", c.prices.high_fraction);
      if (!(c.prices.low_fraction >= 0.0 && c.prices.low_fraction < c.prices.high_fraction &&
            c.prices.high_fraction <= 1.0))
        throw ConfigError("prices: need 0 <= low_fraction < high_fraction <= 1");
    }
    c.n_grid = get_or(j, "n_grid", c.n_grid);
    c.replications = get_or(j, "replications", c.replications);
    c.seed = get_or(j, "seed", c.seed);
    c.write_cell_artifacts = get_or(j, "write_cell_artifacts", c.write_cell_artifacts);
    if (j.contains("estimator")) {
      const json& e = j["estimator"];
      reject_unknown(e, "estimator",
                     {"threshold_mode", "alpha", "bootstrap_draws", "tol_feas", "tol_opt", "max_iter"});
      c.estimator.mode = threshold_mode_from_string(get_or<std::string>(e, "threshold_mode", "self_normalized"));
      c.estimator.alpha = get_or(e, "alpha", c.estimator.alpha);
      c.estimator.bootstrap_draws = get_or(e, "bootstrap_draws", c.estimator.bootstrap_draws);
      c.estimator.stage.solver.tol_feas = get_or(e, "tol_feas", c.estimator.stage.solver.tol_feas);
      c.estimator.stage.solver.tol_opt = get_or(e, "tol_opt", c.estimator.stage.solver.tol_opt);
      c.estimator.stage.solver.max_iter = get_or(e, "max_iter", c.estimator.stage.solver.max_iter);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.n_grid.empty()) throw ConfigError("n_grid must not be empty");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] < 8) throw ConfigError("n_grid entries must be at least 8");
    if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
  }
  if (c.replications < 1) throw ConfigError("replications must be at least 1");
  if (c.estimator.mode == ThresholdMode::bootstrap && c.estimator.bootstrap_draws < 200)
    throw ConfigError("estimator.bootstrap_draws must be at least 200");
  if (!(c.estimator.alpha > 0.0 && c.estimator.alpha < 1.0))
    throw ConfigError("estimator.alpha must lie in (0,1)");
  // Fails early on generator parameters that cannot be realized.
  c.generator.build(c.network_seed());
  return c;
}

json ExperimentConfig::to_json() const {
  const GeneratorSpec& g = generator;
  json growth = {{"family", g.growth.family == GrowthBound::Family::polynomial ? "polynomial" : "exponential"},
                 {"constant", g.growth.constant},
                 {"degree", g.growth.degree}};
  return {{"generator",
           {{"family", g.family},
            {"n_nodes", g.common.n_nodes},
            {"n_observable", g.n_observable},
            {"latent_fraction", g.common.latent_fraction},
            {"b", g.common.b_value},
            {"a", g.common.a_value},
            {"p_bar", g.common.p_bar},
            {"weight_margin", g.common.weight_margin},
            {"weight_scale", g.common.weight_scale},
            {"symmetric", g.common.symmetric},
            {"jitter", g.common.jitter},
            {"bandwidth", g.bandwidth},
            {"theta", g.theta},
            {"c_scale", g.c_scale},
            {"growth", growth},
            {"extra_edges", g.extra_edges}}},
          {"shock", {{"family", latnet::to_string(shock.family)}, {"sigma", shock.sigma}, {"rho", shock.rho}}},
          {"prices", {{"low_fraction", prices.low_fraction}, {"high_fraction", prices.high_fraction}}},
          {"n_grid", n_grid},
          {"replications", replications},
          {"estimator",
           {{"threshold_mode", latnet::to_string(estimator.mode)},
            {"alpha", estimator.alpha},
            {"bootstrap_draws", estimator.bootstrap_draws},
            {"tol_feas", estimator.stage.solver.tol_feas},
            {"tol_opt", estimator.stage.solver.tol_opt},
            {"max_iter", estimator.stage.solver.max_iter}}},
          {"seed", seed},
          {"write_cell_artifacts", write_cell_artifacts}};
}

std::string ExperimentConfig::hash() const {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(to_json().dump());
  return os.str();
}

std::uint64_t ExperimentConfig::network_seed() const {
  return stats::RngStream(seed).child("network").next();
}

std::uint64_t ExperimentConfig::panel_seed(Index n, int r) const {
  return stats::RngStream(seed).child("panel").child(static_cast<std::uint64_t>(n))
      .child(static_cast<std::uint64_t>(r)).next();
}

std::uint64_t ExperimentConfig::bootstrap_seed(Index n, int r) const {
  return stats::RngStream(seed).child("bootstrap").child(static_cast<std::uint64_t>(n))
      .child(static_cast<std::uint64_t>(r)).next();
}

json CellRecord::to_json(bool with_time) const {
  json j = {{"n", n},
            {"replication", replication},
            {"max_entry_error", maybe(max_entry_error)},
            {"err1_mu", maybe(err1_mu)},
            {"errinf_mu", maybe(errinf_mu)},
            {"row_col_error", maybe(row_col_error)},
            {"revenue_gap", maybe(revenue_gap)},
            {"binding", binding},
            {"clamped", clamped},
            {"simultaneous_coverage", maybe(simultaneous_coverage)},
            {"entry_coverage", maybe(entry_coverage)},
            {"newton_steps", newton_steps}};
  if (with_time) j["seconds"] = seconds;
  return j;
}

CellRecord CellRecord::from_json(const json& j) {
  CellRecord r;
  r.n = j.at("n").get<Index>();
  r.replication = j.at("replication").get<int>();
  r.max_entry_error = number(j.at("max_entry_error"));
  r.err1_mu = number(j.at("err1_mu"));
  r.errinf_mu = number(j.at("errinf_mu"));
  r.row_col_error = number(j.at("row_col_error"));
  r.revenue_gap = number(j.at("revenue_gap"));
  r.binding = j.at("binding").get<Index>();
  r.clamped = j.at("clamped").get<Index>();
  r.simultaneous_coverage = number(j.at("simultaneous_coverage"));
  r.entry_coverage = number(j.at("entry_coverage"));
  r.newton_steps = j.at("newton_steps").get<Index>();
  r.seconds = j.value("seconds", 0.0);
  return r;
}

std::vector<Aggregate> aggregate(const std::vector<CellRecord>& records) {
  std::map<Index, std::vector<const CellRecord*>> by_n;
  for (const auto& r : records) by_n[r.n].push_back(&r);
  std::vector<Aggregate> out;
  for (const auto& [n, rs] : by_n) {
    Aggregate a;
    a.n = n;
    a.count = static_cast<int>(rs.size());
    auto collect = [&](double CellRecord::*field) {
      std::vector<double> xs;
      for (const CellRecord* r : rs) xs.push_back(r->*field);
      return summarize(std::move(xs));
    };
    a.metrics["max_entry_error"] = collect(&CellRecord::max_entry_error);
    a.metrics["row_col_error"] = collect(&CellRecord::row_col_error);
    a.metrics["revenue_gap"] = collect(&CellRecord::revenue_gap);
    a.metrics["simultaneous_coverage"] = collect(&CellRecord::simultaneous_coverage);
    a.metrics["entry_coverage"] = collect(&CellRecord::entry_coverage);
    out.push_back(std::move(a));
  }
  return out;
}

json SweepReport::numeric_json() const {
  json recs = json::array();
  for (const auto& r : records) recs.push_back(r.to_json(false));
  json aggs = json::array();
  for (const auto& a : aggregates) {
    json m = json::object();
    for (const auto& [name, s] : a.metrics)
      m[name] = {{"median", maybe(s.median)}, {"iqr", maybe(s.iqr)}, {"mean", maybe(s.mean)}};
    aggs.push_back({{"n", a.n}, {"count", a.count}, {"metrics", m}});
  }
  return {{"format", "latnet.sweep_report"},
          {"version", 1},
          {"config_hash", config_hash},
          {"records", recs},
          {"aggregates", aggs}};
}

std::string SweepReport::records_csv() const {
  std::ostringstream os;
  os << "n,replication,max_entry_error,err1_mu,errinf_mu,row_col_error,revenue_gap,binding,"
        "clamped,simultaneous_coverage,entry_coverage,newton_steps\n";
  using io::format_double;
  for (const auto& r : records)
    os << r.n << ',' << r.replication << ',' << format_double(r.max_entry_error) << ','
       << format_double(r.err1_mu) << ',' << format_double(r.errinf_mu) << ','
       << format_double(r.row_col_error) << ',' << format_double(r.revenue_gap) << ',' << r.binding
       << ',' << r.clamped << ',' << format_double(r.simultaneous_coverage) << ','
       << format_double(r.entry_coverage) << ',' << r.newton_steps << '\n';
  return os.str();
}

const Aggregate& SweepReport::at(Index n) const {
  for (const auto& a : aggregates)
    if (a.n == n) return a;
  throw ConfigError("sweep report has no cells for n = " + std::to_string(n));
}

CellRecord run_cell(const ExperimentConfig& config, const NetworkInstance& instance,
                    const DerivedMatrices& derived, Index n, int replication, const fs::path& dir) {
  auto start = std::chrono::steady_clock::now();
  CellRecord rec;
  rec.n = n;
  rec.replication = replication;

  PanelData panel = simulate_panel(instance, n, config.prices, config.shock.model(instance),
                                   config.panel_seed(n, replication), 1);
  panel.instance_ref = "../../network.json";
  EstimatorOptions opts = config.estimator;
  opts.seed = config.bootstrap_seed(n, replication);
  opts.stage.threads = 1;
  EstimationResult est = estimate(panel, opts);

  const Matrix& truth = derived.h_inv;
  rec.max_entry_error = (est.w_check - truth).cwiseAbs().maxCoeff();
  Matrix diff = est.w_check_mu - truth;
  rec.err1_mu = norm_1(diff);
  rec.errinf_mu = norm_inf(diff);
  rec.row_col_error = std::max(rec.err1_mu, rec.errinf_mu);
  for (const auto& d : est.diagnostics) rec.newton_steps += d.iterations;

  if (est.ci_lower.size()) {
    auto inside = (est.ci_lower.array() <= truth.array()) && (truth.array() <= est.ci_upper.array());
    rec.simultaneous_coverage = inside.all() ? 1.0 : 0.0;
    rec.entry_coverage = static_cast<double>(inside.count()) / static_cast<double>(truth.size());
  } else {
    rec.simultaneous_coverage = kNaN;
    rec.entry_coverage = kNaN;
  }

  std::vector<PriceSolution> sols;
  try {
    PriceSolution p = estimated_prices(est, instance.p_bar, &derived);
    rec.revenue_gap = revenue_gap(derived, p.prices);
    rec.binding = static_cast<Index>(p.binding_set.size());
    rec.clamped = static_cast<Index>(p.clamped_set.size());
    sols.push_back(std::move(p));
  } catch (const SingularityError&) {
    rec.revenue_gap = kNaN;  // no prices can be formed from this estimate
  }

  if (!dir.empty()) {
    if (config.write_cell_artifacts) {
      io::write_json(dir / "panel.json", io::to_json(panel));
      io::write_json(dir / "estimation.json", io::to_json(est));
      io::write_text(dir / "prices.csv", io::prices_csv(sols, instance.observable));
    }
    io::write_json(dir / "record.json", rec.to_json(false));
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

SweepReport run_sweep(const ExperimentConfig& config, const fs::path& out,
                      const SweepOptions& options) {
  fs::create_directories(out);
  const std::string hash = config.hash();
  const fs::path manifest_path = out / "MANIFEST.json";

  json manifest = {{"format", "latnet.manifest"},
                   {"config_hash", hash},
                   {"complete", false},
                   {"cells", json::object()}};
  if (options.resume && fs::exists(manifest_path)) {
    json old = io::read_json(manifest_path);
    if (old.value("config_hash", std::string()) != hash)
      throw ConfigError("--resume: " + manifest_path.string() + " was written for another config");
    for (const auto& [id, status] : old["cells"].items())
      if (status == "done") manifest["cells"][id] = "done";
  }
  io::write_json(out / "config.json", config.to_json());

  NetworkInstance instance = config.generator.build(config.network_seed());
  DerivedMatrices derived = derive(instance);
  io::write_json(out / "network.json", io::to_json(instance));
  io::write_text(out / "prices.csv", io::prices_csv({benchmark_prices(derived)}, instance.observable));
  io::write_json(manifest_path, manifest);

  struct Cell {
    Index n;
    int r;
    std::string id;
  };
  std::vector<Cell> cells;
  for (Index n : config.n_grid)
    for (int r = 0; r < config.replications; ++r) cells.push_back({n, r, cell_id(n, r)});

  std::vector<CellRecord> records(cells.size());
  std::vector<char> have(cells.size(), 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    fs::path rec_path = out / "cells" / cells[i].id / "record.json";
    if (manifest["cells"].contains(cells[i].id) && fs::exists(rec_path)) {
      records[i] = CellRecord::from_json(io::read_json(rec_path));
      have[i] = 1;
    } else {
      manifest["cells"].erase(cells[i].id);
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!have[i]) pending.push_back(i);
  if (options.log && pending.size() < cells.size())
    *options.log << "resume: " << cells.size() - pending.size() << " of " << cells.size()
                 << " cells already complete\n";

  std::mutex commit;
  parallel_for(pending.size(), options.threads, [&](std::size_t k) {
    const Cell& c = cells[pending[k]];
    try {
      records[pending[k]] = run_cell(config, instance, derived, c.n, c.r, out / "cells" / c.id);
    } catch (const std::exception& e) {
      std::lock_guard lock(commit);
      manifest["cells"][c.id] = std::string("failed: ") + e.what();
      io::write_json(manifest_path, manifest);
      throw;
    }
    std::lock_guard lock(commit);
    manifest["cells"][c.id] = "done";
    io::write_json(manifest_path, manifest);
    if (options.log)
      *options.log << "cell " << c.id << " done in " << std::fixed << std::setprecision(2)
                   << records[pending[k]].seconds << " s\n";
  });

  SweepReport report;
  report.config_hash = hash;
  report.records = std::move(records);
  report.aggregates = aggregate(report.records);
  io::write_json(out / "sweep_report.json", report.numeric_json());
  io::write_text(out / "sweep_report.csv", report.records_csv());
  json timing = json::object();
  for (const auto& r : report.records) timing[cell_id(r.n, r.replication)] = r.seconds;
  io::write_json(out / "timings.json", timing);
  manifest["complete"] = true;
  io::write_json(manifest_path, manifest);
  return report;
}

SweepReport load_report(const fs::path& path) {
  json j = io::read_json(path);
  if (j.value("format", std::string()) != "latnet.sweep_report")
    throw ConfigError(path.string() + " is not a sweep report");
  SweepReport rep;
  rep.config_hash = j.value("config_hash", std::string());
  for (const json& r : j.at("records")) rep.records.push_back(CellRecord::from_json(r));
  rep.aggregates = aggregate(rep.records);
  const json& stored = j.at("aggregates");
  if (stored.size() != rep.aggregates.size())
    throw ConfigError(path.string() + ": aggregates do not match the records");
  for (std::size_t i = 0; i < stored.size(); ++i) {
    const Aggregate& a = rep.aggregates[i];
    if (stored[i].at("n").get<Index>() != a.n || stored[i].at("count").get<int>() != a.count)
      throw ConfigError(path.string() + ": aggregates do not match the records");
    for (const auto& [name, s] : a.metrics) {
      const json& m = stored[i].at("metrics").at(name);
      if (!same(number(m.at("median")), s.median) || !same(number(m.at("iqr")), s.iqr) ||
          !same(number(m.at("mean")), s.mean))
        throw ConfigError(path.string() + ": aggregate '" + name + "' at n = " +
                          std::to_string(a.n) + " does not match the records");
    }
  }
  return rep;
}

std::string render_report(const SweepReport& report) {
  std::ostringstream os;
  os << "sweep " << report.config_hash << "\n";
  os << std::left << std::setw(8) << "n" << std::setw(6) << "reps";
  for (const auto& m : kSweepMetrics) os << std::setw(26) << m;
  os << "\n";
  for (const auto& a : report.aggregates) {
    os << std::setw(8) << a.n << std::setw(6) << a.count;
    for (const auto& m : kSweepMetrics) {
      const Summary& s = a.metrics.at(m);
      std::ostringstream cell;
      if (std::isnan(s.median)) cell << "-";
      else cell << std::setprecision(4) << s.median << " [" << s.iqr << "]";
      os << std::setw(26) << cell.str();
    }
    os << "\n";
  }
  os << "cells: median [IQR]; coverage columns apply to bootstrap runs\n";
  return os.str();
}

std::string summary_csv(const SweepReport& report) {
  std::ostringstream os;
  os << "n,metric,median,iqr,mean\n";
  for (const auto& a : report.aggregates)
    for (const auto& m : kSweepMetrics) {
      const Summary& s = a.metrics.at(m);
      os << a.n << ',' << m << ',' << io::format_double(s.median) << ','
         << io::format_double(s.iqr) << ',' << io::format_double(s.mean) << '\n';
    }
  return os.str();
}

}  // namespace latnet
