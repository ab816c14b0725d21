#include "latnet/error.hpp"
#include "latnet/experiment.hpp"
#include "latnet/io.hpp"
#include "latnet/parallel.hpp"
#include "latnet/pricing.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace latnet;
using io::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kStage = 3, kNumeric = 4 };

struct Args {
  std::string config;
  std::string out = ".";
  unsigned threads = 0;
  bool resume = false;
  bool verbose = false;
  std::string network;
  std::string panel;
  std::string estimation;
  std::string trace_dir;
  Index n = 0;
  int replication = 0;
};

ExperimentConfig load_config(const Args& a) {
  if (a.config.empty()) return ExperimentConfig::from_json(json::object());
  return ExperimentConfig::from_json(io::read_json(a.config));
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required");
  if (!fs::exists(path)) throw ConfigError(std::string(flag) + ": no such file " + path);
}

NetworkInstance network_for(const Args& a, const ExperimentConfig& c) {
  if (!a.network.empty()) {
    require_file(a.network, "--network");
    return io::network_from_json(io::read_json(a.network));
  }
  return c.generator.build(c.network_seed());
}

void cmd_generate(const Args& a) {
  ExperimentConfig c = load_config(a);
  NetworkInstance inst = c.generator.build(c.network_seed());
  io::write_json(fs::path(a.out) / "network.json", io::to_json(inst));
  std::cout << "network with " << inst.size() << " nodes (" << inst.observable.size()
            << " observable), zeta " << inst.zeta << "\n";
}

void cmd_simulate(const Args& a) {
  ExperimentConfig c = load_config(a);
  NetworkInstance inst = network_for(a, c);
  Index n = a.n > 0 ? a.n : c.n_grid.front();
  PanelData p = simulate_panel(inst, n, c.prices, c.shock.model(inst), c.panel_seed(n, a.replication),
                               a.threads);
  p.instance_ref = a.network.empty() ? "" : fs::absolute(a.network).string();
  fs::path out(a.out);
  io::write_json(out / "panel.json", io::to_json(p));
  io::write_text(out / "panel.csv", io::panel_csv(p));
  std::cout << "panel with " << n << " periods written to " << (out / "panel.json").string() << "\n";
}

// Re-solves every row with tracing on; solves are deterministic, so the
// traces describe exactly the runs behind the estimate.
void write_traces(const PanelData& p, const EstimationResult& r, const fs::path& dir) {
  auto design = DesignMoments::from_design(intercept_design(p.prices));
  SolveOptions opt = r.options.stage.solver;
  const double lambda = r.options.stage.lambda_override.value_or(r.constants.lambda);
  auto dump = [&](const RowProgram& prog, const std::string& name) {
    std::vector<SolveOptions::TraceRow> rows;
    opt.trace = &rows;
    SolveResult res = solve_row(prog, opt);
    io::write_text(dir / (name + ".csv"), io::trace_csv(rows));
    io::write_json(dir / (name + ".json"), io::to_json(prog, &res));
  };
  for (Index k = 0; k < p.n_observable(); ++k)
    dump(make_dantzig_row(design, p.consumption.col(k), k, lambda, r.constants.tau),
         "step1_row" + std::to_string(k));
  for (Index k = 0; k <= p.n_observable(); ++k)
    dump(make_debias_row(design, k, lambda), "step2_row" + std::to_string(k));
}

void cmd_estimate(const Args& a) {
  require_file(a.panel, "--panel");
  ExperimentConfig c = load_config(a);
  PanelData p = io::panel_from_json(io::read_json(a.panel));
  EstimatorOptions opts = c.estimator;
  opts.seed = c.bootstrap_seed(p.n(), a.replication);
  opts.stage.threads = a.threads;
  EstimationResult r = estimate(p, opts);
  fs::path out(a.out);
  io::write_json(out / "estimation.json", io::to_json(r));
  io::write_text(out / "w_check_mu.csv", io::matrix_csv(r.w_check_mu));
  io::write_text(out / "entries.csv", io::entries_csv(r));
  for (const auto& w : r.thresholds.warnings) std::cerr << "warning: " << w << "\n";
  if (a.verbose)
    for (const auto& [stage, s] : r.seconds) std::cerr << stage << ": " << s << " s\n";
  if (!a.trace_dir.empty()) write_traces(p, r, a.trace_dir);
  std::cout << "estimate from " << p.n() << " periods, lambda " << r.constants.lambda << "\n";
}

void cmd_price(const Args& a) {
  require_file(a.network, "--network");
  NetworkInstance inst = io::network_from_json(io::read_json(a.network));
  DerivedMatrices d = derive(inst);
  std::vector<PriceSolution> sols{benchmark_prices(d)};
  if (!a.estimation.empty()) {
    require_file(a.estimation, "--estimation");
    EstimationResult r = io::estimation_from_json(io::read_json(a.estimation));
    sols.push_back(estimated_prices(r, inst.p_bar, &d));
  }
  fs::path out(a.out);
  io::write_text(out / "prices.csv", io::prices_csv(sols, inst.observable));
  json all = json::array();
  for (const auto& s : sols) all.push_back(io::to_json(s));
  io::write_json(out / "prices.json", all);
  for (const auto& s : sols)
    std::cout << to_string(s.method) << ": revenue " << s.expected_revenue << "\n";
}

void cmd_evaluate(const Args& a) {
  require_file(a.estimation, "--estimation");
  if (a.network.empty())
    throw ConfigError("evaluate needs the generating network (--network); the revenue gap "
                      "depends on the complete-information optimum");
  require_file(a.network, "--network");
  NetworkInstance inst = io::network_from_json(io::read_json(a.network));
  DerivedMatrices d = derive(inst);
  EstimationResult r = io::estimation_from_json(io::read_json(a.estimation));
  if (r.w_check.rows() != d.h_inv.rows())
    throw ConfigError("estimation and network disagree on the number of observable agents");
  Matrix diff = r.w_check_mu - d.h_inv;
  json ev = {{"format", "latnet.evaluation"},
             {"max_entry_error", (r.w_check - d.h_inv).cwiseAbs().maxCoeff()},
             {"err1_mu", norm_1(diff)},
             {"errinf_mu", norm_inf(diff)}};
  // Same policy as the sweep: no prices from a singular estimate, gap reported as null.
  try {
    PriceSolution p = estimated_prices(r, inst.p_bar, &d);
    ev["revenue_gap"] = revenue_gap(d, p.prices);
    ev["prices"] = io::to_json(p);
  } catch (const SingularityError& e) {
    std::cerr << "warning: " << e.what() << "\n";
    ev["revenue_gap"] = nullptr;
    ev["prices"] = nullptr;
  }
  io::write_json(fs::path(a.out) / "evaluation.json", ev);
  std::cout << ev.dump(1) << "\n";
}

void cmd_sweep(const Args& a) {
  if (a.config.empty()) throw ConfigError("sweep needs --config");
  require_file(a.config, "--config");
  ExperimentConfig c = load_config(a);
  SweepOptions so;
  so.threads = a.threads;
  so.resume = a.resume;
  so.log = a.verbose ? &std::cerr : nullptr;
  SweepReport rep = run_sweep(c, a.out, so);
  std::cout << render_report(rep);
}

void cmd_report(const Args& a) {
  fs::path out(a.out);
  fs::path src = out / "sweep_report.json";
  require_file(src.string(), "--out");
  SweepReport rep = load_report(src);
  std::string text = render_report(rep);
  io::write_text(out / "summary.txt", text);
  io::write_text(out / "summary.csv", summary_csv(rep));
  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimation and pricing on networks with latent agents"};
  app.require_subcommand(1);
  Args args;
  args.threads = default_threads();

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "Experiment config (JSON)");
    sub->add_option("--out", args.out, "Output directory");
    sub->add_option("--threads", args.threads, "Worker threads (default: LATNET_THREADS or all cores)");
    sub->add_flag("--verbose", args.verbose, "Progress on stderr");
  };
  auto* gen = app.add_subcommand("generate", "Generate a network from the config");
  auto* sim = app.add_subcommand("simulate", "Simulate an observable panel");
  sim->add_option("--network", args.network, "Network file (default: generate from config)");
  sim->add_option("--n", args.n, "Number of periods (default: first n_grid entry)");
  sim->add_option("--replication", args.replication, "Replication index for seeding");
  auto* est = app.add_subcommand("estimate", "Estimate H^{-1} from a panel");
  est->add_option("--panel", args.panel, "Panel file");
  est->add_option("--replication", args.replication, "Replication index for seeding");
  est->add_option("--trace-dir", args.trace_dir, "Write per-row solver traces and programs here");
  auto* pri = app.add_subcommand("price", "Benchmark and estimate-based prices");
  pri->add_option("--network", args.network, "Network file");
  pri->add_option("--estimation", args.estimation, "Estimation file");
  auto* eva = app.add_subcommand("evaluate", "Errors and revenue gap against the truth");
  eva->add_option("--network", args.network, "Network file");
  eva->add_option("--estimation", args.estimation, "Estimation file");
  auto* swp = app.add_subcommand("sweep", "Monte Carlo sweep over n and replications");
  swp->add_flag("--resume", args.resume, "Skip cells already committed to MANIFEST.json");
  auto* rep = app.add_subcommand("report", "Summarize sweep_report.json in --out");
  for (auto* s : {gen, sim, est, pri, eva, swp, rep}) common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (args.threads == 0) args.threads = 1;

  try {
    if (*gen) cmd_generate(args);
    else if (*sim) cmd_simulate(args);
    else if (*est) cmd_estimate(args);
    else if (*pri) cmd_price(args);
    else if (*eva) cmd_evaluate(args);
    else if (*swp) cmd_sweep(args);
    else if (*rep) cmd_report(args);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const StructuralError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "stage error: " << e.what() << "\n";
    return kStage;
  }
}
