#include "latnet/io.hpp"

#include "latnet/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace latnet::io {

namespace fs = std::filesystem;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

double number(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("missing field '") + key + "'");
  return *it;
}

IndexList indices(const json& j) { return j.get<IndexList>(); }

void check_format(const json& j, const char* expected) {
  if (!j.is_object() || j.value("format", std::string()) != expected)
    throw ConfigError(std::string("expected a '") + expected + "' document");
}

json diag_json(const RowDiagnostics& d) {
  return {{"stage", d.stage},
          {"row", d.row},
          {"status", to_string(d.status)},
          {"iterations", d.iterations},
          {"objective", d.objective},
          {"feasibility_residual", d.feasibility_residual},
          {"certificate_gap", d.certificate_gap}};
}

SolveResult::Status status_from_string(const std::string& s) {
  if (s == "optimal") return SolveResult::Status::optimal;
  if (s == "max_iter") return SolveResult::Status::max_iter;
  if (s == "infeasible_detected") return SolveResult::Status::infeasible_detected;
  throw ConfigError("unknown solver status '" + s + "'");
}

}  // namespace

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("matrix must be an array of rows");
  const Index r = static_cast<Index>(j.size());
  const Index c = r ? static_cast<Index>(j[0].size()) : 0;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != c) throw ConfigError("matrix rows differ in length");
    for (Index k = 0; k < c; ++k) m(i, k) = number(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("vector must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = number(j[static_cast<std::size_t>(i)]);
  return v;
}

json to_json(const NetworkInstance& inst) {
  json params = json::object();
  for (const auto& [k, v] : inst.metadata.params) params[k] = v;
  IndexList nodes(static_cast<std::size_t>(inst.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = static_cast<Index>(i);
  return {{"format", "latnet.network"},
          {"version", 1},
          {"nodes", nodes},
          {"g", to_json(inst.g)},
          {"a", to_json(inst.a)},
          {"b", to_json(inst.b)},
          {"observable", inst.observable},
          {"p_bar", inst.p_bar},
          {"zeta", inst.zeta},
          {"labeling", inst.labeling},
          {"metadata",
           {{"generator", inst.metadata.generator}, {"seed", inst.metadata.seed}, {"params", params}}}};
}

NetworkInstance network_from_json(const json& j) {
  check_format(j, "latnet.network");
  NetworkInstance inst = make_instance(matrix_from_json(field(j, "g")), vector_from_json(field(j, "a")),
                                       vector_from_json(field(j, "b")), indices(field(j, "observable")),
                                       field(j, "p_bar").get<double>(), field(j, "zeta").get<double>());
  if (j.contains("labeling")) inst.labeling = indices(j["labeling"]);
  if (j.contains("metadata")) {
    const json& g = j["metadata"];
    inst.metadata.generator = g.value("generator", std::string());
    inst.metadata.seed = g.value("seed", std::uint64_t{0});
    if (g.contains("params"))
      for (const auto& [k, v] : g["params"].items()) inst.metadata.params[k] = v.get<double>();
  }
  ValidationReport rep = validate(inst);
  if (!rep.ok)
    throw ModelError("network file violates " + to_string(rep.violations.front().kind) +
                     " at node " + std::to_string(rep.violations.front().node));
  return inst;
}

json to_json(const PanelData& p) {
  return {{"format", "latnet.panel"},
          {"version", 1},
          {"observable_ids", p.observable_ids},
          {"seed", p.seed},
          {"shock", p.shock_meta},
          {"instance_ref", p.instance_ref},
          {"prices", to_json(p.prices)},
          {"consumption", to_json(p.consumption)}};
}

PanelData panel_from_json(const json& j) {
  check_format(j, "latnet.panel");
  PanelData p;
  p.observable_ids = indices(field(j, "observable_ids"));
  p.prices = matrix_from_json(field(j, "prices"));
  p.consumption = matrix_from_json(field(j, "consumption"));
  p.seed = j.value("seed", std::uint64_t{0});
  p.shock_meta = j.value("shock", std::string());
  p.instance_ref = j.value("instance_ref", std::string());
  if (p.prices.rows() != p.consumption.rows() || p.prices.cols() != p.consumption.cols() ||
      p.prices.cols() != static_cast<Index>(p.observable_ids.size()))
    throw ConfigError("panel file: prices, consumption and observable_ids disagree in shape");
  return p;
}

json to_json(const EstimationResult& r) {
  json diags = json::array();
  for (const auto& d : r.diagnostics) diags.push_back(diag_json(d));
  json warnings = r.thresholds.warnings;
  json out = {
      {"format", "latnet.estimation"},
      {"version", 1},
      {"options",
       {{"threshold_mode", to_string(r.options.mode)},
        {"alpha", r.options.alpha},
        {"bootstrap_draws", r.options.bootstrap_draws},
        {"seed", r.options.seed},
        {"tol_feas", r.options.stage.solver.tol_feas},
        {"tol_opt", r.options.stage.solver.tol_opt},
        {"max_iter", r.options.stage.solver.max_iter}}},
      {"constants", {{"m_n", r.constants.m_n}, {"tau", r.constants.tau}, {"lambda", r.constants.lambda}}},
      {"v_hat", to_json(r.v_hat)},
      {"w_hat", to_json(r.w_hat)},
      {"z_hat", to_json(r.z_hat)},
      {"psi_hat", to_json(r.psi_hat)},
      {"psi_z_hat", to_json(r.psi_z_hat)},
      {"v_check", to_json(r.v_check)},
      {"w_check", to_json(r.w_check)},
      {"sigma_hat", to_json(r.thresholds.sigma_hat)},
      {"mu", to_json(r.thresholds.mu)},
      {"cv_star", r.thresholds.cv_star},
      {"excluded", r.thresholds.excluded},
      {"warnings", warnings},
      {"w_check_mu", to_json(r.w_check_mu)},
      {"diagnostics", diags}};
  if (r.ci_lower.size()) {
    out["ci_lower"] = to_json(r.ci_lower);
    out["ci_upper"] = to_json(r.ci_upper);
  }
  return out;
}

EstimationResult estimation_from_json(const json& j) {
  check_format(j, "latnet.estimation");
  EstimationResult r;
  const json& o = field(j, "options");
  r.options.mode = threshold_mode_from_string(o.value("threshold_mode", std::string("self_normalized")));
  r.options.alpha = o.value("alpha", 0.05);
  r.options.bootstrap_draws = o.value("bootstrap_draws", 1000);
  r.options.seed = o.value("seed", std::uint64_t{0});
  const json& c = field(j, "constants");
  r.constants = {c.at("m_n").get<double>(), c.at("tau").get<double>(), c.at("lambda").get<double>()};
  r.v_hat = vector_from_json(field(j, "v_hat"));
  r.w_hat = matrix_from_json(field(j, "w_hat"));
  r.z_hat = vector_from_json(field(j, "z_hat"));
  r.psi_hat = matrix_from_json(field(j, "psi_hat"));
  r.psi_z_hat = vector_from_json(field(j, "psi_z_hat"));
  r.v_check = vector_from_json(field(j, "v_check"));
  r.w_check = matrix_from_json(field(j, "w_check"));
  r.thresholds.sigma_hat = matrix_from_json(field(j, "sigma_hat"));
  r.thresholds.mu = matrix_from_json(field(j, "mu"));
  r.thresholds.cv_star = number(field(j, "cv_star"));
  r.thresholds.excluded = j.value("excluded", Index{0});
  r.thresholds.warnings = j.value("warnings", std::vector<std::string>{});
  r.w_check_mu = matrix_from_json(field(j, "w_check_mu"));
  if (j.contains("ci_lower")) {
    r.ci_lower = matrix_from_json(j["ci_lower"]);
    r.ci_upper = matrix_from_json(j["ci_upper"]);
  }
  for (const json& d : j.value("diagnostics", json::array()))
    r.diagnostics.push_back({d.at("stage").get<std::string>(), d.at("row").get<Index>(),
                             status_from_string(d.at("status").get<std::string>()),
                             d.at("iterations").get<int>(), number(d.at("objective")),
                             number(d.at("feasibility_residual")), number(d.at("certificate_gap"))});
  return r;
}

json to_json(const PriceSolution& s) {
  return {{"format", "latnet.prices"},
          {"method", to_string(s.method)},
          {"prices", to_json(s.prices)},
          {"expected_revenue", s.expected_revenue},
          {"foc_residual", s.foc_residual},
          {"binding_set", s.binding_set},
          {"clamped_set", s.clamped_set}};
}

json to_json(const RowProgram& p, const SolveResult* result) {
  json out = {{"format", "latnet.row_program"},
              {"kind", to_string(p.kind)},
              {"target", p.target},
              {"lambda", p.lambda},
              {"tau", p.tau},
              {"n", p.n()},
              {"d", p.d()},
              {"design", to_json(p.design->x)}};
  if (p.kind == RowProgram::Kind::dantzig_row) out["response"] = to_json(p.response);
  if (result) {
    out["result"] = {{"status", to_string(result->status)},
                     {"solution", to_json(result->solution)},
                     {"z", result->z},
                     {"objective", result->objective},
                     {"feasibility_residual", result->feasibility_residual},
                     {"certificate_gap", result->certificate_gap},
                     {"iterations", result->iterations}};
  }
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

std::string panel_csv(const PanelData& p) {
  std::ostringstream os;
  os << "t,node,price,consumption\n";
  for (Index t = 0; t < p.n(); ++t)
    for (Index k = 0; k < p.n_observable(); ++k)
      os << t << ',' << p.observable_ids[static_cast<std::size_t>(k)] << ','
         << format_double(p.prices(t, k)) << ',' << format_double(p.consumption(t, k)) << '\n';
  return os.str();
}

std::string prices_csv(const std::vector<PriceSolution>& solutions, const IndexList& nodes) {
  std::ostringstream os;
  os << "node,price,binding,method\n";
  for (const auto& s : solutions) {
    for (Index i = 0; i < s.prices.size(); ++i) {
      bool binding = std::find(s.binding_set.begin(), s.binding_set.end(), i) != s.binding_set.end();
      Index node = i < static_cast<Index>(nodes.size()) ? nodes[static_cast<std::size_t>(i)] : i;
      os << node << ',' << format_double(s.prices(i)) << ',' << (binding ? 1 : 0) << ','
         << to_string(s.method) << '\n';
    }
  }
  return os.str();
}

std::string profile_csv(const std::vector<ProfileRow>& rows) {
  std::ostringstream os;
  os << "construction,s_or_k,err1,errinf,err2\n";
  for (const auto& r : rows)
    os << to_string(r.construction) << ',' << r.s << ',' << format_double(r.err_1) << ','
       << format_double(r.err_inf) << ',' << format_double(r.err_2) << '\n';
  return os.str();
}

std::string matrix_csv(const Matrix& m) {
  std::ostringstream os;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
  return os.str();
}

std::string trace_csv(const std::vector<SolveOptions::TraceRow>& rows) {
  std::ostringstream os;
  os << "iter,objective,feas_residual\n";
  for (const auto& r : rows)
    os << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.feas_residual) << '\n';
  return os.str();
}

std::string entries_csv(const EstimationResult& r) {
  std::ostringstream os;
  os << "k,j,w_check,sigma_hat,mu,ci_lower,ci_upper,w_check_mu\n";
  const bool ci = r.ci_lower.size() > 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Index k = 0; k < r.w_check.rows(); ++k)
    for (Index j = 0; j < r.w_check.cols(); ++j)
      os << k << ',' << j << ',' << format_double(r.w_check(k, j)) << ','
         << format_double(r.thresholds.sigma_hat(k, j)) << ',' << format_double(r.thresholds.mu(k, j))
         << ',' << format_double(ci ? r.ci_lower(k, j) : nan) << ','
         << format_double(ci ? r.ci_upper(k, j) : nan) << ',' << format_double(r.w_check_mu(k, j))
         << '\n';
  return os.str();
}

}  // namespace latnet::io
