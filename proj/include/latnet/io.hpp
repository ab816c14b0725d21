#pragma once

#include "latnet/conic.hpp"
#include "latnet/equilibrium.hpp"
#include "latnet/estimator.hpp"
#include "latnet/pricing.hpp"
#include "latnet/sparsity.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace latnet::io {

using json = nlohmann::json;

/// Shortest text that parses back to the same double.
std::string format_double(double x);

json to_json(const Matrix& m);
json to_json(const Vector& v);
Matrix matrix_from_json(const json& j);
Vector vector_from_json(const json& j);

json to_json(const NetworkInstance& inst);
NetworkInstance network_from_json(const json& j);

/// Observable columns only; latent data never enter a panel file.
json to_json(const PanelData& panel);
PanelData panel_from_json(const json& j);

json to_json(const EstimationResult& r);
EstimationResult estimation_from_json(const json& j);

json to_json(const PriceSolution& s);

/// Program data and solver outcome, for offline debugging of a row.
json to_json(const RowProgram& p, const SolveResult* result = nullptr);

json read_json(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see a partial file.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const json& j);

std::string panel_csv(const PanelData& panel);
/// node,price,binding,method
std::string prices_csv(const std::vector<PriceSolution>& solutions, const IndexList& nodes);
/// construction,s_or_k,err1,errinf,err2
std::string profile_csv(const std::vector<ProfileRow>& rows);
/// One row of W_check_mu per line.
std::string matrix_csv(const Matrix& m);
/// iter,objective,feas_residual
std::string trace_csv(const std::vector<SolveOptions::TraceRow>& rows);
/// k,j,w_check,sigma_hat,mu,ci_lower,ci_upper,w_check_mu
std::string entries_csv(const EstimationResult& r);

}  // namespace latnet::io
