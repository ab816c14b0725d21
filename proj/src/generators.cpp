#include "latnet/error.hpp"
#include "latnet/network.hpp"
#include "latnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace latnet {

namespace {

void check_common(const GeneratorCommon& c) {
  if (c.n_nodes < 1) throw ConfigError("generator: n_nodes must be >= 1");
  if (!(c.latent_fraction >= 0.0 && c.latent_fraction < 1.0))
    throw ConfigError("generator: latent_fraction must lie in [0,1)");
  if (!(c.b_value > 0.0)) throw ConfigError("generator: b_value must be positive");
  if (!(c.p_bar > 0.0)) throw ConfigError("generator: p_bar must be positive");
  if (!(c.weight_margin > 0.0 && c.weight_margin <= 2.0))
    throw ConfigError("generator: weight_margin must lie in (0,2]");
  if (!(c.weight_scale > 0.0)) throw ConfigError("generator: weight_scale must be positive");
  if (!(c.jitter >= 0.0 && c.jitter < 1.0)) throw ConfigError("generator: jitter must lie in [0,1)");
  double a_min = c.a_value * (1.0 - c.jitter);
  if (!(a_min > c.p_bar))
    throw ConfigError("generator: a_value (after jitter) must exceed p_bar");
}

// Node parameters, then G rescaled so that both dominance conditions hold
// with gap b_i * weight_margin; scaling only ever shrinks the draw.
NetworkInstance finish(const GeneratorCommon& c, Matrix g, stats::RngStream& rng,
                       std::string generator, std::map<std::string, double> params) {
  const Index n = c.n_nodes;
  if (c.symmetric) g = (0.5 * (g + g.transpose())).eval();
  g.diagonal().setZero();

  Vector a = Vector::Constant(n, c.a_value);
  Vector b = Vector::Constant(n, c.b_value);
  if (c.jitter > 0.0) {
    auto jr = rng.child("jitter");
    for (Index i = 0; i < n; ++i) {
      a(i) *= jr.uniform(1.0 - c.jitter, 1.0 + c.jitter);
      // Symmetric instances keep homogeneous b so M stays symmetric.
      if (!c.symmetric) b(i) *= jr.uniform(1.0 - c.jitter, 1.0 + c.jitter);
    }
  }

  double factor = 1.0;
  for (Index i = 0; i < n; ++i) {
    double allowed = 2.0 * b(i) - c.b_value * c.weight_margin;
    if (allowed <= 0.0) throw ConfigError("generator: weight_margin leaves no room for edges");
    double row = g.row(i).sum();
    double col = g.col(i).sum();
    if (row > 0.0) factor = std::min(factor, allowed / row);
    if (col > 0.0) factor = std::min(factor, allowed / col);
  }
  g *= factor;

  // Latent set: uniform subset, at least one observable node.
  auto lr = rng.child("latent");
  IndexList nodes(static_cast<std::size_t>(n));
  std::iota(nodes.begin(), nodes.end(), Index{0});
  stats::shuffle(nodes, lr);
  auto n_latent = static_cast<Index>(std::llround(c.latent_fraction * static_cast<double>(n)));
  n_latent = std::clamp<Index>(n_latent, 0, n - 1);
  IndexList observable(nodes.begin() + n_latent, nodes.end());

  double zeta = realized_gap(g, b);
  NetworkInstance inst = make_instance(std::move(g), std::move(a), std::move(b),
                                       std::move(observable), c.p_bar, zeta);
  inst.metadata.generator = std::move(generator);
  inst.metadata.seed = c.seed;
  params["n_nodes"] = static_cast<double>(c.n_nodes);
  params["latent_fraction"] = c.latent_fraction;
  params["b_value"] = c.b_value;
  params["a_value"] = c.a_value;
  params["weight_margin"] = c.weight_margin;
  params["weight_scale"] = c.weight_scale;
  params["symmetric"] = c.symmetric ? 1.0 : 0.0;
  params["jitter"] = c.jitter;
  params["rescale_factor"] = factor;
  inst.metadata.params = std::move(params);

  if (!validate(inst).ok) throw ConfigError("generator: produced an invalid instance");
  return inst;
}

}  // namespace

NetworkInstance generate_banded(const GeneratorCommon& c, Index bandwidth) {
  check_common(c);
  if (bandwidth < 0) throw ConfigError("generate_banded: bandwidth must be >= 0");
  stats::RngStream rng(c.seed);
  auto wr = rng.child("weights");
  const Index n = c.n_nodes;
  Matrix g = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && std::abs(i - j) <= bandwidth) g(i, j) = c.weight_scale * wr.uniform();
  return finish(c, std::move(g), rng, "banded", {{"bandwidth", static_cast<double>(bandwidth)}});
}

NetworkInstance generate_polynomial_decay(const GeneratorCommon& c, double theta, double c_scale) {
  check_common(c);
  if (!(theta > 1.0)) throw ConfigError("generate_polynomial_decay: theta must exceed 1");
  if (!(c_scale > 0.0)) throw ConfigError("generate_polynomial_decay: c_scale must be positive");
  stats::RngStream rng(c.seed);
  auto wr = rng.child("weights");
  const Index n = c.n_nodes;
  Matrix g = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j)
        g(i, j) = c_scale * wr.uniform() / std::pow(1.0 + static_cast<double>(std::abs(i - j)), theta);
  return finish(c, std::move(g), rng, "polynomial_decay", {{"theta", theta}, {"c_scale", c_scale}});
}

NetworkInstance generate_bounded_growth(const GeneratorCommon& c, const GrowthBound& growth,
                                        Index extra_edges) {
  check_common(c);
  if (!(growth.constant > 0.0 && growth.degree > 0.0))
    throw ConfigError("generate_bounded_growth: growth parameters must be positive");
  const Index n = c.n_nodes;
  stats::RngStream rng(c.seed);
  auto er = rng.child("edges");
  auto wr = rng.child("weights");

  Matrix adj = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) adj(i, i + 1) = adj(i + 1, i) = 1.0;
  if (!satisfies_growth(adj, growth)) {
    std::ostringstream os;
    os << "generate_bounded_growth: growth bound is unachievable for " << n
       << " connected nodes (a path already exceeds it)";
    throw ConfigError(os.str());
  }
  for (Index e = 0; e < extra_edges && n > 1; ++e) {
    auto i = static_cast<Index>(er.below(static_cast<std::uint64_t>(n)));
    auto j = static_cast<Index>(er.below(static_cast<std::uint64_t>(n)));
    if (i == j || adj(i, j) > 0.0) continue;
    adj(i, j) = 1.0;
    if (c.symmetric) adj(j, i) = 1.0;
    if (!satisfies_growth(adj, growth)) {
      adj(i, j) = 0.0;
      if (c.symmetric) adj(j, i) = 0.0;
    }
  }
  Matrix g = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (adj(i, j) > 0.0) g(i, j) = c.weight_scale * wr.uniform();
  if (c.symmetric) {
    // Keep the support symmetric so the averaged weights stay positive.
    g = (g + g.transpose()).eval();
  }
  auto inst = finish(c, std::move(g), rng, "bounded_growth",
                     {{"growth_exponential", growth.family == GrowthBound::Family::exponential ? 1.0 : 0.0},
                      {"growth_constant", growth.constant},
                      {"growth_degree", growth.degree},
                      {"extra_edges", static_cast<double>(extra_edges)}});
  return inst;
}

}  // namespace latnet
