#include "latnet/equilibrium.hpp"

#include "latnet/error.hpp"
#include "latnet/parallel.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace latnet {

unsigned default_threads() {
  if (const char* env = std::getenv("LATNET_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::string to_string(ShockModel::Family f) {
  return f == ShockModel::Family::uniform ? "uniform" : "gaussian_truncated";
}

ShockModel::Family shock_family_from_string(const std::string& s) {
  if (s == "uniform") return ShockModel::Family::uniform;
  if (s == "gaussian_truncated" || s == "gaussian") return ShockModel::Family::gaussian_truncated;
  throw ConfigError("unknown shock family '" + s + "'");
}

ShockModel ShockModel::defaults(const NetworkInstance& inst, double sigma, double rho) {
  ShockModel m;
  m.scale = Vector::Constant(inst.size(), sigma);
  m.rho = rho;
  m.bound = 0.99 * (inst.a.array() - inst.p_bar).minCoeff();
  if (!(m.bound > 0.0)) throw ConfigError("ShockModel: a_i must exceed p_bar for every node");
  return m;
}

Vector ShockModel::draw(stats::RngStream& rng) const {
  const Index n = scale.size();
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("ShockModel: rho must lie in [0,1)");
  Vector xi(n);
  if (n == 0) return xi;
  const double shared_w = std::sqrt(rho);
  const double own_w = std::sqrt(1.0 - rho);
  if (family == Family::gaussian_truncated) {
    double smax = scale.maxCoeff();
    if (smax == 0.0) return Vector::Zero(n);
    // Common factor restricted so it alone uses at most half the bound.
    double common;
    do {
      common = rng.normal();
    } while (smax * shared_w * std::abs(common) > 0.5 * bound);
    for (Index i = 0; i < n; ++i) {
      double v;
      int tries = 0;
      do {
        v = scale(i) * (shared_w * common + own_w * rng.normal());
        if (++tries > 100000) throw NumericError("ShockModel: truncation bound too tight for scale");
      } while (std::abs(v) > bound);
      xi(i) = v;
    }
  } else {
    // Unit-variance uniforms; the support is bounded so no rejection is needed.
    const double half = std::sqrt(3.0);
    double common = rng.uniform(-half, half);
    for (Index i = 0; i < n; ++i)
      xi(i) = scale(i) * (shared_w * common + own_w * rng.uniform(-half, half));
    double worst = scale.maxCoeff() * half * (shared_w + own_w);
    if (worst > bound) throw ConfigError("ShockModel: uniform support exceeds the truncation bound");
  }
  return xi;
}

std::string ShockModel::describe() const {
  std::ostringstream os;
  os << to_string(family) << " sigma_max=" << (scale.size() ? scale.maxCoeff() : 0.0)
     << " rho=" << rho << " bound=" << bound;
  return os.str();
}

Vector PriceSampler::draw(Index n_observable, double p_bar, stats::RngStream& rng) const {
  if (!(low_fraction >= 0.0 && low_fraction <= high_fraction && high_fraction <= 1.0))
    throw ConfigError("PriceSampler: need 0 <= low <= high <= 1");
  Vector p(n_observable);
  for (Index i = 0; i < n_observable; ++i)
    p(i) = p_bar * (low_fraction + (high_fraction - low_fraction) * rng.uniform());
  return p;
}

Vector full_prices(const DerivedMatrices& d, const Vector& p_o) {
  if (p_o.size() != static_cast<Index>(d.observable.size()))
    throw StructuralError("full_prices: p_O has wrong length");
  Vector p(static_cast<Index>(d.observable.size() + d.latent.size()));
  for (std::size_t k = 0; k < d.observable.size(); ++k) p(d.observable[k]) = p_o(static_cast<Index>(k));
  for (Index l : d.latent) p(l) = d.p_bar;
  return p;
}

Vector solve_equilibrium(const DerivedMatrices& d, const Vector& p, const Vector& xi) {
  const Index n = d.m.rows();
  if (p.size() != n || xi.size() != n) throw StructuralError("solve_equilibrium: vector length");
  Vector y = d.m_inv * (d.a + xi - p);
  for (Index i = 0; i < n; ++i) {
    if (!(y(i) > 0.0)) {
      std::ostringstream os;
      os << "solve_equilibrium: non-positive consumption " << y(i) << " at node " << i
         << " (prices or shocks violate the outside-option condition)";
      throw ModelError(os.str());
    }
  }
  return y;
}

BestResponseResult best_response_iterate(const NetworkInstance& inst, const Vector& p,
                                         const Vector& xi, double tol, int max_iter) {
  const Index n = inst.size();
  if (p.size() != n || xi.size() != n) throw StructuralError("best_response_iterate: vector length");
  BestResponseResult r;
  Vector y = Vector::Zero(n);
  Vector base = inst.a + xi - p;
  Vector two_b = 2.0 * inst.b;
  for (int it = 0; it < max_iter; ++it) {
    Vector next = ((base + inst.g * y).array() / two_b.array()).max(0.0).matrix();
    if ((next.array() < y.array()).any()) r.monotone = false;
    double change = (next - y).cwiseAbs().maxCoeff();
    y = std::move(next);
    if (change <= tol) {
      r.y = std::move(y);
      r.iterations = it;
      return r;
    }
  }
  throw ConvergenceError("best_response_iterate: no convergence within max_iter");
}

SimulatedPanel simulate_panel_detailed(const NetworkInstance& inst, Index n,
                                       const PriceSampler& sampler, const ShockModel& shocks,
                                       std::uint64_t seed, unsigned threads) {
  if (n < 1) throw ConfigError("simulate_panel: n must be >= 1");
  if (shocks.scale.size() != inst.size()) throw StructuralError("simulate_panel: shock scale length");
  DerivedMatrices d = derive(inst);
  const Index n_obs = static_cast<Index>(d.observable.size());

  SimulatedPanel out;
  PanelData& panel = out.panel;
  panel.observable_ids = d.observable;
  panel.prices.resize(n, n_obs);
  panel.consumption.resize(n, n_obs);
  out.epsilon.resize(n, n_obs);
  panel.seed = seed;
  panel.shock_meta = shocks.describe();

  Matrix h_inv_s_ol = d.h_inv * d.s_ol;
  stats::RngStream root = stats::RngStream(seed).child("panel");

  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t t) {
    auto row_rng = root.child(static_cast<std::uint64_t>(t));
    auto price_rng = row_rng.child("price");
    auto shock_rng = row_rng.child("shock");
    Vector p_o = sampler.draw(n_obs, inst.p_bar, price_rng);
    Vector xi = shocks.draw(shock_rng);
    Vector y = solve_equilibrium(d, full_prices(d, p_o), xi);
    Vector y_o = subvector(y, d.observable);

    Vector eps = y_o - d.v_o + d.h_inv * p_o;
    Vector eps_formula = d.h_inv * subvector(xi, d.observable) - h_inv_s_ol * subvector(xi, d.latent);
    double scale = std::max(1.0, y_o.cwiseAbs().maxCoeff());
    if ((eps - eps_formula).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw NumericError("simulate_panel: observable demand identity violated");

    auto ti = static_cast<Index>(t);
    panel.prices.row(ti) = p_o.transpose();
    panel.consumption.row(ti) = y_o.transpose();
    out.epsilon.row(ti) = eps.transpose();
  });
  panel.truth = std::make_shared<const NetworkInstance>(inst);
  return out;
}

PanelData simulate_panel(const NetworkInstance& inst, Index n, const PriceSampler& prices,
                         const ShockModel& shocks, std::uint64_t seed, unsigned threads) {
  return simulate_panel_detailed(inst, n, prices, shocks, seed, threads).panel;
}

}  // namespace latnet
