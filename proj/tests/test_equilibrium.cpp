#include "latnet/equilibrium.hpp"
#include "latnet/error.hpp"
#include "support/examples.hpp"

#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/LU>

using namespace latnet;

TEST_CASE("Example E1 equilibrium by hand") {
  auto inst = fixtures::example_e1();
  auto d = derive(inst);
  Vector p = full_prices(d, Vector::Ones(2));
  CHECK(p(2) == 1.5);
  Vector y = solve_equilibrium(d, p, Vector::Zero(3));
  // 2u - w/2 = 1 and -u + 2w = 1/2 give u = 9/14, w = 4/7.
  CHECK(y(0) == doctest::Approx(9.0 / 14.0).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(9.0 / 14.0).epsilon(1e-14));
  CHECK(y(2) == doctest::Approx(4.0 / 7.0).epsilon(1e-14));
  Vector y_o = d.v_o - d.h_inv * Vector::Ones(2);
  CHECK((y_o - y.head(2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("best response dynamics reach the closed form monotonically") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = generate_banded(fixtures::common(15, seed), 2);
    auto d = derive(inst);
    stats::RngStream rng(seed);
    Vector p = full_prices(d, PriceSampler{}.draw(static_cast<Index>(d.observable.size()), inst.p_bar, rng));
    Vector xi = ShockModel::defaults(inst, 0.1).draw(rng);
    auto br = best_response_iterate(inst, p, xi);
    Vector y = solve_equilibrium(d, p, xi);
    CHECK((br.y - y).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(br.monotone);
    CHECK(y.minCoeff() > 0.0);
  }
}

TEST_CASE("prices above the outside option are rejected") {
  auto inst = fixtures::empty_graph(2, {0, 1}, 2.0, 1.0);
  auto d = derive(inst);
  Vector p = Vector::Constant(2, 3.0);
  CHECK_THROWS_AS(solve_equilibrium(d, p, Vector::Zero(2)), ModelError);
}

TEST_CASE("panel rows satisfy the observable demand identity") {
  auto inst = generate_banded(fixtures::common(20, 3), 2);
  auto d = derive(inst);
  auto sim = simulate_panel_detailed(inst, 200, PriceSampler{}, ShockModel::defaults(inst, 0.1), 9);
  const auto& panel = sim.panel;
  Matrix dense = d.m.inverse();
  for (Index t = 0; t < panel.n(); ++t) {
    Vector p_o = panel.prices.row(t).transpose();
    CHECK(p_o.minCoeff() >= 0.2 * inst.p_bar);
    CHECK(p_o.maxCoeff() <= inst.p_bar);
    Vector lhs = panel.consumption.row(t).transpose();
    Vector rhs = d.v_o - d.h_inv * p_o + sim.epsilon.row(t).transpose();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    // Noiseless demand from the dense inverse stays within the shock envelope.
    Vector y0 = subvector(dense * (inst.a - full_prices(d, p_o)), d.observable);
    CHECK((lhs - y0).cwiseAbs().maxCoeff() <= norm_inf(dense) * 0.99 * 0.5 + 1e-12);
  }
}

TEST_CASE("noiseless panels are recovered exactly by least squares") {
  auto inst = generate_banded(fixtures::common(12, 5), 2);
  auto d = derive(inst);
  auto panel = simulate_panel(inst, 60, PriceSampler{}, ShockModel::defaults(inst, 0.0), 1);
  Matrix x(panel.n(), panel.n_observable() + 1);
  x.col(0).setOnes();
  x.rightCols(panel.n_observable()) = panel.prices;
  Matrix lsq = (x.transpose() * x).ldlt().solve(x.transpose() * panel.consumption);
  CHECK((lsq.row(0).transpose() - d.v_o).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((lsq.bottomRows(panel.n_observable()).transpose() + d.h_inv).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("consumption shocks have mean near zero") {
  auto inst = generate_banded(fixtures::common(10, 8), 1);
  auto sim = simulate_panel_detailed(inst, 20000, PriceSampler{}, ShockModel::defaults(inst, 0.1), 4);
  Vector mean = sim.epsilon.colwise().mean().transpose();
  Matrix centered = sim.epsilon.rowwise() - mean.transpose();
  Vector sd = (centered.cwiseAbs2().colwise().sum() / 20000.0).cwiseSqrt().transpose();
  for (Index j = 0; j < mean.size(); ++j) CHECK(std::abs(mean(j)) < 5.0 * sd(j) / std::sqrt(20000.0));
}

TEST_CASE("panels are deterministic and independent of the thread count") {
  auto inst = generate_banded(fixtures::common(15, 2), 2);
  auto shocks = ShockModel::defaults(inst, 0.1);
  auto a = simulate_panel(inst, 300, PriceSampler{}, shocks, 77, 1);
  auto b = simulate_panel(inst, 300, PriceSampler{}, shocks, 77, 3);
  auto c = simulate_panel(inst, 300, PriceSampler{}, shocks, 78, 1);
  CHECK(a.prices == b.prices);
  CHECK(a.consumption == b.consumption);
  CHECK(a.prices != c.prices);
}

TEST_CASE("shock draws stay inside the truncation bound") {
  auto inst = generate_banded(fixtures::common(10, 1), 1);
  auto model = ShockModel::defaults(inst, 0.5);
  stats::RngStream rng(3);
  for (int k = 0; k < 2000; ++k) CHECK(model.draw(rng).cwiseAbs().maxCoeff() <= model.bound);
  CHECK(shock_family_from_string(to_string(ShockModel::Family::uniform)) == ShockModel::Family::uniform);
  CHECK_THROWS_AS(shock_family_from_string("cauchy"), ConfigError);
}
