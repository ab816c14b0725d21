#include "latnet/error.hpp"
#include "latnet/network.hpp"
#include "latnet/stats.hpp"
#include "support/examples.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>

using namespace latnet;

TEST_CASE("validate accepts the empty graph") {
  CHECK(validate(fixtures::empty_graph(4, {0, 1})).ok);
}

TEST_CASE("validate reports row dominance at the offending node") {
  Matrix g = Matrix::Zero(2, 2);
  g(0, 1) = 2.1;
  auto inst = make_instance(g, Vector::Constant(2, 2.0), Vector::Ones(2), {0}, 1.0, 0.1);
  auto rep = validate(inst);
  CHECK_FALSE(rep.ok);
  bool row0 = false;
  for (const auto& v : rep.violations)
    if (v.kind == Violation::Kind::row_dominance && v.node == 0) {
      row0 = true;
      CHECK(v.margin == doctest::Approx(0.2));
    }
  CHECK(row0);
}

TEST_CASE("validate accepts Example E1 and every row and column has slack at least zeta") {
  auto inst = fixtures::example_e1();
  CHECK(validate(inst).ok);
  for (Index i = 0; i < 3; ++i) {
    CHECK(2.0 - inst.g.row(i).sum() >= 1.0);
    CHECK(2.0 - inst.g.col(i).sum() >= 1.0);
  }
}

TEST_CASE("validate flags other invariants and shape errors") {
  auto inst = fixtures::empty_graph(3, {0, 1});
  inst.a(2) = 0.5;  // below p_bar
  inst.g(1, 1) = 0.1;
  auto rep = validate(inst);
  CHECK_FALSE(rep.ok);
  bool outside = false, diag = false;
  for (const auto& v : rep.violations) {
    outside |= v.kind == Violation::Kind::outside_option && v.node == 2;
    diag |= v.kind == Violation::Kind::nonzero_diagonal && v.node == 1;
  }
  CHECK(outside);
  CHECK(diag);
  auto bad = fixtures::empty_graph(3, {0, 1});
  bad.a = Vector::Ones(2);
  CHECK_THROWS_AS(validate(bad), StructuralError);
  auto nopart = fixtures::empty_graph(3, {});
  CHECK_FALSE(validate(nopart).ok);
  CHECK_THROWS_AS(derive(inst), ModelError);
}

TEST_CASE("Example E1 derived matrices") {
  auto d = derive(fixtures::example_e1());
  Matrix h(2, 2);
  h << 1.875, -0.125, -0.125, 1.875;
  CHECK((d.h - h).cwiseAbs().maxCoeff() < 1e-14);
  // Hand computation: M_OL M_LL^{-1} M_LO = 0.125 * ones(2, 2)
  Matrix m = d.m;
  Matrix corr = m.block(0, 2, 2, 1) * (1.0 / m(2, 2)) * m.block(2, 0, 1, 2);
  CHECK((corr - Matrix::Constant(2, 2, 0.125)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((d.s_ol - Vector::Constant(2, -0.25)).cwiseAbs().maxCoeff() < 1e-15);
  Matrix dense = m.inverse();
  CHECK((d.h_inv - dense.topLeftCorner(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d.h_inv - h.inverse()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("no latent agents leaves H = M_OO and the empty graph gives H^{-1} = I/2") {
  auto inst = fixtures::empty_graph(3, {0, 1, 2});
  auto d = derive(inst);
  CHECK((d.h - d.m).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((d.h_inv - 0.5 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((d.v_o - 0.5 * inst.a).cwiseAbs().maxCoeff() < 1e-15);

  auto part = fixtures::empty_graph(4, {1, 3});
  auto dp = derive(part);
  CHECK((dp.h_inv - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((dp.v_o - Vector::Constant(2, 1.0)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("derive refuses an instance whose M would be singular") {
  // Two nodes pushing each other at exactly 2b: M = [[2,-2],[-2,2]].
  Matrix g = Matrix::Zero(2, 2);
  g(0, 1) = g(1, 0) = 2.0;
  auto inst = make_instance(g, Vector::Constant(2, 3.0), Vector::Ones(2), {0, 1}, 1.0, 1e-3);
  CHECK_THROWS_AS(derive(inst), ModelError);
}

TEST_CASE("generate_banded basics") {
  auto c = fixtures::common(50, 7);
  auto a = generate_banded(c, 2);
  auto b = generate_banded(c, 2);
  CHECK(a.g == b.g);
  CHECK(a.observable == b.observable);
  for (Index i = 0; i < 50; ++i)
    for (Index j = 0; j < 50; ++j)
      if (std::abs(i - j) > 2 || i == j) CHECK(a.g(i, j) == 0.0);
  CHECK(generate_banded(c, 0).g.isZero(0.0));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto inst = generate_banded(fixtures::common(50, seed), 2);
    REQUIRE(validate(inst).ok);
    CHECK(inst.zeta >= 0.5 - 1e-12);
  }
}

TEST_CASE("generate_polynomial_decay respects the decay envelope") {
  auto c = fixtures::common(30, 3);
  auto inst = generate_polynomial_decay(c, 2.0, 1.0);
  CHECK(validate(inst).ok);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j)
      if (i != j) CHECK(inst.g(i, j) <= 1.0 / std::pow(1.0 + std::abs(i - j), 2.0) + 1e-15);
  auto steep = generate_polynomial_decay(c, 50.0, 1.0);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j)
      if (std::abs(i - j) > 1) CHECK(steep.g(i, j) < 1e-15);
  CHECK(generate_polynomial_decay(c, 2.0, 1.0).g == inst.g);
  CHECK_THROWS_AS(generate_polynomial_decay(c, 1.0, 1.0), ConfigError);
}

TEST_CASE("generate_bounded_growth satisfies the declared bound") {
  // Path graph neighborhoods: 2k + 1 <= 3k for k >= 1.
  GrowthBound path{GrowthBound::Family::polynomial, 3.0, 1.0};
  auto inst = generate_bounded_growth(fixtures::common(20, 1), path, 0);
  CHECK(validate(inst).ok);
  CHECK(satisfies_growth(inst.g, path));
  auto dist = hop_distances(inst.g);
  for (Index i = 0; i < 20; ++i)
    for (Index k = 1; k < 20; ++k) {
      Index count = 0;
      for (Index j = 0; j < 20; ++j)
        if (dist(i, j) >= 0 && dist(i, j) <= k) ++count;
      CHECK(count <= 2 * k + 1);
    }
  GrowthBound expo{GrowthBound::Family::exponential, 1.0, 3.0};
  auto dense = generate_bounded_growth(fixtures::common(40, 2), expo, 200);
  CHECK(validate(dense).ok);
  CHECK(satisfies_growth(dense.g, expo));
  auto again = generate_bounded_growth(fixtures::common(40, 2), expo, 200);
  CHECK(again.g == dense.g);
  GrowthBound tight{GrowthBound::Family::polynomial, 0.5, 1.0};
  CHECK_THROWS_AS(generate_bounded_growth(fixtures::common(10, 1), tight, 0), ConfigError);
}

TEST_CASE("bonacich centrality") {
  Matrix g(2, 2);
  g << 0, 0.6, 0.6, 0;
  CHECK(bonacich(0.0, g).isApprox(Vector::Ones(2)));
  Vector k = bonacich(0.5, g);
  CHECK(k(0) == doctest::Approx(1.0 / (1.0 - 0.3)).epsilon(1e-14));
  CHECK(k(1) == doctest::Approx(1.0 / (1.0 - 0.3)).epsilon(1e-14));
  CHECK(bonacich(0.7, Matrix::Zero(1, 1))(0) == 1.0);
  CHECK_THROWS_AS(bonacich(2.0, g), DivergenceError);
  CHECK(spectral_radius_estimate(g) == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("matrix identities on random generated instances") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = seed % 2 ? generate_banded(fixtures::common(5 + seed % 25, seed), 1 + seed % 3)
                         : generate_polynomial_decay(fixtures::common(5 + seed % 25, seed), 1.5, 0.8);
    auto d = derive(inst);
    Matrix dense = d.m.inverse();
    CHECK((submatrix(dense, d.observable, d.observable) - d.h_inv).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((assemble_inverse_from_blocks(d) - dense).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(norm_1(d.m_inv) <= 1.0 / d.zeta + 1e-9);
    CHECK(norm_inf(d.m_inv) <= 1.0 / d.zeta + 1e-9);
    CHECK(norm_1(d.h_inv) <= 1.0 / d.zeta + 1e-9);
    CHECK(norm_inf(d.h_inv) <= 1.0 / d.zeta + 1e-9);
    Eigen::JacobiSVD<Matrix> svd(d.m);
    CHECK(svd.singularValues().minCoeff() >= d.zeta - 1e-9);
    CHECK(svd.singularValues().maxCoeff() <= 4.0 * inst.b.maxCoeff() - d.zeta + 1e-9);
    CHECK(d.v_o.cwiseAbs().maxCoeff() <= (2.0 * inst.a.maxCoeff() + inst.p_bar) / d.zeta);
    if (strongly_connected(inst.g)) {
      CHECK(d.m_inv.minCoeff() > 0.0);
      CHECK(d.h_inv.minCoeff() > 0.0);
    }
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("Neumann series converges monotonically") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = generate_banded(fixtures::common(12, seed), 2);
    auto d = derive(inst);
    Matrix lam_inv = (0.5 * inst.b.cwiseInverse()).asDiagonal();
    Matrix step = lam_inv * inst.g;
    Matrix power = Matrix::Identity(12, 12), sum = Matrix::Identity(12, 12);
    double prev = INFINITY;
    for (int k = 1; k <= 30; ++k) {
      power = power * step;
      sum += power;
      double err = norm_inf(d.m_inv - sum * lam_inv);
      CHECK(err <= prev + 1e-15);
      prev = err;
    }
    CHECK(prev < 1e-3);
  }
}

TEST_CASE("relabel permutes every field consistently") {
  auto inst = generate_banded(fixtures::common(8, 4), 2);
  IndexList perm{3, 0, 7, 1, 6, 2, 5, 4};
  auto r = relabel(inst, perm);
  CHECK(validate(r).ok);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) CHECK(r.g(perm[i], perm[j]) == inst.g(i, j));
  auto d0 = derive(inst), d1 = derive(r);
  CHECK(std::abs(norm_1(d0.h_inv) - norm_1(d1.h_inv)) < 1e-12);
  CHECK(r.labeling[static_cast<std::size_t>(perm[5])] == 5);
}
