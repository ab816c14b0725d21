#include "latnet/error.hpp"
#include "latnet/network.hpp"
#include "latnet/sparsity.hpp"
#include "support/examples.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace latnet;

namespace {

IndexList observable_labels(const NetworkInstance& inst) {
  IndexList out;
  for (Index i : inst.observable) out.push_back(inst.labeling[static_cast<std::size_t>(i)]);
  return out;
}

double spectral_norm_sym(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("banded truncation endpoints") {
  auto inst = generate_banded(fixtures::common(30, 1), 2);
  auto d = derive(inst);
  auto labels = observable_labels(inst);
  const auto vo = static_cast<Index>(d.observable.size());
  IndexList ranks(labels.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) ranks[i] = static_cast<Index>(i);
  auto full = banded_truncation(d.h_inv, ranks, 2 * vo);
  CHECK(full.w_bar == d.h_inv);
  CHECK(full.r1() == 0.0);
  // With network labels the widest gap is |V| - 1.
  auto wide = banded_truncation(d.h_inv, labels, 2 * inst.size());
  CHECK(wide.w_bar == d.h_inv);
  auto diag = banded_truncation(d.h_inv, labels, 1);
  CHECK(diag.w_bar == Matrix(d.h_inv.diagonal().asDiagonal()));
  CHECK(max_nonzeros(diag.w_bar) == 1);
}

TEST_CASE("every construction respects the nonzero cap") {
  auto inst = generate_polynomial_decay(fixtures::common(40, 2), 2.0, 1.0);
  auto d = derive(inst);
  auto labels = observable_labels(inst);
  for (Index s = 1; s <= 12; ++s) {
    CHECK(max_nonzeros(banded_truncation(d.h_inv, labels, s).w_bar) <= s);
    CHECK(max_nonzeros(magnitude_truncation(d.h_inv, s).w_bar) <= s);
  }
}

TEST_CASE("magnitude truncation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = derive(generate_banded(fixtures::common(20, seed), 2));
    const auto vo = static_cast<Index>(d.observable.size());
    auto exact = magnitude_truncation(d.h_inv, vo);
    CHECK(exact.w_bar == d.h_inv);
    bool dominant = true;
    for (Index i = 0; i < vo; ++i)
      for (Index j = 0; j < vo; ++j)
        if (i != j && (std::abs(d.h_inv(i, j)) >= d.h_inv(i, i) || std::abs(d.h_inv(i, j)) >= d.h_inv(j, j)))
          dominant = false;
    if (dominant) CHECK(magnitude_truncation(d.h_inv, 1).w_bar == Matrix(d.h_inv.diagonal().asDiagonal()));
    std::vector<Index> grid;
    for (Index s = 1; s <= vo; ++s) grid.push_back(s);
    auto profile = measure_sparsity_profile(d.h_inv, Construction::magnitude, grid);
    for (std::size_t k = 1; k < profile.size(); ++k) CHECK(profile[k].r1() <= profile[k - 1].r1());
  }
}

TEST_CASE("banded inverses decay geometrically within the stated bound") {
  auto inst = generate_banded(fixtures::common(60, 5), 2);
  auto d = derive(inst);
  auto decay = decay_by_distance(d.h_inv, observable_labels(inst));
  std::vector<double> x, y;
  for (Index k = 1; k < decay.size(); ++k) {
    x.push_back(static_cast<double>(k));
    y.push_back(decay(k));
  }
  auto fit = fit_log_linear(x, y, 1e-13);
  double allowed = std::pow((2.0 - d.zeta) / 2.0, 0.5) * 1.1;
  CHECK(std::exp(fit.slope) <= allowed);
  auto bound = banded_decay_bound(2, 1.0, d.zeta);
  for (Index i = 0; i < d.m_inv.rows(); ++i)
    for (Index j = 0; j < d.m_inv.cols(); ++j)
      CHECK(std::abs(d.m_inv(i, j)) <= bound.at(std::abs(i - j)));
}

TEST_CASE("polynomial decay instances keep the polynomial shape") {
  auto inst = generate_polynomial_decay(fixtures::common(80, 3, 0.2), 2.0, 1.0);
  auto d = derive(inst);
  auto decay = decay_by_distance(d.h_inv, observable_labels(inst));
  std::vector<double> x, y;
  for (Index k = 1; k < decay.size(); ++k) {
    x.push_back(std::log(1.0 + static_cast<double>(k)));
    y.push_back(decay(k));
  }
  auto fit = fit_log_linear(x, y, 1e-13);
  CHECK(fit.slope <= -2.0 + 0.3);
}

TEST_CASE("profiles are invariant under relabeling") {
  auto inst = generate_banded(fixtures::common(25, 4), 2);
  IndexList perm(25);
  for (Index i = 0; i < 25; ++i) perm[static_cast<std::size_t>(i)] = (7 * i + 3) % 25;
  auto moved = relabel(inst, perm);
  auto a = measure_sparsity_profile(derive(inst).h_inv, Construction::banded, {1, 3, 5, 9}, observable_labels(inst));
  auto b = measure_sparsity_profile(derive(moved).h_inv, Construction::banded, {1, 3, 5, 9}, observable_labels(moved));
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k].r1() - b[k].r1()) < 1e-12);
}

TEST_CASE("chebyshev interpolant of the inverse") {
  auto sym = fixtures::common(30, 6);
  sym.symmetric = true;
  auto inst = generate_banded(sym, 2);
  auto d = derive(inst);
  const double zeta = d.zeta, bmax = inst.b.maxCoeff();
  const double q = chebyshev_rate(zeta, bmax);
  const double r = (4 * bmax - zeta) / zeta;
  CHECK(q == doctest::Approx((std::sqrt(r) - 1) / (std::sqrt(r) + 1)).epsilon(1e-15));

  auto k0 = chebyshev_inverse(zeta, bmax, 0);
  Matrix c0 = k0.apply(d.m);
  CHECK((c0 - k0.coeffs(0) * Matrix::Identity(30, 30)).cwiseAbs().maxCoeff() < 1e-15);
  double worst0 = std::max(std::abs(1.0 / zeta - k0.coeffs(0)), std::abs(1.0 / (4 * bmax - zeta) - k0.coeffs(0)));
  CHECK(spectral_norm_sym(d.m_inv - c0) <= worst0 + 1e-12);

  std::vector<double> ks, errs;
  double prev = INFINITY;
  IndexList all(30);
  for (Index i = 0; i < 30; ++i) all[static_cast<std::size_t>(i)] = i;
  auto dist = hop_distances(inst.g);
  for (Index k = 1; k <= 20; ++k) {
    auto approx = chebyshev_inverse_approx(d.m, zeta, bmax, k, all);
    double err = spectral_norm_sym(d.m_inv - approx.g_m);
    CHECK(err <= prev + 1e-14);
    prev = err;
    if (k >= 2) {
      ks.push_back(static_cast<double>(k));
      errs.push_back(err);
    }
    for (Index i = 0; i < 30; ++i)
      for (Index j = 0; j < 30; ++j)
        if (dist(i, j) < 0 || dist(i, j) > k) CHECK(approx.g_m(i, j) == 0.0);
  }
  auto fit = fit_log_linear(ks, errs, 1e-12);
  CHECK(std::exp(fit.slope) <= q * 1.05);
  CHECK_THROWS_AS(chebyshev_inverse(zeta, bmax, -1), ConfigError);
}

TEST_CASE("log-linear fit") {
  std::vector<double> x{0, 1, 2, 3}, y{1, 0.5, 0.25, 0.125};
  auto fit = fit_log_linear(x, y);
  CHECK(fit.slope == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(std::abs(fit.intercept) < 1e-14);
  CHECK(fit_log_linear({0, 1, 2, 3}, {1, 0.1, 1e-20, 0.0}, 1e-12).points == 2);
  CHECK_THROWS_AS(fit_log_linear({0, 1}, {1, 0}, 1e-12), NumericError);
}
