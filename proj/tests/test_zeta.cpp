#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "manin/errors.hpp"
#include "manin/zeta.hpp"

using namespace manin;
using namespace manin::zeta;

namespace {

heights::MeasureConvention unit_scale() { return {}; }

// Closed form of the archimedean integral with scale 1.
double archimedean_oracle(double s) { return 4.0 / (s * s - 1.0); }

const double kResidueUnit = 20.0 / (std::numbers::pi * std::numbers::pi);

}  // namespace

TEST_CASE("local factor values") {
  auto f2 = local_factor_pgl2_adjoint(2);
  auto f3 = local_factor_pgl2_adjoint(3);
  CHECK(f2.evaluate_at(2) == mpq_class(5, 2));
  CHECK(f3.evaluate_at(2) == mpq_class(5, 3));
  CHECK(f2.to_string() == "(1 + t)/(1 - 2t)");
  CHECK(f2.evaluate(60.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f2.evaluate(2.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(static_cast<double>(f3.evaluate(HighPrecision(2))) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(f2.evaluate(1.0), DomainError);
  CHECK_THROWS_AS(f2.evaluate(0.5), DomainError);
  CHECK_THROWS_AS(f2.evaluate_t(mpq_class(1, 2)), DomainError);
  CHECK_THROWS_AS(local_factor_pgl2_adjoint(6), DomainError);
}

TEST_CASE("cell volumes agree with the lattice-counting oracle") {
  for (std::uint64_t p : {2, 3, 5, 7, 11})
    for (int k = 0; k <= 6; ++k) {
      if (std::pow(double(p), k) > 1e6) continue;
      CAPTURE(p);
      CAPTURE(k);
      CHECK(cell_volume(p, k) == mpq_class(cell_volume_oracle(p, k)));
    }
  CHECK(cell_volume(2, 0) == 1);
  CHECK(cell_volume(2, 1) == 3);
  CHECK(cell_volume(3, 2) == 12);
  CHECK_THROWS_AS(cell_volume(2, -1), DomainError);
  CHECK_THROWS_AS(cell_volume_oracle(2, 40), ResourceGuardError);
}

TEST_CASE("series partial sums converge to the rational function") {
  for (std::uint64_t p : {2, 3, 5, 13})
    for (int s : {2, 3, 4}) {
      auto f = local_factor_pgl2_adjoint(p);
      const mpq_class exact = f.evaluate_at(s);
      for (int K : {0, 1, 3, 8, 20}) {
        const mpq_class gap = exact - f.series_partial_sum(K, s);
        // tail is sum_{k>K} (1 + 1/p) p^(k(1-s)) = (1 + 1/p) r^(K+1) / (1 - r)
        const double r = std::pow(double(p), 1 - s);
        const double tail = (1 + 1.0 / p) * std::pow(r, K + 1) / (1 - r);
        CHECK(gap > 0);
        CHECK(gap.get_d() == doctest::Approx(tail).epsilon(1e-9));
        CHECK(gap.get_d() <= 2 * std::pow(double(p), -(K + 1) * (s - 1)) / (1 - r) + 1e-300);
      }
    }
}

TEST_CASE("series converges slowly near s = 1 and matches the closed form") {
  auto f = local_factor_pgl2_adjoint(2);
  for (double s : {1.5, 1.2, 1.1}) {
    const double exact = f.evaluate(s);
    const double part = f.series_partial_sum(2000, s);
    CHECK(part == doctest::Approx(exact).epsilon(1e-9));
    CHECK(f.series_partial_sum(5, s) < exact);
  }
}

TEST_CASE("Euler regularity bound |Z_p(s)(1 - p^(1-s)) - 1| <= 4 p^-s") {
  const auto primes = primes_below(10000);
  CHECK(primes.size() == 1229);
  for (double s : {2.0, 2.01, 2.3, 2.5, 3.0}) {
    for (auto p : primes) {
      const double v = local_factor_pgl2_adjoint(p).evaluate(s) * (1 - std::pow(double(p), 1 - s));
      REQUIRE(std::abs(v - 1) <= kEulerRegularityConstant * std::pow(double(p), -s));
    }
  }
}

TEST_CASE("Cartan cell probabilities") {
  CHECK(cartan_cell_probability(2, 0) == mpq_class(2, 5));
  CHECK(cartan_cell_probability(3, 0) == mpq_class(3, 5));
  CHECK(cartan_cell_probability(2, 1) == mpq_class(3, 10));
  for (std::uint64_t p : {2, 3, 5, 7})
    for (int a : {2, 3, 5})
      for (int K : {0, 1, 4, 10}) CHECK(cartan_probability_total(p, K, a) == 1);
  CHECK_THROWS_AS(cartan_cell_probability(2, 0, 1), DomainError);
}

TEST_CASE("archimedean factor matches its closed form") {
  for (double s : {1.05, 1.2, 1.5, 2.0, 2.0125, 2.5, 3.0, 5.0, 10.0}) {
    CAPTURE(s);
    CHECK(archimedean_factor(s, unit_scale()) == doctest::Approx(archimedean_oracle(s)).epsilon(1e-8));
  }
  heights::MeasureConvention twice;
  twice.archimedean_scale = 2;
  CHECK(archimedean_factor(2.5, twice) == doctest::Approx(2 * archimedean_oracle(2.5)).epsilon(1e-12));
  CHECK_THROWS_AS(archimedean_factor(1.0, unit_scale()), DomainError);
  heights::MeasureConvention bad;
  bad.archimedean_scale = 0;
  CHECK_THROWS_AS(archimedean_factor(2.0, bad), DomainError);
}

TEST_CASE("property: archimedean factor decreases and has a simple pole at 1") {
  double prev = INFINITY;
  for (double s = 1.01; s < 6; s += 0.07) {
    const double v = archimedean_factor(s, unit_scale());
    CHECK(v < prev);
    CHECK(v > 0);
    prev = v;
    // (s - 1) A(s) stays bounded and tends to 2 as s -> 1
    CHECK((s - 1) * v <= 2.0 + 1e-9);
  }
  CHECK(0.001 * archimedean_factor(1.001, unit_scale()) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("Euler product at s = 3 against the closed form") {
  // prod_p (1 + p^-s)(1 - p^(1-s)) / (1 - p^(1-s)) * (1 - p^(1-s)) = prod_p (1 + p^-s)/(1 - p^(1-s)) * (1 - p^(1-s))
  // = prod_p (1 + p^-3) = zeta(3) / zeta(6).
  const auto e = euler_product(20000, HighPrecision(3), unit_scale());
  const double exact = 1.2020569031595942 / (std::pow(std::numbers::pi, 6) / 945.0);
  const double got = static_cast<double>(e.finite_part);
  CHECK(std::abs(got - exact) <= e.tail_bound * exact);
  CHECK(got == doctest::Approx(exact).epsilon(1e-7));
  CHECK(e.regularizer == "zeta(s-1)");
  CHECK(e.archimedean_part == doctest::Approx(0.5).epsilon(1e-10));
  CHECK_THROWS_AS(euler_product(100, HighPrecision(1), unit_scale()), DomainError);
}

TEST_CASE("Euler product does not depend on the block schedule") {
  const auto a = euler_product(5000, HighPrecision("2.1"), unit_scale());
  const auto b = euler_product(5000, HighPrecision("2.1"), unit_scale());
  CHECK(a.finite_part == b.finite_part);
}

TEST_CASE("regularized shift") {
  CHECK(static_cast<double>(regularized_zeta_shift(HighPrecision(2))) == 1.0);
  CHECK(static_cast<double>(regularized_zeta_shift(HighPrecision("2.001"))) == doctest::Approx(1.0).epsilon(1e-3));
  // (s - 2) zeta(s - 1) at s = 3 is zeta(2)
  CHECK(static_cast<double>(regularized_zeta_shift(HighPrecision(3))) ==
        doctest::Approx(std::numbers::pi * std::numbers::pi / 6).epsilon(1e-14));
}

TEST_CASE("Richardson extrapolation of a polynomial is exact") {
  std::vector<HighPrecision> h{0.4, 0.2, 0.1, 0.05}, v;
  for (const auto& x : h) v.push_back(3 + 2 * x - x * x);
  auto r = richardson_limit(h, v);
  CHECK(static_cast<double>(r.value) == doctest::Approx(3.0).epsilon(1e-30));
  CHECK(r.converged);
  CHECK_THROWS_AS(richardson_limit({HighPrecision(1)}, {HighPrecision(1)}), DomainError);
}

TEST_CASE("residue at s = 2 with unit scale") {
  const std::vector<double> samples{2.2, 2.1, 2.05, 2.025, 2.0125};
  auto r = residue_estimate(10000, samples, unit_scale());
  CHECK(r.converged);
  CHECK(r.diagnostic.empty());
  CHECK(r.samples.size() == samples.size());
  const double v = static_cast<double>(r.value);
  CHECK(std::abs(v - kResidueUnit) <= r.error);
  CHECK(r.error < 2e-3);
  auto coarse = residue_estimate(1000, samples, unit_scale());
  CHECK(std::abs(static_cast<double>(coarse.value) - v) <= coarse.error + r.error);
  CHECK(coarse.tail_bound > r.tail_bound);
}

TEST_CASE("residue is linear in the archimedean scale") {
  const std::vector<double> samples{2.2, 2.1, 2.05, 2.025};
  heights::MeasureConvention three;
  three.archimedean_scale = 3;
  auto a = residue_estimate(2000, samples, unit_scale());
  auto b = residue_estimate(2000, samples, three);
  CHECK(static_cast<double>(b.value) == doctest::Approx(3 * static_cast<double>(a.value)).epsilon(1e-12));
}

TEST_CASE("residue input validation") {
  CHECK_THROWS_AS(residue_estimate(100, {2.1, 2.05}, unit_scale()), DomainError);
  CHECK_THROWS_AS(residue_estimate(100, {2.1, 2.05, 2.0}, unit_scale()), DomainError);
  CHECK_THROWS_AS(residue_estimate(100, {2.05, 2.1, 2.01}, unit_scale()), DomainError);
}

TEST_CASE("residue reports non-convergence instead of a value") {
  // samples far from 2 leave a large last correction
  auto r = residue_estimate(100, {40.0, 20.0, 3.0}, unit_scale());
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.diagnostic.empty());
}

TEST_CASE("tauberian fit on synthetic counts") {
  std::vector<std::pair<double, double>> pure, logged;
  for (int e = 6; e <= 14; ++e) {
    const double T = std::ldexp(1.0, e);
    pure.emplace_back(T, 3 * T * T);
    logged.emplace_back(T, T * T * std::log(T) * (1 + 0.5 / std::log(T)));
  }
  auto f = tauberian_fit(pure, 2.0, 1);
  CHECK(f.c_hat == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.a_hat == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.d_hat == 0);
  CHECK(f.residuals.size() == pure.size());

  auto g = tauberian_fit(logged, 2.0, 2);
  CHECK(g.c_hat == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(g.d_hat == doctest::Approx(0.5).epsilon(1e-10));
  for (double r : g.residuals) CHECK(std::abs(r) < 1e-10);
}

TEST_CASE("property: fit constants scale with the counts") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> noise(0.97, 1.03);
  std::vector<std::pair<double, double>> grid;
  for (int e = 4; e <= 12; ++e) {
    const double T = std::ldexp(1.0, e);
    grid.emplace_back(T, 5 * std::pow(T, 1.5) * noise(rng));
  }
  auto f = tauberian_fit(grid, 1.5, 1);
  auto scaled = grid;
  for (auto& [T, N] : scaled) N *= 7;
  auto g = tauberian_fit(scaled, 1.5, 1);
  CHECK(g.c_hat == doctest::Approx(7 * f.c_hat).epsilon(1e-12));
  CHECK(g.a_hat == doctest::Approx(f.a_hat).epsilon(1e-12));
  CHECK(f.a_hat == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("tauberian fit input validation") {
  std::vector<std::pair<double, double>> four{{2, 1}, {4, 2}, {64, 3}, {512, 4}};
  CHECK_THROWS_AS(tauberian_fit(four, 2, 1), DomainError);
  std::vector<std::pair<double, double>> narrow{{10, 1}, {20, 2}, {30, 3}, {40, 4}, {50, 5}};
  CHECK_THROWS_AS(tauberian_fit(narrow, 2, 1), DomainError);
  std::vector<std::pair<double, double>> unsorted{{10, 1}, {5, 2}, {30, 3}, {40, 4}, {5000, 5}};
  CHECK_THROWS_AS(tauberian_fit(unsorted, 2, 1), DomainError);
  std::vector<std::pair<double, double>> zero{{10, 0}, {20, 2}, {30, 3}, {40, 4}, {5000, 5}};
  CHECK_THROWS_AS(tauberian_fit(zero, 2, 1), DomainError);
  std::vector<std::pair<double, double>> ok{{10, 1}, {20, 2}, {30, 3}, {40, 4}, {5000, 5}};
  CHECK_THROWS_AS(tauberian_fit(ok, 2, 0), DomainError);
}

TEST_CASE("calibration is a fixed point") {
  const double c = 5.17, a = 2.0;
  auto m = calibrate_archimedean_scale(c, kResidueUnit, a);
  CHECK(predicted_constant(m.archimedean_scale * kResidueUnit, a) == doctest::Approx(c).epsilon(1e-14));
  auto twice = calibrate_archimedean_scale(2 * c, kResidueUnit, a);
  CHECK(twice.archimedean_scale == doctest::Approx(2 * m.archimedean_scale).epsilon(1e-14));
  // end to end through the residue
  auto r = residue_estimate(10000, {2.2, 2.1, 2.05, 2.025, 2.0125}, m);
  CHECK(predicted_constant(static_cast<double>(r.value), a) == doctest::Approx(c).epsilon(1e-3));
  CHECK_THROWS_AS(calibrate_archimedean_scale(0, 1, 2), DomainError);
  CHECK_THROWS_AS(calibrate_archimedean_scale(1, -1, 2), DomainError);
}
