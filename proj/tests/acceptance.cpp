// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "manin/enumeration.hpp"
#include "manin/errors.hpp"
#include "manin/mixing.hpp"
#include "manin/rootdata.hpp"
#include "manin/zeta.hpp"

using namespace manin;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int mobius(std::uint64_t n) {
  int mu = 1;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    n /= p;
    if (n % p == 0) return 0;
    mu = -mu;
  }
  return n > 1 ? -mu : mu;
}

// Shared PGL_2 data at T = 2^14, tracked primes 2 and 3.
const enumeration::Pgl2Count& pgl2_top() {
  static const enumeration::Pgl2Count r = enumeration::count_pgl2_adjoint(1u << 14, {2, 3});
  return r;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  auto rs = rootdata::RootSystem::from_type("A3");
  auto m = rootdata::adjoint_highest_weight(rs);
  auto mi = rootdata::manin_invariants(rs, m, rootdata::GaloisOrbits::trivial(3));
  const double ms = 1e3 * seconds_since(t0);
  const bool ok = mi.u == std::vector<std::int64_t>{3, 4, 3} &&
                  m == std::vector<mpq_class>{1, 1, 1} && mi.a == 5 && mi.b == 1 &&
                  mi.delta_iota == rootdata::IndexSet{1};
  return {ok && ms < 1.0, fmt("u=(%ld,%ld,%ld) a=%s b=%d delta={alpha_%d} in %.3f ms", long(mi.u[0]), long(mi.u[1]),
                              long(mi.u[2]), mi.a.get_str().c_str(), mi.b,
                              mi.delta_iota.empty() ? 0 : *mi.delta_iota.begin() + 1, ms)};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  // 2 / zeta(2) from the Moebius sum, with an explicit bound on the omitted tail
  double mob = 0;
  const std::uint64_t D = 2'000'000;
  for (std::uint64_t d = 1; d <= D; ++d)
    if (int mu = mobius(d)) mob += mu / (double(d) * double(d));
  const double c = 2 * mob;
  auto s = enumeration::count_projective(1, 10000);
  double worst = 0;
  std::string rows;
  for (std::uint64_t T : {1000, 2000, 3000, 5000, 7000, 10000}) {
    const double ratio = double(s.count_below(T)) / (double(T) * double(T));
    worst = std::max(worst, std::abs(ratio / c - 1));
  }
  const double secs = seconds_since(t0);
  return {worst < 0.01 && secs <= 60,
          fmt("constant %.6f, max relative deviation %.4f%% over T=1e3..1e4, %.1f s", c, 100 * worst, secs)};
}

Outcome criterion3() {
  const auto& s = pgl2_top().spectrum;
  std::vector<std::pair<double, double>> grid;
  for (int e = 8; e <= 14; ++e) {
    const std::uint64_t T = 1ull << e;
    grid.emplace_back(double(T), double(s.count_below(T)));
  }
  auto fit = zeta::tauberian_fit(grid, 2.0, 1);
  const double ratio = grid.back().second / grid[grid.size() - 2].second;
  const bool ok = fit.a_hat >= 1.9 && fit.a_hat <= 2.1 && ratio >= 3.8 && ratio <= 4.2;
  return {ok, fmt("a_hat=%.4f, N(2^14)/N(2^13)=%.4f", fit.a_hat, ratio)};
}

Outcome criterion4() {
  const auto& r = pgl2_top();
  auto f2 = enumeration::cartan_statistics(r.histograms.at(0));
  auto f3 = enumeration::cartan_statistics(r.histograms.at(1));
  const double m20 = zeta::cartan_cell_probability(2, 0).get_d();
  const double m30 = zeta::cartan_cell_probability(3, 0).get_d();
  const double m21 = zeta::cartan_cell_probability(2, 1).get_d();
  const double d20 = std::abs(f2[0] - m20), d30 = std::abs(f3[0] - m30), d21 = std::abs(f2[1] - m21);
  const bool ok = d20 <= 0.02 && d30 <= 0.02 && d21 <= 0.02;
  return {ok, fmt("p=2 k=0: %.4f vs %.4f; p=3 k=0: %.4f vs %.4f; p=2 k=1: %.4f vs %.4f", f2[0], m20, f3[0], m30,
                  f2[1], m21)};
}

Outcome criterion5() {
  const auto& s = pgl2_top().spectrum;
  // top decade, log-spaced
  std::vector<std::uint64_t> Ts;
  for (int j = 8; j >= 0; --j) Ts.push_back(static_cast<std::uint64_t>(std::llround(16384 * std::pow(10.0, -j / 8.0))));
  std::vector<double> logged, plain;
  for (auto T : Ts) {
    const double N = double(enumeration::convolve_counts(s, s, 1, 1, T));
    plain.push_back(N / (double(T) * double(T)));
    logged.push_back(plain.back() / std::log(double(T)));
  }
  const auto [lo, hi] = std::minmax_element(logged.begin(), logged.end());
  double mean = 0;
  for (double v : logged) mean += v;
  mean /= double(logged.size());
  const double spread = (*hi - *lo) / mean;
  bool monotone = true;
  for (std::size_t i = 1; i < plain.size(); ++i) monotone = monotone && plain[i] > plain[i - 1];
  const double drift = plain.back() / plain.front();
  const double predicted = std::log(double(Ts.back())) / std::log(double(Ts.front()));
  const bool ok = spread < 0.10 && monotone && std::abs(drift / predicted - 1) < 0.10;
  return {ok, fmt("N/(T^2 log T) spread %.2f%%; N/T^2 monotone=%s, drift %.4f vs log ratio %.4f", 100 * spread,
                  monotone ? "yes" : "no", drift, predicted)};
}

Outcome criterion6() {
  const auto& s = pgl2_top().spectrum;
  const std::uint64_t T = 1u << 14;
  const double T2 = double(T) * double(T);
  const double N = double(enumeration::convolve_counts(s, s, 1, 2, T));
  // c from the same single-factor spectrum; fiber heights with H(h)^2 < T
  const double c = double(s.count_below(T)) / T2;
  const auto fs = enumeration::pgl2_fiber_sum(s, 4.0, enumeration::iroot(T - 1, 2) + 1);
  const double lo = c * fs.truncated, hi = c * (fs.truncated + fs.tail_bound);
  const double x = N / T2;
  const double dev = x < lo ? (lo - x) / x : x > hi ? (x - hi) / x : 0.0;
  return {dev <= 0.02, fmt("N/T^2=%.4f, c*fiber sum in [%.4f, %.4f] (tail %.2e), deviation %.3f%%", x, lo, hi,
                           fs.tail_bound, 100 * dev)};
}

Outcome criterion7() {
  const auto& s = pgl2_top().spectrum;
  const double a = 2.0;
  std::vector<std::pair<double, double>> cal;
  for (int e = 6; e <= 12; ++e) cal.emplace_back(double(1u << e), double(s.count_below(1u << e)));
  const double c_cal = zeta::tauberian_fit(cal, a, 1).c_hat;
  const std::vector<double> samples{2.2, 2.1, 2.05, 2.025, 2.0125};
  const auto unit = zeta::residue_estimate(10000, samples, heights::MeasureConvention{});
  if (!unit.converged) return {false, "residue extrapolation did not converge: " + unit.diagnostic};
  const auto conv = zeta::calibrate_archimedean_scale(c_cal, static_cast<double>(unit.value), a);
  const auto res = zeta::residue_estimate(10000, samples, conv);
  const double predicted = zeta::predicted_constant(static_cast<double>(res.value), a);
  double worst = 0;
  for (int j = 1; j <= 8; ++j) {
    const auto T = static_cast<std::uint64_t>(std::llround(4096 * std::pow(2.0, j / 4.0)));
    const double emp = double(s.count_below(T)) / (double(T) * double(T));
    worst = std::max(worst, std::abs(emp / predicted - 1));
  }
  return {res.converged && worst <= 0.10,
          fmt("scale %.5f, residue %.5f +- %.1e, predicted c %.4f, max validation deviation %.2f%%",
              conv.archimedean_scale, static_cast<double>(res.value), res.error, predicted, 100 * worst)};
}

Outcome criterion8() {
  bool ok = zeta::local_factor_pgl2_adjoint(2).evaluate_at(2) == mpq_class(5, 2);
  for (std::uint64_t p : {2, 3, 5})
    for (int k = 1; k <= 3; ++k) {
      mpz_class expect = p + 1;
      for (int i = 1; i < k; ++i) expect *= static_cast<unsigned long>(p);
      ok = ok && zeta::cell_volume_oracle(p, k) == expect && zeta::cell_volume(p, k) == mpq_class(expect);
    }
  ok = ok && zeta::cell_volume_oracle(2, 0) == 1;
  return {ok, "Z_2(2) = 5/2; cell volumes q^(k-1)(q+1) for p in {2,3,5}, k <= 3"};
}

Outcome criterion9() {
  std::size_t violations = 0;
  double c_eps = 0;
  std::size_t n = 0;
  try {
    auto r = mixing::verify_bounds(mixing::box_sample(10), 0.1, 4, 2, {});
    violations = r.lower_violations;
    c_eps = r.c_eps;
    n = r.sample_size;
  } catch (const InvariantViolation& e) {
    return {false, e.what()};
  }
  double worst = 0;
  for (std::uint64_t p : {2, 3, 5})
    for (int k = 1; k <= 50; ++k) worst = std::max(worst, mixing::hecke_residual(p, k));
  auto two = mixing::lp_probe(2, 2.0);
  auto three = mixing::lp_probe(2, 3.0);
  const bool ok = violations == 0 && worst < 1e-12 && two.increments_nondecreasing && three.stable;
  return {ok, fmt("%zu points, %zu violations, C_eps=%.3f; Hecke residual %.1e; L^2 divergent=%s, L^3 stable=%s", n,
                  violations, c_eps, worst, two.increments_nondecreasing ? "yes" : "no",
                  three.stable ? "yes" : "no")};
}

Outcome criterion10() {
  std::string detail;
  bool ok = true;
  for (std::uint64_t T : {64, 256, 1024}) {
    enumeration::EnumerationOptions wide;
    wide.radius = static_cast<std::int32_t>(2 * enumeration::iroot(T, 2));
    auto base = enumeration::count_pgl2_adjoint(T, {2, 3});
    auto big = enumeration::count_pgl2_adjoint(T, {2, 3}, wide);
    ok = ok && base.spectrum == big.spectrum && base.histograms == big.histograms;
    detail += fmt("T=%lu: %lu vs %lu; ", (unsigned long)T, (unsigned long)base.spectrum.total,
                  (unsigned long)big.spectrum.total);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %zu: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
