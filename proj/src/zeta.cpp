#include "manin/zeta.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "manin/errors.hpp"

namespace manin::zeta {

namespace {

mpz_class ipow(std::uint64_t p, std::uint64_t k) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), p, k);
  return r;
}

mpq_class qpow(std::uint64_t p, std::int64_t k) {
  return k >= 0 ? mpq_class(ipow(p, static_cast<std::uint64_t>(k))) : mpq_class(1, ipow(p, static_cast<std::uint64_t>(-k)));
}

template <class T>
T horner(const std::vector<mpz_class>& coeffs, const T& t, auto convert) {
  T acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + convert(*it);
  return acc;
}

void check_prime(std::uint64_t p) {
  if (!heights::is_prime(p)) throw DomainError(std::to_string(p) + " is not prime");
}

}  // namespace

mpq_class cell_volume(std::uint64_t p, std::int64_t k) {
  check_prime(p);
  if (k < 0) throw DomainError("Cartan cell index must be >= 0");
  if (k == 0) return 1;
  return mpq_class(ipow(p, static_cast<std::uint64_t>(k - 1)) * (p + 1));
}

mpz_class cell_volume_oracle(std::uint64_t p, int k) {
  check_prime(p);
  if (k < 0) throw DomainError("Cartan cell index must be >= 0");
  if (ipow(p, static_cast<std::uint64_t>(k)) > 10'000'000) throw ResourceGuardError("cell_volume_oracle: p^k too large");
  // Sublattices of index p^k: Hermite forms [[p^i, x], [0, p^j]], i + j = k, 0 <= x < p^j.
  // The quotient is cyclic (the lattice lies in the cell of a_k, not a smaller one
  // scaled by p) iff gcd(p^i, x, p^j) = 1.
  mpz_class count = 0;
  for (int i = 0; i <= k; ++i) {
    const int j = k - i;
    const std::uint64_t pi = ipow(p, i).get_ui();
    const std::uint64_t pj = ipow(p, j).get_ui();
    for (std::uint64_t x = 0; x < pj; ++x)
      if (std::gcd(std::gcd(pi, x), pj) == 1) ++count;
  }
  return count;
}

mpq_class LocalFactor::cell_volume(std::int64_t k) const { return zeta::cell_volume(q, k); }

mpq_class LocalFactor::evaluate_t(const mpq_class& t) const {
  auto conv = [](const mpz_class& z) { return mpq_class(z); };
  mpq_class den = horner<mpq_class>(denominator, t, conv);
  if (den == 0) throw DomainError("local factor evaluated at its pole");
  return horner<mpq_class>(numerator, t, conv) / den;
}

mpq_class LocalFactor::evaluate_at(int s) const { return evaluate_t(qpow(q, -s)); }

double LocalFactor::evaluate(double s) const {
  const double t = std::pow(static_cast<double>(q), -s);
  auto conv = [](const mpz_class& z) { return z.get_d(); };
  const double den = horner<double>(denominator, t, conv);
  if (den <= 0) throw DomainError("local factor diverges for s <= 1");
  return horner<double>(numerator, t, conv) / den;
}

HighPrecision LocalFactor::evaluate(const HighPrecision& s) const {
  const HighPrecision t = boost::multiprecision::pow(HighPrecision(q), -s);
  auto conv = [](const mpz_class& z) { return HighPrecision(z.get_str()); };
  const HighPrecision den = horner<HighPrecision>(denominator, t, conv);
  if (den <= 0) throw DomainError("local factor diverges for s <= 1");
  return horner<HighPrecision>(numerator, t, conv) / den;
}

mpq_class LocalFactor::series_partial_sum(int K, int s) const {
  mpq_class acc = 0;
  for (int k = 0; k <= K; ++k) acc += cell_volume(k) * qpow(q, -static_cast<std::int64_t>(k) * s);
  return acc;
}

double LocalFactor::series_partial_sum(int K, double s) const {
  // vol_k q^(-ks) = (1 + 1/q) q^(k(1-s)) for k >= 1; the volume alone overflows a double
  const double qd = static_cast<double>(q);
  double acc = K >= 0 ? 1.0 : 0.0;
  for (int k = 1; k <= K; ++k) acc += (1 + 1 / qd) * std::pow(qd, k * (1 - s));
  return acc;
}

std::string LocalFactor::to_string() const {
  auto poly = [](const std::vector<mpz_class>& c) {
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] == 0) continue;
      mpz_class mag = abs(c[i]);
      if (!first) os << (c[i] < 0 ? " - " : " + ");
      else if (c[i] < 0) os << "-";
      if (i == 0 || mag != 1) os << mag.get_str();
      if (i >= 1) os << "t";
      if (i >= 2) os << "^" << i;
      first = false;
    }
    return first ? std::string("0") : os.str();
  };
  return "(" + poly(numerator) + ")/(" + poly(denominator) + ")";
}

LocalFactor local_factor_pgl2_adjoint(std::uint64_t p) {
  check_prime(p);
  LocalFactor f;
  f.q = p;
  f.numerator = {1, 1};
  f.denominator = {1, -mpz_class(static_cast<unsigned long>(p))};
  return f;
}

mpq_class cartan_cell_probability(std::uint64_t p, std::int64_t k, int a) {
  if (a < 2) throw DomainError("local height integral diverges for a <= 1");
  auto z = local_factor_pgl2_adjoint(p).evaluate_at(a);
  return cell_volume(p, k) * qpow(p, -k * a) / z;
}

mpq_class cartan_probability_total(std::uint64_t p, int K, int a) {
  if (a < 2) throw DomainError("local height integral diverges for a <= 1");
  auto f = local_factor_pgl2_adjoint(p);
  mpq_class head = f.series_partial_sum(K, a);
  // sum_{k > K} (1 + 1/p) p^(k(1-a)) = (1 + 1/p) r^(K+1) / (1 - r), r = p^(1-a).
  mpq_class r = qpow(p, 1 - a);
  mpq_class rk = 1;
  for (int i = 0; i <= K; ++i) rk *= r;
  mpq_class tail = (1 + mpq_class(1, p)) * rk / (1 - r);
  return (head + tail) / f.evaluate_at(a);
}

double archimedean_factor(double s, const heights::MeasureConvention& convention) {
  if (!(s > 1)) throw DomainError("archimedean height integral diverges for s <= 1");
  if (!(convention.archimedean_scale > 0)) throw DomainError("archimedean scale must be positive");
  // u = e^x, then x = y / (s - 1):  (1/(s-1)) int_0^inf e^-y (1 - e^(-2y/(s-1))) dy.
  const double kappa = 2.0 / (s - 1.0);
  auto f = [kappa](double y) { return std::exp(-y) * -std::expm1(-kappa * y); };
  double err = 0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numeric_limits<double>::infinity(), 20, 1e-12, &err);
  return convention.archimedean_scale * 2.0 * integral / (s - 1.0);
}

std::vector<std::uint64_t> primes_below(std::uint64_t P) {
  std::vector<std::uint64_t> out;
  if (P < 3) return out;
  std::vector<bool> composite(P, false);
  for (std::uint64_t i = 2; i < P; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (std::uint64_t j = i * i; j < P; j += i) composite[j] = true;
  }
  return out;
}

EulerProductEstimate euler_product(std::uint64_t P, const HighPrecision& s,
                                   const heights::MeasureConvention& convention) {
  if (!(s > 1)) throw DomainError("Euler product needs s > 1");
  const auto primes = primes_below(P);
  // Fixed-size blocks multiplied in index order: the result does not depend on
  // the thread count.
  constexpr std::size_t kBlock = 128;
  const std::size_t nblocks = (primes.size() + kBlock - 1) / kBlock;
  std::vector<HighPrecision> partial(nblocks, HighPrecision(1));
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < nblocks; ++b) {
    HighPrecision acc = 1;
    for (std::size_t i = b * kBlock; i < std::min(primes.size(), (b + 1) * kBlock); ++i) {
      const HighPrecision p(primes[i]);
      const auto f = local_factor_pgl2_adjoint(primes[i]);
      acc *= f.evaluate(s) * (1 - boost::multiprecision::pow(p, 1 - s));
    }
    partial[b] = acc;
  }
  EulerProductEstimate e;
  e.cutoff = P;
  e.s = s;
  e.finite_part = 1;
  for (const auto& x : partial) e.finite_part *= x;
  e.archimedean_part = archimedean_factor(static_cast<double>(s), convention);
  const double sd = static_cast<double>(s);
  const double Pd = static_cast<double>(std::max<std::uint64_t>(P, 2));
  const double tail_sum = std::pow(Pd, -sd) + std::pow(Pd, 1 - sd) / (sd - 1);
  e.tail_bound = std::expm1(kEulerRegularityConstant * tail_sum);
  return e;
}

Extrapolation richardson_limit(const std::vector<HighPrecision>& h, const std::vector<HighPrecision>& values) {
  const std::size_t n = h.size();
  if (n < 2 || values.size() != n) throw DomainError("extrapolation needs >= 2 samples");
  // Neville tableau at 0; diag[k] uses samples 0..k.
  std::vector<HighPrecision> col(values);
  std::vector<HighPrecision> diag{values[0]};
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i)
      col[i] = (h[i + m] * col[i] - h[i] * col[i + 1]) / (h[i + m] - h[i]);
    diag.push_back(col[0]);
  }
  Extrapolation out;
  out.value = diag.back();
  const double last = static_cast<double>(abs(diag[n - 1] - diag[n - 2]));
  out.error = last;
  const double scale = std::max(1e-300, static_cast<double>(abs(out.value)));
  bool shrinking = n < 3 || last <= static_cast<double>(abs(diag[n - 2] - diag[n - 3]));
  out.converged = shrinking && last / scale < 1e-3;
  return out;
}

HighPrecision regularized_zeta_shift(const HighPrecision& s) {
  if (s == 2) return 1;
  return (s - 2) * boost::math::zeta(s - 1);
}

ResidueEstimate residue_estimate(std::uint64_t P, const std::vector<double>& samples,
                                 const heights::MeasureConvention& convention) {
  if (samples.size() < 3) throw DomainError("residue_estimate needs >= 3 samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i] > 2)) throw DomainError("samples must exceed 2");
    if (i && !(samples[i] < samples[i - 1])) throw DomainError("samples must decrease strictly toward 2");
  }
  ResidueEstimate out;
  std::vector<HighPrecision> hs, vals;
  for (double sd : samples) {
    const HighPrecision s(sd);
    const auto e = euler_product(P, s, convention);
    const HighPrecision v = regularized_zeta_shift(s) * e.finite_part * HighPrecision(e.archimedean_part);
    hs.push_back(s - 2);
    vals.push_back(v);
    out.samples.emplace_back(sd, static_cast<double>(v));
    out.tail_bound = std::max(out.tail_bound, e.tail_bound);
  }
  const auto ex = richardson_limit(hs, vals);
  out.value = ex.value;
  out.error = ex.error + out.tail_bound * static_cast<double>(abs(ex.value));
  out.converged = ex.converged;
  if (!ex.converged) {
    std::ostringstream os;
    os << "extrapolation did not converge: last correction " << ex.error;
    out.diagnostic = os.str();
  }
  return out;
}

FitResult tauberian_fit(const std::vector<std::pair<double, double>>& grid, double a, int b) {
  if (grid.size() < 5) throw DomainError("tauberian_fit needs >= 5 grid points");
  if (b < 1) throw DomainError("log power b must be >= 1");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i].first > 1) || !(grid[i].second > 0)) throw DomainError("grid needs T > 1 and N > 0");
    if (i && !(grid[i].first > grid[i - 1].first)) throw DomainError("grid must be strictly increasing in T");
  }
  if (grid.back().first / grid.front().first < 64) throw DomainError("grid must span a factor of at least 64 in T");

  FitResult r;
  r.b_input = b;
  r.grid = grid;
  const std::size_t n = grid.size();
  std::vector<double> y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lt = std::log(grid[i].first);
    y[i] = grid[i].second / (std::pow(grid[i].first, a) * std::pow(lt, b - 1));
    x[i] = 1.0 / lt;
  }

  auto linfit = [n](const std::vector<double>& xs, const std::vector<double>& ys) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0) throw DomainError("degenerate grid");
    const double slope = sxy / sxx;
    return std::pair{my - slope * mx, slope};
  };

  if (b == 1) {
    // P(log T) is the constant 1: no first-order correction to fit.
    double c = 0;
    for (double v : y) c += v;
    r.c_hat = c / static_cast<double>(n);
    r.d_hat = 0;
  } else {
    auto [intercept, slope] = linfit(x, y);
    r.c_hat = intercept;
    r.d_hat = intercept != 0 ? slope / intercept : 0;
  }
  if (!(r.c_hat > 0)) throw DomainError("fit produced a non-positive constant");
  for (std::size_t i = 0; i < n; ++i) r.residuals.push_back(y[i] - r.c_hat * (1 + r.d_hat * x[i]));

  std::vector<double> lx(n), lz(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(grid[i].first);
    lz[i] = std::log(grid[i].second) - (b - 1) * std::log(lx[i]);
  }
  r.a_hat = linfit(lx, lz).second;
  return r;
}

heights::MeasureConvention calibrate_archimedean_scale(double empirical_c, double residue_unit, double a) {
  if (!(empirical_c > 0) || !(residue_unit > 0) || !(a > 0)) throw DomainError("calibration inputs must be positive");
  heights::MeasureConvention m;
  m.archimedean_scale = empirical_c * a / residue_unit;
  return m;
}

}  // namespace manin::zeta
