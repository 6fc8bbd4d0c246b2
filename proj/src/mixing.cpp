#include "manin/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "manin/errors.hpp"

namespace manin::mixing {

using heights::CartanCoordinates;
using heights::Place;
using heights::PrimitiveMatrix;

namespace {

void check_prime(std::uint64_t p) {
  if (!heights::is_prime(p)) throw DomainError(std::to_string(p) + " is not prime");
}

// Primes dividing a nonzero integer, by trial division.
std::vector<std::uint64_t> prime_divisors(mpz_class x) {
  std::vector<std::uint64_t> out;
  x = abs(x);
  if (x == 0) throw DomainError("prime_divisors: zero");
  for (std::uint64_t d = 2; x > 1; ++d) {
    if (mpz_class(d) * d > x) {
      if (!x.fits_ulong_p()) throw ResourceGuardError("prime_divisors: cofactor too large");
      out.push_back(x.get_ui());
      break;
    }
    if (mpz_divisible_ui_p(x.get_mpz_t(), d)) {
      out.push_back(d);
      while (mpz_divisible_ui_p(x.get_mpz_t(), d)) x /= static_cast<unsigned long>(d);
    }
    if (d > 100'000'000) throw ResourceGuardError("prime_divisors: trial division limit");
  }
  return out;
}

}  // namespace

mpq_class xi_padic_normalized(std::uint64_t p, std::int64_t n) {
  check_prime(p);
  if (n < 0) throw DomainError("xi_padic: n must be >= 0");
  const mpq_class inv(1, p);
  return (mpq_class(n) * (1 - inv) + (1 + inv)) / (1 + inv);
}

double xi_padic(std::uint64_t p, std::int64_t n) {
  const double q = static_cast<double>(p);
  return std::pow(q, -0.5 * static_cast<double>(n)) * xi_padic_normalized(p, n).get_d();
}

double hecke_eigenvalue(std::uint64_t p) {
  check_prime(p);
  const double q = static_cast<double>(p);
  return 2 * std::sqrt(q) / (q + 1);
}

double hecke_residual(std::uint64_t p, std::int64_t n) {
  if (n < 1) throw DomainError("hecke_residual: n must be >= 1");
  const double q = static_cast<double>(p);
  const double lhs = (q * xi_padic(p, n + 1) + xi_padic(p, n - 1)) / (q + 1);
  return std::abs(lhs - hecke_eigenvalue(p) * xi_padic(p, n));
}

double xi_real(double t) {
  t = std::abs(t);
  if (t == 0) return 1;
  // theta -> pi/2 - theta, tan = e^(-2t) y, y = e^z:
  //   Xi = (2/pi) e^(-t) int_R e^z / (sqrt(1 + e^(2z - 4t)) sqrt(1 + e^(2z))) dz.
  // The integrand is ~1 on (0, 2t) and decays like e^(-|z|) outside.
  auto f = [t](double z) {
    const double a = std::exp(2 * z - 4 * t);
    const double b = std::exp(2 * z);
    return std::exp(z) / (std::sqrt(1 + a) * std::sqrt(1 + b));
  };
  auto g = [t](double z) {  // same, scaled by e^(-z) for z > 0 to avoid overflow
    const double a = std::exp(2 * z - 4 * t);
    const double b = std::exp(-2 * z);
    return 1.0 / (std::sqrt(1 + a) * std::sqrt(1 + b));
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr double tol = 1e-13;
  double total = 0;
  // left tail (-inf, 0]
  total += GK::integrate(f, -std::numeric_limits<double>::infinity(), 0.0, 15, tol);
  // [0, 2t + 40] in panels of length about 4, then the right tail
  const double right = 2 * t + 40;
  const int panels = static_cast<int>(std::ceil(right / 4));
  for (int i = 0; i < panels; ++i) {
    const double lo = right * i / panels, hi = right * (i + 1) / panels;
    total += GK::integrate(g, lo, hi, 15, tol);
  }
  total += GK::integrate(g, right, std::numeric_limits<double>::infinity(), 15, tol);
  return 2 / std::numbers::pi * std::exp(-t) * total;
}

double xi_real_agm(double t) {
  t = std::abs(t);
  double a = 1, b = std::exp(-2 * t);
  for (int i = 0; i < 200 && std::abs(a - b) > 1e-17 * a; ++i) {
    const double an = (a + b) / 2;
    b = std::sqrt(a * b);
    a = an;
  }
  return std::exp(-t) / a;
}

double eta(const CartanCoordinates& radial) {
  if (radial.place.is_infinite()) {
    const auto& s = radial.singular_values;
    if (s.size() < 2 || !(s.back() > 0)) throw DomainError("eta: need nonsingular singular values");
    return s.front() / s.back();
  }
  const auto& e = radial.exponents;
  if (e.empty()) throw DomainError("eta: empty exponents");
  const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
  return std::pow(static_cast<double>(radial.place.p()), static_cast<double>(*hi - *lo));
}

XiEvaluation evaluate_place(const PrimitiveMatrix& g, const Place& v) {
  if (g.n() != 2) throw StructuralError("evaluate_place: PGL_2 element required");
  XiEvaluation out;
  out.place = v;
  if (v.is_infinite()) {
    out.radial = heights::cartan_radial_real(to_rational(g.matrix()));
    out.eta = eta(out.radial);
    out.xi = xi_real(0.5 * std::log(out.eta));
  } else {
    // Middle Smith exponent of the adjoint image is the Cartan gap.
    const auto ad = heights::adjoint_rep(g);
    auto sm = heights::smith_exponents(ad.matrix, v.p());
    const std::int64_t n = sm.exponents.at(1) - sm.exponents.at(0);
    out.radial.place = v;
    out.radial.exponents = {0, n};
    out.eta = eta(out.radial);
    out.xi = xi_padic(v.p(), n);
  }
  return out;
}

std::vector<Place> nontrivial_places(const PrimitiveMatrix& g) {
  if (g.n() != 2) throw StructuralError("nontrivial_places: PGL_2 element required");
  std::vector<Place> out{Place::infinity()};
  for (auto p : prime_divisors(determinant(g.matrix()))) out.push_back(Place::prime(p));
  return out;
}

GlobalXi evaluate_global(const PrimitiveMatrix& g) {
  GlobalXi out;
  for (const auto& v : nontrivial_places(g)) {
    auto e = evaluate_place(g, v);
    out.xi *= e.xi;
    out.eta *= e.eta;
    out.local.push_back(std::move(e));
  }
  return out;
}

double xi_global(const PrimitiveMatrix& g) { return evaluate_global(g).xi; }

double xi_tilde(const PrimitiveMatrix& g) { return std::sqrt(xi_global(g)); }

LpProbe lp_probe(std::uint64_t p, double pexp, int max_terms) {
  check_prime(p);
  if (max_terms < 400) throw DomainError("lp_probe: max_terms must be >= 400");
  LpProbe out;
  out.p = p;
  out.pexp = pexp;
  const double q = static_cast<double>(p);
  // log-domain terms: vol_k = q^(k-1)(q+1) is astronomically large for k ~ 400
  double sum = 0;
  for (int k = 0; k <= max_terms; ++k) {
    double logterm = pexp * std::log(xi_padic_normalized(p, k).get_d()) - 0.5 * pexp * k * std::log(q);
    if (k >= 1) logterm += (k - 1) * std::log(q) + std::log(q + 1);
    sum += std::exp(logterm);
    if (k >= 25 && (k & (k - 1)) == 0) out.partial_sums.emplace_back(k, sum);
    if (k == 50 || k == 100 || k == 200 || k == 300 || k == max_terms) {
      if (out.partial_sums.empty() || out.partial_sums.back().first != k) out.partial_sums.emplace_back(k, sum);
    }
  }
  std::sort(out.partial_sums.begin(), out.partial_sums.end());
  out.partial_sums.erase(std::unique(out.partial_sums.begin(), out.partial_sums.end()), out.partial_sums.end());

  auto at = [&](int K) {
    for (auto& [k, s] : out.partial_sums)
      if (k == K) return s;
    throw InvariantViolation("lp_probe: missing checkpoint");
  };
  const double s100 = at(100), s200 = at(200), s50 = at(50), s300 = at(300);
  out.increments_nondecreasing = (s300 - s200) >= (s200 - s100) && (s200 - s100) >= (s100 - s50);
  out.stable = true;
  for (auto& [k, s] : out.partial_sums)
    if (k > 200 && std::abs(s - s200) > 1e-8 * std::abs(s200)) out.stable = false;
  return out;
}

BoundsReport verify_bounds(const std::vector<PrimitiveMatrix>& sample, double eps, int m, std::uint64_t lp_prime,
                           const std::vector<double>& pexps) {
  if (sample.empty()) throw DomainError("verify_bounds: empty sample");
  if (!(eps > 0) || !(eps < 0.5)) throw DomainError("verify_bounds: eps must lie in (0, 1/2)");
  if (m < 1) throw DomainError("verify_bounds: m must be positive");
  BoundsReport r;
  r.sample_size = sample.size();
  r.eps = eps;
  r.m = m;
  r.min_lower_margin = std::numeric_limits<double>::infinity();
  std::ostringstream first_violation;
  for (const auto& g : sample) {
    const auto gx = evaluate_global(g);
    bool ok = true;
    for (const auto& loc : gx.local) {
      if (loc.place.is_infinite()) {
        // xi_R(t) e^t = 1 / AGM(1, e^(-2t)) >= 1; allow quadrature error only
        ok = ok && loc.xi * std::sqrt(loc.eta) >= 1 - 1e-10;
      } else {
        ok = ok && xi_padic_normalized(loc.place.p(), loc.radial.exponents.at(1)) >= 1;
      }
    }
    const double margin = gx.xi * std::sqrt(gx.eta);
    r.min_lower_margin = std::min(r.min_lower_margin, margin);
    if (!ok) {
      if (r.lower_violations == 0) first_violation << format_matrix(g.matrix());
      ++r.lower_violations;
    }
    r.c_eps = std::max(r.c_eps, gx.xi / std::pow(gx.eta, -0.5 + eps));
    const double h = heights::adjoint_height(g).get_d();
    r.c_height = std::max(r.c_height, gx.xi * std::pow(h, 1.0 / m));
  }
  if (r.lower_violations > 0)
    throw InvariantViolation("lower bound eta^(-1/2) <= xi violated at " + std::to_string(r.lower_violations) +
                             " points, first " + first_violation.str());
  for (double pe : pexps) r.lp.push_back(lp_probe(lp_prime, pe));
  return r;
}

std::vector<PrimitiveMatrix> box_sample(int bound) {
  if (bound < 1 || bound > 60) throw ResourceGuardError("box_sample: bound must be in [1, 60]");
  std::vector<PrimitiveMatrix> out;
  for (int a = -bound; a <= bound; ++a)
    for (int b = -bound; b <= bound; ++b)
      for (int c = -bound; c <= bound; ++c)
        for (int d = -bound; d <= bound; ++d) {
          // canonical sign: first nonzero entry positive
          const int first = a != 0 ? a : b != 0 ? b : c != 0 ? c : d;
          if (first <= 0) continue;
          if (static_cast<long>(a) * d - static_cast<long>(b) * c == 0) continue;
          if (std::gcd(std::gcd(a, b), std::gcd(c, d)) != 1) continue;
          out.push_back(PrimitiveMatrix::from(IntMatrix{{a, b}, {c, d}}));
        }
  return out;
}

std::vector<PrimitiveMatrix> diagonal_family(std::uint64_t p, int kmax) {
  check_prime(p);
  std::vector<PrimitiveMatrix> out;
  mpz_class pk = 1;
  for (int k = 0; k <= kmax; ++k) {
    out.push_back(PrimitiveMatrix::from(IntMatrix{{pk, 0}, {0, 1}}));
    pk *= static_cast<unsigned long>(p);
  }
  return out;
}

std::vector<std::pair<std::uint64_t, double>> shell_maxima(const std::vector<PrimitiveMatrix>& sample,
                                                           const std::vector<std::uint64_t>& thresholds) {
  std::vector<std::pair<std::uint64_t, double>> out;
  for (auto T : thresholds) out.emplace_back(T, 0.0);
  for (const auto& g : sample) {
    const mpz_class h = heights::adjoint_height(g);
    double xi = -1;
    for (auto& [T, mx] : out) {
      if (h >= T && h < mpz_class(T) * 2) {
        if (xi < 0) xi = xi_global(g);
        mx = std::max(mx, xi);
      }
    }
  }
  return out;
}

}  // namespace manin::mixing
