#pragma once

// Height zeta functions of PGL_2 under the adjoint embedding, trivial character.
//
// Local factor at p. The Cartan cell U a_k U, a_k = diag(p^k, 1), has volume
// 1 (k = 0) or p^(k-1)(p+1) (k >= 1) when vol(U) = 1, and local adjoint height
// p^k. Summing p^(-ks) vol(U a_k U) gives, with t = p^(-s),
//
//     Z_p(s) = 1 + (1 + 1/p) * p t / (1 - p t) = (1 + t) / (1 - p t).
//
// Archimedean factor. On the identity component, u >= 1 is the singular-value
// ratio and the Haar density is proportional to (u - 1/u) / u du; the adjoint
// max-entry of the Cartan representative is u. Both components weigh equally.
// The proportionality constant is MeasureConvention::archimedean_scale.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gmpxx.h>

#include "manin/heights.hpp"

namespace manin::zeta {

using HighPrecision = boost::multiprecision::cpp_bin_float_50;

struct LocalFactor {
  std::uint64_t q = 0;
  // Coefficients in t = q^(-s), lowest degree first.
  std::vector<mpz_class> numerator;
  std::vector<mpz_class> denominator;

  mpq_class cell_volume(std::int64_t k) const;
  mpq_class evaluate_t(const mpq_class& t) const;
  // Exact value for integer s.
  mpq_class evaluate_at(int s) const;
  double evaluate(double s) const;
  HighPrecision evaluate(const HighPrecision& s) const;
  // Partial sum of the cell expansion over k <= K (exact for integer s).
  mpq_class series_partial_sum(int K, int s) const;
  double series_partial_sum(int K, double s) const;
  // "(1 + t)/(1 - 2t)"
  std::string to_string() const;
};

LocalFactor local_factor_pgl2_adjoint(std::uint64_t p);

// Closed-form vol(U a_k U) with vol(U) = 1.
mpq_class cell_volume(std::uint64_t p, std::int64_t k);

// Counts cosets of U in U a_k U as index-p^k sublattices of Z_p^2 with cyclic
// quotient (Hermite normal forms of content 1). Independent of the closed form.
mpz_class cell_volume_oracle(std::uint64_t p, int k);

// Probability of the Cartan cell k under the local measure H_p^(-a) d tau_p / Z_p(a).
mpq_class cartan_cell_probability(std::uint64_t p, std::int64_t k, int a = 2);

// sum_{k <= K} probability + exact closed-form tail; equals 1 identically.
mpq_class cartan_probability_total(std::uint64_t p, int K, int a = 2);

// scale * 2 * int_1^inf u^(-s) (u - 1/u) / u du, by adaptive quadrature.
// Throws DomainError for s <= 1.
double archimedean_factor(double s, const heights::MeasureConvention& convention);

std::vector<std::uint64_t> primes_below(std::uint64_t P);

struct EulerProductEstimate {
  std::uint64_t cutoff = 0;
  HighPrecision s;
  // prod_{p < cutoff} Z_p(s) (1 - p^(1-s)); the omitted factor is zeta(s-1).
  HighPrecision finite_part;
  double archimedean_part = 0;
  std::string regularizer = "zeta(s-1)";
  // Relative bound on the omitted primes p >= cutoff.
  double tail_bound = 0;
};

// Constant C in |Z_p(s)(1 - p^(1-s)) - 1| <= C p^(-s).
inline constexpr double kEulerRegularityConstant = 4.0;

EulerProductEstimate euler_product(std::uint64_t P, const HighPrecision& s,
                                   const heights::MeasureConvention& convention);

struct Extrapolation {
  HighPrecision value;
  double error = 0;
  bool converged = false;
};

// Polynomial (Neville) extrapolation of values(h) to h = 0.
Extrapolation richardson_limit(const std::vector<HighPrecision>& h, const std::vector<HighPrecision>& values);

// (s - 2) zeta(s - 1), analytic at s = 2 with value 1.
HighPrecision regularized_zeta_shift(const HighPrecision& s);

struct ResidueEstimate {
  HighPrecision value;
  double error = 0;       // extrapolation error + Euler tail bound
  double tail_bound = 0;  // relative
  bool converged = false;
  std::vector<std::pair<double, double>> samples;  // (s, (s-2) Z(s))
  std::string diagnostic;
};

// Residue at s = 2 of Z(s) = archimedean(s) * prod_p Z_p(s), from samples s -> 2+.
// Non-convergence is reported through `converged` and `diagnostic`.
ResidueEstimate residue_estimate(std::uint64_t P, const std::vector<double>& samples,
                                 const heights::MeasureConvention& convention);

struct FitResult {
  double a_hat = 0;
  int b_input = 1;
  double c_hat = 0;
  double d_hat = 0;  // first-order log correction (0 when b = 1)
  std::vector<double> residuals;
  std::vector<std::pair<double, double>> grid;
};

// Least-squares fit of N / (T^a (log T)^(b-1)) to c (1 + d / log T) (d only for
// b >= 2), plus a free-exponent fit of log N - (b-1) log log T against log T.
// Needs >= 5 points, strictly increasing T, T_max / T_min >= 64.
FitResult tauberian_fit(const std::vector<std::pair<double, double>>& grid, double a, int b);

// Scale making residue(scale) / a equal to empirical_c. residue_unit is the
// residue computed with archimedean_scale = 1 (the residue is linear in it).
heights::MeasureConvention calibrate_archimedean_scale(double empirical_c, double residue_unit, double a);

inline double predicted_constant(double residue, double a) { return residue / a; }

}  // namespace manin::zeta
