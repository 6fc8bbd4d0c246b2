#pragma once

// Decay functions for PGL_2: the bi-invariant spherical function at each place,
// the radial size eta, and their products over places for rational points.
//
// p-adic: at a_n = diag(p^n, 1),
//     Xi_p(n) = q^(-n/2) * (n (1 - 1/q) + (1 + 1/q)) / (1 + 1/q).
// real: at singular-value ratio e^(2t),
//     Xi_R(t) = (2/pi) int_0^(pi/2) (e^(2t) cos^2 + e^(-2t) sin^2)^(-1/2) dtheta.

#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "manin/heights.hpp"

namespace manin::mixing {

struct XiEvaluation {
  heights::Place place = heights::Place::infinity();
  heights::CartanCoordinates radial;
  double xi = 1;
  double eta = 1;
};

double xi_padic(std::uint64_t p, std::int64_t n);

// Xi_p(n) * q^(n/2), exactly. The lower bound eta^(-1/2) <= Xi_p is this being >= 1.
mpq_class xi_padic_normalized(std::uint64_t p, std::int64_t n);

// Hecke eigenvalue 2 sqrt(q) / (q + 1) of the tempered spherical function.
double hecke_eigenvalue(std::uint64_t p);

// |(q Xi(n+1) + Xi(n-1)) / (q+1) - lambda Xi(n)|, n >= 1.
double hecke_residual(std::uint64_t p, std::int64_t n);

// Adaptive quadrature of the defining K-average; depends on |t| only.
double xi_real(double t);

// e^(-t) / AGM(1, e^(-2t)); closed form used to cross-check the quadrature.
double xi_real_agm(double t);

// q^gap at a prime (gap = last - first Smith exponent), sigma_1 / sigma_n at infinity.
double eta(const heights::CartanCoordinates& radial);

// Local data of a PGL_2(Q) point at one place.
XiEvaluation evaluate_place(const heights::PrimitiveMatrix& g, const heights::Place& v);

// Places where g is not in the identity cell: infinity plus primes dividing det.
std::vector<heights::Place> nontrivial_places(const heights::PrimitiveMatrix& g);

struct GlobalXi {
  double xi = 1;
  double eta = 1;  // prod over places
  std::vector<XiEvaluation> local;
};

GlobalXi evaluate_global(const heights::PrimitiveMatrix& g);
double xi_global(const heights::PrimitiveMatrix& g);
// xi_global^(1/2): every local rank of PGL_2 is one.
double xi_tilde(const heights::PrimitiveMatrix& g);

struct LpProbe {
  std::uint64_t p = 2;
  double pexp = 2;
  std::vector<std::pair<int, double>> partial_sums;  // (K, sum_{k<=K} vol_k Xi_p(k)^pexp)
  bool increments_nondecreasing = false;             // divergent trend
  bool stable = false;                               // |S(K) - S(200)| <= 1e-8 |S(200)| for K > 200
};

LpProbe lp_probe(std::uint64_t p, double pexp, int max_terms = 400);

struct BoundsReport {
  std::size_t sample_size = 0;
  std::size_t lower_violations = 0;
  double min_lower_margin = 0;  // min of xi / eta^(-1/2)
  double eps = 0;
  double c_eps = 0;             // max of xi / eta^(-1/2 + eps)
  int m = 1;
  double c_height = 0;          // max of xi * H^(1/m)
  std::vector<LpProbe> lp;
};

// Throws InvariantViolation if the lower bound fails anywhere on the sample.
BoundsReport verify_bounds(const std::vector<heights::PrimitiveMatrix>& sample, double eps, int m,
                           std::uint64_t lp_prime = 2, const std::vector<double>& pexps = {2.0, 2.5, 3.0});

// Canonical nonsingular primitive 2x2 integer matrices with all |entries| <= bound.
std::vector<heights::PrimitiveMatrix> box_sample(int bound);

// diag(p^k, 1), k = 0..kmax.
std::vector<heights::PrimitiveMatrix> diagonal_family(std::uint64_t p, int kmax);

// max xi_global over sample points with adjoint height in [T_i, 2 T_i).
std::vector<std::pair<std::uint64_t, double>> shell_maxima(const std::vector<heights::PrimitiveMatrix>& sample,
                                                           const std::vector<std::uint64_t>& thresholds);

}  // namespace manin::mixing
