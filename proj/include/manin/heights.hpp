#pragma once

// Exact heights over Q with max norms at every place, the adjoint embedding
// of PGL_2, and per-place Cartan (radial) coordinates.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "manin/matrix.hpp"

namespace manin::heights {

class Place {
 public:
  static Place infinity() { return Place(0); }
  // Throws DomainError unless p is prime.
  static Place prime(std::uint64_t p);

  bool is_infinite() const noexcept { return p_ == 0; }
  std::uint64_t p() const noexcept { return p_; }
  std::string to_string() const { return is_infinite() ? "inf" : std::to_string(p_); }

  auto operator<=>(const Place&) const = default;

 private:
  explicit Place(std::uint64_t p) : p_(p) {}
  std::uint64_t p_;
};

bool is_prime(std::uint64_t n);

// Content-1 integer vector with canonical sign (first nonzero entry positive).
class PrimitiveVector {
 public:
  const std::vector<mpz_class>& entries() const noexcept { return entries_; }
  bool operator==(const PrimitiveVector&) const = default;

 private:
  friend struct Primitivizer;
  std::vector<mpz_class> entries_;
};

// Content-1 nonsingular square integer matrix with canonical sign: the unique
// representative of a point of PGL_n(Q) inside P(M_n(Q)).
class PrimitiveMatrix {
 public:
  // Canonicalizes m (which must be nonzero and nonsingular).
  static PrimitiveMatrix from(const IntMatrix& m);

  const IntMatrix& matrix() const noexcept { return m_; }
  std::size_t n() const noexcept { return m_.rows(); }
  bool operator==(const PrimitiveMatrix&) const = default;

 private:
  friend struct Primitivizer;
  IntMatrix m_;
};

template <class P>
struct Primitivized {
  P primitive;
  mpz_class content;  // content * primitive = +-input
};

Primitivized<PrimitiveVector> primitivize(const std::vector<mpz_class>& v);
Primitivized<PrimitiveMatrix> primitivize(const IntMatrix& m);

// Canonical content-1 form of any nonzero rational matrix (may be singular).
IntMatrix primitive_form(const RatMatrix& m);
mpz_class content(const IntMatrix& m);

struct HeightValue {
  mpq_class value;
  bool operator==(const HeightValue&) const = default;
};

// max_ij |M_ij|_v with |x|_p = p^{-v_p(x)}.
mpq_class local_height(const RatMatrix& m, const Place& v);
mpq_class local_height(const std::vector<mpq_class>& x, const Place& v);

// prod_v H_v(M): computed as the max entry of the primitive representative,
// which the product formula makes equal to the product over places.
HeightValue global_height(const RatMatrix& m);
HeightValue global_height(const std::vector<mpq_class>& x);

// Primes dividing any numerator or denominator of m (trial division; small inputs).
std::vector<std::uint64_t> support_primes(const RatMatrix& m);

// Adjoint embedding of PGL_2: the matrix of X -> g X adj(g) on trace-zero 2x2
// matrices in the ordered basis (e, f, h) with e=[[0,1],[0,0]], f=[[0,0],[1,0]],
// h=[[1,0],[0,-1]]. Columns are images of e, f, h. Ad(g) = matrix / det.
struct AdjointImage {
  IntMatrix matrix;
  mpz_class det;
};
AdjointImage adjoint_rep(const PrimitiveMatrix& g);

// Height of g in PGL_2 under the adjoint embedding (max entry of the content-1 image).
mpz_class adjoint_height(const PrimitiveMatrix& g);

struct CartanCoordinates {
  Place place = Place::infinity();
  std::vector<std::int64_t> exponents;  // p-adic Smith exponents, non-decreasing
  std::vector<double> singular_values;  // archimedean, descending
};

// Exponents of p in the elementary divisors of M. Throws DomainError for the
// zero matrix or a singular one (an infinite exponent).
CartanCoordinates smith_exponents(const IntMatrix& m, std::uint64_t p);

// Elementary divisors d_1 | d_2 | ... of an integer matrix (Smith normal form diagonal).
std::vector<mpz_class> elementary_divisors(const IntMatrix& m);

// Singular values, descending. Throws DomainError if numerically singular.
CartanCoordinates cartan_radial_real(const RatMatrix& m);

struct MeasureConvention {
  // Finite places: vol(U_v) = 1, fixed.
  double archimedean_scale = 1.0;
};

std::uint64_t p_valuation(const mpz_class& x, std::uint64_t p);

}  // namespace manin::heights
