#include "manin/heights.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "manin/errors.hpp"

namespace manin::heights {

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull})
    if (n % d == 0) return n == d;
  mpz_class z;
  mpz_import(z.get_mpz_t(), 1, 1, sizeof(n), 0, 0, &n);
  return mpz_probab_prime_p(z.get_mpz_t(), 40) != 0;
}

Place Place::prime(std::uint64_t p) {
  if (!is_prime(p)) throw DomainError(std::to_string(p) + " is not prime");
  return Place(p);
}

std::uint64_t p_valuation(const mpz_class& x, std::uint64_t p) {
  if (x == 0) throw DomainError("valuation of zero");
  mpz_class t = x;
  mpz_class pp(static_cast<unsigned long>(p));
  return mpz_remove(t.get_mpz_t(), t.get_mpz_t(), pp.get_mpz_t());
}

struct Primitivizer {
  template <class Range>
  static mpz_class content_of(const Range& r) {
    mpz_class g = 0;
    for (const auto& x : r) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
    return g;
  }

  // Divides by the content and flips sign so that the first nonzero entry is positive.
  template <class Range>
  static mpz_class canonicalize(Range& r) {
    mpz_class g = content_of(r);
    if (g == 0) throw DomainError("cannot primitivize the zero vector");
    auto first = std::find_if(r.begin(), r.end(), [](const mpz_class& x) { return x != 0; });
    if (*first < 0) g = -g;
    for (auto& x : r) mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), g.get_mpz_t());
    return abs(g);
  }

  static Primitivized<PrimitiveVector> vec(const std::vector<mpz_class>& v) {
    Primitivized<PrimitiveVector> out;
    out.primitive.entries_ = v;
    out.content = canonicalize(out.primitive.entries_);
    return out;
  }

  static Primitivized<PrimitiveMatrix> mat(const IntMatrix& m) {
    if (!m.square()) throw StructuralError("PGL representative must be square");
    Primitivized<PrimitiveMatrix> out;
    out.primitive.m_ = m;
    auto e = out.primitive.m_.entries();
    out.content = canonicalize(e);
    if (determinant(out.primitive.m_) == 0) throw DomainError("singular matrix is not a point of PGL_n");
    return out;
  }
};

Primitivized<PrimitiveVector> primitivize(const std::vector<mpz_class>& v) { return Primitivizer::vec(v); }
Primitivized<PrimitiveMatrix> primitivize(const IntMatrix& m) { return Primitivizer::mat(m); }
PrimitiveMatrix PrimitiveMatrix::from(const IntMatrix& m) { return Primitivizer::mat(m).primitive; }

mpz_class content(const IntMatrix& m) { return Primitivizer::content_of(m.entries()); }

IntMatrix primitive_form(const RatMatrix& m) {
  mpz_class den = 1;
  for (const auto& x : m.entries()) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), x.get_den_mpz_t());
  IntMatrix z(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      mpq_class scaled = m(i, j) * den;
      z(i, j) = scaled.get_num();
    }
  auto e = z.entries();
  Primitivizer::canonicalize(e);
  return z;
}

namespace {

mpq_class abs_v(const mpq_class& x, const Place& v) {
  if (v.is_infinite()) return abs(x);
  if (x == 0) return 0;
  const std::uint64_t p = v.p();
  std::int64_t val = static_cast<std::int64_t>(p_valuation(x.get_num(), p)) -
                     static_cast<std::int64_t>(p_valuation(x.get_den(), p));
  mpz_class pk;
  mpz_ui_pow_ui(pk.get_mpz_t(), p, static_cast<unsigned long>(std::llabs(val)));
  return val >= 0 ? mpq_class(1, pk) : mpq_class(pk);
}

template <class Range>
mpq_class max_abs_v(const Range& r, const Place& v) {
  mpq_class best = 0;
  bool any = false;
  for (const auto& x : r) {
    if (x != 0) any = true;
    best = std::max(best, abs_v(x, v));
  }
  if (!any) throw DomainError("height of the zero point");
  return best;
}

void add_prime_factors(mpz_class n, std::set<std::uint64_t>& out) {
  n = abs(n);
  for (std::uint64_t d = 2; n > 1; ++d) {
    if (mpz_class(static_cast<unsigned long>(d * d)) > n) {
      if (!n.fits_ulong_p()) throw ResourceGuardError("support_primes: entry too large to factor");
      out.insert(n.get_ui());
      break;
    }
    if (mpz_divisible_ui_p(n.get_mpz_t(), d)) {
      out.insert(d);
      while (mpz_divisible_ui_p(n.get_mpz_t(), d)) mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), d);
    }
    if (d > 10'000'000) throw ResourceGuardError("support_primes: entry too large to factor");
  }
}

}  // namespace

mpq_class local_height(const RatMatrix& m, const Place& v) { return max_abs_v(m.entries(), v); }
mpq_class local_height(const std::vector<mpq_class>& x, const Place& v) { return max_abs_v(x, v); }

HeightValue global_height(const RatMatrix& m) {
  IntMatrix z = primitive_form(m);
  mpz_class best = 0;
  for (const auto& x : z.entries()) best = std::max(best, mpz_class(abs(x)));
  return {mpq_class(best)};
}

HeightValue global_height(const std::vector<mpq_class>& x) {
  RatMatrix row(1, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) row(0, i) = x[i];
  return global_height(row);
}

std::vector<std::uint64_t> support_primes(const RatMatrix& m) {
  std::set<std::uint64_t> ps;
  for (const auto& x : m.entries()) {
    if (x == 0) continue;
    add_prime_factors(x.get_num(), ps);
    add_prime_factors(x.get_den(), ps);
  }
  return {ps.begin(), ps.end()};
}

AdjointImage adjoint_rep(const PrimitiveMatrix& g) {
  if (g.n() != 2) throw StructuralError("adjoint_rep is implemented for PGL_2 only");
  const IntMatrix& m = g.matrix();
  const mpz_class &a = m(0, 0), &b = m(0, 1), &c = m(1, 0), &d = m(1, 1);
  AdjointImage out;
  out.det = a * d - b * c;
  if (out.det == 0) throw DomainError("adjoint_rep: det = 0");
  // g e adj(g) = a^2 e - c^2 f - ac h;  g f adj(g) = -b^2 e + d^2 f + bd h;
  // g h adj(g) = -2ab e + 2cd f + (ad+bc) h.
  out.matrix = IntMatrix(3, 3);
  out.matrix(0, 0) = a * a;
  out.matrix(1, 0) = -c * c;
  out.matrix(2, 0) = -a * c;
  out.matrix(0, 1) = -b * b;
  out.matrix(1, 1) = d * d;
  out.matrix(2, 1) = b * d;
  out.matrix(0, 2) = -2 * a * b;
  out.matrix(1, 2) = 2 * c * d;
  out.matrix(2, 2) = a * d + b * c;
  return out;
}

mpz_class adjoint_height(const PrimitiveMatrix& g) {
  auto img = adjoint_rep(g);
  if (content(img.matrix) != 1) throw InvariantViolation("adjoint image of a primitive matrix lost content 1");
  mpz_class best = 0;
  for (const auto& x : img.matrix.entries()) best = std::max(best, mpz_class(abs(x)));
  return best;
}

std::vector<mpz_class> elementary_divisors(const IntMatrix& in) {
  IntMatrix a = in;
  const std::size_t rows = a.rows(), cols = a.cols();
  const std::size_t n = std::min(rows, cols);
  std::vector<mpz_class> diag;
  auto swap_rows = [&](std::size_t i, std::size_t j) {
    for (std::size_t k = 0; k < cols; ++k) std::swap(a(i, k), a(j, k));
  };
  auto swap_cols = [&](std::size_t i, std::size_t j) {
    for (std::size_t k = 0; k < rows; ++k) std::swap(a(k, i), a(k, j));
  };

  for (std::size_t t = 0; t < n; ++t) {
    for (;;) {
      // Smallest nonzero entry of the trailing block becomes the pivot.
      std::size_t pi = rows, pj = cols;
      for (std::size_t i = t; i < rows; ++i)
        for (std::size_t j = t; j < cols; ++j)
          if (a(i, j) != 0 && (pi == rows || abs(a(i, j)) < abs(a(pi, pj)))) {
            pi = i;
            pj = j;
          }
      if (pi == rows) {
        diag.resize(n, mpz_class(0));
        return diag;
      }
      swap_rows(t, pi);
      swap_cols(t, pj);

      bool clean = true;
      for (std::size_t i = t + 1; i < rows; ++i) {
        if (a(i, t) == 0) continue;
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), a(i, t).get_mpz_t(), a(t, t).get_mpz_t());
        for (std::size_t k = t; k < cols; ++k) a(i, k) -= q * a(t, k);
        if (a(i, t) != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < cols; ++j) {
        if (a(t, j) == 0) continue;
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), a(t, j).get_mpz_t(), a(t, t).get_mpz_t());
        for (std::size_t k = t; k < rows; ++k) a(k, j) -= q * a(k, t);
        if (a(t, j) != 0) clean = false;
      }
      if (!clean) continue;

      // Pivot must divide the trailing block; otherwise fold an offending row in.
      bool divides = true;
      for (std::size_t i = t + 1; i < rows && divides; ++i)
        for (std::size_t j = t + 1; j < cols; ++j)
          if (!mpz_divisible_p(a(i, j).get_mpz_t(), a(t, t).get_mpz_t())) {
            for (std::size_t k = t; k < cols; ++k) a(t, k) += a(i, k);
            divides = false;
            break;
          }
      if (divides) break;
    }
    diag.push_back(abs(a(t, t)));
  }
  return diag;
}

CartanCoordinates smith_exponents(const IntMatrix& m, std::uint64_t p) {
  if (!m.square()) throw StructuralError("smith_exponents: square matrix required");
  bool nonzero = std::any_of(m.entries().begin(), m.entries().end(), [](const mpz_class& x) { return x != 0; });
  if (!nonzero) throw DomainError("smith_exponents: zero matrix");
  CartanCoordinates cc;
  cc.place = Place::prime(p);
  for (const auto& d : elementary_divisors(m)) {
    if (d == 0) throw DomainError("smith_exponents: singular matrix has an infinite exponent");
    cc.exponents.push_back(static_cast<std::int64_t>(p_valuation(d, p)));
  }
  return cc;
}

CartanCoordinates cartan_radial_real(const RatMatrix& m) {
  if (!m.square() || m.rows() == 0) throw StructuralError("cartan_radial_real: square matrix required");
  if (determinant(m) == 0) throw DomainError("cartan_radial_real: singular matrix");
  const auto n = static_cast<Eigen::Index>(m.rows());
  Eigen::MatrixXd x(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) x(i, j) = m(i, j).get_d();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const auto& s = svd.singularValues();
  if (!(s(n - 1) > s(0) * 1e-14 * static_cast<double>(n)))
    throw DomainError("cartan_radial_real: numerically singular input");
  CartanCoordinates cc;
  cc.singular_values.assign(s.data(), s.data() + n);
  return cc;
}

}  // namespace manin::heights
