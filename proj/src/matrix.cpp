#include "manin/matrix.hpp"

#include <cctype>
#include <sstream>
#include <type_traits>
#include <utility>

namespace manin {

namespace {

// Parses "[[a,b],[c,d]]" into rows of raw token strings.
std::vector<std::vector<std::string>> tokenize_nested(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto expect = [&](char c) {
    skip_ws();
    if (i >= text.size() || text[i] != c)
      throw StructuralError(std::string("matrix parse: expected '") + c + "' in \"" + text + "\"");
    ++i;
  };

  expect('[');
  skip_ws();
  if (i < text.size() && text[i] == ']') {
    ++i;
    return rows;
  }
  for (;;) {
    expect('[');
    std::vector<std::string> row;
    for (;;) {
      skip_ws();
      std::size_t start = i;
      while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '-' ||
                                 text[i] == '+' || text[i] == '/'))
        ++i;
      if (start == i) throw StructuralError("matrix parse: expected number in \"" + text + "\"");
      row.emplace_back(text.substr(start, i - start));
      skip_ws();
      if (i < text.size() && text[i] == ',') {
        ++i;
        continue;
      }
      break;
    }
    expect(']');
    rows.push_back(std::move(row));
    skip_ws();
    if (i < text.size() && text[i] == ',') {
      ++i;
      continue;
    }
    break;
  }
  expect(']');
  skip_ws();
  if (i != text.size()) throw StructuralError("matrix parse: trailing characters in \"" + text + "\"");
  return rows;
}

template <class T>
Matrix<T> build(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return {};
  Matrix<T> m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw StructuralError("matrix parse: ragged rows");
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::string tok = rows[r][c];
      if (!tok.empty() && tok.front() == '+') tok.erase(0, 1);
      try {
        T v(tok, 10);
        if constexpr (std::is_same_v<T, mpq_class>) {
          if (v.get_den() == 0) throw StructuralError("matrix parse: zero denominator");
          v.canonicalize();
        }
        m(r, c) = v;
      } catch (const std::invalid_argument&) {
        throw StructuralError("matrix parse: bad entry \"" + tok + "\"");
      }
    }
  }
  return m;
}

template <class T>
std::string format_impl(const Matrix<T>& m) {
  std::ostringstream os;
  os << '[';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (r) os << ',';
    os << '[';
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << m(r, c).get_str();
    }
    os << ']';
  }
  os << ']';
  return os.str();
}

}  // namespace

RatMatrix to_rational(const IntMatrix& m) {
  RatMatrix q(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) q(i, j) = mpq_class(m(i, j));
  return q;
}

IntMatrix parse_int_matrix(const std::string& text) { return build<mpz_class>(tokenize_nested(text)); }
RatMatrix parse_rat_matrix(const std::string& text) { return build<mpq_class>(tokenize_nested(text)); }
std::string format_matrix(const IntMatrix& m) { return format_impl(m); }
std::string format_matrix(const RatMatrix& m) { return format_impl(m); }

mpz_class determinant(const IntMatrix& in) {
  if (!in.square()) throw StructuralError("determinant of non-square matrix");
  const std::size_t n = in.rows();
  if (n == 0) return 1;
  IntMatrix a = in;
  mpz_class prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a(k, k) == 0) {
      std::size_t swap = k + 1;
      while (swap < n && a(swap, k) == 0) ++swap;
      if (swap == n) return 0;
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(swap, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        mpz_class v = a(i, j) * a(k, k) - a(i, k) * a(k, j);
        mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), prev.get_mpz_t());
        a(i, j) = v;
      }
    }
    prev = a(k, k);
  }
  return sign * a(n - 1, n - 1);
}

mpq_class determinant(const RatMatrix& in) {
  if (!in.square()) throw StructuralError("determinant of non-square matrix");
  RatMatrix a = in;
  const std::size_t n = a.rows();
  mpq_class det = 1;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    while (piv < n && a(piv, k) == 0) ++piv;
    if (piv == n) return 0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a(i, k) == 0) continue;
      mpq_class f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

IntMatrix multiply(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols() != b.rows()) throw StructuralError("matrix product: dimension mismatch");
  IntMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
    }
  return c;
}

}  // namespace manin
