#include "manin/rootdata.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "manin/errors.hpp"

namespace manin::rootdata {

namespace {

void check_partition(const std::vector<IndexSet>& parts, int rank, const char* what) {
  std::vector<int> seen(rank, 0);
  for (const auto& part : parts) {
    if (part.empty()) throw StructuralError(std::string(what) + ": empty block");
    for (int i : part) {
      if (i < 0 || i >= rank) throw StructuralError(std::string(what) + ": index out of range");
      if (seen[i]++) throw StructuralError(std::string(what) + ": index listed twice");
    }
  }
  for (int i = 0; i < rank; ++i)
    if (!seen[i]) throw StructuralError(std::string(what) + ": index " + std::to_string(i + 1) + " missing");
}

std::vector<IndexSet> sorted_blocks(std::vector<IndexSet> parts) {
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

// Solves A x = rhs exactly; throws StructuralError if A is singular.
std::vector<mpq_class> solve_exact(RatMatrix a, std::vector<mpq_class> rhs) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    while (piv < n && a(piv, k) == 0) ++piv;
    if (piv == n) throw StructuralError("singular Cartan block");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(rhs[k], rhs[piv]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k || a(i, k) == 0) continue;
      mpq_class f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      rhs[i] -= f * rhs[k];
    }
  }
  for (std::size_t k = 0; k < n; ++k) rhs[k] /= a(k, k);
  return rhs;
}

RatMatrix block_transpose(const Matrix<int>& c, const IndexSet& block) {
  RatMatrix t(block.size(), block.size());
  for (std::size_t i = 0; i < block.size(); ++i)
    for (std::size_t j = 0; j < block.size(); ++j) t(i, j) = c(block[j], block[i]);
  return t;
}

// Gram matrix of simple roots (Bourbaki numbering), scaled to be integral.
Matrix<int> simple_gram(char family, int n) {
  Matrix<int> g(n, n, 0);
  auto link = [&](int i, int j, int v) {
    g(i, j) = v;
    g(j, i) = v;
  };
  switch (family) {
    case 'A':
      if (n < 1) break;
      for (int i = 0; i < n; ++i) g(i, i) = 2;
      for (int i = 0; i + 1 < n; ++i) link(i, i + 1, -1);
      return g;
    case 'B':
      if (n < 2) break;
      for (int i = 0; i < n; ++i) g(i, i) = 4;
      g(n - 1, n - 1) = 2;
      for (int i = 0; i + 1 < n; ++i) link(i, i + 1, -2);
      return g;
    case 'C':
      if (n < 2) break;
      for (int i = 0; i < n; ++i) g(i, i) = 2;
      g(n - 1, n - 1) = 4;
      for (int i = 0; i + 2 < n; ++i) link(i, i + 1, -1);
      link(n - 2, n - 1, -2);
      return g;
    case 'D':
      if (n < 4) break;
      for (int i = 0; i < n; ++i) g(i, i) = 2;
      for (int i = 0; i + 2 < n; ++i) link(i, i + 1, -1);
      link(n - 3, n - 1, -1);
      return g;
    case 'E':
      if (n < 6 || n > 8) break;
      for (int i = 0; i < n; ++i) g(i, i) = 2;
      link(0, 2, -1);
      link(1, 3, -1);
      for (int i = 2; i + 1 < n; ++i) link(i, i + 1, -1);
      return g;
    case 'F':
      if (n != 4) break;
      g(0, 0) = g(1, 1) = 4;
      g(2, 2) = g(3, 3) = 2;
      link(0, 1, -2);
      link(1, 2, -2);
      link(2, 3, -1);
      return g;
    case 'G':
      if (n != 2) break;
      g(0, 0) = 2;
      g(1, 1) = 6;
      link(0, 1, -3);
      return g;
    default:
      break;
  }
  throw StructuralError(std::string("unknown simple type ") + family + std::to_string(n));
}

std::vector<int> highest_root_table(char family, int n) {
  std::vector<int> h(n, 1);
  switch (family) {
    case 'A':
      return h;
    case 'B':
      std::fill(h.begin() + 1, h.end(), 2);
      return h;
    case 'C':
      std::fill(h.begin(), h.end() - 1, 2);
      return h;
    case 'D':
      std::fill(h.begin() + 1, h.end() - 2, 2);
      return h;
    case 'E':
      if (n == 6) return {1, 2, 2, 3, 2, 1};
      if (n == 7) return {2, 2, 3, 4, 3, 2, 1};
      return {2, 3, 4, 6, 5, 4, 3, 2};
    case 'F':
      return {2, 3, 4, 2};
    case 'G':
      return {3, 2};
    default:
      throw StructuralError(std::string("unknown simple type ") + family);
  }
}

std::pair<char, int> split_type(const std::string& t) {
  if (t.size() < 2 || !std::isalpha(static_cast<unsigned char>(t[0])))
    throw StructuralError("bad type \"" + t + "\"");
  char family = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
  int n = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) throw StructuralError("bad type \"" + t + "\"");
    n = n * 10 + (t[i] - '0');
  }
  return {family, n};
}

std::vector<std::string> split_product(const std::string& label) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : label) {
    if (ch == 'x' || ch == 'X' || ch == '*') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Matrix<int> simple_cartan(char family, int rank) {
  Matrix<int> g = simple_gram(family, rank);
  Matrix<int> c(rank, rank, 0);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) c(i, j) = 2 * g(i, j) / g(j, j);
  return c;
}

RootSystem::RootSystem(Matrix<int> cartan, std::vector<IndexSet> factors, std::string label)
    : cartan_(std::move(cartan)), factors_(sorted_blocks(std::move(factors))), label_(std::move(label)) {
  if (!cartan_.square() || cartan_.rows() == 0) throw StructuralError("Cartan matrix must be square and nonempty");
  const int n = rank();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j && cartan_(i, j) != 2) throw StructuralError("Cartan diagonal must be 2");
      if (i != j && cartan_(i, j) > 0) throw StructuralError("Cartan off-diagonal entries must be <= 0");
      if (i != j && (cartan_(i, j) == 0) != (cartan_(j, i) == 0))
        throw StructuralError("Cartan zero pattern must be symmetric");
    }
  check_partition(factors_, n, "factor partition");
  std::vector<int> block_of(n);
  for (std::size_t b = 0; b < factors_.size(); ++b)
    for (int i : factors_[b]) block_of[i] = static_cast<int>(b);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (block_of[i] != block_of[j] && cartan_(i, j) != 0)
        throw StructuralError("Cartan entries couple distinct factors");
  for (const auto& block : factors_)
    if (determinant(block_transpose(cartan_, block)) == 0) throw StructuralError("singular Cartan block");
}

RootSystem RootSystem::from_type(const std::string& type) {
  auto parts = split_product(type);
  int total = 0;
  std::vector<std::pair<char, int>> simple;
  for (const auto& p : parts) {
    simple.push_back(split_type(p));
    total += simple.back().second;
  }
  Matrix<int> c(total, total, 0);
  std::vector<IndexSet> factors;
  int offset = 0;
  std::vector<std::string> comps;
  for (auto [family, n] : simple) {
    Matrix<int> block = simple_cartan(family, n);
    IndexSet idx;
    for (int i = 0; i < n; ++i) {
      idx.push_back(offset + i);
      for (int j = 0; j < n; ++j) c(offset + i, offset + j) = block(i, j);
    }
    factors.push_back(idx);
    comps.push_back(std::string(1, family) + std::to_string(n));
    offset += n;
  }
  RootSystem rs(std::move(c), std::move(factors), type);
  rs.component_types_ = std::move(comps);
  return rs;
}

GaloisOrbits::GaloisOrbits(std::vector<IndexSet> orbits, int rank) : orbits_(sorted_blocks(std::move(orbits))) {
  check_partition(orbits_, rank, "Galois orbits");
}

GaloisOrbits GaloisOrbits::trivial(int rank) {
  std::vector<IndexSet> o;
  for (int i = 0; i < rank; ++i) o.push_back({i});
  return GaloisOrbits(std::move(o), rank);
}

std::vector<mpq_class> weight_to_root_basis(const RootSystem& rs, const std::vector<mpq_class>& fund) {
  if (static_cast<int>(fund.size()) != rs.rank())
    throw StructuralError("weight has length " + std::to_string(fund.size()) + ", rank is " +
                          std::to_string(rs.rank()));
  std::vector<mpq_class> m(fund.size());
  for (const auto& block : rs.factors()) {
    std::vector<mpq_class> rhs;
    for (int i : block) rhs.push_back(fund[i]);
    auto sol = solve_exact(block_transpose(rs.cartan(), block), rhs);
    for (std::size_t k = 0; k < block.size(); ++k) m[block[k]] = sol[k];
  }
  return m;
}

WeightVector make_weight(const RootSystem& rs, const std::vector<mpq_class>& fund) {
  return {fund, weight_to_root_basis(rs, fund)};
}

std::vector<std::int64_t> two_rho_coeffs(const RootSystem& rs) {
  std::vector<mpq_class> twos(rs.rank(), mpq_class(2));
  auto u = weight_to_root_basis(rs, twos);
  std::vector<std::int64_t> out;
  for (const auto& x : u) {
    if (x.get_den() != 1) throw StructuralError("2rho has non-integral simple-root coefficient");
    out.push_back(x.get_num().get_si());
  }
  return out;
}

bool is_saturated(const RootSystem& rs, const IndexSet& delta_iota) {
  for (const auto& block : rs.factors()) {
    bool hit = std::any_of(block.begin(), block.end(), [&](int i) {
      return std::find(delta_iota.begin(), delta_iota.end(), i) != delta_iota.end();
    });
    if (!hit) return false;
  }
  return true;
}

ManinInvariants manin_invariants(const RootSystem& rs, const std::vector<mpq_class>& m, const GaloisOrbits& gal) {
  const int n = rs.rank();
  if (static_cast<int>(m.size()) != n) throw StructuralError("weight length does not match rank");
  for (const auto& mi : m)
    if (mi <= 0) throw DomainError("highest weight has non-positive simple-root coefficient " + mi.get_str());

  ManinInvariants inv;
  inv.u = two_rho_coeffs(rs);
  std::vector<mpq_class> ratio(n);
  for (int i = 0; i < n; ++i) ratio[i] = mpq_class(inv.u[i] + 1) / m[i];
  inv.a = *std::max_element(ratio.begin(), ratio.end());
  for (int i = 0; i < n; ++i)
    if (ratio[i] == inv.a) inv.delta_iota.push_back(i);

  std::set<int> delta(inv.delta_iota.begin(), inv.delta_iota.end());
  for (const auto& orbit : gal.orbits()) {
    auto inside = std::count_if(orbit.begin(), orbit.end(), [&](int i) { return delta.count(i) > 0; });
    if (inside == 0) continue;
    if (inside != static_cast<long>(orbit.size()))
      throw DomainError("Galois orbit straddles the critical root set");
    ++inv.b;
  }
  inv.saturated = is_saturated(rs, inv.delta_iota);
  return inv;
}

std::vector<mpq_class> adjoint_highest_weight(const RootSystem& rs) {
  if (rs.component_types().empty())
    throw StructuralError("adjoint highest weight needs a named type; supply weight= explicitly");
  std::vector<mpq_class> m(rs.rank());
  for (std::size_t f = 0; f < rs.factors().size(); ++f) {
    auto [family, n] = split_type(rs.component_types()[f]);
    auto h = highest_root_table(family, n);
    const auto& block = rs.factors()[f];
    for (std::size_t k = 0; k < block.size(); ++k) m[block[k]] = h[k];
  }
  return m;
}

namespace {

std::vector<IndexSet> parse_index_blocks(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("expected nested integer list, got \"" + text + "\"");
  }
  std::vector<IndexSet> out;
  if (!j.is_array()) throw ConfigError("expected nested integer list, got \"" + text + "\"");
  for (const auto& row : j) {
    if (!row.is_array()) throw ConfigError("expected nested integer list, got \"" + text + "\"");
    IndexSet s;
    for (const auto& v : row) {
      if (!v.is_number_integer()) throw ConfigError("non-integer index in \"" + text + "\"");
      s.push_back(v.get<int>() - 1);
    }
    out.push_back(s);
  }
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

RootConfig parse_root_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got \"" + line + "\"");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  std::optional<RootSystem> rs;
  try {
    if (auto t = get("type")) {
      rs.emplace(RootSystem::from_type(*t));
    } else if (auto c = get("cartan")) {
      IntMatrix cz = parse_int_matrix(*c);
      Matrix<int> ci(cz.rows(), cz.cols());
      for (std::size_t i = 0; i < cz.rows(); ++i)
        for (std::size_t j = 0; j < cz.cols(); ++j) ci(i, j) = static_cast<int>(cz(i, j).get_si());
      std::vector<IndexSet> factors;
      if (auto f = get("factors")) {
        factors = parse_index_blocks(*f);
      } else {
        IndexSet all(ci.rows());
        std::iota(all.begin(), all.end(), 0);
        factors.push_back(all);
      }
      rs.emplace(std::move(ci), std::move(factors), get("label") ? *get("label") : std::string("custom"));
    } else {
      throw ConfigError("root config needs type= or cartan=");
    }
  } catch (const StructuralError& e) {
    throw ConfigError(e.what());
  }

  GaloisOrbits gal = GaloisOrbits::trivial(rs->rank());
  if (auto g = get("galois")) {
    try {
      gal = GaloisOrbits(parse_index_blocks(*g), rs->rank());
    } catch (const StructuralError& e) {
      throw ConfigError(e.what());
    }
  }

  std::vector<mpq_class> m;
  auto w = get("weight");
  if (!w || *w == "adjoint") {
    m = adjoint_highest_weight(*rs);
  } else {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(*w);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("weight must be 'adjoint' or a list of fundamental coordinates");
    }
    std::vector<mpq_class> fund;
    for (const auto& v : j) fund.emplace_back(v.is_string() ? v.get<std::string>() : std::to_string(v.get<long>()), 10);
    for (auto& x : fund) x.canonicalize();
    m = weight_to_root_basis(*rs, fund);
  }
  return RootConfig{std::move(*rs), std::move(gal), std::move(m)};
}

}  // namespace manin::rootdata
