#include "manin/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <gmpxx.h>

#include "manin/errors.hpp"

namespace manin::cli {

namespace {

const std::map<Subcommand, std::set<std::string>>& allowed_keys() {
  static const std::map<Subcommand, std::set<std::string>> keys{
      {Subcommand::Invariants, {"type", "cartan", "factors", "galois", "weight", "label"}},
      {Subcommand::Count, {"target", "primes", "radius", "max-work", "T"}},
      {Subcommand::Zeta, {"primes", "s", "residue", "cutoff", "samples", "scale"}},
      {Subcommand::Fit, {"target", "a", "b", "radius", "grid"}},
      {Subcommand::MixingProbe, {"prime", "max-exponent", "eps", "m", "pexp", "box"}},
      {Subcommand::Equidist, {"T", "primes", "radius"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<mpq_class> parse_number(const std::string& s) {
  static const std::regex integer(R"([+-]?\d+)");
  static const std::regex ratio(R"([+-]?\d+/\d+)");
  static const std::regex decimal(R"(([+-]?)(\d*)\.(\d+))");
  std::smatch m;
  if (std::regex_match(s, integer) || std::regex_match(s, ratio)) {
    std::string t = s[0] == '+' ? s.substr(1) : s;
    mpq_class q;
    if (q.set_str(t, 10) != 0) return std::nullopt;
    if (q.get_den() == 0) return std::nullopt;
    q.canonicalize();
    return q;
  }
  if (std::regex_match(s, m, decimal)) {
    mpz_class num(m[2].str().empty() ? std::string("0") : m[2].str(), 10);
    mpz_class frac(m[3].str(), 10);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, m[3].str().size());
    mpq_class q(num * scale + frac, scale);
    q.canonicalize();
    if (m[1] == "-") q = -q;
    return q;
  }
  return std::nullopt;
}

}  // namespace

std::string subcommand_name(Subcommand s) {
  switch (s) {
    case Subcommand::Invariants: return "invariants";
    case Subcommand::Count: return "count";
    case Subcommand::Zeta: return "zeta";
    case Subcommand::Fit: return "fit";
    case Subcommand::MixingProbe: return "mixing-probe";
    case Subcommand::Equidist: return "equidist";
  }
  return "?";
}

Subcommand parse_subcommand(const std::string& name) {
  for (auto s : {Subcommand::Invariants, Subcommand::Count, Subcommand::Zeta, Subcommand::Fit,
                 Subcommand::MixingProbe, Subcommand::Equidist})
    if (subcommand_name(s) == name) return s;
  throw ConfigError("unknown subcommand '" + name + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty element in list '" + s + "'");
    out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) {
    auto q = parse_number(item);
    if (!q || q->get_den() != 1 || *q < 0 || !q->get_num().fits_ulong_p())
      throw ConfigError("expected a nonnegative integer, got '" + item + "'");
    out.push_back(q->get_num().get_ui());
  }
  return out;
}

std::string canonical_value(const std::string& raw) {
  std::string v = trim(raw);
  if (v.find('[') != std::string::npos) {
    v.erase(std::remove_if(v.begin(), v.end(), [](unsigned char c) { return std::isspace(c); }), v.end());
    return v;
  }
  if (v.find(',') != std::string::npos) {
    std::string out;
    for (const auto& item : split_list(v)) out += (out.empty() ? "" : ",") + canonical_value(item);
    return out;
  }
  if (auto q = parse_number(v)) return q->get_str();
  return v;
}

std::string canonical_params(Subcommand s, const std::map<std::string, std::string>& params) {
  nlohmann::json j;
  j["subcommand"] = subcommand_name(s);
  nlohmann::json p = nlohmann::json::object();
  for (const auto& [k, v] : params) p[k] = canonical_value(v);
  j["parameters"] = p;
  return j.dump();  // nlohmann objects are key-sorted
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  for (std::size_t i = 1; i < cfg.grid.size(); ++i)
    if (cfg.grid[i] <= cfg.grid[i - 1]) throw ConfigError("grid must be strictly increasing");
  const auto& keys = allowed_keys().at(cfg.subcommand);
  for (const auto& [k, v] : cfg.parameters) {
    if (!keys.count(k)) throw ConfigError("unknown parameter '" + k + "' for " + subcommand_name(cfg.subcommand));
    if (trim(v).empty()) throw ConfigError("empty value for '" + k + "'");
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  try {
    if (!j.contains("subcommand")) throw ConfigError("config needs \"subcommand\"");
    cfg.subcommand = parse_subcommand(j.at("subcommand").get<std::string>());
    if (j.contains("parameters")) {
      for (const auto& [k, v] : j.at("parameters").items())
        cfg.parameters[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    if (j.contains("grid")) {
      for (const auto& t : j.at("grid")) {
        if (!t.is_number_unsigned() && !(t.is_number_integer() && t.get<std::int64_t>() >= 0))
          throw ConfigError("grid entries must be nonnegative integers");
        cfg.grid.push_back(t.get<std::uint64_t>());
      }
    }
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("cache")) cfg.cache_path = j.at("cache").get<std::string>();
    if (j.contains("audit")) cfg.audit_every = j.at("audit").get<std::uint64_t>();
    for (const auto& [k, v] : j.items()) {
      static const std::set<std::string> known{"subcommand", "parameters", "grid", "threads", "seed", "cache", "audit"};
      if (!known.count(k)) throw ConfigError("unknown config field '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string param_or(const std::map<std::string, std::string>& p, const std::string& key, const std::string& dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : trim(it->second);
}

std::int64_t param_int(const std::map<std::string, std::string>& p, const std::string& key, std::int64_t dflt) {
  auto it = p.find(key);
  if (it == p.end()) return dflt;
  auto q = parse_number(trim(it->second));
  if (!q || q->get_den() != 1 || !q->get_num().fits_slong_p())
    throw ConfigError("parameter '" + key + "' must be an integer, got '" + it->second + "'");
  return q->get_num().get_si();
}

double param_double(const std::map<std::string, std::string>& p, const std::string& key, double dflt) {
  auto it = p.find(key);
  if (it == p.end()) return dflt;
  auto q = parse_number(trim(it->second));
  if (!q) throw ConfigError("parameter '" + key + "' must be numeric, got '" + it->second + "'");
  // rounded, not truncated as by get_d
  if (abs(q->get_num()) < (mpz_class(1) << 53) && q->get_den() < (mpz_class(1) << 53))
    return q->get_num().get_d() / q->get_den().get_d();
  return q->get_d();
}

}  // namespace manin::cli
