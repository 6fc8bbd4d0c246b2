#include "manin/cli/commands.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "manin/enumeration.hpp"
#include "manin/errors.hpp"
#include "manin/heights.hpp"
#include "manin/mixing.hpp"
#include "manin/rootdata.hpp"
#include "manin/simd/kernels.hpp"
#include "manin/zeta.hpp"

namespace manin::cli {

using nlohmann::json;
using Params = std::map<std::string, std::string>;

namespace {

std::string join(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (auto x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

std::string hp_str(const zeta::HighPrecision& x) { return x.str(20); }

// Correctly rounded for small numerators and denominators (mpq get_d truncates).
double to_double(const mpq_class& q) {
  if (abs(q.get_num()) < (mpz_class(1) << 53) && q.get_den() < (mpz_class(1) << 53))
    return q.get_num().get_d() / q.get_den().get_d();
  return q.get_d();
}

// ---- targets ----

struct ParsedTarget {
  enumeration::Target target;
  std::string name;
};

ParsedTarget parse_target(const std::string& s) {
  if (s == "pgl2-adjoint") return {enumeration::Pgl2Adjoint{}, s};
  auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "projective" && !rest.empty()) {
    auto v = parse_u64_list(rest);
    if (v.size() != 1 || v[0] < 1 || v[0] > 4) throw ConfigError("projective:n needs 1 <= n <= 4");
    return {enumeration::Projective{static_cast<int>(v[0])}, s};
  }
  if (head == "product" && !rest.empty()) {
    auto v = parse_u64_list(rest);
    if (v.size() != 2 || v[0] < 1 || v[1] < 1 || v[0] > 8 || v[1] > 8)
      throw ConfigError("product:w1,w2 needs weights in [1, 8]");
    return {enumeration::ProductPgl2{static_cast<int>(v[0]), static_cast<int>(v[1])}, s};
  }
  throw ConfigError("unknown target '" + s + "' (projective:n, pgl2-adjoint, product:w1,w2)");
}

enumeration::EnumerationOptions enum_options(const Params& p) {
  enumeration::EnumerationOptions o;
  if (p.count("radius")) {
    const auto r = param_int(p, "radius", 0);
    if (r < 1 || r > simd::kMaxEntryBound) throw ConfigError("radius out of range");
    o.radius = static_cast<std::int32_t>(r);
  }
  if (p.count("max-work")) {
    const auto w = param_int(p, "max-work", 0);
    if (w < 1) throw ConfigError("max-work must be positive");
    o.max_work = static_cast<std::uint64_t>(w);
  }
  return o;
}

std::vector<std::uint64_t> tracked_primes(const Params& p) {
  auto v = parse_u64_list(param_or(p, "primes", "2,3"));
  for (auto q : v)
    if (!heights::is_prime(q)) throw ConfigError(std::to_string(q) + " is not prime");
  return v;
}

std::uint64_t threshold(const Params& p) {
  const auto T = param_int(p, "T", -1);
  if (T < 1) throw ConfigError("threshold T >= 1 required (--T or --grid)");
  return static_cast<std::uint64_t>(T);
}

// ---- payloads ----

json invariants_payload(const Params& p) {
  std::string text;
  for (const char* k : {"type", "cartan", "factors", "galois", "weight", "label"})
    if (p.count(k)) text += std::string(k) + "=" + p.at(k) + "\n";
  auto cfg = rootdata::parse_root_config(text);
  auto mi = rootdata::manin_invariants(cfg.system, cfg.weight_root_coords, cfg.galois);
  json j;
  j["label"] = cfg.system.label();
  j["rank"] = cfg.system.rank();
  j["u"] = mi.u;
  json m = json::array();
  for (const auto& x : cfg.weight_root_coords) m.push_back(x.get_str());
  j["m"] = m;
  j["a"] = mi.a.get_str();
  j["b"] = mi.b;
  json d = json::array();
  for (int i : mi.delta_iota) d.push_back(i + 1);
  j["delta"] = d;
  j["saturated"] = mi.saturated;
  return j;
}

json count_payload(const Params& p) {
  const auto tgt = parse_target(param_or(p, "target", "pgl2-adjoint"));
  const std::uint64_t T = threshold(p);
  auto opts = enum_options(p);
  json j;
  j["target"] = tgt.name;
  j["T"] = T;
  if (auto* pr = std::get_if<enumeration::Projective>(&tgt.target)) {
    auto s = enumeration::count_projective(pr->n, T, opts);
    j["N"] = s.total;
    j["spectrum_digest"] = enumeration::spectrum_digest(s);
  } else if (std::holds_alternative<enumeration::Pgl2Adjoint>(tgt.target)) {
    auto primes = tracked_primes(p);
    auto r = enumeration::count_pgl2_adjoint(T, primes, opts);
    j["N"] = r.spectrum.total;
    j["spectrum_digest"] = enumeration::spectrum_digest(r.spectrum);
    json h = json::object();
    for (const auto& hist : r.histograms) {
      json f = json::object();
      for (const auto& [k, c] : hist.freq) f[std::to_string(k)] = c;
      h[std::to_string(hist.p)] = f;
    }
    j["cartan_histograms"] = h;
  } else {
    const auto& w = std::get<enumeration::ProductPgl2>(tgt.target);
    const int wmin = std::min(w.w1, w.w2);
    const std::uint64_t need = T > 1 ? enumeration::iroot(T - 1, wmin) + 1 : 1;
    auto single = enumeration::count_pgl2_adjoint(std::max<std::uint64_t>(need, 2), {}, opts);
    j["N"] = enumeration::convolve_counts(single.spectrum, single.spectrum, w.w1, w.w2, T);
    j["factor_bound"] = single.spectrum.bound;
  }
  return j;
}

std::pair<mpq_class, int> default_exponents(const enumeration::Target& t) {
  if (auto* pr = std::get_if<enumeration::Projective>(&t)) return {mpq_class(pr->n + 1), 1};
  if (std::holds_alternative<enumeration::Pgl2Adjoint>(t)) {
    auto rs = rootdata::RootSystem::from_type("A1");
    auto mi = rootdata::manin_invariants(rs, rootdata::adjoint_highest_weight(rs), rootdata::GaloisOrbits::trivial(1));
    return {mi.a, mi.b};
  }
  const auto& w = std::get<enumeration::ProductPgl2>(t);
  auto rs = rootdata::RootSystem::from_type("A1xA1");
  auto mi = rootdata::manin_invariants(rs, {mpq_class(w.w1), mpq_class(w.w2)}, rootdata::GaloisOrbits::trivial(2));
  return {mi.a, mi.b};
}

using CountFn = std::function<std::uint64_t(const Params& count_params)>;

json fit_payload(const Params& p, const CountFn& count) {
  const std::string target = param_or(p, "target", "pgl2-adjoint");
  const auto tgt = parse_target(target);
  const auto grid = parse_u64_list(param_or(p, "grid", ""));
  auto [a_default, b_default] = default_exponents(tgt.target);
  mpq_class a = a_default;
  if (p.count("a")) {
    a = mpq_class(canonical_value(p.at("a")), 10);
    a.canonicalize();
  }
  const int b = static_cast<int>(param_int(p, "b", b_default));
  std::vector<std::pair<double, double>> pts;
  for (auto T : grid) {
    Params cp{{"target", target}, {"T", std::to_string(T)}};
    if (p.count("radius")) cp["radius"] = p.at("radius");
    pts.emplace_back(static_cast<double>(T), static_cast<double>(count(cp)));
  }
  auto f = zeta::tauberian_fit(pts, to_double(a), b);
  json j;
  j["target"] = target;
  j["a"] = a.get_str();
  j["b_input"] = f.b_input;
  j["a_hat"] = f.a_hat;
  j["c_hat"] = f.c_hat;
  j["d_hat"] = f.d_hat;
  j["residuals"] = f.residuals;
  json g = json::array();
  for (auto& [T, N] : f.grid) g.push_back({T, N});
  j["grid"] = g;
  return j;
}

json zeta_payload(const Params& p) {
  auto primes = parse_u64_list(param_or(p, "primes", "2,3,5"));
  auto svals = split_list(param_or(p, "s", "2"));
  json recs = json::array();
  for (auto q : primes) {
    if (!heights::is_prime(q)) throw ConfigError(std::to_string(q) + " is not prime");
    auto f = zeta::local_factor_pgl2_adjoint(q);
    json r;
    r["p"] = q;
    r["rational_function"] = f.to_string();
    json vals = json::object();
    for (const auto& sraw : svals) {
      const std::string s = canonical_value(sraw);
      mpq_class sq(s, 10);
      sq.canonicalize();
      if (sq <= 1) throw DomainError("local factor needs s > 1");
      if (sq.get_den() == 1 && sq.get_num().fits_sint_p())
        vals[s] = f.evaluate_at(static_cast<int>(sq.get_num().get_si())).get_str();
      else
        vals[s] = f.evaluate(to_double(sq));
    }
    r["value_at"] = vals;
    recs.push_back(r);
  }
  json j;
  j["local_factors"] = recs;
  if (param_or(p, "residue", "false") == "true") {
    const auto cutoff = param_int(p, "cutoff", 10000);
    if (cutoff < 3 || cutoff > 100'000'000) throw ConfigError("cutoff out of range");
    std::vector<double> samples;
    for (const auto& x : split_list(param_or(p, "samples", "2.2,2.1,2.05,2.025,2.0125"))) {
      auto v = canonical_value(x);
      mpq_class q(v, 10);
      q.canonicalize();
      samples.push_back(to_double(q));
    }
    heights::MeasureConvention conv;
    conv.archimedean_scale = param_double(p, "scale", 1.0);
    auto r = zeta::residue_estimate(static_cast<std::uint64_t>(cutoff), samples, conv);
    json jr;
    jr["cutoff"] = cutoff;
    jr["archimedean_scale"] = conv.archimedean_scale;
    jr["value"] = hp_str(r.value);
    jr["error"] = r.error;
    jr["tail_bound"] = r.tail_bound;
    jr["converged"] = r.converged;
    jr["predicted_c"] = static_cast<double>(r.value) / 2.0;
    if (!r.diagnostic.empty()) jr["diagnostic"] = r.diagnostic;
    j["residue"] = jr;
  }
  return j;
}

json mixing_payload(const Params& p) {
  const auto q = static_cast<std::uint64_t>(param_int(p, "prime", 2));
  if (!heights::is_prime(q)) throw ConfigError(std::to_string(q) + " is not prime");
  const auto kmax = param_int(p, "max-exponent", 20);
  if (kmax < 1 || kmax > 60) throw ConfigError("max-exponent must be in [1, 60]");
  const double eps = param_double(p, "eps", 0.1);
  const auto m = param_int(p, "m", 4);
  const auto box = param_int(p, "box", 10);
  std::vector<double> pexps;
  for (const auto& x : split_list(param_or(p, "pexp", "2,2.5,3"))) {
    mpq_class v(canonical_value(x), 10);
    v.canonicalize();
    pexps.push_back(to_double(v));
  }
  if (m < 1) throw ConfigError("m must be positive");

  json table = json::array();
  for (std::int64_t n = 0; n <= kmax; ++n) {
    json row;
    row["n"] = n;
    row["xi"] = mixing::xi_padic(q, n);
    row["eta"] = std::pow(static_cast<double>(q), static_cast<double>(n));
    row["xi_over_eta_pow"] = mixing::xi_padic_normalized(q, n).get_str();
    if (n >= 1) row["hecke_residual"] = mixing::hecke_residual(q, n);
    table.push_back(row);
  }
  auto diag = mixing::verify_bounds(mixing::diagonal_family(q, static_cast<int>(kmax)), eps, static_cast<int>(m), q, pexps);
  auto sample = mixing::box_sample(static_cast<int>(box));
  auto full = mixing::verify_bounds(sample, eps, static_cast<int>(m), q, {});
  auto report = [](const mixing::BoundsReport& r) {
    json j;
    j["sample_size"] = r.sample_size;
    j["lower_violations"] = r.lower_violations;
    j["min_lower_margin"] = r.min_lower_margin;
    j["c_eps"] = r.c_eps;
    j["c_height"] = r.c_height;
    return j;
  };
  json lp = json::array();
  for (const auto& probe : diag.lp) {
    json l;
    l["pexp"] = probe.pexp;
    json ps = json::array();
    for (auto& [K, s] : probe.partial_sums) ps.push_back({K, s});
    l["partial_sums"] = ps;
    l["divergent_trend"] = probe.increments_nondecreasing;
    l["stable"] = probe.stable;
    lp.push_back(l);
  }
  json j;
  j["prime"] = q;
  j["eps"] = eps;
  j["m"] = m;
  j["padic_table"] = table;
  j["diagonal_family"] = report(diag);
  j["box"] = report(full);
  j["box"]["bound"] = box;
  j["lp_probe"] = lp;
  return j;
}

json equidist_payload(const Params& p) {
  const std::uint64_t T = threshold(p);
  auto primes = tracked_primes(p);
  auto r = enumeration::count_pgl2_adjoint(T, primes, enum_options(p));
  json j;
  j["T"] = T;
  j["N"] = r.spectrum.total;
  json per = json::array();
  for (const auto& hist : r.histograms) {
    auto freq = enumeration::cartan_statistics(hist);
    json rows = json::array();
    double worst = 0;
    for (const auto& [k, f] : freq) {
      const mpq_class model = zeta::cartan_cell_probability(hist.p, k, 2);
      rows.push_back({{"k", k},
                      {"count", hist.freq.at(k)},
                      {"empirical", f},
                      {"model", model.get_str()},
                      {"model_value", to_double(model)}});
      worst = std::max(worst, std::abs(f - to_double(model)));
    }
    per.push_back({{"p", hist.p}, {"cells", rows}, {"max_deviation", worst}});
  }
  j["primes"] = per;
  return j;
}

// ---- jobs ----

std::vector<Params> jobs_for(const ExperimentConfig& cfg) {
  const auto& p = cfg.parameters;
  switch (cfg.subcommand) {
    case Subcommand::Count:
    case Subcommand::Equidist: {
      if (cfg.grid.empty()) {
        threshold(p);
        return {p};
      }
      if (p.count("T")) throw ConfigError("give either --T or --grid, not both");
      std::vector<Params> out;
      for (auto T : cfg.grid) {
        Params q = p;
        q["T"] = std::to_string(T);
        out.push_back(q);
      }
      return out;
    }
    case Subcommand::Fit: {
      Params q = p;
      if (!cfg.grid.empty()) q["grid"] = join(cfg.grid);
      if (!q.count("grid")) throw ConfigError("fit needs --grid");
      return {q};
    }
    default:
      return {p};
  }
}

// Spells out defaults that change the payload, so equivalent jobs share a digest.
Params with_defaults(Subcommand s, Params p) {
  if (s == Subcommand::Count || s == Subcommand::Fit) p.emplace("target", "pgl2-adjoint");
  if ((s == Subcommand::Count && p.at("target") == "pgl2-adjoint") || s == Subcommand::Equidist)
    p.emplace("primes", "2,3");
  return p;
}

std::uint64_t audit_hash(const std::string& digest, std::uint64_t seed) {
  return std::stoull(digest.substr(0, 15), nullptr, 16) ^ (seed * 0x9E3779B97F4A7C15ull);
}

struct Executor {
  const ExperimentConfig& cfg;
  ResultCache& cache;
  RunOutput& out;

  ResultRecord get(Subcommand s, const Params& given) {
    const Params p = with_defaults(s, given);
    const std::string canon = canonical_params(s, p);
    const std::string digest = sha256_hex(canon);
    if (auto hit = cache.lookup(digest, cfg.allow_stale)) {
      ++out.cache_hits;
      if (cfg.audit_every > 0 && audit_hash(digest, cfg.seed) % cfg.audit_every == 0) {
        ++out.audited;
        if (compute(s, p) != hit->payload)
          throw InvariantViolation("cache audit: recomputed payload differs for digest " + digest.substr(0, 12));
      }
      return *hit;
    }
    auto rec = make_record(canon, compute(s, p));
    cache.insert(rec);
    ++out.computed;
    return rec;
  }

  json compute(Subcommand s, const Params& p) {
    if (s == Subcommand::Fit)
      return fit_payload(p, [this](const Params& cp) {
        return get(Subcommand::Count, cp).payload.at("N").get<std::uint64_t>();
      });
    return compute_payload(s, p);
  }
};

// ---- output ----

void print_table(Subcommand s, const std::vector<ResultRecord>& recs, std::ostream& os) {
  auto line = [&](const std::string& k, const std::string& v) { os << "  " << std::left << std::setw(18) << k << v << "\n"; };
  switch (s) {
    case Subcommand::Invariants:
      for (const auto& r : recs) {
        const auto& j = r.payload;
        os << "root system " << j["label"].get<std::string>() << "\n";
        line("u (2rho)", j["u"].dump());
        line("m (weight)", j["m"].dump());
        line("a", j["a"].get<std::string>());
        line("b", std::to_string(j["b"].get<int>()));
        line("delta", j["delta"].dump());
        line("saturated", j["saturated"].get<bool>() ? "yes" : "no");
      }
      break;
    case Subcommand::Count:
      os << std::left << std::setw(16) << "target" << std::setw(12) << "T" << std::setw(16) << "N" << "N/T^2\n";
      for (const auto& r : recs) {
        const auto& j = r.payload;
        const double T = j["T"].get<double>();
        os << std::setw(16) << j["target"].get<std::string>() << std::setw(12) << j["T"].get<std::uint64_t>()
           << std::setw(16) << j["N"].get<std::uint64_t>() << std::setprecision(8) << j["N"].get<double>() / (T * T)
           << "\n";
      }
      break;
    case Subcommand::Zeta:
      for (const auto& r : recs) {
        for (const auto& f : r.payload["local_factors"]) {
          os << "Z_" << f["p"].get<std::uint64_t>() << "(s) = " << f["rational_function"].get<std::string>()
             << ", t = p^-s\n";
          for (const auto& [s_, v] : f["value_at"].items()) line("  at s=" + s_, v.is_string() ? v.get<std::string>() : v.dump());
        }
        if (r.payload.contains("residue")) {
          const auto& x = r.payload["residue"];
          line("residue", x["value"].get<std::string>() + " +- " + x["error"].dump());
          line("converged", x["converged"].get<bool>() ? "yes" : "no");
          line("residue / a", x["predicted_c"].dump());
        }
      }
      break;
    case Subcommand::Fit:
      for (const auto& r : recs) {
        const auto& j = r.payload;
        line("target", j["target"].get<std::string>());
        line("a (model)", j["a"].get<std::string>());
        line("b (model)", std::to_string(j["b_input"].get<int>()));
        line("a_hat", j["a_hat"].dump());
        line("c_hat", j["c_hat"].dump());
        line("d_hat", j["d_hat"].dump());
      }
      break;
    case Subcommand::MixingProbe:
      for (const auto& r : recs) {
        const auto& j = r.payload;
        os << std::left << std::setw(6) << "n" << std::setw(24) << "xi_p(n)" << "hecke residual\n";
        for (const auto& row : j["padic_table"])
          os << std::setw(6) << row["n"].get<int>() << std::setw(24) << std::setprecision(15) << row["xi"].get<double>()
             << (row.contains("hecke_residual") ? row["hecke_residual"].dump() : "-") << "\n";
        line("diag C_eps", j["diagonal_family"]["c_eps"].dump());
        line("box size", j["box"]["sample_size"].dump());
        line("box violations", j["box"]["lower_violations"].dump());
        line("box C_eps", j["box"]["c_eps"].dump());
        line("box C (H^-1/m)", j["box"]["c_height"].dump());
        for (const auto& l : j["lp_probe"])
          line("L^p p=" + l["pexp"].dump(), std::string(l["stable"].get<bool>() ? "stable" : "not stable") +
                                                (l["divergent_trend"].get<bool>() ? ", divergent trend" : ""));
      }
      break;
    case Subcommand::Equidist:
      for (const auto& r : recs) {
        os << "T=" << r.payload["T"].get<std::uint64_t>() << " N=" << r.payload["N"].get<std::uint64_t>() << "\n";
        for (const auto& pr : r.payload["primes"]) {
          os << "  p=" << pr["p"].get<std::uint64_t>() << "\n";
          for (const auto& c : pr["cells"])
            if (c["k"].get<int>() <= 4)
              os << "    k=" << c["k"].get<int>() << "  empirical " << std::setprecision(6) << c["empirical"].get<double>()
                 << "  model " << c["model"].get<std::string>() << "\n";
          os << "    max deviation " << pr["max_deviation"].get<double>() << "\n";
        }
      }
      break;
  }
}

void write_csv(const std::string& path, const std::vector<ResultRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write csv " + path);
  std::vector<std::string> cols;
  for (const auto& r : recs)
    for (const auto& [k, v] : r.payload.items())
      if (v.is_primitive() && std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  out << "digest";
  for (const auto& c : cols) out << "," << c;
  out << "\n";
  for (const auto& r : recs) {
    out << r.params_digest;
    for (const auto& c : cols) {
      out << ",";
      if (r.payload.contains(c)) {
        const auto& v = r.payload[c];
        out << (v.is_string() ? v.get<std::string>() : v.dump());
      }
    }
    out << "\n";
  }
}

}  // namespace

json compute_payload(Subcommand s, const Params& p) {
  switch (s) {
    case Subcommand::Invariants: return invariants_payload(p);
    case Subcommand::Count: return count_payload(p);
    case Subcommand::Zeta: return zeta_payload(p);
    case Subcommand::Fit:
      return fit_payload(p, [](const Params& cp) { return count_payload(cp).at("N").get<std::uint64_t>(); });
    case Subcommand::MixingProbe: return mixing_payload(p);
    case Subcommand::Equidist: return equidist_payload(p);
  }
  throw InvariantViolation("unhandled subcommand");
}

RunOutput run(const ExperimentConfig& cfg, ResultCache& cache, std::ostream& table) {
  validate(cfg);
  omp_set_num_threads(cfg.threads);
  RunOutput out;
  Executor ex{cfg, cache, out};
  for (const auto& job : jobs_for(cfg)) out.records.push_back(ex.get(cfg.subcommand, job));
  print_table(cfg.subcommand, out.records, table);
  return out;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rational points of bounded height: invariants, counts, zeta factors, decay functions"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, cache_path, csv_path, grid_str;
  int threads = 0;
  std::uint64_t seed = 0, audit = 0;
  bool as_json = false, allow_stale = false;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--threads", threads, "worker threads (default: all)");
  app.add_option("--cache", cache_path, "JSON-lines result cache");
  app.add_flag("--json", as_json, "print payloads as JSON lines");
  app.add_option("--csv", csv_path, "write scalar payload fields as CSV");
  app.add_flag("--allow-stale", allow_stale, "accept cached records from other tool versions");
  app.add_option("--audit", audit, "recompute one in N cache hits");
  app.add_option("--seed", seed, "seed for audit selection");
  app.add_option("--grid", grid_str, "comma-separated thresholds");
  app.set_version_flag("--version", tool_version());

  Params given;
  auto param = [&given](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&given, key](const std::string& v) { given[key] = v; }, help);
  };
  auto* inv = app.add_subcommand("invariants", "a, b, critical roots and saturation from root data");
  param(inv, "--type", "type", "named type, e.g. A3 or A1xA1");
  param(inv, "--cartan", "cartan", "Cartan matrix [[2,-1],[-1,2]]");
  param(inv, "--factors", "factors", "simple factors as 1-based index lists");
  param(inv, "--galois", "galois", "Galois orbits as 1-based index lists");
  param(inv, "--weight", "weight", "'adjoint' or fundamental coordinates");
  param(inv, "--label", "label", "name for a custom Cartan matrix");
  auto* cnt = app.add_subcommand("count", "exact point counts below T");
  param(cnt, "--target", "target", "projective:n | pgl2-adjoint | product:w1,w2");
  param(cnt, "--primes", "primes", "primes for Cartan statistics");
  param(cnt, "--radius", "radius", "entry radius override");
  param(cnt, "--max-work", "max-work", "iteration guard");
  param(cnt, "--T", "T", "single threshold");
  auto* zt = app.add_subcommand("zeta", "local height zeta factors and the residue at s=2");
  param(zt, "--primes", "primes", "primes");
  param(zt, "--s", "s", "evaluation points");
  param(zt, "--residue", "residue", "true to extrapolate the residue");
  param(zt, "--cutoff", "cutoff", "Euler product cutoff");
  param(zt, "--samples", "samples", "s values decreasing to 2");
  param(zt, "--scale", "scale", "archimedean scale");
  auto* ft = app.add_subcommand("fit", "Tauberian fit of counts on a grid");
  param(ft, "--target", "target", "count target");
  param(ft, "--a", "a", "exponent (default from root data)");
  param(ft, "--b", "b", "log power (default from root data)");
  param(ft, "--radius", "radius", "entry radius override");
  auto* mx = app.add_subcommand("mixing-probe", "spherical functions and decay bounds");
  param(mx, "--prime", "prime", "prime for the p-adic table and L^p probe");
  param(mx, "--max-exponent", "max-exponent", "largest Cartan exponent");
  param(mx, "--eps", "eps", "epsilon of the upper bound");
  param(mx, "--m", "m", "height exponent 1/m");
  param(mx, "--pexp", "pexp", "L^p exponents");
  param(mx, "--box", "box", "entry bound of the exhaustive sample");
  auto* eq = app.add_subcommand("equidist", "Cartan cell frequencies against the local model");
  param(eq, "--T", "T", "threshold");
  param(eq, "--primes", "primes", "primes");
  param(eq, "--radius", "radius", "entry radius override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    ExperimentConfig cfg;
    bool have_sub = false;
    if (!config_path.empty()) {
      cfg = load_config_file(config_path);
      have_sub = true;
    }
    if (!app.get_subcommands().empty()) {
      const auto sub = parse_subcommand(app.get_subcommands().front()->get_name());
      if (have_sub && sub != cfg.subcommand) throw ConfigError("subcommand differs from the config file");
      cfg.subcommand = sub;
      have_sub = true;
    }
    if (!have_sub) throw ConfigError("no subcommand (give one or --config)");
    for (const auto& [k, v] : given) cfg.parameters[k] = v;
    if (!grid_str.empty()) cfg.grid = parse_u64_list(grid_str);
    if (!cache_path.empty()) cfg.cache_path = cache_path;
    if (threads != 0) cfg.threads = threads;
    else if (config_path.empty()) cfg.threads = omp_get_max_threads();
    if (audit) cfg.audit_every = audit;
    if (seed) cfg.seed = seed;
    cfg.allow_stale = allow_stale;
    validate(cfg);

    ResultCache cache(cfg.cache_path);
    for (const auto& w : cache.warnings()) err << "warning: " << w << "\n";
    if (cache.malformed_lines()) err << "warning: " << cache.malformed_lines() << " malformed cache line(s) skipped\n";

    std::ostringstream table;
    auto res = run(cfg, cache, table);
    if (as_json) {
      for (const auto& r : res.records) out << r.payload.dump() << "\n";
    } else {
      out << table.str();
    }
    if (!csv_path.empty()) write_csv(csv_path, res.records);
    err << "records: " << res.records.size() << " (cached " << res.cache_hits << ", computed " << res.computed
        << ", audited " << res.audited << ")\n";
    return kExitOk;
  } catch (const CacheCorruption& e) {
    err << "error: cache corrupt, refusing to proceed: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StructuralError& e) {
    err << "error: invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ResourceGuardError& e) {
    err << "error: resource guard: " << e.what() << "\n";
    return kExitResource;
  } catch (const InvariantViolation& e) {
    err << "error: internal invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kExitInvariant;
  }
}

}  // namespace manin::cli
