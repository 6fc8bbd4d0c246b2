#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace manin::cli {

enum class Subcommand { Invariants, Count, Zeta, Fit, MixingProbe, Equidist };

std::string subcommand_name(Subcommand s);
// Throws ConfigError on an unknown name.
Subcommand parse_subcommand(const std::string& name);

struct ExperimentConfig {
  Subcommand subcommand = Subcommand::Invariants;
  std::map<std::string, std::string> parameters;  // exact strings as given
  std::vector<std::uint64_t> grid;
  std::string cache_path;
  int threads = 1;
  std::uint64_t seed = 0;
  // Re-verify one in audit_every cached records (0 disables).
  std::uint64_t audit_every = 0;
  bool allow_stale = false;
};

// Throws ConfigError: grid not strictly increasing, threads < 1, unknown keys.
void validate(const ExperimentConfig& cfg);

// Reads {"subcommand", "parameters", "grid", "threads", "seed", "cache", "audit"}.
ExperimentConfig load_config_file(const std::string& path);

// "3", "6/2", "1.5", "3/2" -> canonical "p/q" (or integer) strings; other text unchanged.
// Comma-separated lists are canonicalized element-wise.
std::string canonical_value(const std::string& v);

// Sorted-key JSON of everything that determines a result (excludes threads,
// cache path and output options).
std::string canonical_params(Subcommand s, const std::map<std::string, std::string>& params);

std::vector<std::uint64_t> parse_u64_list(const std::string& s);
std::vector<std::string> split_list(const std::string& s);

// Parameter lookups with ConfigError on malformed values.
std::string param_or(const std::map<std::string, std::string>& p, const std::string& key, const std::string& dflt);
std::int64_t param_int(const std::map<std::string, std::string>& p, const std::string& key, std::int64_t dflt);
double param_double(const std::map<std::string, std::string>& p, const std::string& key, double dflt);

}  // namespace manin::cli
