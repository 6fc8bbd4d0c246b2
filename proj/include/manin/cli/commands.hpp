#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "manin/cli/cache.hpp"
#include "manin/cli/config.hpp"

namespace manin::cli {

struct RunOutput {
  std::vector<ResultRecord> records;
  std::size_t cache_hits = 0;
  std::size_t computed = 0;
  std::size_t audited = 0;
};

// Executes cfg, consulting and extending the cache. Human-readable tables go to `table`.
RunOutput run(const ExperimentConfig& cfg, ResultCache& cache, std::ostream& table);

// Computes the payload of a single job without touching any cache.
nlohmann::json compute_payload(Subcommand s, const std::map<std::string, std::string>& params);

// Full command line entry point; returns the process exit code.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitResource = 3;
inline constexpr int kExitInvariant = 4;

}  // namespace manin::cli
