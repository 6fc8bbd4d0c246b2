#pragma once

// Append-only JSON-lines result cache. One record per line:
//   {"digest": <sha256 hex>, "params": <canonical string>, "payload": ...,
//    "created_at": <ISO 8601>, "tool_version": <string>}

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace manin::cli {

std::string sha256_hex(const std::string& data);

struct ResultRecord {
  std::string params_digest;
  std::string params;
  nlohmann::json payload;
  std::string created_at;
  std::string tool_version;
};

std::string tool_version();

// Thrown when the cache contradicts itself (same digest and version, different
// payload) or a record's digest does not match its parameters.
class CacheCorruption : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ResultCache {
 public:
  // Empty path: in-memory only. Unparseable lines are skipped and counted.
  explicit ResultCache(std::string path);

  std::optional<ResultRecord> lookup(const std::string& digest, bool allow_stale = false) const;
  // Appends and flushes one line; serialized across threads.
  void insert(const ResultRecord& rec);

  std::size_t malformed_lines() const noexcept { return malformed_; }
  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  std::string path_;
  // digest -> records in file order (latest version last)
  std::map<std::string, std::vector<ResultRecord>> records_;
  std::size_t malformed_ = 0;
  std::vector<std::string> warnings_;
  mutable std::mutex mu_;
};

ResultRecord make_record(const std::string& canonical_params, nlohmann::json payload);

}  // namespace manin::cli
