#include "manin/cli/cache.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>

#include "manin/errors.hpp"

#ifndef MANIN_VERSION
#define MANIN_VERSION "0.0.0"
#endif

namespace manin::cli {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw InvariantViolation("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string tool_version() { return MANIN_VERSION; }

ResultRecord make_record(const std::string& canonical_params, nlohmann::json payload) {
  ResultRecord r;
  r.params = canonical_params;
  r.params_digest = sha256_hex(canonical_params);
  r.payload = std::move(payload);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  r.created_at = buf;
  r.tool_version = tool_version();
  return r;
}

ResultCache::ResultCache(std::string path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  if (!in) return;  // created on first insert
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ResultRecord r;
    try {
      auto j = nlohmann::json::parse(line);
      r.params_digest = j.at("digest").get<std::string>();
      r.params = j.at("params").get<std::string>();
      r.payload = j.at("payload");
      r.created_at = j.at("created_at").get<std::string>();
      r.tool_version = j.at("tool_version").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      ++malformed_;
      warnings_.push_back(path_ + ":" + std::to_string(lineno) + ": skipped malformed record (" + e.what() + ")");
      continue;
    }
    if (sha256_hex(r.params) != r.params_digest)
      throw CacheCorruption(path_ + ":" + std::to_string(lineno) + ": digest does not match its parameters");
    auto& bucket = records_[r.params_digest];
    for (const auto& prev : bucket)
      if (prev.tool_version == r.tool_version && prev.payload != r.payload)
        throw CacheCorruption(path_ + ":" + std::to_string(lineno) + ": conflicting payloads for digest " +
                              r.params_digest.substr(0, 12));
    bucket.push_back(std::move(r));
  }
}

std::optional<ResultRecord> ResultCache::lookup(const std::string& digest, bool allow_stale) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(digest);
  if (it == records_.end()) return std::nullopt;
  const auto& bucket = it->second;
  for (auto r = bucket.rbegin(); r != bucket.rend(); ++r)
    if (r->tool_version == tool_version()) return *r;
  if (allow_stale && !bucket.empty()) return bucket.back();
  return std::nullopt;
}

void ResultCache::insert(const ResultRecord& rec) {
  std::lock_guard lock(mu_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to cache " + path_);
    nlohmann::json j{{"digest", rec.params_digest},
                     {"params", rec.params},
                     {"payload", rec.payload},
                     {"created_at", rec.created_at},
                     {"tool_version", rec.tool_version}};
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw ConfigError("write to cache " + path_ + " failed");
  }
  records_[rec.params_digest].push_back(rec);
}

}  // namespace manin::cli
