#pragma once

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "version.hpp"

namespace nniv {

// Content-addressed result store: one JSON file per record under a cache
// directory, named by the FNV-1a hash of the canonical key serialization. Hits
// verify the stored key field for equality, so hash collisions degrade to
// recomputation rather than wrong answers. Writes go through a temp file and a
// rename to stay atomic under concurrent runs.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  // Resolves the cache directory from --cache-dir or NNI_VALIDITY_CACHE.
  // Returns an inactive cache when neither is set.
  static ResultCache resolve(const std::string& flag_dir) {
    if (!flag_dir.empty()) return ResultCache(flag_dir);
    if (const char* env = std::getenv("NNI_VALIDITY_CACHE"); env && *env)
      return ResultCache(env);
    return ResultCache(std::filesystem::path{});
  }

  bool active() const { return !dir_.empty(); }

  std::optional<nlohmann::json> get(const nlohmann::json& key) const {
    if (!active()) return std::nullopt;
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    nlohmann::json rec = nlohmann::json::parse(in, nullptr, false);
    if (rec.is_discarded() || !rec.contains("key") || !rec.contains("payload"))
      return std::nullopt;
    if (rec["key"] != key) return std::nullopt;
    return rec["payload"];
  }

  void put(const nlohmann::json& key, const nlohmann::json& payload) const {
    if (!active()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    nlohmann::json rec;
    rec["key"] = key;
    rec["payload"] = payload;
    const std::filesystem::path final_path = path_for(key);
    std::filesystem::path tmp = final_path;
    tmp += ".tmp" + std::to_string(static_cast<unsigned long>(::getpid()));
    {
      std::ofstream out(tmp);
      if (!out) return;  // caching is best effort
      out << rec.dump(1) << "\n";
    }
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) std::filesystem::remove(tmp, ec);
  }

  static std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  std::filesystem::path path_for(const nlohmann::json& key) const {
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.json",
                  static_cast<unsigned long long>(fnv1a64(key.dump())));
    return dir_ / name;
  }

 private:
  std::filesystem::path dir_;
};

}
