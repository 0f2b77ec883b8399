#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fraclab::cli {

inline constexpr const char* kArtifactVersion = "0.3.0";
inline constexpr int kSchemaVersion = 1;

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

/// Exclusive writer lock on an output directory; released on destruction.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Output directory of one run. Every CSV starts with a "# manifest <hash>" line
/// and every JSON document carries "manifest_hash" and "schema_version".
class RunManifest {
 public:
  /// The hash is taken over `experiment_text`; `config_text` is stored as config.txt.
  /// Timestamps are omitted when `deterministic` is set.
  RunManifest(std::filesystem::path dir, std::string command, const std::string& config_text,
              const std::string& experiment_text, bool deterministic, int threads);

  [[nodiscard]] const std::string& hash() const { return hash_; }
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);
  void write_json(const std::string& name, nlohmann::ordered_json doc);
  void record_tolerance(const std::string& operation, double tol);
  void record_verdict(const std::string& name, bool passed);
  /// Writes manifest_<command>.json with the final status.
  void finish(int exit_code, const std::string& message = "");

 private:
  std::filesystem::path dir_;
  std::string hash_;
  bool deterministic_;
  nlohmann::ordered_json doc_;
};

/// Shortest round-trip decimal form of a double ("nan" and "inf" spelled out).
std::string num(double v);

}  // namespace fraclab::cli
