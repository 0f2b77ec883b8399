#include "fraclab_cli/manifest.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

#include "fraclab/errors.hpp"

namespace fraclab::cli {

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

}  // namespace

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".fraclab.lock") {
  std::filesystem::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (f == nullptr) {
    path_.clear();
    throw ValidationError("output directory '" + dir.string() + "' is locked by another run (remove " +
                          (dir / ".fraclab.lock").string() + " if stale)");
  }
  std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
  std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
  if (!path_.empty()) {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

RunManifest::RunManifest(std::filesystem::path dir, std::string command, const std::string& config_text,
                         const std::string& experiment_text, bool deterministic, int threads)
    : dir_(std::move(dir)), hash_(fnv1a_hex(experiment_text)), deterministic_(deterministic) {
  std::filesystem::create_directories(dir_);
  std::ofstream(dir_ / "config.txt") << config_text;
  doc_["schema_version"] = kSchemaVersion;
  doc_["manifest_hash"] = hash_;
  doc_["artifact_version"] = kArtifactVersion;
  doc_["command"] = std::move(command);
  doc_["threads"] = threads;
  doc_["deterministic"] = deterministic;
  if (!deterministic) doc_["started"] = utc_now();
  doc_["tolerances"] = nlohmann::ordered_json::object();
  doc_["verdicts"] = nlohmann::ordered_json::object();
  doc_["artifacts"] = nlohmann::ordered_json::array();
}

void RunManifest::write_csv(const std::string& name, const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(dir_ / name);
  if (!out) throw Error("cannot write '" + (dir_ / name).string() + "'");
  out << "# manifest " << hash_ << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
  doc_["artifacts"].push_back(name);
}

void RunManifest::write_json(const std::string& name, nlohmann::ordered_json doc) {
  nlohmann::ordered_json full;
  full["schema_version"] = kSchemaVersion;
  full["manifest_hash"] = hash_;
  for (auto it = doc.begin(); it != doc.end(); ++it) full[it.key()] = it.value();
  std::ofstream out(dir_ / name);
  if (!out) throw Error("cannot write '" + (dir_ / name).string() + "'");
  out << full.dump(2) << "\n";
  doc_["artifacts"].push_back(name);
}

void RunManifest::record_tolerance(const std::string& operation, double tol) { doc_["tolerances"][operation] = tol; }

void RunManifest::record_verdict(const std::string& name, bool passed) { doc_["verdicts"][name] = passed; }

void RunManifest::finish(int exit_code, const std::string& message) {
  doc_["exit_code"] = exit_code;
  if (!message.empty()) doc_["message"] = message;
  if (!deterministic_) doc_["finished"] = utc_now();
  // One manifest per subcommand so runs sharing a directory do not clobber each other.
  std::ofstream(dir_ / ("manifest_" + doc_["command"].get<std::string>() + ".json")) << doc_.dump(2) << "\n";
}

}  // namespace fraclab::cli
