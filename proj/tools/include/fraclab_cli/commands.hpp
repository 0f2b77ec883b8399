#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "fraclab/errors.hpp"
#include "fraclab/homog.hpp"
#include "fraclab_cli/config.hpp"

namespace fraclab::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kValidation = 2,
  kSolver = 3,
  kMissingUpstream = 4,
  kPropertyFailure = 5,
};

/// A required artifact of an earlier subcommand is absent.
class MissingUpstream : public Error {
 public:
  using Error::Error;
};

struct RunOptions {
  std::string config_path;              ///< empty: built-in defaults
  std::optional<std::string> out_dir;   ///< overrides output.dir
  std::optional<std::uint64_t> seed;    ///< overrides seed
  int threads = 1;
  bool deterministic = false;
};

/// Runs one subcommand (solve, homogenize, gamma, verify, benchmark) and returns its exit code.
/// Progress goes to `log`, error messages to `err`.
int run_command(const std::string& command, const RunOptions& options, std::ostream& log, std::ostream& err);

/// Reads an effective-kernel CSV (x, y, a_0, mask) back into a table. The manifest
/// hash found in the header line is stored in `manifest` when given.
EffectiveKernel read_effective_kernel(const std::string& path, std::string* manifest = nullptr);

}  // namespace fraclab::cli
