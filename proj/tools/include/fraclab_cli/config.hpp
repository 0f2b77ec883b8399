#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fraclab/fraclab.hpp"

namespace fraclab::cli {

/// Everything a run needs; read from and written to a key = value text file.
struct ExperimentConfig {
  // domain
  double L = 1.0;
  double R = 4.0;
  int M = 256;
  int depth = 8;
  // fractional order
  double s = 0.5;
  double p = 2.0;
  double normalization = 1.0;
  // kernel
  std::string kernel_family = "constant";
  double kernel_c = 1.0;
  double kernel_lambda = 1.0;
  double kernel_Lambda = 2.0;
  int kernel_n = 1;
  // load: "table" or a named density; value scales the named density
  std::string load_name = "constant";
  double load_value = 1.0;
  std::string load_table;
  std::string reference = "none";
  // sweep
  std::vector<int> sweep_n{1, 2, 4, 8, 16, 32};
  double delta = 0.25;
  double tau = 1e-3;
  std::string probes = "default";
  double table_spacing = 1.0 / 32.0;
  int compare_n = 16;
  // solver
  double tol = 0.0;
  int max_iter = 200;
  // gamma
  std::string limit_kernel;
  double gamma_rel_tol = 0.02;
  bool negative_control = true;
  // verify
  int ibp_fields = 20;
  int simon_samples = 100000;
  int minimizer_trials = 20;
  int uniqueness_inits = 4;
  // run
  std::string out_dir = "fraclab-out";
  std::uint64_t seed = 1;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Canonical text form; parse(to_text()) reproduces the config exactly.
  [[nodiscard]] std::string to_text() const;
  /// to_text() without the output location: the text the manifest hash is taken over.
  [[nodiscard]] std::string experiment_text() const;
  /// Checks every module precondition that can be decided before a solve.
  void validate() const;

  [[nodiscard]] FracParams params() const { return FracParams{s, p, normalization}; }
  [[nodiscard]] Kernel base_kernel() const;
  /// Base kernel oscillated to kernel_n.
  [[nodiscard]] Kernel kernel() const;
  /// Load density on Omega (the table is interpolated linearly).
  [[nodiscard]] std::function<double(double)> load_density() const;
  [[nodiscard]] SolverOptions solver_options() const;
  [[nodiscard]] HomogConfig homog_config(int threads) const;
  [[nodiscard]] bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace fraclab::cli
