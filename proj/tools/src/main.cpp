#include <iostream>

#include "CLI11.hpp"
#include "fraclab_cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fraclab: nonlocal Dirichlet problems, homogenization sweeps and Gamma diagnostics"};
  app.require_subcommand(1, 1);
  fraclab::cli::RunOptions opts;
  std::string out;
  std::uint64_t seed = 0;
  const char* names[][2] = {{"solve", "solve one Dirichlet problem"},
                            {"homogenize", "oscillating-kernel sweep, effective kernel and closed loop"},
                            {"gamma", "conjugate-convergence diagnostic against a limit kernel"},
                            {"verify", "property suites on the configured problem"},
                            {"benchmark", "time the pipeline stages at the configured resolution"}};
  for (const auto& [name, help] : names) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed (overrides seed)");
    sub->add_flag("--deterministic", opts.deterministic, "omit wall-clock timestamps so reruns are byte-identical");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fraclab::cli::kValidation;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--out") > 0) opts.out_dir = out;
  if (sub->count("--seed") > 0) opts.seed = seed;
  return fraclab::cli::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
