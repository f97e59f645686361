// Command-line front end: run experiments, sweep the figure CSVs, or run the
// statistical verification suites.
//
// Exit status: 0 success / all checks pass, 1 validation or I/O error,
// 2 verification failure.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "expertsim/experiment.hpp"
#include "expertsim/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitVerifyFailed = 2;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

expertsim::ExperimentConfig load_config(const CommonOpts& opts) {
  expertsim::ExperimentConfig cfg = expertsim::parse_config_file(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.seed_set) cfg.seeds = {opts.seed};
  if (opts.jobs > 0) cfg.jobs = opts.jobs;
  const auto problems = expertsim::validate_config(cfg);
  if (!problems.empty()) throw expertsim::ConfigError(problems);
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "replace the config's seed list with one seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--jobs", opts.jobs, "parallel runs (overrides config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed online learning with experts: protocol simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "run every configured (variant, p, R, seed) point");
  add_common(run_cmd, run_opts);

  CommonOpts sweep_opts;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep-figures", "run the config and emit the three figure CSVs");
  add_common(sweep_cmd, sweep_opts);

  std::string suite;
  std::uint64_t verify_seed = expertsim::kVerifyDefaultSeed;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run a statistical verification suite");
  verify_cmd
      ->add_option("suite", suite, "constants | moments | maxstability | middle | pipeline")
      ->required();
  verify_cmd->add_option("--seed", verify_seed, "master seed for the suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto batch = expertsim::cmd_run(load_config(run_opts));
      std::cout << "wrote " << batch.outcomes.size() << " reports and "
                << batch.summary_path.string() << "\n";
      return kExitOk;
    }
    if (sweep_cmd->parsed()) {
      const auto files = expertsim::cmd_sweep_figures(load_config(sweep_opts));
      std::cout << "wrote " << files.comm_vs_p.string() << ", " << files.reward_vs_p.string()
                << ", " << files.comm_vs_regret.string() << "\n";
      return kExitOk;
    }
    const auto report = expertsim::run_verify_suite(suite, verify_seed);
    if (!report) {
      std::cerr << "unknown suite '" << suite << "'\n";
      return kExitInvalid;
    }
    expertsim::print_suite(*report, std::cout);
    return report->pass() ? kExitOk : kExitVerifyFailed;
  } catch (const expertsim::ConfigError& e) {
    std::cerr << "invalid config:\n";
    for (const auto& problem : e.problems) std::cerr << "  - " << problem << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}
