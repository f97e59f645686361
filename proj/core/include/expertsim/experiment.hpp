#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "expertsim/protocols.hpp"

namespace expertsim {

// Experiment configuration: a flat `key = value` file, one key per line,
// `#` comments. Lists are comma-separated; seeds also accept `lo..hi`.
// Keys: instance, n, s, T, a, b, gap, sparsity, trace, variants, p, R,
// seeds, threshold_const, value_bits, full_literal_increment, out, jobs.
struct ExperimentConfig {
  std::string instance = "range";  // range | unit | trace
  int n = 2;
  int s = 1;
  std::int64_t horizon = 10;  // key: T
  double range_lo = 1.0;      // key: a
  double range_hi = 5.0;      // key: b
  double gap = 0.0;
  double sparsity = 1.0;
  std::string trace_path;

  std::vector<std::string> variants{"baseline"};
  std::vector<double> p_list{2.0};
  std::vector<double> r_list;
  std::vector<std::uint64_t> seeds{1};

  double threshold_const = 100.0;
  int value_bits = 32;
  bool full_literal_increment = false;

  std::string out_dir = "out";
  int jobs = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);  // canonical form
// Hash of the experiment identity (out_dir and jobs do not contribute).
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Every problem at once; empty means valid.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

struct RunOutcome {
  Variant variant = Variant::kBaseline;
  double p = 2.0;
  double target_regret = 0.0;  // 0 for variants without R
  std::uint64_t seed = 0;
  std::uint64_t total_bits = 0;
  double final_regret = 0.0;
  double reward = 0.0;  // -alg_loss / T
  std::string report_filename;
};

struct RunBatch {
  std::vector<RunOutcome> outcomes;  // deterministic order, independent of jobs
  std::filesystem::path summary_path;
};

// One report CSV per (variant, p, R, seed) plus summary.csv
// (variant,p,R,seed,total_bits,final_regret). Throws ConfigError on an
// invalid config before touching the filesystem.
RunBatch cmd_run(const ExperimentConfig& cfg);

// Aggregates a cmd_run batch into comm_vs_p.csv, reward_vs_p.csv and
// comm_vs_regret.csv (mean and standard error over seeds).
struct SweepFiles {
  std::filesystem::path comm_vs_p;
  std::filesystem::path reward_vs_p;
  std::filesystem::path comm_vs_regret;
};
SweepFiles cmd_sweep_figures(const ExperimentConfig& cfg);

LossTensor build_instance(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace expertsim
