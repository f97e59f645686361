#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "expertsim/experiment.hpp"
#include "expertsim/text.hpp"

using namespace expertsim;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "expertsim_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.instance = "range";
  cfg.n = 4;
  cfg.s = 2;
  cfg.horizon = 50;
  cfg.range_lo = 1.0;
  cfg.range_hi = 5.0;
  cfg.gap = 0.5;
  cfg.variants = {"baseline", "simple"};
  cfg.p_list = {2.0};
  cfg.seeds = {1, 2, 3};
  cfg.out_dir = out.string();
  return cfg;
}

std::set<std::string> dir_files(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    names.insert(entry.path().filename().string());
  }
  return names;
}

}  // namespace

TEST_CASE("config parse and canonical serialization are idempotent") {
  const std::string text =
      "# comment\n"
      "instance = range\n"
      "n = 16\n"
      "s = 4\n"
      "T = 20000\n"
      "a = 1\n"
      "b = 5\n"
      "gap = 0.5\n"
      "variants = baseline,simple\n"
      "p = 1,2,4\n"
      "seeds = 1..3,10\n"
      "jobs = 2\n";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.n == 16);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 10});
  CHECK(cfg.p_list == std::vector<double>{1.0, 2.0, 4.0});
  const std::string canon = serialize_config(cfg);
  CHECK(parse_config_text(canon) == cfg);
  CHECK(serialize_config(parse_config_text(canon)) == canon);
}

TEST_CASE("config parse errors") {
  CHECK_THROWS_AS(parse_config_text("nonsense line\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("unknown_key = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("n = abc\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("seeds = 5..2\n"), std::invalid_argument);
}

TEST_CASE("validation aggregates every problem") {
  ExperimentConfig cfg;
  cfg.instance = "bogus";
  cfg.gap = 1.5;
  cfg.variants = {"baseline", "nosuch"};
  cfg.p_list = {0.5};
  cfg.seeds.clear();
  const auto problems = validate_config(cfg);
  CHECK(problems.size() >= 4);
  CHECK_THROWS_AS(cmd_run(cfg), ConfigError);
}

TEST_CASE("R below the information-theoretic floor is rejected up front") {
  ExperimentConfig cfg = small_config(fresh_dir("rfloor"));
  cfg.variants = {"tradeoff"};
  cfg.horizon = 100;
  cfg.r_list = {0.05};  // 1/sqrt(100) = 0.1
  const auto problems = validate_config(cfg);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find("1/sqrt(T)") != std::string::npos);
}

TEST_CASE("config hash tracks content") {
  ExperimentConfig a = small_config("out");
  ExperimentConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  b.gap = 0.25;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("cmd_run writes one report per point plus a summary") {
  const fs::path out = fresh_dir("run_counts");
  ExperimentConfig cfg = small_config(out);
  const RunBatch batch = cmd_run(cfg);
  CHECK(batch.outcomes.size() == 6);  // 2 variants x 3 seeds
  const auto files = dir_files(out);
  CHECK(files.size() == 7);  // 6 reports + summary.csv
  CHECK(files.count("summary.csv") == 1);
  CHECK(files.count("report_baseline_p2_seed1.csv") == 1);
  CHECK(files.count("report_simple_p2_seed3.csv") == 1);

  const std::string summary = read_file(batch.summary_path);
  CHECK(summary.rfind("# expertsim config=", 0) == 0);
  CHECK(summary.find("variant,p,R,seed,total_bits,final_regret\n") != std::string::npos);
  // 1 comment + 1 header + 6 rows.
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 8);

  // No leftover temporaries.
  for (const auto& name : files) CHECK(name.find(".tmp") == std::string::npos);
}

TEST_CASE("minimal baseline config produces a single report") {
  const fs::path out = fresh_dir("run_minimal");
  ExperimentConfig cfg;
  cfg.instance = "range";
  cfg.n = 2;
  cfg.s = 1;
  cfg.horizon = 10;
  cfg.variants = {"baseline"};
  cfg.seeds = {7};
  cfg.out_dir = out.string();
  const RunBatch batch = cmd_run(cfg);
  CHECK(batch.outcomes.size() == 1);
  CHECK(dir_files(out).size() == 2);
  // Exact baseline ledger: T * (2s + n * (ceil_log2(n) + V)).
  CHECK(batch.outcomes[0].total_bits == 10u * (2 + 2 * (1 + 32)));
}

TEST_CASE("reruns and parallel runs are byte-identical") {
  const fs::path out1 = fresh_dir("repro1");
  const fs::path out2 = fresh_dir("repro2");
  const fs::path out4 = fresh_dir("repro4");
  ExperimentConfig cfg = small_config(out1);
  cmd_run(cfg);
  cfg.out_dir = out2.string();
  cmd_run(cfg);
  cfg.out_dir = out4.string();
  cfg.jobs = 4;
  cmd_run(cfg);

  for (const auto& name : dir_files(out1)) {
    const std::string base = read_file(out1 / name);
    CHECK(read_file(out2 / name) == base);
    CHECK(read_file(out4 / name) == base);
  }
}

TEST_CASE("sweep figures aggregate over seeds") {
  const fs::path out = fresh_dir("sweep");
  ExperimentConfig cfg;
  cfg.instance = "range";
  cfg.n = 4;
  cfg.s = 2;
  cfg.horizon = 2'000;
  cfg.range_lo = 1.0;
  cfg.range_hi = 5.0;
  cfg.gap = 0.5;
  cfg.variants = {"tradeoff"};
  cfg.p_list = {2.0};
  cfg.r_list = {0.05, 0.1, 0.2};
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.out_dir = out.string();
  const SweepFiles files = cmd_sweep_figures(cfg);

  const std::string comm = read_file(files.comm_vs_regret);
  std::vector<double> bits_by_r;
  std::istringstream in(comm);
  std::string line;
  std::getline(in, line);  // comment
  std::getline(in, line);  // header
  CHECK(line == "variant,p,R,mean_regret,se_regret,mean_total_bits,se_total_bits");
  while (std::getline(in, line)) {
    const auto cols = split(line, ',');
    REQUIRE(cols.size() == 7);
    bits_by_r.push_back(std::stod(cols[5]));
  }
  REQUIRE(bits_by_r.size() == 3);  // rows sorted by ascending R
  CHECK(bits_by_r[0] > bits_by_r[1]);
  CHECK(bits_by_r[1] > bits_by_r[2]);

  CHECK(fs::exists(files.comm_vs_p));
  CHECK(fs::exists(files.reward_vs_p));
  const std::string reward = read_file(files.reward_vs_p);
  CHECK(reward.find("variant,p,R,mean_reward,se_reward") != std::string::npos);
}

TEST_CASE("single-point sweep degenerates to a run") {
  const fs::path out = fresh_dir("sweep_single");
  ExperimentConfig cfg = small_config(out);
  cfg.variants = {"baseline"};
  cfg.seeds = {5};
  const SweepFiles files = cmd_sweep_figures(cfg);
  const std::string comm = read_file(files.comm_vs_p);
  // comment + header + exactly one aggregate row
  CHECK(std::count(comm.begin(), comm.end(), '\n') == 3);
  // Standard error over one seed is zero.
  CHECK(comm.find(",0\n") != std::string::npos);
}
