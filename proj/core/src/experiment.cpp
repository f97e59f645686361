#include "expertsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "expertsim/text.hpp"

namespace expertsim {

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

template <typename T, typename Fn>
std::vector<T> map_parse(const std::string& key, const std::string& value, Fn parse_one) {
  std::vector<T> out;
  for (const std::string& raw : split(value, ',')) {
    const auto token = std::string(trim(raw));
    if (token.empty()) throw std::invalid_argument(key + ": empty list element");
    out.push_back(parse_one(token));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw std::invalid_argument(key + ": cannot parse number '" + token + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& token) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw std::invalid_argument(key + ": cannot parse integer '" + token + "'");
  }
  return v;
}

std::vector<std::uint64_t> parse_seeds(const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const std::string& raw : split(value, ',')) {
    const auto token = std::string(trim(raw));
    if (token.empty()) throw std::invalid_argument("seeds: empty list element");
    const auto dots = token.find("..");
    if (dots != std::string::npos) {
      const auto lo = parse_int("seeds", token.substr(0, dots));
      const auto hi = parse_int("seeds", token.substr(dots + 2));
      if (lo > hi) throw std::invalid_argument("seeds: descending range '" + token + "'");
      for (std::int64_t k = lo; k <= hi; ++k) out.push_back(static_cast<std::uint64_t>(k));
    } else {
      out.push_back(static_cast<std::uint64_t>(parse_int("seeds", token)));
    }
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& token) {
  if (token == "true" || token == "1") return true;
  if (token == "false" || token == "0") return false;
  throw std::invalid_argument(key + ": expected true/false, got '" + token + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string content = line.substr(0, line.find('#'));
    const auto stripped = trim(content);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected `key = value`");
    }
    const std::string key{trim(stripped.substr(0, eq))};
    const std::string value{trim(stripped.substr(eq + 1))};
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key or value");
    }
    if (key == "instance") {
      cfg.instance = value;
    } else if (key == "n") {
      cfg.n = static_cast<int>(parse_int(key, value));
    } else if (key == "s") {
      cfg.s = static_cast<int>(parse_int(key, value));
    } else if (key == "T") {
      cfg.horizon = parse_int(key, value);
    } else if (key == "a") {
      cfg.range_lo = parse_double(key, value);
    } else if (key == "b") {
      cfg.range_hi = parse_double(key, value);
    } else if (key == "gap") {
      cfg.gap = parse_double(key, value);
    } else if (key == "sparsity") {
      cfg.sparsity = parse_double(key, value);
    } else if (key == "trace") {
      cfg.trace_path = value;
    } else if (key == "variants") {
      cfg.variants = map_parse<std::string>(key, value, [](const std::string& t) { return t; });
    } else if (key == "p") {
      cfg.p_list =
          map_parse<double>(key, value, [&](const std::string& t) { return parse_double("p", t); });
    } else if (key == "R") {
      cfg.r_list =
          map_parse<double>(key, value, [&](const std::string& t) { return parse_double("R", t); });
    } else if (key == "seeds") {
      cfg.seeds = parse_seeds(value);
    } else if (key == "threshold_const") {
      cfg.threshold_const = parse_double(key, value);
    } else if (key == "value_bits") {
      cfg.value_bits = static_cast<int>(parse_int(key, value));
    } else if (key == "full_literal_increment") {
      cfg.full_literal_increment = parse_bool(key, value);
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "jobs") {
      cfg.jobs = static_cast<int>(parse_int(key, value));
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_file(path));
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  auto kv = [&out](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  kv("instance", cfg.instance);
  kv("n", std::to_string(cfg.n));
  kv("s", std::to_string(cfg.s));
  kv("T", std::to_string(cfg.horizon));
  kv("a", format_double(cfg.range_lo));
  kv("b", format_double(cfg.range_hi));
  kv("gap", format_double(cfg.gap));
  kv("sparsity", format_double(cfg.sparsity));
  if (!cfg.trace_path.empty()) kv("trace", cfg.trace_path);
  kv("variants", join(cfg.variants, ','));
  {
    std::vector<std::string> parts;
    for (double p : cfg.p_list) parts.push_back(format_double(p));
    kv("p", join(parts, ','));
  }
  if (!cfg.r_list.empty()) {
    std::vector<std::string> parts;
    for (double r : cfg.r_list) parts.push_back(format_double(r));
    kv("R", join(parts, ','));
  }
  {
    std::vector<std::string> parts;
    for (std::uint64_t s : cfg.seeds) parts.push_back(std::to_string(s));
    kv("seeds", join(parts, ','));
  }
  kv("threshold_const", format_double(cfg.threshold_const));
  kv("value_bits", std::to_string(cfg.value_bits));
  kv("full_literal_increment", cfg.full_literal_increment ? "true" : "false");
  kv("out", cfg.out_dir);
  kv("jobs", std::to_string(cfg.jobs));
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  // The hash names the experiment; where it is written and how many workers
  // ran it do not change what was run.
  ExperimentConfig identity = cfg;
  identity.out_dir = "out";
  identity.jobs = 1;
  return fnv1a(serialize_config(identity));
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  const bool is_trace = cfg.instance == "trace";
  if (cfg.instance != "range" && cfg.instance != "unit" && !is_trace) {
    problems.push_back("instance must be one of range, unit, trace");
  }
  if (!is_trace) {
    if (cfg.n < 1) problems.push_back("n must be >= 1");
    if (cfg.s < 1) problems.push_back("s must be >= 1");
    if (cfg.horizon < 1) problems.push_back("T must be >= 1");
  } else if (cfg.trace_path.empty()) {
    problems.push_back("trace instance requires a trace path");
  }
  if (cfg.instance == "range" && !(cfg.range_lo > 0.0 && cfg.range_hi > cfg.range_lo)) {
    problems.push_back("range instance requires 0 < a < b");
  }
  if (!(cfg.gap >= 0.0 && cfg.gap < 1.0)) problems.push_back("gap must lie in [0, 1)");
  if (cfg.instance == "unit" && !(cfg.sparsity > 0.0 && cfg.sparsity <= 1.0)) {
    problems.push_back("sparsity must lie in (0, 1]");
  }
  if (cfg.variants.empty()) problems.push_back("variants must be nonempty");
  bool needs_r = false;
  for (const std::string& name : cfg.variants) {
    const auto v = parse_variant(name);
    if (!v) {
      problems.push_back("unknown variant '" + name + "'");
      continue;
    }
    if (*v == Variant::kTradeoff || *v == Variant::kFull) needs_r = true;
    if ((*v == Variant::kSimple || *v == Variant::kTradeoff) && cfg.instance == "unit") {
      problems.push_back(name + " requires a range instance");
    }
    if (*v == Variant::kFull && cfg.instance == "range") {
      problems.push_back("full requires a unit instance");
    }
  }
  if (cfg.p_list.empty()) problems.push_back("p list must be nonempty");
  for (double p : cfg.p_list) {
    if (!(p >= 1.0) || !std::isfinite(p)) problems.push_back("p values must be finite and >= 1");
  }
  if (needs_r) {
    if (cfg.r_list.empty()) {
      problems.push_back("tradeoff/full variants require an R list");
    } else if (!is_trace) {
      const double r_min = 1.0 / std::sqrt(static_cast<double>(std::max<std::int64_t>(cfg.horizon, 1)));
      for (double r : cfg.r_list) {
        if (!(r >= r_min)) {
          problems.push_back("R = " + format_double(r) + " is below 1/sqrt(T) = " +
                             format_double(r_min));
        }
      }
    }
  }
  if (cfg.seeds.empty()) problems.push_back("seeds must be nonempty");
  if (!(cfg.threshold_const > 0.0)) problems.push_back("threshold_const must be positive");
  if (cfg.value_bits < 1 || cfg.value_bits > 62) problems.push_back("value_bits must be in [1, 62]");
  if (cfg.jobs < 1) problems.push_back("jobs must be >= 1");
  std::sort(problems.begin(), problems.end());
  return problems;
}

ConfigError::ConfigError(std::vector<std::string> problems_in)
    : std::runtime_error("invalid config: " + join(problems_in, ';')), problems(std::move(problems_in)) {}

LossTensor build_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.instance == "range") {
    return gen_range_instance(cfg.n, cfg.s, cfg.horizon, cfg.range_lo, cfg.range_hi, cfg.gap, seed);
  }
  if (cfg.instance == "unit") {
    return gen_unit_instance(cfg.n, cfg.s, cfg.horizon, cfg.sparsity, cfg.gap, seed);
  }
  return ingest_trace(cfg.trace_path).tensor;
}

namespace {

struct RunPoint {
  Variant variant;
  double p;
  double target_regret;  // 0 when unused
  std::uint64_t seed;
};

std::vector<RunPoint> enumerate_points(const ExperimentConfig& cfg) {
  std::vector<RunPoint> points;
  for (const std::string& name : cfg.variants) {
    const Variant v = *parse_variant(name);
    const bool uses_r = v == Variant::kTradeoff || v == Variant::kFull;
    const std::vector<double> rs = uses_r ? cfg.r_list : std::vector<double>{0.0};
    for (double p : cfg.p_list) {
      for (double r : rs) {
        for (std::uint64_t seed : cfg.seeds) points.push_back({v, p, r, seed});
      }
    }
  }
  return points;
}

std::string point_filename(const RunPoint& pt) {
  std::string name = "report_" + variant_name(pt.variant) + "_p" + format_double(pt.p);
  if (pt.variant == Variant::kTradeoff || pt.variant == Variant::kFull) {
    name += "_R" + format_double(pt.target_regret);
  }
  name += "_seed" + std::to_string(pt.seed) + ".csv";
  return name;
}

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min<int>(jobs, static_cast<int>(count));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= count) return;
        body(k);
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace

RunBatch cmd_run(const ExperimentConfig& cfg) {
  const auto problems = validate_config(cfg);
  if (!problems.empty()) throw ConfigError(problems);

  const std::uint64_t hash = config_hash(cfg);
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx", static_cast<unsigned long long>(hash));

  // A trace instance is seed-independent; load it once up front.
  std::optional<LossTensor> shared;
  if (cfg.instance == "trace") shared.emplace(ingest_trace(cfg.trace_path).tensor);

  const std::vector<RunPoint> points = enumerate_points(cfg);
  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<RunOutcome> outcomes(points.size());
  std::vector<std::string> errors(points.size());
  parallel_for(points.size(), cfg.jobs, [&](std::size_t k) {
    const RunPoint& pt = points[k];
    try {
      ProtocolConfig pc;
      pc.variant = pt.variant;
      pc.p = pt.p;
      pc.target_regret = pt.target_regret;
      pc.threshold_const = cfg.threshold_const;
      pc.value_bits = cfg.value_bits;
      pc.literal_full_increment = cfg.full_literal_increment;
      const LossTensor tensor = shared ? *shared : build_instance(cfg, pt.seed);
      const RunReport report = run_protocol(pc, tensor, pt.seed).report;

      RunOutcome& out = outcomes[k];
      out.variant = pt.variant;
      out.p = pt.p;
      out.target_regret = pt.target_regret;
      out.seed = pt.seed;
      out.total_bits = report.total_bits;
      out.final_regret = report.regret_amortized;
      out.reward = -report.alg_loss / static_cast<double>(tensor.horizon());
      out.report_filename = point_filename(pt);

      const std::string provenance =
          "expertsim seed=" + std::to_string(pt.seed) + " config=" + hash_hex;
      write_file_atomic(out_dir / out.report_filename,
                        format_run_report_csv(report, provenance));
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  for (const std::string& err : errors) {
    if (!err.empty()) throw std::runtime_error("run failed: " + err);
  }

  std::string summary = "# expertsim config=";
  summary += hash_hex;
  summary += " seeds=";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (i > 0) summary += ',';
    summary += std::to_string(cfg.seeds[i]);
  }
  summary += "\nvariant,p,R,seed,total_bits,final_regret\n";
  for (const RunOutcome& out : outcomes) {
    summary += variant_name(out.variant) + "," + format_double(out.p) + "," +
               format_double(out.target_regret) + "," + std::to_string(out.seed) + "," +
               std::to_string(out.total_bits) + "," + format_double(out.final_regret) + "\n";
  }
  RunBatch batch;
  batch.outcomes = std::move(outcomes);
  batch.summary_path = out_dir / "summary.csv";
  write_file_atomic(batch.summary_path, summary);
  return batch;
}

namespace {

struct Aggregate {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // Welford

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  double stderr_mean() const {
    if (count < 2) return 0.0;
    const double var = m2 / static_cast<double>(count - 1);
    return std::sqrt(var / static_cast<double>(count));
  }
};

struct GroupKey {
  std::string variant;
  double p;
  double r;
  bool operator<(const GroupKey& o) const {
    if (variant != o.variant) return variant < o.variant;
    if (p != o.p) return p < o.p;
    return r < o.r;
  }
};

}  // namespace

SweepFiles cmd_sweep_figures(const ExperimentConfig& cfg) {
  const RunBatch batch = cmd_run(cfg);

  struct GroupStats {
    Aggregate bits, reward, regret;
  };
  std::map<GroupKey, GroupStats> groups;
  for (const RunOutcome& out : batch.outcomes) {
    GroupStats& g = groups[{variant_name(out.variant), out.p, out.target_regret}];
    g.bits.add(static_cast<double>(out.total_bits));
    g.reward.add(out.reward);
    g.regret.add(out.final_regret);
  }

  const std::uint64_t hash = config_hash(cfg);
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx", static_cast<unsigned long long>(hash));
  std::string provenance = "# expertsim config=";
  provenance += hash_hex;
  provenance += " seeds=";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (i > 0) provenance += ',';
    provenance += std::to_string(cfg.seeds[i]);
  }
  provenance += '\n';

  std::string comm_p = provenance + "variant,p,R,mean_total_bits,se_total_bits\n";
  std::string reward_p = provenance + "variant,p,R,mean_reward,se_reward\n";
  std::string comm_regret =
      provenance + "variant,p,R,mean_regret,se_regret,mean_total_bits,se_total_bits\n";
  for (const auto& [key, g] : groups) {
    const std::string prefix =
        key.variant + "," + format_double(key.p) + "," + format_double(key.r) + ",";
    comm_p += prefix + format_double(g.bits.mean) + "," + format_double(g.bits.stderr_mean()) + "\n";
    reward_p +=
        prefix + format_double(g.reward.mean) + "," + format_double(g.reward.stderr_mean()) + "\n";
    comm_regret += prefix + format_double(g.regret.mean) + "," +
                   format_double(g.regret.stderr_mean()) + "," + format_double(g.bits.mean) + "," +
                   format_double(g.bits.stderr_mean()) + "\n";
  }

  const std::filesystem::path out_dir(cfg.out_dir);
  SweepFiles files{out_dir / "comm_vs_p.csv", out_dir / "reward_vs_p.csv",
                   out_dir / "comm_vs_regret.csv"};
  write_file_atomic(files.comm_vs_p, comm_p);
  write_file_atomic(files.reward_vs_p, reward_p);
  write_file_atomic(files.comm_vs_regret, comm_regret);
  return files;
}

}  // namespace expertsim
