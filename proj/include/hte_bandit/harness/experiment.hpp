#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hte_bandit/core.hpp"
#include "hte_bandit/environments.hpp"
#include "hte_bandit/harness/csv.hpp"
#include "hte_bandit/harness/svg.hpp"
#include "hte_bandit/policy.hpp"

namespace hte_bandit {

/// Raised for invalid or inconsistent experiment configurations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  EnvironmentSpec environment;
  Algorithm algorithm = Algorithm::hte_igw;
  double delta = 0.1;
  EpochSchedule schedule = EpochSchedule::doubling();
  OracleConfig oracle;
  std::uint64_t n_min = 32;
  std::optional<RewardRange> reward_range;  // defaults to the environment's bound
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::filesystem::path output_dir = "out";

  std::uint64_t horizon() const { return environment.horizon; }

  void validate() const {
    try {
      environment.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (seeds.empty()) throw ConfigError("seed list must be non-empty");
    if (oracle.num_folds < 2) throw ConfigError("num_folds must be >= 2");
    if (!(oracle.c_xi > 0.0)) throw ConfigError("c_xi must be positive");
    if (!(oracle.c_lambda >= 0.0)) throw ConfigError("c_lambda must be >= 0");
    if (!(oracle.ridge_scale >= 0.0)) throw ConfigError("ridge_scale must be >= 0");
    if (reward_range && !(reward_range->hi > reward_range->lo)) throw ConfigError("empty reward range");
  }
};

/// One row of the per-round trace.
struct RoundRecord {
  std::uint64_t t = 0;
  std::uint64_t epoch = 0;
  bool safe = true;
  double gamma = 1.0;
  Action action = 0;
  double propensity = 0.0;
  double reward = 0.0;
  double expected_regret = 0.0;
  double cum_expected_regret = 0.0;
};

using RunHistory = std::vector<RoundRecord>;

struct SeedRun {
  std::uint64_t seed = 0;
  RunHistory history;
  std::vector<FitRecord> fits;
  bool triggered = false;
  std::uint64_t safe_epoch = 0;
};

/// Called after every round with the environment draw and the policy decision.
using RoundObserver = std::function<void(const Round&, const Decision&, const BanditPolicy&)>;

inline PolicyConfig make_policy_config(const RunConfig& config, const Environment& env, std::uint64_t seed) {
  PolicyConfig policy;
  policy.algorithm = config.algorithm;
  policy.delta = config.delta;
  policy.schedule = config.schedule;
  policy.oracle = config.oracle;
  policy.n_min = config.n_min;
  policy.range = config.reward_range.value_or(env.reward_range());
  policy.fold_seed = seed;
  return policy;
}

/// One sequential bandit run. Contexts, noise and actions come from separate
/// streams keyed by `seed`, so algorithms sharing a seed see the same
/// environment and the same context/noise sequence.
///
/// Noise is shared across actions, so the realized-reward regret of a round
/// equals its expected regret; only the latter is accumulated.
inline SeedRun run_seed(const RunConfig& config, std::uint64_t seed, const RoundObserver& observer = {}) {
  EnvironmentSpec spec = config.environment;
  spec.seed = seed;
  const Environment env(spec);
  BanditPolicy policy(FeatureMap::arm_block_with_intercept(spec.d, spec.K), make_policy_config(config, env, seed));

  SeededRng context_rng(seed, Stream::context);
  SeededRng noise_rng(seed, Stream::noise);
  SeededRng action_rng(seed, Stream::action);

  SeedRun run;
  run.seed = seed;
  run.history.reserve(static_cast<std::size_t>(spec.horizon));
  double cumulative = 0.0;
  for (std::uint64_t t = 1; t <= spec.horizon; ++t) {
    const Round round = env.sample_round(t, context_rng, noise_rng);
    const Decision decision = policy.step(round.context, action_rng);
    const double reward = round.realized_reward(decision.action);
    const double regret = expected_regret(round, decision.action);
    cumulative += regret;
    policy.record_reward(reward);
    run.history.push_back({t, decision.epoch, decision.safe, decision.gamma, decision.action,
                           decision.propensities[decision.action], reward, regret, cumulative});
    if (observer) observer(round, decision, policy);
  }
  run.fits = policy.fits();
  run.triggered = !policy.state().safe;
  run.safe_epoch = policy.state().safe_epoch;
  return run;
}

inline std::size_t thread_budget(std::size_t jobs) {
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HTE_BANDIT_THREADS")) {
    try {
      const long requested = std::stol(env);
      if (requested >= 1) threads = static_cast<std::size_t>(requested);
    } catch (const std::exception&) {
    }
  }
  return std::max<std::size_t>(1, std::min(threads, jobs));
}

/// Runs `job(i)` for i in [0, count) on up to HTE_BANDIT_THREADS threads.
template <class Job>
void parallel_for(std::size_t count, Job&& job) {
  const std::size_t threads = thread_budget(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::vector<SeedRun> run_seeds(const RunConfig& config) {
  config.validate();
  std::vector<SeedRun> runs(config.seeds.size());
  parallel_for(runs.size(), [&](std::size_t i) { runs[i] = run_seed(config, config.seeds[i]); });
  return runs;
}

/// Mean and spread of cumulative expected regret across seeds.
struct RegretCurve {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> per_seed;  // per_seed[s][t-1]
  std::vector<double> mean;
  std::vector<double> stddev;  // sample standard deviation; 0 with one seed

  std::size_t horizon() const { return mean.size(); }
  double final_mean() const { return mean.empty() ? 0.0 : mean.back(); }
  double final_std() const { return stddev.empty() ? 0.0 : stddev.back(); }
  double mean_at(std::uint64_t t) const { return t == 0 ? 0.0 : mean.at(static_cast<std::size_t>(t - 1)); }
};

inline RegretCurve aggregate(const std::vector<SeedRun>& runs) {
  RegretCurve curve;
  if (runs.empty()) return curve;
  const std::size_t horizon = runs.front().history.size();
  for (const auto& run : runs) {
    require(run.history.size() == horizon, "aggregate: runs have different horizons");
    curve.seeds.push_back(run.seed);
    std::vector<double> cum;
    cum.reserve(horizon);
    for (const auto& r : run.history) cum.push_back(r.cum_expected_regret);
    curve.per_seed.push_back(std::move(cum));
  }
  const double count = static_cast<double>(runs.size());
  curve.mean.assign(horizon, 0.0);
  curve.stddev.assign(horizon, 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    double sum = 0.0;
    for (const auto& s : curve.per_seed) sum += s[t];
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& s : curve.per_seed) ss += (s[t] - mean) * (s[t] - mean);
    curve.mean[t] = mean;
    curve.stddev[t] = runs.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  }
  return curve;
}

struct ExperimentResult {
  std::vector<SeedRun> runs;
  RegretCurve curve;
};

/// Runs every seed and writes run_<seed>.csv, curve.csv and curve.svg into
/// the configured output directory.
inline ExperimentResult run_experiment(const RunConfig& config) {
  ExperimentResult result;
  result.runs = run_seeds(config);
  result.curve = aggregate(result.runs);

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + config.output_dir.string() + ": " + ec.message());
  for (const auto& run : result.runs)
    csv::write_run(config.output_dir / ("run_" + std::to_string(run.seed) + ".csv"), run.history);
  csv::write_curve(config.output_dir / "curve.csv", result.curve.mean, result.curve.stddev);
  svg::LineChart chart("Cumulative expected regret: " + std::string(to_string(config.algorithm)) + " on " +
                       std::string(to_string(config.environment.scenario)));
  chart.add_series(std::string(to_string(config.algorithm)), result.curve.mean, result.curve.stddev);
  csv::write_text(config.output_dir / "curve.svg", chart.render());
  return result;
}

struct ComparisonRow {
  Algorithm algorithm;
  double final_mean = 0.0;
  double final_std = 0.0;
  double ratio_to_first = 1.0;
};

struct ComparisonResult {
  std::vector<ExperimentResult> experiments;
  std::vector<ComparisonRow> rows;
};

/// Paired comparison: every config must share the environment and seed list.
/// Each algorithm's run files go to <output>/<algorithm>/; compare.csv and
/// compare.svg go to the first config's output directory.
inline ComparisonResult compare(const std::vector<RunConfig>& configs) {
  if (configs.empty()) throw ConfigError("compare: no configurations");
  const auto& first = configs.front();
  for (const auto& c : configs) {
    if (!(c.environment == first.environment)) throw ConfigError("compare: environments differ");
    if (c.seeds != first.seeds) throw ConfigError("compare: seed lists differ");
  }
  ComparisonResult out;
  svg::LineChart chart("Cumulative expected regret on " + std::string(to_string(first.environment.scenario)));
  for (const auto& c : configs) {
    RunConfig sub = c;
    sub.output_dir = first.output_dir / std::string(to_string(c.algorithm));
    out.experiments.push_back(run_experiment(sub));
    const auto& curve = out.experiments.back().curve;
    chart.add_series(std::string(to_string(c.algorithm)), curve.mean, curve.stddev);
    out.rows.push_back({c.algorithm, curve.final_mean(), curve.final_std(), 1.0});
  }
  const double base = out.rows.front().final_mean;
  for (auto& row : out.rows) {
    if (base != 0.0)
      row.ratio_to_first = row.final_mean / base;
    else
      row.ratio_to_first = row.final_mean == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }

  std::vector<std::vector<std::string>> table;
  for (const auto& row : out.rows)
    table.push_back({std::string(to_string(row.algorithm)), csv::format_double(row.final_mean),
                     csv::format_double(row.final_std), csv::format_double(row.ratio_to_first)});
  csv::write_table(first.output_dir / "compare.csv",
                   {"algorithm", "final_mean_regret", "final_std_regret", "ratio_to_first"}, table);
  csv::write_text(first.output_dir / "compare.svg", chart.render());
  return out;
}

}  // namespace hte_bandit
