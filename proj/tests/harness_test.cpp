#include <gtest/gtest.h>

#include <cstdlib>

#include "hte_bandit/harness/config.hpp"
#include "hte_bandit/harness/experiment.hpp"
#include "support.hpp"

using namespace hte_bandit;
using testing_support::first_line;
using testing_support::scratch_dir;
using testing_support::slurp;

namespace {

RunConfig small_config(const std::filesystem::path& out, Algorithm algorithm = Algorithm::hte_igw) {
  RunConfig c;
  c.environment.d = 5;
  c.environment.horizon = 400;
  c.algorithm = algorithm;
  c.oracle.c_xi = 0.01;
  c.seeds = {1, 2, 3};
  c.output_dir = out;
  return c;
}

}  // namespace

TEST(Config, ParsesEveryKey) {
  const auto c = config::parse(R"(
# comment
[environment]
scenario = perturbed
d = 7
K = 3
sigma = 0.2
horizon = 123
amplitude = 0.25
period = 50

[policy]
algorithm = mod_igw   # trailing comment
delta = 0.05
schedule = fixed:64
n_min = 16
reward_lo = -4
reward_hi = 5

[oracle]
ridge_scale = 1e-4
num_folds = 3
c_xi = 0.5
c_lambda = 2

[run]
seeds = 1..3, 10
output = somewhere
)");
  EXPECT_EQ(c.environment.scenario, Scenario::perturbed);
  EXPECT_EQ(c.environment.d, 7u);
  EXPECT_EQ(c.environment.K, 3u);
  EXPECT_DOUBLE_EQ(c.environment.sigma, 0.2);
  EXPECT_EQ(c.environment.horizon, 123u);
  EXPECT_DOUBLE_EQ(c.environment.amplitude, 0.25);
  EXPECT_DOUBLE_EQ(c.environment.period, 50.0);
  EXPECT_EQ(c.algorithm, Algorithm::mod_igw);
  EXPECT_DOUBLE_EQ(c.delta, 0.05);
  EXPECT_EQ(c.schedule.kind(), ScheduleKind::fixed_length);
  EXPECT_EQ(c.schedule.base_length(), 64u);
  EXPECT_EQ(c.n_min, 16u);
  ASSERT_TRUE(c.reward_range.has_value());
  EXPECT_DOUBLE_EQ(c.reward_range->lo, -4.0);
  EXPECT_DOUBLE_EQ(c.reward_range->hi, 5.0);
  EXPECT_DOUBLE_EQ(c.oracle.ridge_scale, 1e-4);
  EXPECT_EQ(c.oracle.num_folds, 3u);
  EXPECT_DOUBLE_EQ(c.oracle.c_xi, 0.5);
  EXPECT_DOUBLE_EQ(c.oracle.c_lambda, 2.0);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 10}));
  EXPECT_EQ(c.output_dir, "somewhere");
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, OverridesAndScheduleList) {
  RunConfig c;
  config::apply_override(c, "policy.schedule = list:10,20,40");
  config::apply_override(c, "environment.d=100");
  EXPECT_EQ(c.schedule.kind(), ScheduleKind::explicit_list);
  EXPECT_EQ(c.schedule.boundary(3), 40u);
  EXPECT_EQ(c.environment.d, 100u);
}

TEST(Config, ErrorsAreConfigErrors) {
  EXPECT_THROW(config::parse("[environment]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(config::parse("[environment]\nd = two\n"), ConfigError);
  EXPECT_THROW(config::parse("[environment]\nscenario = nope\n"), ConfigError);
  EXPECT_THROW(config::parse("[policy]\nalgorithm = nope\n"), ConfigError);
  EXPECT_THROW(config::parse("[policy]\nschedule = list:5,3\n"), ConfigError);
  EXPECT_THROW(config::parse("[run]\nseeds = 5..3\n"), ConfigError);
  EXPECT_THROW(config::parse("just words\n"), ConfigError);
  RunConfig c;
  EXPECT_THROW(config::apply_override(c, "policy.delta"), ConfigError);
  c.delta = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.seeds.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(config::load("/nonexistent/file.conf"), ConfigError);
}

TEST(Output, CsvHeadersAreStable) {
  const auto dir = scratch_dir("headers");
  run_experiment(small_config(dir));
  EXPECT_EQ(first_line(dir / "run_1.csv"), "t,epoch,safe,gamma,action,propensity,reward,expected_regret,cum_expected_regret");
  EXPECT_EQ(first_line(dir / "curve.csv"), "t,mean_cum_regret,std_cum_regret");
  const auto svg = slurp(dir / "curve.svg");
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("fill-opacity"), std::string::npos);
}

TEST(Output, ActionsAreWrittenOneBased) {
  RunHistory h{{1, 1, true, 1.0, 0, 0.5, 0.25, 0.0, 0.0}, {2, 1, false, 2.5, 1, 0.5, 1.0, 0.1, 0.1}};
  EXPECT_EQ(csv::render_run(h), std::string(csv::kRunHeader) + "\n1,1,1,1,1,0.5,0.25,0,0\n2,1,0,2.5,2,0.5,1,0.1,0.1\n");
}

TEST(Output, ZeroHorizonWritesHeadersOnly) {
  const auto dir = scratch_dir("empty");
  auto c = small_config(dir);
  c.environment.horizon = 0;
  const auto result = run_experiment(c);
  EXPECT_EQ(result.curve.horizon(), 0u);
  EXPECT_EQ(slurp(dir / "run_2.csv"), std::string(csv::kRunHeader) + "\n");
  EXPECT_EQ(slurp(dir / "curve.csv"), std::string(csv::kCurveHeader) + "\n");
}

TEST(Output, RepeatedRunsAreBitwiseIdentical) {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  run_experiment(small_config(a, Algorithm::mod_hte_igw));
  setenv("HTE_BANDIT_THREADS", "3", 1);
  run_experiment(small_config(b, Algorithm::mod_hte_igw));
  unsetenv("HTE_BANDIT_THREADS");
  for (const char* f : {"run_1.csv", "run_2.csv", "run_3.csv", "curve.csv", "curve.svg"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Aggregate, MeanMatchesPerSeedAverageAndRegretIsMonotone) {
  const auto result = run_experiment(small_config(scratch_dir("agg"), Algorithm::igw));
  const auto& curve = result.curve;
  for (std::size_t t = 0; t < curve.horizon(); ++t) {
    double sum = 0.0;
    for (const auto& s : curve.per_seed) sum += s[t];
    ASSERT_NEAR(curve.mean[t], sum / 3.0, 1e-9);
  }
  for (const auto& run : result.runs)
    for (std::size_t t = 1; t < run.history.size(); ++t)
      ASSERT_GE(run.history[t].cum_expected_regret, run.history[t - 1].cum_expected_regret);
}

TEST(Compare, SelfComparisonHasUnitRatio) {
  const auto dir = scratch_dir("self");
  auto c = small_config(dir);
  const auto result = compare({c, c});
  ASSERT_EQ(result.rows.size(), 2u);
  EXPECT_EQ(result.rows[1].ratio_to_first, 1.0);
  EXPECT_EQ(first_line(dir / "compare.csv"), "algorithm,final_mean_regret,final_std_regret,ratio_to_first");
  EXPECT_TRUE(std::filesystem::exists(dir / "compare.svg"));
}

TEST(Compare, MismatchedEnvironmentsAreRejected) {
  const auto dir = scratch_dir("mismatch");
  auto a = small_config(dir), b = small_config(dir);
  b.environment.d = 6;
  EXPECT_THROW(compare({a, b}), ConfigError);
  b = a;
  b.seeds = {1, 2};
  EXPECT_THROW(compare({a, b}), ConfigError);
}

TEST(Uniform, RegretSlopeMatchesMonteCarloGap) {
  RunConfig c = small_config(scratch_dir("slope"), Algorithm::uniform);
  c.environment.horizon = 4000;
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto result = run_experiment(c);

  // Independent estimate of E_x[max_a f* - mean_a f*] per environment seed.
  double expected = 0.0;
  for (auto seed : c.seeds) {
    EnvironmentSpec spec = c.environment;
    spec.seed = seed;
    const Environment env(spec);
    SeededRng rng(seed + 1000, Stream::validation);
    double gap = 0.0;
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) {
      const Vector f = env.mean_rewards(rng.unit_sphere(spec.d));
      gap += f.maxCoeff() - f.mean();
    }
    expected += gap / draws;
  }
  expected /= static_cast<double>(c.seeds.size());
  const double slope = result.curve.final_mean() / 4000.0;
  EXPECT_NEAR(slope, expected, 0.05 * expected);
}

TEST(Threads, BudgetHonoursEnvironmentVariable) {
  setenv("HTE_BANDIT_THREADS", "2", 1);
  EXPECT_EQ(thread_budget(10), 2u);
  EXPECT_EQ(thread_budget(1), 1u);
  setenv("HTE_BANDIT_THREADS", "junk", 1);
  EXPECT_GE(thread_budget(10), 1u);
  unsetenv("HTE_BANDIT_THREADS");
}
