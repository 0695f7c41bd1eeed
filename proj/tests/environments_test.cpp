#include <gtest/gtest.h>

#include "hte_bandit/environments.hpp"

using namespace hte_bandit;

namespace {

EnvironmentSpec spec_for(Scenario s, std::size_t d = 6, std::size_t k = 3, std::uint64_t seed = 11) {
  EnvironmentSpec spec;
  spec.scenario = s;
  spec.d = d;
  spec.K = k;
  spec.seed = seed;
  return spec;
}

const Scenario kAll[] = {Scenario::lin_lin, Scenario::lin_const, Scenario::step_lin, Scenario::perturbed,
                         Scenario::nonstationary};

GroundTruth basis_truth(std::size_t d, std::vector<double> u) {
  GroundTruth truth;
  for (std::size_t a = 0; a < u.size(); ++a) truth.theta_arms.push_back(Vector::Unit(static_cast<Eigen::Index>(d), 0));
  truth.theta = Vector::Unit(static_cast<Eigen::Index>(d), 1);
  truth.u = std::move(u);
  return truth;
}

}  // namespace

TEST(Scenario, NamesRoundTrip) {
  for (auto s : kAll) EXPECT_EQ(parse_scenario(to_string(s)), s);
  EXPECT_THROW(parse_scenario("linlin"), std::invalid_argument);
}

TEST(EnvironmentSpec, RejectsDegenerateSpecs) {
  auto spec = spec_for(Scenario::lin_lin);
  spec.K = 1;
  EXPECT_THROW(Environment{spec}, std::invalid_argument);
  spec = spec_for(Scenario::lin_lin);
  spec.sigma = -1.0;
  EXPECT_THROW(Environment{spec}, std::invalid_argument);
}

TEST(EnvironmentSpec, LargeConfigurationIsAccepted) {
  EnvironmentSpec spec = spec_for(Scenario::lin_lin, 100, 2);
  spec.horizon = 10000;
  const Environment env(spec);
  SeededRng c(1, Stream::context), n(1, Stream::noise);
  const auto round = env.sample_round(1, c, n);
  EXPECT_EQ(round.context.size(), 100);
}

TEST(GroundTruth, DrawIsDeterministicAndNormalized) {
  const auto a = GroundTruth::draw(spec_for(Scenario::lin_lin));
  const auto b = GroundTruth::draw(spec_for(Scenario::lin_lin));
  ASSERT_EQ(a.theta_arms.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.theta_arms[i], b.theta_arms[i]);
    EXPECT_NEAR(a.theta_arms[i].norm(), 1.0, 1e-12);
    EXPECT_GE(a.u[i], 0.0);
    EXPECT_LE(a.u[i], 1.0);
  }
  EXPECT_NEAR(a.theta.norm(), 1.0, 1e-12);
  const auto c = GroundTruth::draw(spec_for(Scenario::lin_lin, 6, 3, 12));
  EXPECT_NE(a.theta, c.theta);
}

TEST(Environment, LinLinBasisExample) {
  const Environment env(spec_for(Scenario::lin_lin, 4, 2), basis_truth(4, {0.0, 0.0}));
  EXPECT_DOUBLE_EQ(env.f_star(Vector::Unit(4, 0), 0), 2.0);
}

TEST(Environment, LinConstTreatmentEffectIsConstant) {
  const Environment env(spec_for(Scenario::lin_const, 4, 2), basis_truth(4, {0.3, 0.6}));
  SeededRng rng(3, 9);
  for (int i = 0; i < 100; ++i) {
    const Vector x = rng.unit_sphere(4);
    EXPECT_NEAR(env.f_star(x, 0) - env.f_star(x, 1), 0.7, 1e-15);
  }
}

TEST(Environment, StepConfounderCancelsBestLinearArm) {
  const auto spec = spec_for(Scenario::step_lin, 5, 2);
  const Environment env(spec);
  SeededRng rng(4, 9);
  int above = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vector x = rng.unit_sphere(5);
    double best = -1e9;
    for (const auto& th : env.truth().theta_arms) best = std::max(best, 1.0 + th.dot(x));
    const double expected = x[0] > 0.25 ? -best : 0.0;
    above += x[0] > 0.25;
    ASSERT_DOUBLE_EQ(env.h_star(x), expected);
  }
  EXPECT_GT(above, 100);
}

TEST(Environment, NonstationaryConfounderIsPeriodic) {
  auto spec = spec_for(Scenario::nonstationary, 4, 2);
  spec.amplitude = 0.5;
  spec.period = 100;
  const Environment env(spec);
  const Vector x = Vector::Unit(4, 2);
  EXPECT_NEAR(env.h_star(x, 25) - env.h_star(x, 100), 0.5, 1e-12);
  EXPECT_NEAR(env.h_star(x, 7), env.h_star(x, 107), 1e-12);
}

TEST(Environment, GapsDependOnlyOnTreatmentEffect) {
  SeededRng rng(5, 9);
  for (auto s : kAll) {
    const Environment env(spec_for(s));
    for (int i = 0; i < 200; ++i) {
      const Vector x = rng.unit_sphere(6);
      const std::uint64_t t = 1 + rng.below(5000);
      const Vector f = env.mean_rewards(x, t);
      for (Action a = 1; a < 3; ++a)
        ASSERT_NEAR(f[static_cast<Eigen::Index>(a)] - f[0], env.g_star(x, a) - env.g_star(x, 0), 1e-12)
            << to_string(s);
    }
  }
}

TEST(Environment, RewardRangeContainsEveryRealizedReward) {
  for (auto s : kAll) {
    const Environment env(spec_for(s, 6, 3, 21));
    const auto range = env.reward_range();
    SeededRng c(21, Stream::context), n(21, Stream::noise);
    for (std::uint64_t t = 1; t <= 5000; ++t) {
      const auto round = env.sample_round(t, c, n);
      for (Action a = 0; a < 3; ++a) ASSERT_TRUE(range.contains(round.realized_reward(a))) << to_string(s);
    }
  }
}

TEST(Environment, ContextsAreUnitNormAndZeroSigmaMeansNoNoise) {
  auto spec = spec_for(Scenario::lin_lin);
  spec.sigma = 0.0;
  const Environment env(spec);
  SeededRng c(1, Stream::context), n(1, Stream::noise);
  for (std::uint64_t t = 1; t <= 1000; ++t) {
    const auto round = env.sample_round(t, c, n);
    ASSERT_NEAR(round.context.norm(), 1.0, 1e-12);
    ASSERT_EQ(round.noise, 0.0);
  }
}

TEST(Environment, NoiseVarianceMatchesSigmaSquared) {
  const Environment env(spec_for(Scenario::lin_lin, 2, 2));
  SeededRng c(2, Stream::context), n(2, Stream::noise);
  const int draws = 1000000;
  double s = 0, s2 = 0;
  for (int i = 0; i < draws; ++i) {
    const double e = env.sample_round(1, c, n).noise;
    ASSERT_LE(std::abs(e), env.noise_half_width());
    s += e;
    s2 += e * e;
  }
  const double mean = s / draws;
  EXPECT_NEAR(mean, 0.0, 5e-4);
  EXPECT_NEAR(s2 / draws - mean * mean, 0.01, 5e-4);
}

TEST(Regret, Examples) {
  const Vector f = (Vector(2) << 0.2, 0.9).finished();
  EXPECT_DOUBLE_EQ(expected_regret(f, 1), 0.0);
  EXPECT_DOUBLE_EQ(expected_regret(f, 0), 0.7);
  EXPECT_EQ(optimal_action((Vector(2) << 0.5, 0.5).finished()), 0u);
  EXPECT_THROW(expected_regret(f, 2), std::invalid_argument);
}
