#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hte_bandit/core.hpp"

namespace hte_bandit {

enum class Scenario { lin_lin, lin_const, step_lin, perturbed, nonstationary };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::lin_lin: return "lin_lin";
    case Scenario::lin_const: return "lin_const";
    case Scenario::step_lin: return "step_lin";
    case Scenario::perturbed: return "perturbed";
    case Scenario::nonstationary: return "nonstationary";
  }
  return "unknown";
}

inline Scenario parse_scenario(std::string_view name) {
  for (auto s : {Scenario::lin_lin, Scenario::lin_const, Scenario::step_lin, Scenario::perturbed,
                 Scenario::nonstationary})
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

struct EnvironmentSpec {
  Scenario scenario = Scenario::lin_lin;
  std::size_t d = 20;
  std::size_t K = 2;
  double sigma = 0.1;
  std::uint64_t horizon = 5000;
  std::uint64_t seed = 0;
  // nonstationary confounder h_t(x) = 1 + <theta, x> + amplitude * sin(2 pi t / period)
  double amplitude = 0.5;
  double period = 500.0;

  void validate() const {
    require(d >= 1, "EnvironmentSpec: d must be >= 1");
    require(K >= 2, "EnvironmentSpec: K must be >= 2");
    require(std::isfinite(sigma) && sigma >= 0.0, "EnvironmentSpec: sigma must be >= 0");
    require(period > 0.0, "EnvironmentSpec: period must be positive");
    require(std::isfinite(amplitude), "EnvironmentSpec: amplitude must be finite");
  }

  friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;
};

/// Parameters drawn once per environment.
struct GroundTruth {
  std::vector<Vector> theta_arms;  // theta_a, unit norm
  Vector theta;                    // shared confounder direction, unit norm
  std::vector<double> u;           // u_a in [0,1]
  double step_threshold = 0.25;

  static GroundTruth draw(const EnvironmentSpec& spec) {
    SeededRng rng(spec.seed, Stream::ground_truth);
    GroundTruth truth;
    for (std::size_t a = 0; a < spec.K; ++a) truth.theta_arms.push_back(rng.unit_sphere(spec.d));
    truth.theta = rng.unit_sphere(spec.d);
    for (std::size_t a = 0; a < spec.K; ++a) truth.u.push_back(rng.uniform());
    return truth;
  }
};

struct Round {
  std::uint64_t t = 1;
  Vector context;
  Vector mean_rewards;  // f*_t(x, .)
  double noise = 0.0;

  double realized_reward(Action a) const { return mean_rewards[static_cast<Eigen::Index>(a)] + noise; }
};

/// Synthetic data-generating process with known f*, g*, h*.
///
/// Every scenario satisfies f*(x,a) - f*(x,a') = g*(x,a) - g*(x,a') because the
/// confounder h* does not depend on the action.
class Environment {
 public:
  explicit Environment(EnvironmentSpec spec) : Environment(spec, GroundTruth::draw(spec)) {}

  Environment(EnvironmentSpec spec, GroundTruth truth) : spec_(spec), truth_(std::move(truth)) {
    spec_.validate();
    require(truth_.theta_arms.size() == spec_.K && truth_.u.size() == spec_.K,
            "Environment: ground truth does not match K");
    for (const auto& th : truth_.theta_arms)
      require(static_cast<std::size_t>(th.size()) == spec_.d, "Environment: theta_a dimension");
    require(static_cast<std::size_t>(truth_.theta.size()) == spec_.d, "Environment: theta dimension");
  }

  const EnvironmentSpec& spec() const { return spec_; }
  const GroundTruth& truth() const { return truth_; }
  std::size_t num_actions() const { return spec_.K; }
  std::size_t context_dim() const { return spec_.d; }

  double noise_half_width() const { return std::sqrt(12.0 * spec_.sigma * spec_.sigma) / 2.0; }

  /// Treatment-effect part g*(x, a).
  double g_star(const Vector& x, Action a) const {
    const auto ai = static_cast<std::size_t>(a);
    const double first = a == 0 ? 1.0 : 0.0;
    switch (spec_.scenario) {
      case Scenario::lin_lin:
        return 1.0 + truth_.theta_arms[ai].dot(x);
      case Scenario::lin_const:
      case Scenario::step_lin:
      case Scenario::nonstationary:
        return truth_.u[ai] + first;
      case Scenario::perturbed: {
        const double s = truth_.theta_arms[ai].dot(x);
        return first + s + std::sin(s);
      }
    }
    return 0.0;
  }

  /// Action-independent confounder h*_t(x).
  double h_star(const Vector& x, std::uint64_t t = 1) const {
    switch (spec_.scenario) {
      case Scenario::lin_lin:
        return 0.0;
      case Scenario::lin_const:
        return 1.0 + truth_.theta.dot(x);
      case Scenario::step_lin:
      case Scenario::perturbed: {
        if (!(x[0] > truth_.step_threshold)) return 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& th : truth_.theta_arms) best = std::max(best, 1.0 + th.dot(x));
        return -best;
      }
      case Scenario::nonstationary:
        return 1.0 + truth_.theta.dot(x) +
               spec_.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec_.period);
    }
    return 0.0;
  }

  double f_star(const Vector& x, Action a, std::uint64_t t = 1) const { return g_star(x, a) + h_star(x, t); }

  Vector mean_rewards(const Vector& x, std::uint64_t t = 1) const {
    Vector out(static_cast<Eigen::Index>(spec_.K));
    const double h = h_star(x, t);
    for (std::size_t a = 0; a < spec_.K; ++a) out[static_cast<Eigen::Index>(a)] = g_star(x, a) + h;
    return out;
  }

  /// A range containing every realized reward of this environment.
  RewardRange reward_range() const {
    double g_lo = 0.0, g_hi = 2.0, h_lo = 0.0, h_hi = 0.0;
    switch (spec_.scenario) {
      case Scenario::lin_lin:
        break;
      case Scenario::lin_const:
        h_hi = 2.0;
        break;
      case Scenario::step_lin:
        h_lo = -2.0;
        break;
      case Scenario::perturbed:
        g_lo = -1.0 - std::sin(1.0);
        g_hi = 2.0 + std::sin(1.0);
        h_lo = -2.0;
        break;
      case Scenario::nonstationary:
        h_lo = -std::abs(spec_.amplitude);
        h_hi = 2.0 + std::abs(spec_.amplitude);
        break;
    }
    const double eps = noise_half_width();
    return {g_lo + h_lo - eps, g_hi + h_hi + eps};
  }

  /// Draws round t. The context comes from `context_rng`, the noise from `noise_rng`.
  Round sample_round(std::uint64_t t, SeededRng& context_rng, SeededRng& noise_rng) const {
    Round round;
    round.t = t;
    round.context = context_rng.unit_sphere(spec_.d);
    round.noise = std::sqrt(12.0 * spec_.sigma * spec_.sigma) * (noise_rng.uniform() - 0.5);
    round.mean_rewards = mean_rewards(round.context, t);
    return round;
  }

 private:
  EnvironmentSpec spec_;
  GroundTruth truth_;
};

inline Environment build_env(const EnvironmentSpec& spec) { return Environment(spec); }

/// argmax of the mean rewards, lowest index on ties.
inline Action optimal_action(const Vector& mean_rewards) {
  Action best = 0;
  for (Eigen::Index a = 1; a < mean_rewards.size(); ++a)
    if (mean_rewards[a] > mean_rewards[static_cast<Eigen::Index>(best)]) best = static_cast<Action>(a);
  return best;
}

inline Action optimal_action(const Round& round) { return optimal_action(round.mean_rewards); }

inline double expected_regret(const Vector& mean_rewards, Action action) {
  require(static_cast<Eigen::Index>(action) < mean_rewards.size(), "expected_regret: action out of range");
  return mean_rewards[static_cast<Eigen::Index>(optimal_action(mean_rewards))] -
         mean_rewards[static_cast<Eigen::Index>(action)];
}

inline double expected_regret(const Round& round, Action action) {
  return expected_regret(round.mean_rewards, action);
}

}  // namespace hte_bandit
