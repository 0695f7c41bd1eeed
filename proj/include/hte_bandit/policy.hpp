#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hte_bandit/core.hpp"
#include "hte_bandit/oracle.hpp"

namespace hte_bandit {

enum class Algorithm { hte_igw, igw, mod_hte_igw, mod_igw, uniform };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::hte_igw: return "hte_igw";
    case Algorithm::igw: return "igw";
    case Algorithm::mod_hte_igw: return "mod_hte_igw";
    case Algorithm::mod_igw: return "mod_igw";
    case Algorithm::uniform: return "uniform";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::hte_igw, Algorithm::igw, Algorithm::mod_hte_igw, Algorithm::mod_igw, Algorithm::uniform})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

inline bool uses_rloss(Algorithm a) { return a == Algorithm::hte_igw || a == Algorithm::mod_hte_igw; }
inline bool uses_model_selection(Algorithm a) { return a == Algorithm::mod_hte_igw || a == Algorithm::mod_igw; }

// ---------------------------------------------------------------------------
// Inverse gap weighting

/// argmax of the scores, lowest index on ties.
inline Action greedy_action(const Vector& scores) {
  Action best = 0;
  for (Eigen::Index a = 1; a < scores.size(); ++a)
    if (scores[a] > scores[static_cast<Eigen::Index>(best)]) best = static_cast<Action>(a);
  return best;
}

/// p(a) = 1 / (K + gamma * (s_best - s_a)) for a != best; the best action takes the rest.
inline ActionDistribution igw_kernel(const Vector& scores, double gamma) {
  const Eigen::Index k = scores.size();
  require(k >= 2, "igw_kernel: need at least two actions");
  require(gamma > 0.0 && std::isfinite(gamma), "igw_kernel: gamma must be positive and finite");
  require(scores.allFinite(), "igw_kernel: non-finite scores");
  const Action best = greedy_action(scores);
  const double top = scores[static_cast<Eigen::Index>(best)];
  Vector p(k);
  double rest = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    if (static_cast<Action>(a) == best) continue;
    p[a] = 1.0 / (static_cast<double>(k) + gamma * (top - scores[a]));
    rest += p[a];
  }
  p[static_cast<Eigen::Index>(best)] = 1.0 - rest;
  return ActionDistribution(std::move(p));
}

/// Estimated implicit regret sum_a p(a) (s_best - s_a) of the IGW kernel.
inline double implicit_regret(const Vector& scores, const ActionDistribution& kernel) {
  const double top = scores.maxCoeff();
  return kernel.probs().dot((Vector::Constant(scores.size(), top) - scores));
}

using RateFunction = std::function<double(std::uint64_t n, double zeta)>;

inline constexpr double kGammaConstant = 0.35355339059327373;  // sqrt(1/8)

/// gamma_m = sqrt(1/8) * sqrt(K / xi(prev_epoch_len, delta' / m^2)), floored at 1.
inline double gamma_schedule(std::uint64_t prev_epoch_len, std::uint64_t next_epoch, double delta_prime,
                             std::size_t num_actions, const RateFunction& xi) {
  require(prev_epoch_len >= 1, "gamma_schedule: previous epoch must be non-empty");
  require(next_epoch >= 2, "gamma_schedule: epoch index must be >= 2");
  require(delta_prime > 0.0 && delta_prime < 1.0, "gamma_schedule: delta' must lie in (0,1)");
  const double m = static_cast<double>(next_epoch);
  const double rate = xi(prev_epoch_len, delta_prime / (m * m));
  require(rate > 0.0, "gamma_schedule: rate must be positive");
  return std::max(1.0, kGammaConstant * std::sqrt(static_cast<double>(num_actions) / rate));
}

// ---------------------------------------------------------------------------
// Misspecification test

struct EpochStats {
  std::uint64_t count = 0;
  double sum = 0.0;
  double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
};

/// Per-epoch reward statistics feeding the Hoeffding comparison.
class SafetyMonitor {
 public:
  explicit SafetyMonitor(RewardRange range = {}) : range_(range) {
    require(range.hi > range.lo, "SafetyMonitor: empty reward range");
  }

  void record(std::uint64_t epoch, double reward) {
    require(epoch >= 1, "SafetyMonitor: epochs are 1-based");
    require(range_.contains(reward), "SafetyMonitor: reward outside declared range");
    if (epochs_.size() < epoch) epochs_.resize(epoch);
    epochs_[epoch - 1].count += 1;
    epochs_[epoch - 1].sum += reward;
    ++rounds_;
    total_ += reward;
    current_epoch_ = epoch;
  }

  const RewardRange& range() const { return range_; }
  std::uint64_t rounds() const { return rounds_; }
  double cumulative_reward() const { return total_; }
  std::uint64_t current_epoch() const { return current_epoch_; }
  std::size_t num_epochs() const { return epochs_.size(); }
  EpochStats stats(std::uint64_t epoch) const {
    return epoch >= 1 && epoch <= epochs_.size() ? epochs_[epoch - 1] : EpochStats{};
  }

  /// (r_hi - r_lo) * sqrt(log(4 j^2 t^2 / delta) / (2 n_j)).
  double width(std::uint64_t epoch, std::uint64_t t, double delta) const {
    const auto n = stats(epoch).count;
    if (n == 0) return std::numeric_limits<double>::infinity();
    const double j = static_cast<double>(epoch);
    const double tt = static_cast<double>(t);
    return range_.width() * std::sqrt(std::log(4.0 * j * j * tt * tt / delta) / (2.0 * static_cast<double>(n)));
  }

  double lower_bound(std::uint64_t epoch, std::uint64_t t, double delta) const {
    return stats(epoch).mean() - width(epoch, t, delta);
  }

  double upper_bound(std::uint64_t epoch, std::uint64_t t, double delta) const {
    return stats(epoch).mean() + width(epoch, t, delta);
  }

 private:
  RewardRange range_;
  std::vector<EpochStats> epochs_;
  std::uint64_t rounds_ = 0;
  double total_ = 0.0;
  std::uint64_t current_epoch_ = 0;
};

struct SafetyDecision {
  bool safe = true;
  std::uint64_t safe_epoch = 0;  // valid when !safe
};

/// Fails when the current epoch's upper confidence bound falls below the best
/// certified lower bound among earlier epochs holding at least n_min rewards.
inline SafetyDecision check_and_choose_safe(const SafetyMonitor& monitor, std::uint64_t t, double delta,
                                            std::uint64_t n_min = 32) {
  require(delta > 0.0 && delta < 1.0, "check_and_choose_safe: delta must lie in (0,1)");
  const std::uint64_t current = monitor.current_epoch();
  if (current <= 1 || monitor.stats(current).count == 0) return {};
  double best = -std::numeric_limits<double>::infinity();
  std::uint64_t best_epoch = 0;
  for (std::uint64_t j = 1; j < current; ++j) {
    const auto stats = monitor.stats(j);
    if (stats.count < std::max<std::uint64_t>(n_min, 1)) continue;
    const double bound = monitor.lower_bound(j, t, delta);
    if (bound > best) {
      best = bound;
      best_epoch = j;
    }
  }
  if (best_epoch == 0) return {};
  if (monitor.upper_bound(current, t, delta) < best) return {false, best_epoch};
  return {};
}

// ---------------------------------------------------------------------------
// Policy

struct OracleConfig {
  double ridge_scale = 1e-6;  // ridge = ridge_scale * n
  std::size_t num_folds = 2;
  double c_xi = 1.0;
  double c_lambda = 1.0;
};

struct PolicyConfig {
  Algorithm algorithm = Algorithm::hte_igw;
  double delta = 0.1;
  EpochSchedule schedule = EpochSchedule::doubling();
  OracleConfig oracle;
  std::uint64_t n_min = 32;
  RewardRange range;
  std::uint64_t fold_seed = 0;
};

/// A kernel that can be replayed: scores come from theta through the feature map.
struct KernelSnapshot {
  Vector theta;
  double gamma = 1.0;
};

struct EpochFit {
  Vector theta;
  double gamma = 1.0;
  std::size_t sparsity = 0;
  std::size_t rate_dim = 1;
  FitReport report;
  bool mu_fallback = false;
};

/// Fits the model for epoch m+1 from the epoch-m buffer and sets gamma_{m+1}.
///
/// R-loss variants cross-fit mu_hat on the buffer first. Model-selection
/// variants use the fitted sparsity as the dimension in the rate.
inline EpochFit fit_epoch_model(std::span<LoggedSample> buffer, const FeatureMap& map, Algorithm algorithm,
                                const OracleConfig& oracle, std::uint64_t epoch, std::uint64_t epoch_length,
                                double delta_prime, RewardRange range, std::uint64_t fold_seed) {
  require(!buffer.empty(), "fit_epoch_model: empty buffer");
  EpochFit fit;
  const double ridge = oracle.ridge_scale * static_cast<double>(buffer.size());
  const LassoPenalty penalty{std::nullopt, oracle.c_lambda, oracle.ridge_scale};
  switch (algorithm) {
    case Algorithm::hte_igw:
    case Algorithm::mod_hte_igw: {
      const auto nuisance = cross_fit_mu(buffer, oracle.num_folds, ridge, fold_seed, range);
      fit.mu_fallback = nuisance.fallback;
      const auto model = algorithm == Algorithm::hte_igw ? fit_rloss(buffer, map, ridge)
                                                         : fit_rloss_lasso(buffer, map, penalty);
      fit.theta = model.theta;
      fit.sparsity = model.sparsity;
      fit.report = model.report;
      break;
    }
    case Algorithm::igw:
    case Algorithm::mod_igw: {
      const auto model = algorithm == Algorithm::igw ? fit_squared_error(buffer, map, ridge)
                                                     : fit_squared_error_lasso(buffer, map, penalty);
      fit.theta = model.theta;
      fit.sparsity = model.sparsity;
      fit.report = model.report;
      break;
    }
    case Algorithm::uniform:
      fit.theta = Vector::Zero(static_cast<Eigen::Index>(map.feature_dim()));
      return fit;
  }
  fit.rate_dim = uses_model_selection(algorithm) ? std::max<std::size_t>(fit.sparsity, 1) : map.feature_dim();
  const RateFunction xi = [&](std::uint64_t n, double zeta) {
    return estimation_rate_xi(n, zeta, fit.rate_dim, oracle.c_xi);
  };
  fit.gamma = gamma_schedule(epoch_length, epoch + 1, delta_prime, map.num_actions(), xi);
  return fit;
}

/// FNV-1a over the oracle input, used to audit which samples fed each fit.
inline std::uint64_t hash_samples(std::span<const LoggedSample> samples) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : samples) {
    mix(s.context.data(), static_cast<std::size_t>(s.context.size()) * sizeof(double));
    const std::uint64_t action = s.action;
    mix(&action, sizeof(action));
    mix(s.propensities.probs().data(), s.propensities.size() * sizeof(double));
    mix(&s.reward, sizeof(double));
  }
  return h;
}

struct FitRecord {
  std::uint64_t epoch = 0;  // the epoch whose data was used; the model serves epoch + 1
  std::size_t num_samples = 0;
  std::uint64_t input_hash = 0;
  EpochFit fit;
};

struct PolicyState {
  std::uint64_t epoch = 1;
  double gamma = 1.0;
  Vector theta;
  bool safe = true;
  std::uint64_t safe_epoch = 0;
  std::vector<KernelSnapshot> stored_kernels;  // index m-1 holds (theta_m, gamma_m)
  double delta = 0.1;
  double delta_prime = 0.05;
};

struct Decision {
  std::uint64_t t = 0;
  std::uint64_t epoch = 0;
  bool safe = true;
  double gamma = 1.0;
  Vector scores;
  ActionDistribution propensities = ActionDistribution::uniform(1);
  Action action = 0;
};

/// The epoch-based IGW decision loop. Call step() for a context, then
/// record_reward() with the realized reward before the next step().
class BanditPolicy {
 public:
  BanditPolicy(FeatureMap map, PolicyConfig config)
      : map_(std::move(map)), config_(std::move(config)), monitor_(config_.range) {
    require(config_.delta > 0.0 && config_.delta < 1.0, "BanditPolicy: delta must lie in (0,1)");
    require(map_.num_actions() >= 2, "BanditPolicy: need at least two actions");
    state_.theta = Vector::Zero(static_cast<Eigen::Index>(map_.feature_dim()));
    state_.delta = config_.delta;
    state_.delta_prime = config_.delta / 2.0;
    state_.stored_kernels.push_back({state_.theta, state_.gamma});
  }

  const FeatureMap& feature_map() const { return map_; }
  const PolicyConfig& config() const { return config_; }
  const PolicyState& state() const { return state_; }
  const SafetyMonitor& monitor() const { return monitor_; }
  const std::vector<FitRecord>& fits() const { return fits_; }
  const std::vector<LoggedSample>& buffer() const { return buffer_; }
  std::uint64_t rounds() const { return rounds_; }

  /// The kernel the policy would use for `context` right now.
  ActionDistribution kernel(const Vector& context) const { return kernel_and_scores(context).first; }

  Decision step(const Vector& context, SeededRng& action_rng) {
    require(!pending_, "BanditPolicy::step: previous reward not recorded");
    require(static_cast<std::size_t>(context.size()) == map_.raw_dim(), "BanditPolicy::step: context dimension");
    Decision decision;
    decision.t = rounds_ + 1;
    decision.epoch = config_.schedule.epoch_of(decision.t);
    decision.safe = state_.safe;
    auto [kernel, scores] = kernel_and_scores(context);
    decision.gamma = state_.safe ? state_.gamma : state_.stored_kernels[state_.safe_epoch - 1].gamma;
    decision.scores = std::move(scores);
    decision.action = kernel.sample(action_rng);
    decision.propensities = std::move(kernel);
    pending_ = LoggedSample{context, decision.action, decision.propensities, 0.0, 0.0};
    return decision;
  }

  void record_reward(double reward) {
    require(pending_.has_value(), "BanditPolicy::record_reward: no pending decision");
    require(std::isfinite(reward) && config_.range.contains(reward),
            "BanditPolicy::record_reward: reward outside declared range");
    ++rounds_;
    const std::uint64_t t = rounds_;
    const std::uint64_t epoch = config_.schedule.epoch_of(t);
    monitor_.record(epoch, reward);
    pending_->reward = reward;
    if (state_.safe) {
      buffer_.push_back(std::move(*pending_));
      if (config_.algorithm != Algorithm::uniform) {
        const auto check = check_and_choose_safe(monitor_, t, state_.delta, config_.n_min);
        if (!check.safe) {
          state_.safe = false;
          state_.safe_epoch = check.safe_epoch;
        }
      }
    }
    pending_.reset();
    if (t == config_.schedule.boundary(epoch)) end_epoch(epoch);
  }

 private:
  std::pair<ActionDistribution, Vector> kernel_and_scores(const Vector& context) const {
    const std::span<const double> x(context.data(), static_cast<std::size_t>(context.size()));
    const KernelSnapshot* replay = state_.safe ? nullptr : &state_.stored_kernels[state_.safe_epoch - 1];
    const Vector& theta = replay ? replay->theta : state_.theta;
    const double gamma = replay ? replay->gamma : state_.gamma;
    Vector scores = map_.scores(theta, x);
    return {igw_kernel(scores, gamma), std::move(scores)};
  }

  void end_epoch(std::uint64_t epoch) {
    state_.epoch = epoch + 1;
    if (!state_.safe) {
      buffer_.clear();
      return;
    }
    if (config_.algorithm != Algorithm::uniform) {
      if (buffer_.empty()) {
        FitRecord record;
        record.epoch = epoch;
        record.fit.report.empty_input = true;
        record.fit.theta = state_.theta;
        record.fit.gamma = state_.gamma;
        fits_.push_back(std::move(record));
      } else {
        FitRecord record;
        record.epoch = epoch;
        record.num_samples = buffer_.size();
        record.input_hash = hash_samples(buffer_);
        record.fit = fit_epoch_model(buffer_, map_, config_.algorithm, config_.oracle, epoch,
                                     config_.schedule.epoch_length(epoch), state_.delta_prime, config_.range,
                                     splitmix64(config_.fold_seed ^ splitmix64(epoch)));
        state_.theta = record.fit.theta;
        state_.gamma = record.fit.gamma;
        fits_.push_back(std::move(record));
      }
    }
    state_.stored_kernels.push_back({state_.theta, state_.gamma});
    buffer_.clear();
  }

  FeatureMap map_;
  PolicyConfig config_;
  SafetyMonitor monitor_;
  PolicyState state_;
  std::vector<LoggedSample> buffer_;
  std::vector<FitRecord> fits_;
  std::optional<LoggedSample> pending_;
  std::uint64_t rounds_ = 0;
};

}  // namespace hte_bandit
