#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hte_bandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Actions are 0-based throughout the library; CSV output writes them 1-based.
using Action = std::size_t;

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

/// Closed interval bounding every realized reward.
struct RewardRange {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double r) const { return r >= lo && r <= hi; }
  double clip(double r) const { return std::clamp(r, lo, hi); }
};

// ---------------------------------------------------------------------------
// Randomness

/// Named streams. Each consumer of randomness draws from its own stream so that
/// swapping the algorithm leaves the environment's draw sequence untouched.
enum class Stream : std::uint64_t {
  ground_truth = 1,
  context = 2,
  noise = 3,
  action = 4,
  folds = 5,
  validation = 6,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random source keyed by (seed, stream_id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The transforms to uniform and normal variates are implemented
/// here rather than through <random> distributions, whose algorithms are
/// implementation-defined, so draws match bit-for-bit across platforms.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id),
        engine_(splitmix64(splitmix64(seed) ^ splitmix64(~stream_id))) {}

  SeededRng(std::uint64_t seed, Stream stream)
      : SeededRng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    require(n > 0, "SeededRng::below: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return static_cast<std::size_t>(draw % bound);
  }

  /// Uniform point on the unit sphere in R^dim (normalized isotropic Gaussian).
  Vector unit_sphere(std::size_t dim) {
    Vector v(static_cast<Eigen::Index>(dim));
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal();
      norm = v.norm();
    }
    return v / norm;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Feature maps

enum class FeatureKind { arm_block_with_intercept, shared_with_intercept, custom };

/// Maps (context, action) to a fixed-length feature vector phi(x, a).
///
/// arm_block_with_intercept: K blocks of size d+1; block a holds [x; 1] and
///   every other block is zero. Intercept slots are unpenalized under LASSO.
/// shared_with_intercept: [x; 1] for every action (the nuisance regression).
/// custom: user callback writing feature_dim entries.
class FeatureMap {
 public:
  using Callback = std::function<void(std::span<const double> context, Action action,
                                      std::span<double> out)>;

  static FeatureMap arm_block_with_intercept(std::size_t raw_dim, std::size_t num_actions) {
    FeatureMap map(FeatureKind::arm_block_with_intercept, raw_dim, num_actions,
                   num_actions * (raw_dim + 1));
    for (std::size_t a = 0; a < num_actions; ++a)
      map.penalized_[a * (raw_dim + 1) + raw_dim] = false;
    return map;
  }

  static FeatureMap shared_with_intercept(std::size_t raw_dim, std::size_t num_actions) {
    FeatureMap map(FeatureKind::shared_with_intercept, raw_dim, num_actions, raw_dim + 1);
    map.penalized_[raw_dim] = false;
    return map;
  }

  /// `penalized` defaults to all-true when empty.
  static FeatureMap custom(std::size_t raw_dim, std::size_t num_actions, std::size_t feature_dim,
                           Callback callback, std::vector<bool> penalized = {}) {
    require(static_cast<bool>(callback), "FeatureMap::custom: empty callback");
    FeatureMap map(FeatureKind::custom, raw_dim, num_actions, feature_dim);
    map.callback_ = std::make_shared<const Callback>(std::move(callback));
    if (!penalized.empty()) {
      require(penalized.size() == feature_dim, "FeatureMap::custom: penalized mask length");
      map.penalized_ = std::move(penalized);
    }
    return map;
  }

  FeatureKind kind() const { return kind_; }
  std::size_t raw_dim() const { return raw_dim_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t feature_dim() const { return feature_dim_; }
  const std::vector<bool>& penalized() const { return penalized_; }

  /// Writes phi(x, a) into `out` (length feature_dim) without allocating.
  void featurize_into(std::span<const double> context, Action action, std::span<double> out) const {
    require(context.size() == raw_dim_, "featurize: context dimension mismatch");
    require(action < num_actions_, "featurize: action out of range");
    require(out.size() == feature_dim_, "featurize: output dimension mismatch");
    switch (kind_) {
      case FeatureKind::arm_block_with_intercept: {
        std::fill(out.begin(), out.end(), 0.0);
        const std::size_t offset = action * (raw_dim_ + 1);
        std::copy(context.begin(), context.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
        out[offset + raw_dim_] = 1.0;
        break;
      }
      case FeatureKind::shared_with_intercept:
        std::copy(context.begin(), context.end(), out.begin());
        out[raw_dim_] = 1.0;
        break;
      case FeatureKind::custom:
        (*callback_)(context, action, out);
        break;
    }
  }

  Vector featurize(std::span<const double> context, Action action) const {
    Vector phi(static_cast<Eigen::Index>(feature_dim_));
    featurize_into(context, action, std::span<double>(phi.data(), feature_dim_));
    return phi;
  }

  /// Per-action scores (<theta, phi(x, a)>)_a.
  Vector scores(const Vector& theta, std::span<const double> context) const {
    require(static_cast<std::size_t>(theta.size()) == feature_dim_, "scores: theta dimension mismatch");
    Vector out(static_cast<Eigen::Index>(num_actions_));
    if (kind_ == FeatureKind::arm_block_with_intercept) {
      require(context.size() == raw_dim_, "featurize: context dimension mismatch");
      const Eigen::Map<const Vector> x(context.data(), static_cast<Eigen::Index>(raw_dim_));
      const auto block = static_cast<Eigen::Index>(raw_dim_ + 1);
      for (std::size_t a = 0; a < num_actions_; ++a) {
        const auto offset = static_cast<Eigen::Index>(a) * block;
        out[static_cast<Eigen::Index>(a)] =
            theta.segment(offset, block - 1).dot(x) + theta[offset + block - 1];
      }
      return out;
    }
    Vector phi(static_cast<Eigen::Index>(feature_dim_));
    for (std::size_t a = 0; a < num_actions_; ++a) {
      featurize_into(context, a, std::span<double>(phi.data(), feature_dim_));
      out[static_cast<Eigen::Index>(a)] = theta.dot(phi);
    }
    return out;
  }

 private:
  FeatureMap(FeatureKind kind, std::size_t raw_dim, std::size_t num_actions, std::size_t feature_dim)
      : kind_(kind), raw_dim_(raw_dim), num_actions_(num_actions), feature_dim_(feature_dim),
        penalized_(feature_dim, true) {
    require(raw_dim >= 1, "FeatureMap: raw_dim must be positive");
    require(num_actions >= 1, "FeatureMap: num_actions must be positive");
    require(feature_dim >= 1, "FeatureMap: feature_dim must be positive");
  }

  FeatureKind kind_;
  std::size_t raw_dim_;
  std::size_t num_actions_;
  std::size_t feature_dim_;
  std::vector<bool> penalized_;
  std::shared_ptr<const Callback> callback_;
};

// ---------------------------------------------------------------------------
// Action distributions and logged samples

/// Probability vector over K actions.
class ActionDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit ActionDistribution(Vector probs) : probs_(std::move(probs)) {
    require(probs_.size() >= 1, "ActionDistribution: empty");
    for (Eigen::Index a = 0; a < probs_.size(); ++a)
      require(std::isfinite(probs_[a]) && probs_[a] >= 0.0 && probs_[a] <= 1.0,
              "ActionDistribution: entry outside [0,1]");
    require(std::abs(probs_.sum() - 1.0) <= kSumTolerance, "ActionDistribution: does not sum to 1");
  }

  static ActionDistribution uniform(std::size_t num_actions) {
    return ActionDistribution(Vector::Constant(static_cast<Eigen::Index>(num_actions),
                                               1.0 / static_cast<double>(num_actions)));
  }

  static ActionDistribution point_mass(std::size_t num_actions, Action action) {
    Vector p = Vector::Zero(static_cast<Eigen::Index>(num_actions));
    p[static_cast<Eigen::Index>(action)] = 1.0;
    return ActionDistribution(std::move(p));
  }

  std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }
  double operator[](Action a) const { return probs_[static_cast<Eigen::Index>(a)]; }
  const Vector& probs() const { return probs_; }

  /// Inverse-CDF draw given u in [0,1). Zero-probability actions are never returned.
  Action sample(double u) const {
    double cumulative = 0.0;
    Action last_positive = 0;
    for (Eigen::Index a = 0; a < probs_.size(); ++a) {
      if (probs_[a] <= 0.0) continue;
      last_positive = static_cast<Action>(a);
      cumulative += probs_[a];
      if (u < cumulative) return last_positive;
    }
    return last_positive;
  }

  Action sample(SeededRng& rng) const { return sample(rng.uniform()); }

 private:
  Vector probs_;
};

/// One interaction record.
struct LoggedSample {
  Vector context;
  Action action = 0;
  ActionDistribution propensities = ActionDistribution::uniform(1);
  double reward = 0.0;
  double mu_hat = 0.0;
};

// ---------------------------------------------------------------------------
// Epoch schedules

enum class ScheduleKind { doubling, fixed_length, explicit_list };

/// Round boundaries tau_0 = 0 < tau_1 < tau_2 < ...; epoch m covers
/// rounds tau_{m-1}+1 .. tau_m. Epochs are 1-based.
///
/// An explicit list that runs out keeps repeating its last epoch length.
class EpochSchedule {
 public:
  static EpochSchedule doubling() { return EpochSchedule(ScheduleKind::doubling, 0, {}); }

  static EpochSchedule fixed_length(std::uint64_t length) {
    require(length >= 1, "EpochSchedule: fixed length must be positive");
    return EpochSchedule(ScheduleKind::fixed_length, length, {});
  }

  static EpochSchedule explicit_list(std::vector<std::uint64_t> boundaries) {
    require(!boundaries.empty(), "EpochSchedule: empty boundary list");
    std::uint64_t previous = 0;
    for (auto b : boundaries) {
      require(b > previous, "EpochSchedule: boundaries must be strictly increasing and positive");
      previous = b;
    }
    return EpochSchedule(ScheduleKind::explicit_list, 0, std::move(boundaries));
  }

  ScheduleKind kind() const { return kind_; }
  std::uint64_t base_length() const { return base_length_; }
  const std::vector<std::uint64_t>& boundaries() const { return boundaries_; }

  /// tau_m for m >= 0.
  std::uint64_t boundary(std::uint64_t m) const {
    if (m == 0) return 0;
    switch (kind_) {
      case ScheduleKind::doubling:
        require(m < 63, "EpochSchedule: epoch index overflow");
        return std::uint64_t{1} << m;
      case ScheduleKind::fixed_length:
        return m * base_length_;
      case ScheduleKind::explicit_list: {
        const std::uint64_t listed = boundaries_.size();
        if (m <= listed) return boundaries_[m - 1];
        const std::uint64_t last = boundaries_.back();
        const std::uint64_t step = listed >= 2 ? last - boundaries_[listed - 2] : last;
        return last + (m - listed) * step;
      }
    }
    return 0;
  }

  std::uint64_t epoch_length(std::uint64_t m) const {
    require(m >= 1, "EpochSchedule: epochs are 1-based");
    return boundary(m) - boundary(m - 1);
  }

  /// The unique m with tau_{m-1} < t <= tau_m.
  std::uint64_t epoch_of(std::uint64_t t) const {
    require(t >= 1, "epoch_of: rounds are 1-based");
    switch (kind_) {
      case ScheduleKind::doubling: {
        std::uint64_t m = 1;
        while ((std::uint64_t{1} << m) < t) ++m;
        return m;
      }
      case ScheduleKind::fixed_length:
        return (t + base_length_ - 1) / base_length_;
      case ScheduleKind::explicit_list: {
        const auto it = std::lower_bound(boundaries_.begin(), boundaries_.end(), t);
        if (it != boundaries_.end()) return static_cast<std::uint64_t>(it - boundaries_.begin()) + 1;
        std::uint64_t m = boundaries_.size();
        while (boundary(m) < t) ++m;
        return m;
      }
    }
    return 0;
  }

 private:
  EpochSchedule(ScheduleKind kind, std::uint64_t base_length, std::vector<std::uint64_t> boundaries)
      : kind_(kind), base_length_(base_length), boundaries_(std::move(boundaries)) {}

  ScheduleKind kind_;
  std::uint64_t base_length_;
  std::vector<std::uint64_t> boundaries_;
};

}  // namespace hte_bandit
