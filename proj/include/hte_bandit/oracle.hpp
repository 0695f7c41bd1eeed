#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hte_bandit/core.hpp"
#include "hte_bandit/linalg.hpp"

namespace hte_bandit {

/// Coefficients at or below this magnitude do not count towards sparsity.
inline constexpr double kActiveThreshold = 1e-10;

struct FitReport {
  bool rank_deficient = false;  // ridge == 0 system needed the eigen-clipped solve
  bool converged = true;        // LASSO reached tolerance before the sweep cap
  std::size_t sweeps = 0;
  double lambda = 0.0;
  bool empty_input = false;
};

/// g(x, a) = <theta, phi(x, a)>. The tag separates treatment-effect models
/// from reward models at the type level; the arithmetic is shared.
template <class Tag>
struct LinearModel {
  Vector theta;
  FeatureMap feature_map;
  std::size_t sparsity = 0;
  FitReport report;

  static LinearModel zero(const FeatureMap& map) {
    return LinearModel{Vector::Zero(static_cast<Eigen::Index>(map.feature_dim())), map, 0, {}};
  }

  Vector predict(std::span<const double> context) const { return feature_map.scores(theta, context); }
  Vector predict(const Vector& context) const {
    return predict(std::span<const double>(context.data(), static_cast<std::size_t>(context.size())));
  }
};

struct TreatmentEffectTag {};
struct RewardTag {};
using TreatmentEffectModel = LinearModel<TreatmentEffectTag>;
using RewardModel = LinearModel<RewardTag>;

inline std::size_t count_active(const Vector& theta, const std::vector<bool>& penalized) {
  std::size_t active = 0;
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (penalized[static_cast<std::size_t>(j)] && std::abs(theta[j]) > kActiveThreshold) ++active;
  return active;
}

// ---------------------------------------------------------------------------
// Nuisance estimation

struct NuisanceEstimate {
  std::vector<Vector> fold_models;          // ridge coefficients on [x; 1], trained off-fold
  std::vector<std::size_t> fold_assignment;  // sample index -> fold id
  std::size_t num_folds = 2;
  bool fallback = false;  // too few samples: mu_hat set to the reward-range midpoint
};

/// Balanced fold assignment: a seeded permutation dealt round-robin.
inline std::vector<std::size_t> assign_folds(std::size_t n, std::size_t num_folds, std::uint64_t fold_seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(fold_seed, Stream::folds);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % num_folds;
  return fold;
}

/// Cross-fitted estimate of mu(x) = E[r | x] under the logging kernel.
///
/// Sample t's mu_hat comes from a ridge regression of reward on [x; 1] fit on
/// every fold except t's own, then clipped to `range`.
inline NuisanceEstimate cross_fit_mu(std::span<LoggedSample> samples, std::size_t num_folds, double ridge,
                                     std::uint64_t fold_seed, RewardRange range) {
  require(num_folds >= 2, "cross_fit_mu: need at least two folds");
  require(ridge >= 0.0, "cross_fit_mu: ridge must be >= 0");
  NuisanceEstimate est;
  est.num_folds = num_folds;
  const std::size_t n = samples.size();
  if (n < num_folds) {
    est.fallback = true;
    est.fold_assignment.assign(n, 0);
    for (auto& s : samples) s.mu_hat = range.midpoint();
    return est;
  }
  const auto d = static_cast<Eigen::Index>(samples.front().context.size());
  est.fold_assignment = assign_folds(n, num_folds, fold_seed);

  Matrix design(static_cast<Eigen::Index>(n), d + 1);
  Vector target(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    require(samples[t].context.size() == d, "cross_fit_mu: inconsistent context dimension");
    const auto row = static_cast<Eigen::Index>(t);
    design.row(row).head(d) = samples[t].context.transpose();
    design(row, d) = 1.0;
    target[row] = samples[t].reward;
  }
  const Matrix full_gram = design.transpose() * design;
  const Vector full_rhs = design.transpose() * target;

  for (std::size_t k = 0; k < num_folds; ++k) {
    Matrix gram = full_gram;
    Vector rhs = full_rhs;
    for (std::size_t t = 0; t < n; ++t) {
      if (est.fold_assignment[t] != k) continue;
      const auto row = static_cast<Eigen::Index>(t);
      gram.noalias() -= design.row(row).transpose() * design.row(row);
      rhs.noalias() -= design.row(row).transpose() * target[row];
    }
    est.fold_models.push_back(linalg::solve_normal_equations(gram, rhs, ridge).theta);
  }
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    samples[t].mu_hat = range.clip(design.row(row).dot(est.fold_models[est.fold_assignment[t]]));
  }
  return est;
}

// ---------------------------------------------------------------------------
// Designs

struct Design {
  Matrix rows;
  Vector target;
};

/// Residualized design for the R-loss:
///   z_t = phi(x_t, a_t) - sum_a p_t(a) phi(x_t, a),  y_t = r_t - mu_hat_t.
inline Design residualized_design(std::span<const LoggedSample> samples, const FeatureMap& map) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  const std::size_t p = map.feature_dim();
  Design out{Matrix::Zero(n, static_cast<Eigen::Index>(p)), Vector(n)};
  Vector phi(static_cast<Eigen::Index>(p));
  const std::span<double> phi_span(phi.data(), p);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& s = samples[static_cast<std::size_t>(t)];
    require(s.propensities.size() == map.num_actions(), "residualized_design: propensity length");
    const std::span<const double> x(s.context.data(), static_cast<std::size_t>(s.context.size()));
    for (Action a = 0; a < map.num_actions(); ++a) {
      const double weight = (a == s.action ? 1.0 : 0.0) - s.propensities[a];
      if (weight == 0.0) continue;
      map.featurize_into(x, a, phi_span);
      out.rows.row(t) += weight * phi.transpose();
    }
    out.target[t] = s.reward - s.mu_hat;
  }
  return out;
}

/// Plain design for the squared-error reward regression: phi(x_t, a_t) and r_t.
inline Design reward_design(std::span<const LoggedSample> samples, const FeatureMap& map) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  const std::size_t p = map.feature_dim();
  Design out{Matrix(n, static_cast<Eigen::Index>(p)), Vector(n)};
  Vector phi(static_cast<Eigen::Index>(p));
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& s = samples[static_cast<std::size_t>(t)];
    map.featurize_into(std::span<const double>(s.context.data(), static_cast<std::size_t>(s.context.size())),
                       s.action, std::span<double>(phi.data(), p));
    out.rows.row(t) = phi.transpose();
    out.target[t] = s.reward;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fits

/// LASSO penalty level: fixed, or automatic c * sigma_hat * sqrt(2 log p / n).
struct LassoPenalty {
  std::optional<double> lambda;
  double c_lambda = 1.0;
  double prelim_ridge_scale = 1e-6;  // preliminary ridge = scale * n
};

namespace detail {

template <class Model>
Model fit_ridge(const Design& design, const FeatureMap& map, double ridge) {
  require(ridge >= 0.0 && std::isfinite(ridge), "fit: ridge must be >= 0");
  Model model = Model::zero(map);
  if (design.rows.rows() == 0) {
    model.report.empty_input = true;
    return model;
  }
  auto solution = linalg::ridge_least_squares(design.rows, design.target, ridge);
  model.theta = std::move(solution.theta);
  model.report.rank_deficient = solution.rank_deficient;
  model.sparsity = count_active(model.theta, map.penalized());
  return model;
}

/// Residual standard deviation of a preliminary ridge fit. When the fit has
/// no residual degrees of freedom (n <= p) the root mean square of the
/// target is used instead.
inline double residual_scale(const Design& design, double ridge) {
  const Eigen::Index n = design.rows.rows();
  const Eigen::Index p = design.rows.cols();
  if (n <= p) return std::sqrt(design.target.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(n, 1)));
  const auto solution = linalg::ridge_least_squares(design.rows, design.target, ridge);
  const double rss = (design.target - design.rows * solution.theta).squaredNorm();
  return std::sqrt(rss / static_cast<double>(n - p));
}

inline double auto_lambda(const Design& design, const LassoPenalty& penalty) {
  const auto n = static_cast<double>(design.rows.rows());
  const auto p = static_cast<double>(std::max<Eigen::Index>(design.rows.cols(), 2));
  const double sigma_hat = residual_scale(design, penalty.prelim_ridge_scale * n);
  return penalty.c_lambda * sigma_hat * std::sqrt(2.0 * std::log(p) / n);
}

template <class Model>
Model fit_lasso(const Design& design, const FeatureMap& map, const LassoPenalty& penalty) {
  Model model = Model::zero(map);
  if (design.rows.rows() == 0) {
    model.report.empty_input = true;
    return model;
  }
  const double lambda = penalty.lambda ? *penalty.lambda : auto_lambda(design, penalty);
  auto solution = linalg::lasso_coordinate_descent(design.rows, design.target, map.penalized(), lambda);
  model.theta = std::move(solution.theta);
  model.report.converged = solution.converged;
  model.report.sweeps = solution.sweeps;
  model.report.lambda = lambda;
  model.sparsity = count_active(model.theta, map.penalized());
  return model;
}

}  // namespace detail

/// Empirical R-loss minimizer over the linear class with a ridge penalty.
/// Every sample must already carry propensities and a cross-fitted mu_hat.
inline TreatmentEffectModel fit_rloss(std::span<const LoggedSample> samples, const FeatureMap& map, double ridge) {
  return detail::fit_ridge<TreatmentEffectModel>(residualized_design(samples, map), map, ridge);
}

/// LASSO variant of fit_rloss; intercept slots of the feature map are unpenalized.
inline TreatmentEffectModel fit_rloss_lasso(std::span<const LoggedSample> samples, const FeatureMap& map,
                                            const LassoPenalty& penalty) {
  return detail::fit_lasso<TreatmentEffectModel>(residualized_design(samples, map), map, penalty);
}

/// Squared-error reward regression (the IGW baseline oracle).
inline RewardModel fit_squared_error(std::span<const LoggedSample> samples, const FeatureMap& map, double ridge) {
  return detail::fit_ridge<RewardModel>(reward_design(samples, map), map, ridge);
}

inline RewardModel fit_squared_error_lasso(std::span<const LoggedSample> samples, const FeatureMap& map,
                                           const LassoPenalty& penalty) {
  return detail::fit_lasso<RewardModel>(reward_design(samples, map), map, penalty);
}

/// Mean of (r_t - mu_hat_t - <e_{a_t} - p_t, g(x_t, .)>)^2, evaluated from the
/// model's per-action predictions.
template <class Tag>
double empirical_rloss(const LinearModel<Tag>& model, std::span<const LoggedSample> samples) {
  require(!samples.empty(), "empirical_rloss: empty sample list");
  double total = 0.0;
  for (const auto& s : samples) {
    const Vector scores = model.predict(s.context);
    const double contrast = scores[static_cast<Eigen::Index>(s.action)] - s.propensities.probs().dot(scores);
    const double residual = s.reward - s.mu_hat - contrast;
    total += residual * residual;
  }
  return total / static_cast<double>(samples.size());
}

/// Estimation rate xi(n, zeta) = c * (dim * log(max(n, 2)) + log(1/zeta)) / n, capped at 1.
inline double estimation_rate_xi(std::uint64_t n, double zeta, std::size_t dim, double c_xi) {
  require(n >= 1, "estimation_rate_xi: n must be >= 1");
  require(zeta > 0.0 && zeta < 1.0, "estimation_rate_xi: zeta must lie in (0,1)");
  require(dim >= 1, "estimation_rate_xi: dim must be >= 1");
  require(c_xi > 0.0, "estimation_rate_xi: c_xi must be positive");
  const double nn = static_cast<double>(n);
  const double rate =
      c_xi * (static_cast<double>(dim) * std::log(std::max(nn, 2.0)) + std::log(1.0 / zeta)) / nn;
  return std::min(rate, 1.0);
}

}  // namespace hte_bandit
