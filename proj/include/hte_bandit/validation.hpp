#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "hte_bandit/core.hpp"
#include "hte_bandit/environments.hpp"

namespace hte_bandit::validation {

/// A fully enumerable distribution D over contexts with a fixed kernel p(a|x).
/// Tables are (contexts x actions). Rewards carry no noise beyond `f_star`.
struct FiniteInstance {
  Vector context_probs;
  Matrix f_star;
  Matrix kernel;

  std::size_t num_contexts() const { return static_cast<std::size_t>(context_probs.size()); }
  std::size_t num_actions() const { return static_cast<std::size_t>(f_star.cols()); }

  void validate() const {
    require(context_probs.size() >= 1, "FiniteInstance: no contexts");
    require(f_star.rows() == context_probs.size() && kernel.rows() == context_probs.size(),
            "FiniteInstance: table rows must match the context count");
    require(kernel.cols() == f_star.cols() && f_star.cols() >= 1, "FiniteInstance: action count mismatch");
    require((context_probs.array() >= 0.0).all() && std::abs(context_probs.sum() - 1.0) <= 1e-12,
            "FiniteInstance: context probabilities must form a distribution");
    for (Eigen::Index x = 0; x < kernel.rows(); ++x)
      require((kernel.row(x).array() >= 0.0).all() && std::abs(kernel.row(x).sum() - 1.0) <= 1e-12,
              "FiniteInstance: kernel rows must be distributions");
  }
};

inline Vector random_simplex(SeededRng& rng, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = -std::log(1.0 - rng.uniform());
  v /= v.sum();
  return v;
}

/// Random kernel table; roughly one row in five is a point mass.
inline Matrix random_kernel(SeededRng& rng, Eigen::Index contexts, Eigen::Index actions) {
  Matrix kernel(contexts, actions);
  for (Eigen::Index x = 0; x < contexts; ++x) {
    if (rng.uniform() < 0.2) {
      kernel.row(x).setZero();
      kernel(x, static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(actions)))) = 1.0;
    } else {
      kernel.row(x) = random_simplex(rng, actions).transpose();
    }
  }
  return kernel;
}

inline Matrix random_table(SeededRng& rng, Eigen::Index contexts, Eigen::Index actions, double lo = 0.0,
                           double hi = 1.0) {
  Matrix table(contexts, actions);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = rng.uniform(lo, hi);
  return table;
}

/// Up to 20 contexts and 2..4 actions.
inline FiniteInstance random_instance(SeededRng& rng, std::size_t max_contexts = 20, std::size_t max_actions = 4) {
  const auto contexts = static_cast<Eigen::Index>(1 + rng.below(max_contexts));
  const auto actions = static_cast<Eigen::Index>(2 + rng.below(max_actions - 1));
  FiniteInstance inst;
  inst.context_probs = random_simplex(rng, contexts);
  inst.f_star = random_table(rng, contexts, actions);
  inst.kernel = random_kernel(rng, contexts, actions);
  return inst;
}

namespace detail {
inline void require_table(const FiniteInstance& inst, const Matrix& table, const char* what) {
  require(table.rows() == static_cast<Eigen::Index>(inst.num_contexts()) &&
              table.cols() == static_cast<Eigen::Index>(inst.num_actions()),
          std::string("incomplete table: ") + what);
}
}  // namespace detail

/// Exact R-loss risk by enumeration:
///   sum_x P(x) sum_a p(a|x) [ noise_var(x,a) + (f*(x,a) - mu_hat(x) - <e_a - p(x), g(x,.)>)^2 ].
inline double exact_rloss_risk(const FiniteInstance& inst, const Matrix& g, const Vector& mu_hat,
                               const Matrix& noise_var) {
  inst.validate();
  detail::require_table(inst, g, "g");
  detail::require_table(inst, noise_var, "noise_var");
  require(mu_hat.size() == static_cast<Eigen::Index>(inst.num_contexts()), "incomplete table: mu_hat");
  double risk = 0.0;
  for (Eigen::Index x = 0; x < inst.kernel.rows(); ++x) {
    const double mean_score = inst.kernel.row(x).dot(g.row(x));
    double inner = 0.0;
    for (Eigen::Index a = 0; a < inst.kernel.cols(); ++a) {
      const double residual = inst.f_star(x, a) - mu_hat[x] - (g(x, a) - mean_score);
      inner += inst.kernel(x, a) * (noise_var(x, a) + residual * residual);
    }
    risk += inst.context_probs[x] * inner;
  }
  return risk;
}

inline double exact_rloss_risk(const FiniteInstance& inst, const Matrix& g, const Vector& mu_hat) {
  return exact_rloss_risk(inst, g, mu_hat, Matrix::Zero(g.rows(), g.cols()));
}

/// Propensity-weighted squared gap error E[<e_a - p(x), g(x,.) - g*(x,.)>^2] under D(p).
inline double gap_excess_risk(const FiniteInstance& inst, const Matrix& g, const Matrix& g_star) {
  double total = 0.0;
  for (Eigen::Index x = 0; x < inst.kernel.rows(); ++x) {
    const Vector diff = (g.row(x) - g_star.row(x)).transpose();
    const double centre = inst.kernel.row(x).dot(diff);
    double inner = 0.0;
    for (Eigen::Index a = 0; a < inst.kernel.cols(); ++a)
      inner += inst.kernel(x, a) * (diff[a] - centre) * (diff[a] - centre);
    total += inst.context_probs[x] * inner;
  }
  return total;
}

inline double squared_error_risk(const FiniteInstance& inst, const Matrix& g) {
  double total = 0.0;
  for (Eigen::Index x = 0; x < inst.kernel.rows(); ++x)
    total += inst.context_probs[x] * inst.kernel.row(x).dot((g.row(x) - inst.f_star.row(x)).array().square().matrix());
  return total;
}

using ExcessRiskFormula = std::function<double(const FiniteInstance&, const Matrix& g, const Matrix& g_star)>;

/// Compares three routes to the excess risk of g:
///   risk(g) - min risk under mu_hat_a, the same under mu_hat_b, and the gap
///   formula with g* = f*. The unconstrained minimizer is f* itself (any table
///   with f*'s within-context gaps attains the minimum). Returns the largest
///   pairwise absolute deviation.
inline double check_excess_risk_identity(const FiniteInstance& inst, const Matrix& g, const Vector& mu_hat_a,
                           const Vector& mu_hat_b, const Matrix& noise_var,
                           const ExcessRiskFormula& formula = gap_excess_risk) {
  const double excess_a = exact_rloss_risk(inst, g, mu_hat_a, noise_var) -
                          exact_rloss_risk(inst, inst.f_star, mu_hat_a, noise_var);
  const double excess_b = exact_rloss_risk(inst, g, mu_hat_b, noise_var) -
                          exact_rloss_risk(inst, inst.f_star, mu_hat_b, noise_var);
  const double closed_form = formula(inst, g, inst.f_star);
  return std::max({std::abs(excess_a - excess_b), std::abs(excess_a - closed_form), std::abs(excess_b - closed_form)});
}

inline double check_excess_risk_identity(const FiniteInstance& inst, const Matrix& g, const Vector& mu_hat_a,
                           const Vector& mu_hat_b, const ExcessRiskFormula& formula = gap_excess_risk) {
  return check_excess_risk_identity(inst, g, mu_hat_a, mu_hat_b, Matrix::Zero(g.rows(), g.cols()), formula);
}

struct MisspecificationReport {
  bool holds = true;
  std::size_t cases = 0;
  std::size_t violations = 0;
  double max_rloss_misspecification = 0.0;    // max over sampled kernels of min_g excess R-loss risk
  double max_squared_misspecification = 0.0;  // same for the squared error
  double max_gap = 0.0;                       // largest (squared - R-loss) over sampled kernels
  double worst_slack = std::numeric_limits<double>::infinity();  // smallest (squared - R-loss)
};

inline constexpr double kMisspecificationTolerance = 1e-12;

/// For each sampled kernel, checks
///   min_{g in class} E_p(g)  <=  min_{g in class} E_{D(p)}[(g - f*)^2] + 1e-12.
/// With kernel_samples == 0 only the instance's own kernel is checked.
inline MisspecificationReport check_misspecification_bound(const FiniteInstance& inst, const std::vector<Matrix>& model_class,
                                std::size_t kernel_samples, SeededRng& rng) {
  require(!model_class.empty(), "check_misspecification_bound: empty model class");
  for (const auto& g : model_class) detail::require_table(inst, g, "model class member");
  MisspecificationReport report;
  FiniteInstance probe = inst;
  const std::size_t rounds = std::max<std::size_t>(kernel_samples, 1);
  for (std::size_t k = 0; k < rounds; ++k) {
    if (kernel_samples > 0) probe.kernel = random_kernel(rng, inst.f_star.rows(), inst.f_star.cols());
    double best_rloss = std::numeric_limits<double>::infinity();
    double best_squared = std::numeric_limits<double>::infinity();
    for (const auto& g : model_class) {
      best_rloss = std::min(best_rloss, gap_excess_risk(probe, g, probe.f_star));
      best_squared = std::min(best_squared, squared_error_risk(probe, g));
    }
    ++report.cases;
    const double slack = best_squared - best_rloss;
    if (best_rloss > best_squared + kMisspecificationTolerance) {
      report.holds = false;
      ++report.violations;
    }
    report.max_rloss_misspecification = std::max(report.max_rloss_misspecification, best_rloss);
    report.max_squared_misspecification = std::max(report.max_squared_misspecification, best_squared);
    report.max_gap = std::max(report.max_gap, slack);
    report.worst_slack = std::min(report.worst_slack, slack);
  }
  return report;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

using KernelFunction = std::function<ActionDistribution(const Vector& context)>;
using ScoreFunction = std::function<Vector(const Vector& context)>;

/// Monte Carlo estimate of E_x[ sum_a p(a|x) <e_a - p(x), g(x,.) - f*(x,.)>^2 ]
/// over fresh contexts, with the inner expectation over actions done exactly.
inline MonteCarloEstimate mc_excess_risk(const Environment& env, const KernelFunction& kernel,
                                         const ScoreFunction& g, std::size_t n, SeededRng& rng,
                                         std::uint64_t t = 1) {
  require(n >= 2, "mc_excess_risk: need at least two draws");
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = rng.unit_sphere(env.context_dim());
    const Vector diff = g(x) - env.mean_rewards(x, t);
    const ActionDistribution p = kernel(x);
    const double centre = p.probs().dot(diff);
    double value = 0.0;
    for (Eigen::Index a = 0; a < diff.size(); ++a) {
      const double pa = p.probs()[a];
      if (pa > 0.0) value += pa * (diff[a] - centre) * (diff[a] - centre);
    }
    sum += value;
    sum_sq += value * value;
  }
  const double count = static_cast<double>(n);
  MonteCarloEstimate est;
  est.draws = n;
  est.mean = sum / count;
  const double variance = std::max(0.0, (sum_sq - count * est.mean * est.mean) / (count - 1.0));
  est.standard_error = std::sqrt(variance / count);
  return est;
}

}  // namespace hte_bandit::validation
