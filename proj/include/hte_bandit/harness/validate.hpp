#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hte_bandit/harness/experiment.hpp"
#include "hte_bandit/policy.hpp"
#include "hte_bandit/validation.hpp"

namespace hte_bandit::validation {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kKernelTolerance = 1e-12;
inline constexpr double kStrictGapMinimum = 0.1;

/// Largest deviation among the three excess-risk routes over `instances`
/// random instances, each with a random g, two random mu_hat tables and
/// random noise variances.
inline CheckResult check_identity_sweep(std::size_t instances = 50, std::uint64_t seed = 1,
                                        const ExcessRiskFormula& formula = gap_excess_risk) {
  SeededRng rng(seed, Stream::validation);
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const FiniteInstance inst = random_instance(rng);
    const auto rows = inst.f_star.rows(), cols = inst.f_star.cols();
    const Matrix g = random_table(rng, rows, cols, -1.0, 2.0);
    Vector mu_a(rows), mu_b(rows);
    for (Eigen::Index x = 0; x < rows; ++x) {
      mu_a[x] = rng.uniform(-1.0, 1.0);
      mu_b[x] = rng.uniform(-1.0, 1.0) + 0.7;
    }
    const Matrix noise = random_table(rng, rows, cols, 0.0, 0.1);
    worst = std::max(worst, check_excess_risk_identity(inst, g, mu_a, mu_b, noise, formula));
  }
  CheckResult r;
  r.name = "excess-risk identity";
  r.passed = worst <= kIdentityTolerance;
  r.detail = std::to_string(instances) + " instances, max deviation " + csv::format_double(worst);
  return r;
}

/// Model class {f* + c(x)}: shifting every action of a context by the same
/// amount leaves the gaps intact, so the R-loss misspecification is zero
/// while the squared error sees c(x)^2.
inline MisspecificationReport shifted_class_case(SeededRng& rng, double shift = 0.5) {
  FiniteInstance inst = random_instance(rng);
  inst.f_star = random_table(rng, 5, 3);
  inst.context_probs = random_simplex(rng, 5);
  inst.kernel = random_kernel(rng, 5, 3);
  Matrix shifted = inst.f_star;
  for (Eigen::Index x = 0; x < shifted.rows(); ++x) shifted.row(x).array() += (x % 2 == 0 ? shift : -shift);
  return check_misspecification_bound(inst, {shifted}, 1, rng);
}

inline CheckResult check_misspecification_sweep(std::size_t instances = 100, std::size_t kernels = 20,
                                                std::uint64_t seed = 2) {
  SeededRng rng(seed, Stream::validation);
  std::size_t cases = 0, violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < instances; ++i) {
    const FiniteInstance inst = random_instance(rng);
    std::vector<Matrix> model_class;
    const std::size_t size = 1 + rng.below(5);
    for (std::size_t j = 0; j < size; ++j)
      model_class.push_back(random_table(rng, inst.f_star.rows(), inst.f_star.cols()));
    const auto report = check_misspecification_bound(inst, model_class, kernels, rng);
    cases += report.cases;
    violations += report.violations;
    worst_slack = std::min(worst_slack, report.worst_slack);
  }
  const auto strict = shifted_class_case(rng);
  CheckResult r;
  r.name = "misspecification bound";
  r.passed = violations == 0 && strict.holds && strict.worst_slack >= kStrictGapMinimum;
  r.detail = std::to_string(cases - violations) + "/" + std::to_string(cases) + " cases hold, min slack " +
             csv::format_double(worst_slack) + ", shifted-class gap " + csv::format_double(strict.worst_slack);
  return r;
}

/// Random (scores, gamma) pairs: valid simplex, greedy action keeps at least
/// 1/K and stays the argmax of the kernel.
inline CheckResult check_kernel_sweep(std::size_t draws = 100000, std::uint64_t seed = 3) {
  SeededRng rng(seed, Stream::validation);
  std::size_t failures = 0;
  double worst_sum = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const std::size_t k = 2 + rng.below(7);
    const double scale = std::pow(10.0, rng.uniform(-3.0, 2.0));
    Vector scores(static_cast<Eigen::Index>(k));
    for (Eigen::Index a = 0; a < scores.size(); ++a) scores[a] = scale * rng.normal();
    if (rng.uniform() < 0.05) scores[1] = scores[0];
    const double gamma = std::pow(10.0, rng.uniform(0.0, 5.0));
    const ActionDistribution p = igw_kernel(scores, gamma);
    const Vector& probs = p.probs();
    const auto best = static_cast<Eigen::Index>(greedy_action(scores));
    const double sum_error = std::abs(probs.sum() - 1.0);
    worst_sum = std::max(worst_sum, sum_error);
    bool ok = sum_error <= kKernelTolerance && (probs.array() >= 0.0).all() && (probs.array() <= 1.0).all();
    ok = ok && probs[best] >= 1.0 / static_cast<double>(k) - kKernelTolerance;
    for (Eigen::Index a = 0; a < probs.size(); ++a) ok = ok && probs[a] <= probs[best];
    if (!ok) ++failures;
  }
  CheckResult r;
  r.name = "kernel invariants";
  r.passed = failures == 0;
  r.detail = std::to_string(draws - failures) + "/" + std::to_string(draws) + " draws valid, max |sum-1| " +
             csv::format_double(worst_sum);
  return r;
}

/// Every round of a run: sum_a p(a)(s_best - s_a) <= K / gamma.
inline CheckResult check_implicit_regret_sweep(RunConfig config, std::uint64_t seed = 1) {
  std::size_t rounds = 0, failures = 0;
  double worst = -std::numeric_limits<double>::infinity();
  const double k = static_cast<double>(config.environment.K);
  run_seed(config, seed, [&](const Round&, const Decision& d, const BanditPolicy&) {
    ++rounds;
    const double slack = implicit_regret(d.scores, d.propensities) - k / d.gamma;
    worst = std::max(worst, slack);
    if (slack > kKernelTolerance) ++failures;
  });
  CheckResult r;
  r.name = "implicit regret bound";
  r.passed = failures == 0 && rounds == config.horizon();
  r.detail = std::to_string(rounds - failures) + "/" + std::to_string(rounds) +
             " rounds within K/gamma, max excess " + csv::format_double(worst);
  return r;
}

inline RunConfig default_sweep_config() {
  RunConfig config;
  config.environment.scenario = Scenario::lin_lin;
  config.environment.d = 20;
  config.environment.K = 2;
  config.environment.horizon = 5000;
  config.algorithm = Algorithm::hte_igw;
  config.oracle.c_xi = 0.01;
  config.seeds = {1};
  return config;
}

template <class Check>
CheckResult timed(Check&& check) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r = check();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::vector<CheckResult> run_validation() {
  return {timed([] { return check_identity_sweep(); }), timed([] { return check_misspecification_sweep(); }),
          timed([] { return check_kernel_sweep(); }),
          timed([] { return check_implicit_regret_sweep(default_sweep_config()); })};
}

inline bool report(const std::vector<CheckResult>& results, std::ostream& out) {
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    char seconds[32];
    std::snprintf(seconds, sizeof(seconds), "%.2fs", r.seconds);
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " (" << seconds << ")\n";
  }
  return all;
}

}  // namespace hte_bandit::validation
