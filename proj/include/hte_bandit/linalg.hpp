#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hte_bandit/core.hpp"

namespace hte_bandit::linalg {

struct RidgeSolution {
  Vector theta;
  bool rank_deficient = false;
};

/// Eigenvalues at or below this fraction of the largest are treated as zero.
inline constexpr double kEigenClip = 1e-12;

/// Solves (A + ridge I) theta = b for symmetric positive semi-definite A.
///
/// Cholesky first, with one step of iterative refinement. A failed or
/// numerically singular factorization falls back to the minimum-norm solution
/// from an eigendecomposition with eigenvalues clipped at kEigenClip.
inline RidgeSolution solve_normal_equations(const Matrix& gram, const Vector& rhs, double ridge) {
  require(gram.rows() == gram.cols() && gram.rows() == rhs.size(), "solve_normal_equations: shape");
  require(ridge >= 0.0 && std::isfinite(ridge), "solve_normal_equations: ridge must be >= 0");
  const Eigen::Index p = gram.rows();
  Matrix system = gram;
  system.diagonal().array() += ridge;

  const double scale = std::max(system.diagonal().maxCoeff(), 0.0);
  Eigen::LLT<Matrix> chol(system);
  bool ok = chol.info() == Eigen::Success && scale > 0.0;
  if (ok) {
    const Vector pivots = chol.matrixLLT().diagonal();
    ok = (pivots.array().square() > kEigenClip * scale).all();
  }
  if (ok) {
    Vector theta = chol.solve(rhs);
    theta += chol.solve(rhs - system * theta);
    return {std::move(theta), false};
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(system);
  const Vector& values = eig.eigenvalues();
  const double top = p > 0 ? std::max(values.cwiseAbs().maxCoeff(), 0.0) : 0.0;
  Vector inverse = Vector::Zero(p);
  for (Eigen::Index i = 0; i < p; ++i)
    if (top > 0.0 && values[i] > kEigenClip * top) inverse[i] = 1.0 / values[i];
  const Matrix& vecs = eig.eigenvectors();
  Vector theta = vecs * inverse.asDiagonal() * (vecs.transpose() * rhs);
  return {std::move(theta), true};
}

/// Ridge least squares: argmin ||y - Z theta||^2 + ridge ||theta||^2.
inline RidgeSolution ridge_least_squares(const Matrix& design, const Vector& target, double ridge) {
  require(design.rows() == target.size(), "ridge_least_squares: row mismatch");
  const Matrix gram = design.transpose() * design;
  const Vector rhs = design.transpose() * target;
  return solve_normal_equations(gram, rhs, ridge);
}

struct LassoSolution {
  Vector theta;
  Vector column_scale;  // root-mean-square of each design column
  double lambda = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
};

inline constexpr double kLassoTolerance = 1e-8;
inline constexpr std::size_t kLassoMaxSweeps = 10000;

inline double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

inline Vector column_rms(const Matrix& design) {
  const double n = static_cast<double>(std::max<Eigen::Index>(design.rows(), 1));
  return (design.colwise().squaredNorm().transpose() / n).cwiseSqrt();
}

/// Cyclic coordinate descent for
///   (1/2n) ||y - Z theta||^2 + lambda * sum_{j penalized} s_j |theta_j|
/// with s_j the RMS of column j, i.e. the usual LASSO on standardized columns
/// reported back on the original scale. Stops once the largest standardized
/// coefficient change in a sweep is below kLassoTolerance.
inline LassoSolution lasso_coordinate_descent(const Matrix& design, const Vector& target,
                                              const std::vector<bool>& penalized, double lambda,
                                              std::size_t max_sweeps = kLassoMaxSweeps) {
  require(design.rows() == target.size(), "lasso: row mismatch");
  require(static_cast<Eigen::Index>(penalized.size()) == design.cols(), "lasso: mask length");
  require(lambda >= 0.0 && std::isfinite(lambda), "lasso: lambda must be >= 0");
  const Eigen::Index p = design.cols();
  const double n = static_cast<double>(std::max<Eigen::Index>(design.rows(), 1));

  const Matrix gram = design.transpose() * design / n;
  const Vector corr = design.transpose() * target / n;

  LassoSolution out;
  out.lambda = lambda;
  out.column_scale = gram.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.theta = Vector::Zero(p);
  Vector gradient = corr;  // corr - gram * theta

  for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) continue;
      const double old = out.theta[j];
      const double partial = gradient[j] + gjj * old;
      const double threshold = penalized[static_cast<std::size_t>(j)] ? lambda * out.column_scale[j] : 0.0;
      const double updated = soft_threshold(partial, threshold) / gjj;
      const double delta = updated - old;
      if (delta != 0.0) {
        out.theta[j] = updated;
        gradient.noalias() -= gram.col(j) * delta;
        max_change = std::max(max_change, std::abs(delta) * out.column_scale[j]);
      }
    }
    if (max_change < kLassoTolerance) {
      out.converged = true;
      break;
    }
  }
  if (out.sweeps > max_sweeps) out.sweeps = max_sweeps;
  return out;
}

}  // namespace hte_bandit::linalg
