#include <gtest/gtest.h>

#include "hte_bandit/linalg.hpp"
#include "support.hpp"

using namespace hte_bandit;
using testing_support::Table;

namespace {

Matrix random_matrix(SeededRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Table to_table(const Matrix& m) {
  Table t(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) t[i][j] = m(i, j);
  return t;
}

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST(Ridge, MatchesGaussianEliminationOracle) {
  SeededRng rng(1, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = random_matrix(rng, 60, 7);
    const Vector y = random_matrix(rng, 60, 1);
    const auto oracle = testing_support::least_squares(to_table(z), to_vec(y));
    const auto sol = linalg::ridge_least_squares(z, y, 0.0);
    EXPECT_FALSE(sol.rank_deficient);
    for (std::size_t j = 0; j < oracle.size(); ++j) EXPECT_NEAR(sol.theta[static_cast<Eigen::Index>(j)], oracle[j], 1e-10);
  }
}

TEST(Ridge, ScalarClosedForm) {
  const Matrix z = (Matrix(1, 2) << 1.0, 0.0).finished();
  const Vector y = Vector::Ones(1);
  const auto sol = linalg::ridge_least_squares(z, y, 1.0);
  EXPECT_NEAR(sol.theta[0], 0.5, 1e-15);
  EXPECT_NEAR(sol.theta[1], 0.0, 1e-15);
}

TEST(Ridge, RankDeficientDesignFallsBackToClippedSolve) {
  SeededRng rng(2, 9);
  Matrix z = random_matrix(rng, 30, 4);
  z.col(3) = z.col(0) + z.col(1);
  const Vector theta_true = (Vector(4) << 1.0, -2.0, 0.5, 0.0).finished();
  const Vector y = z * theta_true;
  const auto sol = linalg::ridge_least_squares(z, y, 0.0);
  EXPECT_TRUE(sol.rank_deficient);
  EXPECT_NEAR((z * sol.theta - y).norm(), 0.0, 1e-8);
}

TEST(Lasso, SoftThreshold) {
  EXPECT_DOUBLE_EQ(linalg::soft_threshold(3.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(linalg::soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_DOUBLE_EQ(linalg::soft_threshold(0.5, 1.0), 0.0);
}

TEST(Lasso, ZeroPenaltyReducesToLeastSquares) {
  SeededRng rng(3, 9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix z = random_matrix(rng, 80, 6);
    const Vector y = random_matrix(rng, 80, 1);
    const auto ls = testing_support::least_squares(to_table(z), to_vec(y));
    const auto sol = linalg::lasso_coordinate_descent(z, y, std::vector<bool>(6, true), 0.0);
    EXPECT_TRUE(sol.converged);
    for (std::size_t j = 0; j < ls.size(); ++j) EXPECT_NEAR(sol.theta[static_cast<Eigen::Index>(j)], ls[j], 1e-6);
  }
}

TEST(Lasso, KarushKuhnTuckerConditions) {
  SeededRng rng(4, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 100, p = 8;
    const Matrix z = random_matrix(rng, n, p);
    Vector y = z.col(0) * 2.0 - z.col(3) + 0.5 * random_matrix(rng, n, 1);
    std::vector<bool> penalized(p, true);
    penalized[7] = false;
    const double lambda = rng.uniform(0.05, 0.5);
    const auto sol = linalg::lasso_coordinate_descent(z, y, penalized, lambda);
    ASSERT_TRUE(sol.converged);
    const Vector grad = z.transpose() * (y - z * sol.theta) / static_cast<double>(n);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double scale = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n));
      if (!penalized[static_cast<std::size_t>(j)]) {
        EXPECT_NEAR(grad[j], 0.0, 1e-6);
      } else if (sol.theta[j] != 0.0) {
        EXPECT_NEAR(grad[j], lambda * scale * (sol.theta[j] > 0 ? 1.0 : -1.0), 1e-6);
      } else {
        EXPECT_LE(std::abs(grad[j]), lambda * scale + 1e-6);
      }
    }
  }
}

TEST(Lasso, LargePenaltyKillsEveryPenalizedCoefficient) {
  SeededRng rng(5, 9);
  const Matrix z = random_matrix(rng, 50, 5);
  const Vector y = random_matrix(rng, 50, 1);
  const Vector scale = linalg::column_rms(z);
  double kill = 0.0;
  for (Eigen::Index j = 0; j < 5; ++j) kill = std::max(kill, std::abs(z.col(j).dot(y)) / 50.0 / scale[j]);
  const auto sol = linalg::lasso_coordinate_descent(z, y, std::vector<bool>(5, true), kill * (1.0 + 1e-9));
  EXPECT_EQ(sol.theta.cwiseAbs().maxCoeff(), 0.0);
  const auto below = linalg::lasso_coordinate_descent(z, y, std::vector<bool>(5, true), 0.9 * kill);
  EXPECT_GT(below.theta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lasso, RejectsBadArguments) {
  const Matrix z = Matrix::Ones(3, 2);
  const Vector y = Vector::Ones(3);
  EXPECT_THROW(linalg::lasso_coordinate_descent(z, y, {true}, 0.1), std::invalid_argument);
  EXPECT_THROW(linalg::lasso_coordinate_descent(z, y, {true, true}, -0.1), std::invalid_argument);
}
