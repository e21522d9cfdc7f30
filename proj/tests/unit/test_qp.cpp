#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "teleop/qp.hpp"

using namespace teleop;

namespace {

struct Qp {
  Eigen::MatrixXd H, C;
  Eigen::VectorXd g, b;
};

Qp random_qp(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> d;
  Qp q;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n * n; ++i) M.data()[i] = d(rng);
  q.H = M * M.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  q.g = Eigen::VectorXd::NullaryExpr(n, [&] { return d(rng); });
  q.C = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return d(rng); });
  // Feasible by construction: a random point satisfies every row with slack.
  const Eigen::VectorXd x0 = Eigen::VectorXd::NullaryExpr(n, [&] { return d(rng); });
  q.b = q.C * x0 - Eigen::VectorXd::NullaryExpr(m, [&] { return std::abs(d(rng)); });
  return q;
}

double objective(const Qp& q, const Eigen::VectorXd& x) { return 0.5 * x.dot(q.H * x) + q.g.dot(x); }

// Exhaustive active-set enumeration: the best feasible equality-constrained
// minimizer over all subsets of rows.
double brute_force(const Qp& q) {
  const int m = static_cast<int>(q.C.rows());
  const int n = static_cast<int>(q.H.rows());
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < m; ++i) {
      if (mask & (1 << i)) rows.push_back(i);
    }
    const int k = static_cast<int>(rows.size());
    if (k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = q.H;
    rhs.head(n) = -q.g;
    for (int r = 0; r < k; ++r) {
      K.block(n + r, 0, 1, n) = q.C.row(rows[r]);
      K.block(0, n + r, n, 1) = q.C.row(rows[r]).transpose();
      rhs[n + r] = q.b[rows[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd x = lu.solve(rhs).head(n);
    if (((q.C * x - q.b).array() < -1e-9).any()) continue;
    best = std::min(best, objective(q, x));
  }
  return best;
}

}  // namespace

TEST(Qp, UnconstrainedMinimizer) {
  Eigen::MatrixXd H(2, 2);
  H << 2, 0, 0, 4;
  Eigen::VectorXd g(2);
  g << -2, -4;
  const auto r = solve_qp(H, g, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
  EXPECT_EQ(r.status, QpStatus::kSolved);
  EXPECT_LE((r.x - Eigen::Vector2d(1, 1)).norm(), 1e-14);
}

TEST(Qp, SingleActiveBound) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd g(2);
  g << -1, -1;
  Eigen::MatrixXd C(1, 2);
  C << -1, 0;  // x0 <= 0.25
  Eigen::VectorXd b(1);
  b << -0.25;
  const auto r = solve_qp(H, g, C, b);
  EXPECT_EQ(r.status, QpStatus::kSolved);
  EXPECT_NEAR(r.x[0], 0.25, 1e-14);
  EXPECT_NEAR(r.x[1], 1.0, 1e-14);
  EXPECT_NEAR(r.multipliers[0], 0.75, 1e-14);
  EXPECT_EQ(r.active_count, 1);
}

TEST(Qp, SatisfiesKktOnRandomProblems) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = random_qp(rng, 8, 12);
    const auto r = solve_qp(q.H, q.g, q.C, q.b);
    ASSERT_EQ(r.status, QpStatus::kSolved);
    const Eigen::VectorXd slack = q.C * r.x - q.b;
    EXPECT_GE(slack.minCoeff(), -1e-9);
    EXPECT_GE(r.multipliers.minCoeff(), 0.0);
    EXPECT_LE((q.H * r.x + q.g - q.C.transpose() * r.multipliers).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LE(r.multipliers.cwiseProduct(slack).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Qp, MatchesActiveSetEnumeration) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_qp(rng, 3, 5);
    const auto r = solve_qp(q.H, q.g, q.C, q.b);
    ASSERT_EQ(r.status, QpStatus::kSolved);
    EXPECT_NEAR(objective(q, r.x), brute_force(q), 1e-9);
  }
}

TEST(Qp, DetectsInfeasibility) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd C(2, 1);
  C << 1, -1;  // x >= 1 and x <= -1
  Eigen::VectorXd b(2);
  b << 1, 1;
  EXPECT_EQ(solve_qp(H, g, C, b).status, QpStatus::kInfeasible);
}

TEST(Qp, RejectsIndefiniteHessian) {
  Eigen::MatrixXd H(2, 2);
  H << 1, 0, 0, -1;
  EXPECT_EQ(solve_qp(H, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)).status,
            QpStatus::kNotConvex);
}
