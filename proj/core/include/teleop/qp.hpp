#pragma once

#include <Eigen/Dense>

namespace teleop {

enum class QpStatus { kSolved, kInfeasible, kNotConvex, kIterationLimit };

struct QpResult {
  QpStatus status = QpStatus::kSolved;
  Eigen::VectorXd x;
  /// One multiplier per constraint row, >= 0, zero for inactive rows.
  Eigen::VectorXd multipliers;
  int iterations = 0;
  int active_count = 0;
};

/// Dense strictly convex QP
///
///   min 0.5 x^T H x + g^T x   s.t.  C x >= b   (row-wise)
///
/// solved with the Goldfarb-Idnani dual active-set method. H must be
/// symmetric positive definite. The method starts from the unconstrained
/// minimizer and adds the most violated constraint at each step, so the
/// cost is small when few constraints are active.
QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& C,
                  const Eigen::VectorXd& b, int max_iterations = 0);

}  // namespace teleop
