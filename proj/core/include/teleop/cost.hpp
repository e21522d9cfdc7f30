#pragma once

// Stage costs of the teleoperation objective and their Riemann-sum total.
//
//   l1p = (p - p_ref)^T diag(w1p) (p - p_ref)          position tracking
//   l1o = w1o |I - R R_ref^T|_F^2                       orientation tracking
//   l2a = qd^T diag(w2a) qd,  l2b = u^T diag(w2b) u     regularization
//   l3  = (a_local - g)^T diag(w3, w3, w3) (a_local - g) slosh
//
//   J_d = dt * sum_{k=1..N} [l1p + l1o + l2a + l2b + l3](x_k, u_{k-1})

#include <span>
#include <vector>

#include "teleop/kinematics.hpp"
#include "teleop/reference.hpp"
#include "teleop/types.hpp"

namespace teleop {

struct Weights {
  Vec3 w1p = Vec3::Constant(500.0);
  double w1o = 5.0;
  JointVector w2a = JointVector::Constant(0.1);
  JointVector w2b = JointVector::Constant(0.02);
  double w3 = 0.0;

  /// Throws ConfigError on any negative or non-finite weight.
  void validate() const;
};

double cost_position(const Vec3& p, const Vec3& p_ref, const Vec3& w1p);
double cost_orientation(const Mat3& R, const Mat3& R_ref, double w1o);
double cost_motion(const JointVector& qd, const JointVector& u, const JointVector& w2a,
                   const JointVector& w2b);
double cost_slosh(const Vec3& a_local, double w3, const Vec3& g);
double cost_slosh(const JointVector& q, const JointVector& qd, const JointVector& u, double w3,
                  const Vec3& g, const DhTable& dh);

/// Stacked weighted residual of one stage, l = r^T r:
/// [position (3), orientation (9), velocity (6), control (6), slosh (3)].
inline constexpr int kResidualSize = 27;
using ResidualVector = Eigen::Matrix<double, kResidualSize, 1>;
/// Jacobian w.r.t. z = [q, qd, u].
using ResidualJacobian = Eigen::Matrix<double, kResidualSize, 3 * kJointCount>;

struct StageResidual {
  ResidualVector r = ResidualVector::Zero();
  ResidualJacobian J = ResidualJacobian::Zero();
  NodeKinematics kin;
};

StageResidual stage_residual(const JointState& x, const ControlInput& u, const Vec3& p_ref,
                             const Mat3& R_ref, const Weights& w, const Vec3& g, const DhTable& dh);

/// Value-only stage cost (no derivatives).
double stage_cost(const JointState& x, const ControlInput& u, const Vec3& p_ref, const Mat3& R_ref,
                  const Weights& w, const Vec3& g, const DhTable& dh);

/// J_d for X = [x_0 .. x_N], U = [u_0 .. u_{N-1}]. Throws ParameterError on
/// inconsistent lengths.
double total_cost(std::span<const JointState> X, std::span<const ControlInput> U,
                  const ReferenceTrajectory& ref, const Weights& w, double dt, const DhTable& dh,
                  const Vec3& g = default_gravity());

/// Gradient of J_d in the decision layout [x_1 .. x_N, u_0 .. u_{N-1}]
/// (x_0 is a fixed parameter), size 12 N + 6 N.
struct CostWithGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

CostWithGradient total_cost_gradient(std::span<const JointState> X,
                                     std::span<const ControlInput> U,
                                     const ReferenceTrajectory& ref, const Weights& w, double dt,
                                     const DhTable& dh, const Vec3& g = default_gravity());

/// Pack / unpack the decision layout used by total_cost_gradient.
Eigen::VectorXd pack_decision(std::span<const JointState> X, std::span<const ControlInput> U);
void unpack_decision(const Eigen::VectorXd& z, std::span<JointState> X, std::span<ControlInput> U);

}  // namespace teleop
