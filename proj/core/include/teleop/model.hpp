#pragma once

#include "teleop/types.hpp"

namespace teleop {

using StateMatrix = Eigen::Matrix<double, kStateSize, kStateSize>;
using InputMatrix = Eigen::Matrix<double, kStateSize, kJointCount>;

/// Exact zero-order-hold discretization of the per-joint double integrator
/// d/dt [q; qd] = [0 I; 0 0] [q; qd] + [0; I] u.
struct DiscreteModel {
  StateMatrix A_d = StateMatrix::Identity();
  InputMatrix B_d = InputMatrix::Zero();
  double dt = 0.0;
};

/// Throws ParameterError if dt <= 0 or not finite.
DiscreteModel discretize(double dt);

StateVector step(const StateVector& x, const ControlInput& u, const DiscreteModel& m);
JointState step(const JointState& x, const ControlInput& u, const DiscreteModel& m);

}  // namespace teleop
