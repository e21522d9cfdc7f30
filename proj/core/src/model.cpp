#include "teleop/model.hpp"

#include <cmath>
#include <string>

namespace teleop {

DiscreteModel discretize(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ParameterError("discretize: dt must be positive and finite, got " + std::to_string(dt));
  }
  DiscreteModel m;
  m.dt = dt;
  const auto I = Eigen::Matrix<double, kJointCount, kJointCount>::Identity();
  m.A_d.setIdentity();
  m.A_d.topRightCorner<kJointCount, kJointCount>() = dt * I;
  m.B_d.topRows<kJointCount>() = 0.5 * dt * dt * I;
  m.B_d.bottomRows<kJointCount>() = dt * I;
  return m;
}

StateVector step(const StateVector& x, const ControlInput& u, const DiscreteModel& m) {
  return m.A_d * x + m.B_d * u;
}

JointState step(const JointState& x, const ControlInput& u, const DiscreteModel& m) {
  return JointState::from_stacked(step(x.stacked(), u, m));
}

}  // namespace teleop
