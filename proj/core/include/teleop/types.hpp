#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace teleop {

inline constexpr int kJointCount = 6;
inline constexpr int kStateSize = 2 * kJointCount;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using JointVector = Eigen::Matrix<double, kJointCount, 1>;
using StateVector = Eigen::Matrix<double, kStateSize, 1>;

/// Joint angles and velocities; the OCP state x = [q; qd].
struct JointState {
  JointVector q = JointVector::Zero();
  JointVector qd = JointVector::Zero();

  StateVector stacked() const {
    StateVector x;
    x << q, qd;
    return x;
  }
  static JointState from_stacked(const StateVector& x) {
    return {x.head<kJointCount>(), x.tail<kJointCount>()};
  }
};

/// Joint accelerations, the OCP control input.
using ControlInput = JointVector;

/// End-effector pose. `R` maps flange-frame vectors to world coordinates.
struct Pose {
  Vec3 p = Vec3::Zero();
  Mat3 R = Mat3::Identity();
};

/// Standard gravity as used by the slosh model (world z up).
inline Vec3 default_gravity() { return {0.0, 0.0, 9.81}; }

// Error taxonomy. Configuration and parse errors map to CLI exit code 2.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace teleop
