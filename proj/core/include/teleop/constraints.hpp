#pragma once

#include <span>
#include <utility>
#include <vector>

#include "teleop/kinematics.hpp"
#include "teleop/types.hpp"

namespace teleop {

/// Inclusive box bounds on joint angles, velocities and accelerations.
struct Limits {
  JointVector q_min = JointVector::Constant(-2.0 * EIGEN_PI);
  JointVector q_max = JointVector::Constant(2.0 * EIGEN_PI);
  JointVector qd_min = JointVector::Constant(-EIGEN_PI);
  JointVector qd_max = JointVector::Constant(EIGEN_PI);
  JointVector u_min = JointVector::Constant(-10.0);
  JointVector u_max = JointVector::Constant(10.0);

  /// Throws ConfigError unless min < max elementwise. u_min == u_max is
  /// allowed and locks that joint's acceleration.
  void validate() const;

  StateVector x_min() const;
  StateVector x_max() const;
};

/// Sphere index pairs (positions in the sphere list, i < j) that must stay
/// separated. Same-link and adjacent-link pairs are excluded.
class CollisionPairSet {
 public:
  CollisionPairSet() = default;
  explicit CollisionPairSet(std::vector<std::pair<int, int>> pairs);

  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

 private:
  std::vector<std::pair<int, int>> pairs_;
};

CollisionPairSet build_pairs(std::span<const SphereSpec> spheres);

/// margin_ij = |c_i - c_j|^2 - (r_i + r_j)^2, one entry per pair.
std::vector<double> collision_margins(const JointVector& q, std::span<const SphereSpec> spheres,
                                      const CollisionPairSet& pairs, const DhTable& dh);

/// Margins from precomputed world centers (no kinematics).
std::vector<double> collision_margins(std::span<const Vec3> centers,
                                      std::span<const SphereSpec> spheres,
                                      const CollisionPairSet& pairs);

/// Exceedance per bound, laid out as
/// [q below min (6), q above max (6), qd below (6), qd above (6), u below (6), u above (6)].
/// All zeros iff every bound holds; bounds are inclusive.
using BoxViolations = Eigen::Matrix<double, 6 * kJointCount, 1>;
BoxViolations box_violations(const JointState& x, const ControlInput& u, const Limits& lim);

}  // namespace teleop
