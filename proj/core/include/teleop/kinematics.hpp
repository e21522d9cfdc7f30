#pragma once

// Forward and differential kinematics of a 6-joint serial arm described by
// a standard (distal) Denavit-Hartenberg table:
//
//   T_{i-1,i} = Rz(q_i + theta_offset_i) * Tz(d_i) * Tx(a_i) * Rx(alpha_i)
//
// Frame 0 is the base, frame i is rigidly attached to link i and frame 6 is
// the flange (end-effector). All functions here are pure.

#include <array>
#include <span>
#include <vector>

#include "teleop/autodiff.hpp"
#include "teleop/types.hpp"

namespace teleop {

struct DhRow {
  double a = 0.0;             // m
  double d = 0.0;             // m
  double alpha = 0.0;         // rad
  double theta_offset = 0.0;  // rad
};

struct DhTable {
  std::array<DhRow, kJointCount> rows{};

  /// Throws ConfigError if any entry is not finite.
  void validate() const;
  /// Sum of |a_i|, the planar link lengths.
  double link_length_sum() const;
};

/// A collision sphere rigidly attached to the frame of `link` (0 = base).
struct SphereSpec {
  int id = 0;
  int link = 0;
  Vec3 local_center = Vec3::Zero();
  double radius = 0.0;

  void validate() const;
};

inline constexpr int kFrameCount = kJointCount + 1;

struct KinematicsResult {
  std::array<Eigen::Isometry3d, kFrameCount> frames;  // base, link 1..6
  Pose ee;
};

KinematicsResult forward_kinematics(const JointVector& q, const DhTable& dh);

/// World-frame sphere centers, in input order. Throws ConfigError on a bad link index.
std::vector<Vec3> sphere_centers(const JointVector& q, std::span<const SphereSpec> spheres,
                                 const DhTable& dh);

/// 3x6 Jacobian of the end-effector position.
Eigen::Matrix<double, 3, kJointCount> position_jacobian(const JointVector& q, const DhTable& dh);

/// Second time derivative of p(q(t)) = J q_dd + Jdot q_d.
Vec3 ee_acceleration(const JointVector& q, const JointVector& qd, const JointVector& qdd,
                     const DhTable& dh);

/// Gravity-inclusive acceleration expressed in the flange frame,
/// a_local = R_wl * (p_dd + g), where R_wl = R(q)^T maps world vectors into
/// the flange frame (see README, "Frame conventions").
Vec3 local_acceleration(const JointVector& q, const JointVector& qd, const JointVector& qdd,
                        const Vec3& g, const DhTable& dh);

/// Same quantity for a known flange rotation and world acceleration.
inline Vec3 local_acceleration(const Mat3& R, const Vec3& p_dd, const Vec3& g) {
  return R.transpose() * (p_dd + g);
}

namespace detail {

/// Rigid transform over an arbitrary scalar type (double, Dual, Jet, ...).
template <typename S>
struct Frame {
  std::array<S, 9> R;  // row-major
  std::array<S, 3> p;

  static Frame identity() {
    Frame f;
    for (int i = 0; i < 9; ++i) f.R[i] = S(i % 4 == 0 ? 1.0 : 0.0);
    for (auto& c : f.p) c = S(0.0);
    return f;
  }

  std::array<S, 3> apply(const Vec3& v) const {
    std::array<S, 3> out;
    for (int r = 0; r < 3; ++r) {
      out[r] = p[r] + R[3 * r] * v.x() + R[3 * r + 1] * v.y() + R[3 * r + 2] * v.z();
    }
    return out;
  }
};

/// Compose T * DH(theta, row) without forming the DH matrix explicitly.
template <typename S>
Frame<S> append_dh(const Frame<S>& T, const S& theta, const DhRow& row) {
  using std::cos;
  using std::sin;
  using ad::cos;
  using ad::sin;
  const S ct = cos(theta);
  const S st = sin(theta);
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);
  // Local rotation columns: x = [ct, st, 0], y = [-st ca, ct ca, sa], z = [st sa, -ct sa, ca]
  Frame<S> out;
  for (int r = 0; r < 3; ++r) {
    const S& r0 = T.R[3 * r];
    const S& r1 = T.R[3 * r + 1];
    const S& r2 = T.R[3 * r + 2];
    const S x = r0 * ct + r1 * st;
    const S y = r1 * ct - r0 * st;
    out.R[3 * r] = x;
    out.R[3 * r + 1] = ca * y + sa * r2;
    out.R[3 * r + 2] = ca * r2 - sa * y;
    out.p[r] = T.p[r] + row.a * x + row.d * r2;
  }
  return out;
}

/// All kFrameCount frames of the chain for joint values of scalar type S.
template <typename S>
std::array<Frame<S>, kFrameCount> chain(const std::array<S, kJointCount>& q, const DhTable& dh) {
  std::array<Frame<S>, kFrameCount> frames;
  frames[0] = Frame<S>::identity();
  for (int i = 0; i < kJointCount; ++i) {
    frames[i + 1] = append_dh(frames[i], q[i] + dh.rows[i].theta_offset, dh.rows[i]);
  }
  return frames;
}

/// Frames along q(t) = q + qd t + qdd t^2 / 2 as second-order jets.
std::array<Frame<ad::Jet<double>>, kFrameCount> chain_jet(const JointVector& q,
                                                          const JointVector& qd,
                                                          const JointVector& qdd,
                                                          const DhTable& dh);

}  // namespace detail

/// Partials of the quantities entering the stage cost at one node, taken
/// with respect to z = [q (6), qd (6), u (6)].
struct NodeKinematics {
  using Grad = Eigen::Matrix<double, 1, 3 * kJointCount>;

  Pose ee;
  Vec3 p_dd = Vec3::Zero();
  Eigen::Matrix<double, 3, kJointCount> dp_dq;
  std::array<Eigen::Matrix<double, 3, kJointCount>, 3> dR_dq;  // dR(:, c)/dq for column c
  Eigen::Matrix<double, 3, 3 * kJointCount> dpdd_dz;
  std::array<Eigen::Isometry3d, kFrameCount> frames;
};

/// One differentiated pass through the chain at (q, qd, u).
NodeKinematics node_kinematics(const JointVector& q, const JointVector& qd, const JointVector& u,
                               const DhTable& dh);

/// World sphere centers and their 3x6 Jacobians w.r.t. q.
struct SphereKinematics {
  std::vector<Vec3> centers;
  std::vector<Eigen::Matrix<double, 3, kJointCount>> jacobians;
};

SphereKinematics sphere_kinematics(const JointVector& q, std::span<const SphereSpec> spheres,
                                   const DhTable& dh);

}  // namespace teleop
