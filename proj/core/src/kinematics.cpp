#include "teleop/kinematics.hpp"

#include <cmath>
#include <string>

namespace teleop {

namespace {

template <typename S>
Eigen::Isometry3d to_isometry(const detail::Frame<S>& f) {
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) T.linear()(r, c) = ad::value(f.R[3 * r + c]);
    T.translation()(r) = ad::value(f.p[r]);
  }
  return T;
}

void check_link(const SphereSpec& s) {
  if (s.link < 0 || s.link >= kFrameCount) {
    throw ConfigError("sphere " + std::to_string(s.id) + ": link index " + std::to_string(s.link) +
                      " outside 0.." + std::to_string(kFrameCount - 1));
  }
}

}  // namespace

void DhTable::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!std::isfinite(r.a) || !std::isfinite(r.d) || !std::isfinite(r.alpha) ||
        !std::isfinite(r.theta_offset)) {
      throw ConfigError("DH row " + std::to_string(i) + " has a non-finite entry");
    }
  }
}

double DhTable::link_length_sum() const {
  double sum = 0.0;
  for (const auto& r : rows) sum += std::abs(r.a);
  return sum;
}

void SphereSpec::validate() const {
  check_link(*this);
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("sphere " + std::to_string(id) + ": radius must be positive");
  }
  if (!local_center.allFinite()) {
    throw ConfigError("sphere " + std::to_string(id) + ": center is not finite");
  }
}

KinematicsResult forward_kinematics(const JointVector& q, const DhTable& dh) {
  std::array<double, kJointCount> qa;
  for (int i = 0; i < kJointCount; ++i) qa[i] = q[i];
  const auto frames = detail::chain(qa, dh);
  KinematicsResult out;
  for (int i = 0; i < kFrameCount; ++i) out.frames[i] = to_isometry(frames[i]);
  out.ee.p = out.frames.back().translation();
  out.ee.R = out.frames.back().linear();
  return out;
}

std::vector<Vec3> sphere_centers(const JointVector& q, std::span<const SphereSpec> spheres,
                                 const DhTable& dh) {
  for (const auto& s : spheres) check_link(s);
  const auto fk = forward_kinematics(q, dh);
  std::vector<Vec3> centers;
  centers.reserve(spheres.size());
  for (const auto& s : spheres) centers.push_back(fk.frames[s.link] * s.local_center);
  return centers;
}

Eigen::Matrix<double, 3, kJointCount> position_jacobian(const JointVector& q, const DhTable& dh) {
  using D = ad::Dual<kJointCount>;
  std::array<D, kJointCount> qa;
  for (int i = 0; i < kJointCount; ++i) qa[i] = D::variable(q[i], i);
  const auto frames = detail::chain(qa, dh);
  Eigen::Matrix<double, 3, kJointCount> J;
  for (int r = 0; r < 3; ++r) J.row(r) = frames.back().p[r].g.transpose();
  return J;
}

namespace detail {

std::array<Frame<ad::Jet<double>>, kFrameCount> chain_jet(const JointVector& q,
                                                          const JointVector& qd,
                                                          const JointVector& qdd,
                                                          const DhTable& dh) {
  std::array<ad::Jet<double>, kJointCount> qa;
  for (int i = 0; i < kJointCount; ++i) qa[i] = {q[i], qd[i], 0.5 * qdd[i]};
  return chain(qa, dh);
}

}  // namespace detail

Vec3 ee_acceleration(const JointVector& q, const JointVector& qd, const JointVector& qdd,
                     const DhTable& dh) {
  const auto frames = detail::chain_jet(q, qd, qdd, dh);
  const auto& ee = frames.back();
  return {ee.p[0].second_derivative(), ee.p[1].second_derivative(), ee.p[2].second_derivative()};
}

Vec3 local_acceleration(const JointVector& q, const JointVector& qd, const JointVector& qdd,
                        const Vec3& g, const DhTable& dh) {
  const auto frames = detail::chain_jet(q, qd, qdd, dh);
  const auto& ee = frames.back();
  Mat3 R;
  Vec3 p_dd;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) R(r, c) = ee.R[3 * r + c].c0;
    p_dd[r] = ee.p[r].second_derivative();
  }
  return local_acceleration(R, p_dd, g);
}

NodeKinematics node_kinematics(const JointVector& q, const JointVector& qd, const JointVector& u,
                               const DhTable& dh) {
  constexpr int kZ = 3 * kJointCount;
  using D = ad::Dual<kZ>;
  using J = ad::Jet<D>;
  std::array<J, kJointCount> qa;
  for (int i = 0; i < kJointCount; ++i) {
    qa[i] = J(D::variable(q[i], i), D::variable(qd[i], kJointCount + i),
              D::variable(0.5 * u[i], 2 * kJointCount + i, 0.5));
  }
  const auto frames = detail::chain(qa, dh);
  const auto& ee = frames.back();

  NodeKinematics out;
  for (int i = 0; i < kFrameCount; ++i) {
    Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) T.linear()(r, c) = frames[i].R[3 * r + c].c0.v;
      T.translation()(r) = frames[i].p[r].c0.v;
    }
    out.frames[i] = T;
  }
  out.ee.p = out.frames.back().translation();
  out.ee.R = out.frames.back().linear();
  for (int r = 0; r < 3; ++r) {
    out.dp_dq.row(r) = ee.p[r].c0.g.template head<kJointCount>().transpose();
    const D pdd = ee.p[r].second_derivative();
    out.p_dd[r] = pdd.v;
    out.dpdd_dz.row(r) = pdd.g.transpose();
    for (int c = 0; c < 3; ++c) {
      out.dR_dq[c].row(r) = ee.R[3 * r + c].c0.g.template head<kJointCount>().transpose();
    }
  }
  return out;
}

SphereKinematics sphere_kinematics(const JointVector& q, std::span<const SphereSpec> spheres,
                                   const DhTable& dh) {
  for (const auto& s : spheres) check_link(s);
  using D = ad::Dual<kJointCount>;
  std::array<D, kJointCount> qa;
  for (int i = 0; i < kJointCount; ++i) qa[i] = D::variable(q[i], i);
  const auto frames = detail::chain(qa, dh);

  SphereKinematics out;
  out.centers.reserve(spheres.size());
  out.jacobians.reserve(spheres.size());
  for (const auto& s : spheres) {
    const auto c = frames[s.link].apply(s.local_center);
    Eigen::Matrix<double, 3, kJointCount> Jc;
    Vec3 v;
    for (int r = 0; r < 3; ++r) {
      v[r] = c[r].v;
      Jc.row(r) = c[r].g.transpose();
    }
    out.centers.push_back(v);
    out.jacobians.push_back(Jc);
  }
  return out;
}

}  // namespace teleop
