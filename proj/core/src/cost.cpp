#include "teleop/cost.hpp"

#include <cmath>
#include <string>

namespace teleop {

namespace {

void check_lengths(std::size_t nx, std::size_t nu, const ReferenceTrajectory& ref) {
  const std::size_t N = nu;
  if (N == 0 || nx != N + 1 || static_cast<std::size_t>(ref.horizon()) != N ||
      ref.orientations.size() != N) {
    throw ParameterError("cost: expected N+1 states, N controls and an N-node reference (got " +
                         std::to_string(nx) + ", " + std::to_string(nu) + ", " +
                         std::to_string(ref.horizon()) + ")");
  }
}

}  // namespace

void Weights::validate() const {
  const bool ok = w1p.allFinite() && (w1p.array() >= 0.0).all() && std::isfinite(w1o) &&
                  w1o >= 0.0 && w2a.allFinite() && (w2a.array() >= 0.0).all() &&
                  w2b.allFinite() && (w2b.array() >= 0.0).all() && std::isfinite(w3) && w3 >= 0.0;
  if (!ok) throw ConfigError("weights must be finite and non-negative");
}

double cost_position(const Vec3& p, const Vec3& p_ref, const Vec3& w1p) {
  const Vec3 e = p - p_ref;
  return e.dot(w1p.cwiseProduct(e));
}

double cost_orientation(const Mat3& R, const Mat3& R_ref, double w1o) {
  return w1o * (Mat3::Identity() - R * R_ref.transpose()).squaredNorm();
}

double cost_motion(const JointVector& qd, const JointVector& u, const JointVector& w2a,
                   const JointVector& w2b) {
  return qd.dot(w2a.cwiseProduct(qd)) + u.dot(w2b.cwiseProduct(u));
}

double cost_slosh(const Vec3& a_local, double w3, const Vec3& g) {
  return w3 * (a_local - g).squaredNorm();
}

double cost_slosh(const JointVector& q, const JointVector& qd, const JointVector& u, double w3,
                  const Vec3& g, const DhTable& dh) {
  return cost_slosh(local_acceleration(q, qd, u, g, dh), w3, g);
}

StageResidual stage_residual(const JointState& x, const ControlInput& u, const Vec3& p_ref,
                             const Mat3& R_ref, const Weights& w, const Vec3& g,
                             const DhTable& dh) {
  constexpr int n = kJointCount;
  StageResidual s;
  s.kin = node_kinematics(x.q, x.qd, u, dh);
  const Mat3& R = s.kin.ee.R;

  // position
  const Vec3 sp = w.w1p.cwiseSqrt();
  s.r.segment<3>(0) = sp.cwiseProduct(s.kin.ee.p - p_ref);
  for (int i = 0; i < 3; ++i) s.J.block<1, n>(i, 0) = sp[i] * s.kin.dp_dq.row(i);

  // orientation: I - R R_ref^T, row-major
  const double so = std::sqrt(w.w1o);
  const Mat3 M = Mat3::Identity() - R * R_ref.transpose();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int row = 3 + 3 * i + j;
      s.r[row] = so * M(i, j);
      Eigen::Matrix<double, 1, n> d = Eigen::Matrix<double, 1, n>::Zero();
      for (int c = 0; c < 3; ++c) d += R_ref(j, c) * s.kin.dR_dq[c].row(i);
      s.J.block<1, n>(row, 0) = -so * d;
    }
  }

  // velocity and control regularization
  const JointVector sa = w.w2a.cwiseSqrt();
  const JointVector sb = w.w2b.cwiseSqrt();
  s.r.segment<n>(12) = sa.cwiseProduct(x.qd);
  s.r.segment<n>(18) = sb.cwiseProduct(u);
  s.J.block<n, n>(12, n).diagonal() = sa;
  s.J.block<n, n>(18, 2 * n).diagonal() = sb;

  // slosh: a = R^T (p_dd + g)
  const double s3 = std::sqrt(w.w3);
  const Vec3 f = s.kin.p_dd + g;
  const Vec3 a = R.transpose() * f;
  s.r.segment<3>(24) = s3 * (a - g);
  for (int i = 0; i < 3; ++i) {
    Eigen::Matrix<double, 1, 3 * n> d = Eigen::Matrix<double, 1, 3 * n>::Zero();
    for (int j = 0; j < 3; ++j) {
      d.head<n>() += f[j] * s.kin.dR_dq[i].row(j);
      d += R(j, i) * s.kin.dpdd_dz.row(j);
    }
    s.J.row(24 + i) = s3 * d;
  }
  return s;
}

double stage_cost(const JointState& x, const ControlInput& u, const Vec3& p_ref, const Mat3& R_ref,
                  const Weights& w, const Vec3& g, const DhTable& dh) {
  const auto frames = detail::chain_jet(x.q, x.qd, u, dh);
  const auto& ee = frames.back();
  Mat3 R;
  Vec3 p, p_dd;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) R(r, c) = ee.R[3 * r + c].c0;
    p[r] = ee.p[r].c0;
    p_dd[r] = ee.p[r].second_derivative();
  }
  double l = cost_position(p, p_ref, w.w1p) + cost_orientation(R, R_ref, w.w1o) +
             cost_motion(x.qd, u, w.w2a, w.w2b);
  if (w.w3 != 0.0) l += cost_slosh(local_acceleration(R, p_dd, g), w.w3, g);
  return l;
}

double total_cost(std::span<const JointState> X, std::span<const ControlInput> U,
                  const ReferenceTrajectory& ref, const Weights& w, double dt, const DhTable& dh,
                  const Vec3& g) {
  check_lengths(X.size(), U.size(), ref);
  double sum = 0.0;
  for (std::size_t k = 1; k < X.size(); ++k) {
    sum += stage_cost(X[k], U[k - 1], ref.positions[k - 1], ref.orientations[k - 1], w, g, dh);
  }
  return dt * sum;
}

CostWithGradient total_cost_gradient(std::span<const JointState> X,
                                     std::span<const ControlInput> U,
                                     const ReferenceTrajectory& ref, const Weights& w, double dt,
                                     const DhTable& dh, const Vec3& g) {
  check_lengths(X.size(), U.size(), ref);
  const int N = static_cast<int>(U.size());
  CostWithGradient out;
  out.gradient = Eigen::VectorXd::Zero(N * (kStateSize + kJointCount));
  for (int k = 1; k <= N; ++k) {
    const auto s = stage_residual(X[k], U[k - 1], ref.positions[k - 1], ref.orientations[k - 1], w,
                                  g, dh);
    out.value += dt * s.r.squaredNorm();
    const Eigen::Matrix<double, 3 * kJointCount, 1> gz = 2.0 * dt * s.J.transpose() * s.r;
    out.gradient.segment<kStateSize>((k - 1) * kStateSize) += gz.head<kStateSize>();
    out.gradient.segment<kJointCount>(N * kStateSize + (k - 1) * kJointCount) +=
        gz.tail<kJointCount>();
  }
  return out;
}

Eigen::VectorXd pack_decision(std::span<const JointState> X, std::span<const ControlInput> U) {
  const int N = static_cast<int>(U.size());
  if (static_cast<int>(X.size()) != N + 1) throw ParameterError("pack_decision: need N+1 states");
  Eigen::VectorXd z(N * (kStateSize + kJointCount));
  for (int k = 1; k <= N; ++k) z.segment<kStateSize>((k - 1) * kStateSize) = X[k].stacked();
  for (int k = 0; k < N; ++k) z.segment<kJointCount>(N * kStateSize + k * kJointCount) = U[k];
  return z;
}

void unpack_decision(const Eigen::VectorXd& z, std::span<JointState> X, std::span<ControlInput> U) {
  const int N = static_cast<int>(U.size());
  if (static_cast<int>(X.size()) != N + 1 || z.size() != N * (kStateSize + kJointCount)) {
    throw ParameterError("unpack_decision: size mismatch");
  }
  for (int k = 1; k <= N; ++k) {
    X[k] = JointState::from_stacked(z.segment<kStateSize>((k - 1) * kStateSize));
  }
  for (int k = 0; k < N; ++k) U[k] = z.segment<kJointCount>(N * kStateSize + k * kJointCount);
}

}  // namespace teleop
