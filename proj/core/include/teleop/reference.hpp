#pragma once

#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "teleop/types.hpp"

namespace teleop {

/// Operator target in robot task space at a given time.
struct TargetSample {
  double t = 0.0;  // s
  Pose pose;
};

/// Predicted targets for nodes k = 1..N of the horizon.
struct ReferenceTrajectory {
  std::vector<Vec3> positions;
  std::vector<Mat3> orientations;
  double dt = 0.0;

  int horizon() const { return static_cast<int>(positions.size()); }
};

struct Twist {
  Vec3 v = Vec3::Zero();      // m/s
  Vec3 omega = Vec3::Zero();  // rad/s, world frame
};

inline constexpr int kDefaultVelocityWindow = 5;

/// Constant-twist estimate from the last `window` samples. Linear velocity
/// is the least-squares slope of position over time; angular velocity is the
/// mean of log(R_i R_{i-1}^T) / (t_i - t_{i-1}). Fewer than 2 samples give
/// a zero twist.
Twist estimate_twist(std::span<const TargetSample> samples, int window = kDefaultVelocityWindow);

/// Radial projection onto the base-centered sphere of radius `reach`.
Vec3 clip_to_reach(const Vec3& p, double reach);

/// Straight-line, constant-angular-velocity extrapolation:
///   p_k = clip(p0 + k dt v),  R_k = exp([omega] k dt) R0,  k = 1..N.
ReferenceTrajectory predict(const Vec3& p0, const Mat3& R0, const Twist& twist, double dt, int N,
                            double reach);

/// exp of a rotation vector (world frame).
Mat3 rotation_exp(const Vec3& w);
/// Rotation vector of R (inverse of rotation_exp for angles in [0, pi]).
Vec3 rotation_log(const Mat3& R);
/// Re-orthonormalize a nearly orthonormal matrix.
Mat3 orthonormalize(const Mat3& R);

/// Maps input-device poses to robot targets: target = fixed * offset * device.
/// While the clutch is engaged the target is frozen; on release the offset is
/// re-derived so the target continues from where it was frozen.
class Retargeter {
 public:
  Retargeter() = default;
  explicit Retargeter(const Eigen::Isometry3d& fixed) : fixed_(fixed) {}

  Pose map(const Pose& device);
  void set_clutch(bool engaged);
  bool clutch_engaged() const { return clutch_; }
  const Eigen::Isometry3d& offset() const { return offset_; }

 private:
  Eigen::Isometry3d fixed_ = Eigen::Isometry3d::Identity();
  Eigen::Isometry3d offset_ = Eigen::Isometry3d::Identity();
  bool clutch_ = false;
  bool rebase_on_next_ = false;
  std::optional<Pose> frozen_;
  std::optional<Pose> last_target_;
};

/// Bounded sample history, written by the input side and read by the
/// planner cycle. The planner copies out a snapshot under the lock.
class TargetBuffer {
 public:
  explicit TargetBuffer(std::size_t capacity = 64) : capacity_(capacity) {}

  /// Returns false (and drops the sample) unless t is strictly increasing.
  bool push(const TargetSample& s);
  std::vector<TargetSample> snapshot() const;
  std::optional<TargetSample> latest() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::deque<TargetSample> samples_;
  std::size_t capacity_;
};

}  // namespace teleop
