#include "teleop/reference.hpp"

#include <algorithm>
#include <cmath>

namespace teleop {

Mat3 rotation_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Vec3 rotation_log(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Mat3 orthonormalize(const Mat3& R) { return Eigen::Quaterniond(R).normalized().toRotationMatrix(); }

Twist estimate_twist(std::span<const TargetSample> samples, int window) {
  Twist tw;
  const std::size_t n = std::min<std::size_t>(samples.size(), std::max(window, 2));
  if (samples.size() < 2 || n < 2) return tw;
  const auto recent = samples.last(n);

  double t_mean = 0.0;
  Vec3 p_mean = Vec3::Zero();
  for (const auto& s : recent) {
    t_mean += s.t;
    p_mean += s.pose.p;
  }
  t_mean /= static_cast<double>(n);
  p_mean /= static_cast<double>(n);
  double stt = 0.0;
  Vec3 stp = Vec3::Zero();
  for (const auto& s : recent) {
    const double dt = s.t - t_mean;
    stt += dt * dt;
    stp += dt * (s.pose.p - p_mean);
  }
  if (stt > 0.0) tw.v = stp / stt;

  Vec3 w_sum = Vec3::Zero();
  int used = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double dt = recent[i].t - recent[i - 1].t;
    if (!(dt > 0.0)) continue;
    w_sum += rotation_log(recent[i].pose.R * recent[i - 1].pose.R.transpose()) / dt;
    ++used;
  }
  if (used > 0) tw.omega = w_sum / used;
  return tw;
}

Vec3 clip_to_reach(const Vec3& p, double reach) {
  const double r = p.norm();
  if (r <= reach) return p;
  return p * (reach / r);
}

ReferenceTrajectory predict(const Vec3& p0, const Mat3& R0, const Twist& twist, double dt, int N,
                            double reach) {
  if (!(dt > 0.0)) throw ParameterError("predict: dt must be positive");
  if (N < 1) throw ParameterError("predict: horizon must be at least 1");
  if (!(reach > 0.0)) throw ParameterError("predict: reach must be positive");
  ReferenceTrajectory ref;
  ref.dt = dt;
  ref.positions.reserve(N);
  ref.orientations.reserve(N);
  for (int k = 1; k <= N; ++k) {
    const double tk = k * dt;
    ref.positions.push_back(clip_to_reach(p0 + tk * twist.v, reach));
    ref.orientations.push_back(rotation_exp(tk * twist.omega) * R0);
  }
  return ref;
}

Pose Retargeter::map(const Pose& device) {
  if (clutch_ && frozen_) return *frozen_;
  Eigen::Isometry3d dev = Eigen::Isometry3d::Identity();
  dev.linear() = device.R;
  dev.translation() = device.p;
  if (rebase_on_next_ && last_target_) {
    // Keep the frozen target continuous: fixed * offset * dev == frozen.
    Eigen::Isometry3d frozen = Eigen::Isometry3d::Identity();
    frozen.linear() = last_target_->R;
    frozen.translation() = last_target_->p;
    offset_ = fixed_.inverse() * frozen * dev.inverse();
  }
  rebase_on_next_ = false;
  const Eigen::Isometry3d target = fixed_ * offset_ * dev;
  Pose out{target.translation(), orthonormalize(target.linear())};
  last_target_ = out;
  return out;
}

void Retargeter::set_clutch(bool engaged) {
  if (engaged == clutch_) return;
  clutch_ = engaged;
  if (engaged) {
    frozen_ = last_target_;
  } else {
    rebase_on_next_ = true;
    frozen_.reset();
  }
}

bool TargetBuffer::push(const TargetSample& s) {
  std::lock_guard lock(mu_);
  if (!samples_.empty() && !(s.t > samples_.back().t)) return false;
  samples_.push_back(s);
  while (samples_.size() > capacity_) samples_.pop_front();
  return true;
}

std::vector<TargetSample> TargetBuffer::snapshot() const {
  std::lock_guard lock(mu_);
  return {samples_.begin(), samples_.end()};
}

std::optional<TargetSample> TargetBuffer::latest() const {
  std::lock_guard lock(mu_);
  if (samples_.empty()) return std::nullopt;
  return samples_.back();
}

void TargetBuffer::clear() {
  std::lock_guard lock(mu_);
  samples_.clear();
}

}  // namespace teleop
