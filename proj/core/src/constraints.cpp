#include "teleop/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace teleop {

void Limits::validate() const {
  auto check = [](const JointVector& lo, const JointVector& hi, const char* name, bool allow_equal) {
    for (int i = 0; i < kJointCount; ++i) {
      const bool ordered = allow_equal ? lo[i] <= hi[i] : lo[i] < hi[i];
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !ordered) {
        throw ConfigError(std::string("limits for ") + name + " joint " + std::to_string(i) +
                          (allow_equal ? ": need finite min <= max" : ": need finite min < max"));
      }
    }
  };
  check(q_min, q_max, "q", false);
  check(qd_min, qd_max, "qd", false);
  check(u_min, u_max, "u", true);
}

StateVector Limits::x_min() const {
  StateVector x;
  x << q_min, qd_min;
  return x;
}

StateVector Limits::x_max() const {
  StateVector x;
  x << q_max, qd_max;
  return x;
}

CollisionPairSet::CollisionPairSet(std::vector<std::pair<int, int>> pairs) : pairs_(std::move(pairs)) {
  for (auto& [i, j] : pairs_) {
    if (i > j) std::swap(i, j);
  }
  std::sort(pairs_.begin(), pairs_.end());
  pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
}

CollisionPairSet build_pairs(std::span<const SphereSpec> spheres) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(spheres.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(spheres[i].link - spheres[j].link) >= 2) pairs.emplace_back(i, j);
    }
  }
  return CollisionPairSet(std::move(pairs));
}

std::vector<double> collision_margins(std::span<const Vec3> centers,
                                      std::span<const SphereSpec> spheres,
                                      const CollisionPairSet& pairs) {
  std::vector<double> margins;
  margins.reserve(pairs.size());
  for (const auto& [i, j] : pairs.pairs()) {
    const double rr = spheres[i].radius + spheres[j].radius;
    margins.push_back((centers[i] - centers[j]).squaredNorm() - rr * rr);
  }
  return margins;
}

std::vector<double> collision_margins(const JointVector& q, std::span<const SphereSpec> spheres,
                                      const CollisionPairSet& pairs, const DhTable& dh) {
  const auto centers = sphere_centers(q, spheres, dh);
  return collision_margins(centers, spheres, pairs);
}

BoxViolations box_violations(const JointState& x, const ControlInput& u, const Limits& lim) {
  BoxViolations v;
  const auto below = [](const JointVector& val, const JointVector& lo) {
    return (lo - val).cwiseMax(0.0).eval();
  };
  const auto above = [](const JointVector& val, const JointVector& hi) {
    return (val - hi).cwiseMax(0.0).eval();
  };
  v << below(x.q, lim.q_min), above(x.q, lim.q_max), below(x.qd, lim.qd_min),
      above(x.qd, lim.qd_max), below(u, lim.u_min), above(u, lim.u_max);
  return v;
}

}  // namespace teleop
