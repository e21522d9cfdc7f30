#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "teleop/constraints.hpp"
#include "teleop/kinematics.hpp"

namespace teleop {

/// Everything describing the arm: kinematics, collision geometry, limits.
///
/// Loaded from a line-oriented text file; see config/ur5e.robot for the
/// documented record types (dh, sphere, limit, home, reach).
struct RobotConfig {
  DhTable dh;
  std::vector<SphereSpec> spheres;
  Limits limits;
  JointVector home = JointVector::Zero();
  double reach = 0.0;  // m; radius of the base-centered clipping sphere

  void validate() const;
};

/// Reach used when the file has no `reach` record.
inline double default_reach(const DhTable& dh) { return 0.95 * dh.link_length_sum(); }

RobotConfig parse_robot_config(std::string_view text, const std::string& source = "<string>");
RobotConfig load_robot_config(const std::filesystem::path& path);

/// Root directory for bundled configuration: $TELEOP_CONFIG_ROOT if set,
/// otherwise the directory baked in at build time.
std::filesystem::path config_root();

/// The bundled UR5e-like robot description.
RobotConfig default_robot_config();

}  // namespace teleop
