#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "teleop/cost.hpp"
#include "teleop/reference.hpp"

namespace teleop {

struct SolverSettings {
  int max_iterations = 30;          // major (SQP) iterations per solve
  double stationarity_tol = 1e-4;   // inf-norm of the Lagrangian gradient
  double constraint_tol = 1e-6;     // max constraint violation
  double activation_distance = 0.10;  // m; collision pairs closer than this enter the QP
  int line_search_steps = 20;
  double armijo = 1e-4;
};

/// A named parameter set: objective weights plus horizon and solver options.
/// Stored as JSON (see config/params/P1.json).
struct ParameterSet {
  std::string name = "P2";
  Weights weights;
  int horizon = 8;
  double dt = 0.05;  // s; also the loop period
  Vec3 gravity = default_gravity();
  int velocity_window = kDefaultVelocityWindow;
  SolverSettings solver;

  void validate() const;
};

/// Tracking-focused set (w3 = 0).
ParameterSet builtin_p1();
/// Anti-slosh set (w3 = 10).
ParameterSet builtin_p2();

ParameterSet parse_parameter_set(std::string_view json_text, const std::string& source = "<string>");
ParameterSet load_parameter_set(const std::filesystem::path& path);

/// `P1`/`P2` resolve to <config_root>/params/<name>.json when present and
/// to the built-in sets otherwise; anything else is read as a file path.
ParameterSet resolve_parameter_set(const std::string& name_or_path);

std::string to_json(const ParameterSet& p);

}  // namespace teleop
