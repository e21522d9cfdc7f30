#pragma once

// Receding-horizon trajectory optimization problem
//
//   min_{X,U}  J_d(X, U; P_ref, R_ref)
//   s.t.       x_{k+1} = A_d x_k + B_d u_k            k = 0..N-1
//              q_min <= q_k <= q_max, qd_min <= qd_k <= qd_max     k = 1..N
//              u_min <= u_k <= u_max                  k = 0..N-1
//              |c_i(q_k) - c_j(q_k)|^2 >= (r_i + r_j)^2   (i,j) in pairs, k = 1..N
//              x_0 fixed
//
// Decision layout (multiple shooting): [x_1 .. x_N, u_0 .. u_{N-1}].
//
// The solver is a reduced-space SQP: the linear dynamics are eliminated
// exactly by condensing (x_k is an affine function of U), so every iterate
// satisfies them to rounding error. Each major iteration solves a dense QP
// with a Gauss-Newton Hessian of the least-squares objective, exact
// linearizations of state/control bounds, and linearized collision
// constraints for pairs within `activation_distance`. Steps are globalized
// with a backtracking line search on an l1 exact-penalty merit function.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teleop/constraints.hpp"
#include "teleop/cost.hpp"
#include "teleop/model.hpp"
#include "teleop/params.hpp"
#include "teleop/reference.hpp"
#include "teleop/robot_config.hpp"

namespace teleop {

struct OcpProblem {
  DiscreteModel model;
  Weights weights;
  Limits limits;
  std::vector<SphereSpec> spheres;
  CollisionPairSet pairs;
  int horizon = 8;
  double dt = 0.05;
  DhTable dh;
  Vec3 gravity = default_gravity();
  SolverSettings settings;

  /// d x_k / d U for k = 1..N, stacked (12 N x 6 N). Filled by build_problem.
  Eigen::MatrixXd state_sensitivity;

  int decision_size() const { return horizon * (kStateSize + kJointCount); }
  int control_size() const { return horizon * kJointCount; }
  int dynamics_blocks() const { return horizon; }
  /// Collision inequality count over the horizon.
  int collision_constraints() const { return horizon * static_cast<int>(pairs.size()); }
};

/// Assemble and validate a problem. Throws ConfigError with a description
/// when any part is invalid.
OcpProblem build_problem(const DhTable& dh, std::vector<SphereSpec> spheres, const Limits& limits,
                         const Weights& weights, int horizon, double dt,
                         const Vec3& gravity = default_gravity(), const SolverSettings& settings = {});
OcpProblem build_problem(const RobotConfig& robot, const ParameterSet& params);

enum class SolveStatus { kConverged, kMaxIterations, kInfeasibleStartRecovered };

std::string to_string(SolveStatus s);

struct SolveResult {
  std::vector<JointState> X;    // x_0 .. x_N
  std::vector<ControlInput> U;  // u_0 .. u_{N-1}
  double dt = 0.0;              // node spacing, s
  double objective = 0.0;
  int iterations = 0;
  double wall_time = 0.0;  // s
  double kkt_residual = 0.0;
  double max_constraint_violation = 0.0;  // over bounds and collision margins
  double max_bound_violation = 0.0;
  double min_collision_margin = 0.0;      // +inf when there are no pairs
  double dynamics_residual = 0.0;
  SolveStatus status = SolveStatus::kMaxIterations;
  bool x0_clamped = false;
  bool converged = false;
};

/// The previous solution and the time at which its x_0 applied.
struct WarmStart {
  SolveResult previous;
  double start_time = 0.0;
};

struct InitialGuess {
  JointState x0;
  std::vector<JointState> X;
  std::vector<ControlInput> U;
  bool cold = false;
};

/// Shift a previous solution forward by `elapsed` seconds: x_0 is the linear
/// interpolation of the previous X at `elapsed`; the guess is the previous
/// trajectory resampled at t_k + elapsed, padded by holding the last state
/// with zero control. `elapsed` outside [0, N dt] yields a cold start.
InitialGuess shift_warm_start(const WarmStart& warm, double elapsed, const OcpProblem& prob);

/// Cold-start guess: X = x0 repeated, U = 0.
InitialGuess cold_start(const JointState& x0, const OcpProblem& prob);

/// Objective, gradient and constraints of the condensed problem in U for a
/// fixed x_0 and reference. Exposed for diagnostics and tests.
class CondensedProblem {
 public:
  CondensedProblem(const OcpProblem& prob, const JointState& x0, const ReferenceTrajectory& ref);

  int size() const { return prob_->control_size(); }
  std::vector<JointState> rollout(const Eigen::VectorXd& U) const;
  double objective(const Eigen::VectorXd& U) const;
  /// Gradient of the objective w.r.t. U (chain rule through the dynamics).
  Eigen::VectorXd gradient(const Eigen::VectorXd& U) const;
  /// Collision margins for every (node, pair), node-major.
  Eigen::VectorXd collision_margins(const Eigen::VectorXd& U) const;
  /// Jacobian of collision_margins w.r.t. U.
  Eigen::MatrixXd collision_jacobian(const Eigen::VectorXd& U) const;

  const OcpProblem& problem() const { return *prob_; }
  const JointState& x0() const { return x0_; }
  const ReferenceTrajectory& reference() const { return *ref_; }

 private:
  const OcpProblem* prob_;
  JointState x0_;
  const ReferenceTrajectory* ref_;
};

Eigen::VectorXd flatten_controls(std::span<const ControlInput> U);
std::vector<ControlInput> unflatten_controls(const Eigen::VectorXd& U);

/// One solver per planning session. `solve` is deterministic: identical
/// inputs give identical results apart from wall_time.
class OcpSolver {
 public:
  explicit OcpSolver(OcpProblem problem);

  const OcpProblem& problem() const { return prob_; }
  OcpProblem& mutable_problem() { return prob_; }

  /// Throws InputError on non-finite inputs and ParameterError when the
  /// reference length differs from the horizon. Never throws on divergence.
  SolveResult solve(const JointState& x0, const ReferenceTrajectory& ref,
                    std::span<const ControlInput> initial_controls = {}) const;

  /// Warm-started solve: the guess is the previous solution shifted to `now`.
  SolveResult solve(const JointState& x0, const ReferenceTrajectory& ref,
                    const std::optional<WarmStart>& warm, double now) const;

 private:
  OcpProblem prob_;
};

/// Constraint check of a trajectory against the problem (for auditing).
struct ConstraintReport {
  double max_bound_violation = 0.0;
  double min_collision_margin = 0.0;
  double dynamics_residual = 0.0;
};
ConstraintReport check_constraints(const OcpProblem& prob, std::span<const JointState> X,
                                   std::span<const ControlInput> U);

}  // namespace teleop
