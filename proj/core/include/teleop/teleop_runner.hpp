#pragma once

#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "teleop/ocp_solver.hpp"
#include "teleop/params.hpp"
#include "teleop/recording.hpp"
#include "teleop/reference.hpp"
#include "teleop/robot_config.hpp"

namespace teleop {

/// Simulated arm: joint state and simulation clock.
struct PlantState {
  JointState x;
  double t = 0.0;  // s
};

struct PlantOptions {
  /// First-order tracking lag time constant in seconds; 0 = ideal tracking.
  double tracking_lag = 0.0;
};

/// Ideal tracking: the plant lands on the plan's state trajectory at
/// plant.t + dt_sim, interpolating linearly between nodes. `plan_start` is
/// the time of the plan's x_0. Past the last node the plant holds q_N at rest.
PlantState plant_step(const PlantState& plant, const SolveResult& plan, double plan_start,
                      double dt_sim, const PlantOptions& options = {});
/// Same, with the plan starting at the plant's current time.
PlantState plant_step(const PlantState& plant, const SolveResult& plan, double dt_sim);

/// One planner cycle.
struct CycleRecord {
  int cycle = 0;
  double t = 0.0;  // cycle start time, s
  std::string params;
  bool params_switched = false;
  bool cold_start = false;
  bool degraded = false;  // solver failed; the previous plan was kept
  bool overrun = false;   // cycle work exceeded the period (wall-clock)
  JointState x0;
  Vec3 p_ref = Vec3::Zero();  // reference node 1
  Mat3 R_ref = Mat3::Identity();
  // solver summary
  std::string status;
  int iterations = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double max_constraint_violation = 0.0;
  double max_bound_violation = 0.0;
  double min_collision_margin = 0.0;
  double dynamics_residual = 0.0;
  double solve_time = 0.0;  // s, wall-clock
  // executed state at t + dt
  JointState x;
  Pose ee;
  ControlInput u = ControlInput::Zero();  // acceleration applied over the cycle
  Vec3 a_local = Vec3::Zero();
  double lateral_acceleration = 0.0;  // sqrt(a_local,x^2 + a_local,y^2)
  double tracking_error = 0.0;        // |p_ee - p_ref|
};

/// Append-only cycle log with strictly increasing timestamps.
class TeleopLog {
 public:
  void append(CycleRecord r);
  const std::vector<CycleRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

 private:
  std::vector<CycleRecord> records_;
};

/// CSV, one row per cycle. Columns, in order:
///   cycle, t, params, params_switched, cold_start, degraded, overrun, status,
///   iterations, objective, kkt_residual, max_constraint_violation,
///   min_collision_margin, dynamics_residual, solve_time,
///   q0_0..q0_5, qd0_0..qd0_5, p_ref_x, p_ref_y, p_ref_z, roll_ref,
///   q_0..q_5, qd_0..qd_5, u_0..u_5, ee_x, ee_y, ee_z, roll,
///   a_local_x, a_local_y, a_local_z, lateral_acceleration, tracking_error
/// Booleans are 0/1; roll is atan2(M21, M22) of M = R R_home^T.
void write_log_csv(std::ostream& out, const TeleopLog& log, const Mat3& R_home = Mat3::Identity());
/// One JSON object per cycle with the same fields (rotations as 3x3 row-major).
void write_log_jsonl(std::ostream& out, const TeleopLog& log);
/// CSV text without the wall-clock columns (solve_time, overrun).
std::string log_fingerprint(const TeleopLog& log);

/// Roll angle of R relative to R_home about world x.
double roll_angle(const Mat3& R, const Mat3& R_home = Mat3::Identity());

struct Metrics {
  int cycles = 0;
  int degraded_cycles = 0;
  int overruns = 0;
  double mean_lateral = 0.0;
  double max_lateral = 0.0;
  double rms_tracking_error = 0.0;
  double solve_mean = 0.0;
  double solve_max = 0.0;
  double solve_p50 = 0.0;
  double solve_p99 = 0.0;
  double mean_iterations = 0.0;
};

/// Throws InputError for an empty log.
Metrics metrics(const TeleopLog& log);
/// Nearest-rank percentile, p in [0, 1]. Throws InputError when empty.
double percentile(std::vector<double> values, double p);

std::string to_json(const Metrics& m);

/// A target older than this is held still instead of extrapolated.
inline constexpr double kStaleTargetAge = 0.25;  // s

/// Output of one cycle: the log record and the plan the plant is following.
struct CycleOutput {
  CycleRecord record;
  SolveResult plan;
  double plan_start = 0.0;
};

/// The receding-horizon loop for one session. Targets are pushed into
/// `targets()` by the input side; `run_cycle` is called once per period by
/// the owner. Parameter swaps and resets requested from other threads take
/// effect at the next cycle boundary.
class Runner {
 public:
  Runner(RobotConfig robot, ParameterSet params, PlantOptions plant = {});

  CycleOutput run_cycle(double now);

  TargetBuffer& targets() { return targets_; }
  const PlantState& plant() const { return plant_; }
  const RobotConfig& robot() const { return robot_; }
  const ParameterSet& params() const { return params_; }
  const TeleopLog& log() const { return log_; }
  const std::optional<SolveResult>& plan() const { return plan_; }
  double period() const { return params_.dt; }

  void request_params(ParameterSet p);
  void request_reset();

 private:
  void apply_pending();
  ReferenceTrajectory reference(double now);

  RobotConfig robot_;
  ParameterSet params_;
  PlantOptions plant_options_;
  OcpSolver solver_;
  TargetBuffer targets_;
  PlantState plant_;
  std::optional<SolveResult> plan_;
  double plan_start_ = 0.0;
  TeleopLog log_;
  int cycle_ = 0;
  bool switched_ = false;

  std::mutex pending_mu_;
  std::optional<ParameterSet> pending_params_;
  bool pending_reset_ = false;
};

struct ReplayOptions {
  PlantOptions plant;
  /// Overrides the parameter-set iteration cap when set.
  std::optional<int> max_iterations;
};

/// Deterministic offline run of the loop at the parameter-set rate:
/// ceil(duration / dt) cycles starting at the first sample's time; samples
/// are delivered to the runner when their timestamp is reached.
TeleopLog replay(const std::vector<TargetSample>& recording, const ParameterSet& params,
                 const RobotConfig& robot, const ReplayOptions& options = {});

/// The bundled aggressive sweep starting from the robot's home pose.
std::vector<TargetSample> default_fixture(const RobotConfig& robot, double duration = 10.0);

}  // namespace teleop
