#include "teleop/teleop_runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace teleop {

namespace {

constexpr double kTimeEps = 1e-9;

// Plan state at time s after its x_0; past the end the arm rests at q_N.
JointState plan_state(const SolveResult& plan, double s) {
  const int N = static_cast<int>(plan.X.size()) - 1;
  if (N < 0) throw std::logic_error("plan has no states");
  if (N == 0 || !(plan.dt > 0.0)) return {plan.X[0].q, JointVector::Zero()};
  const double r = s / plan.dt;
  if (r >= N - kTimeEps) {
    if (r <= N + kTimeEps) return plan.X[N];
    return {plan.X[N].q, JointVector::Zero()};
  }
  if (r <= 0.0) return plan.X[0];
  const int i = static_cast<int>(std::floor(r + kTimeEps));
  const double frac = r - i;
  if (frac < kTimeEps) return plan.X[i];
  return {plan.X[i].q + frac * (plan.X[i + 1].q - plan.X[i].q),
          plan.X[i].qd + frac * (plan.X[i + 1].qd - plan.X[i].qd)};
}

ControlInput plan_control(const SolveResult& plan, double s) {
  if (!(plan.dt > 0.0) || s < -kTimeEps) return ControlInput::Zero();
  const int j = static_cast<int>(std::floor(s / plan.dt + kTimeEps));
  if (j < 0 || j >= static_cast<int>(plan.U.size())) return ControlInput::Zero();
  return plan.U[j];
}

}  // namespace

PlantState plant_step(const PlantState& plant, const SolveResult& plan, double plan_start,
                      double dt_sim, const PlantOptions& options) {
  PlantState next;
  next.t = plant.t + dt_sim;
  const JointState desired = plan_state(plan, next.t - plan_start);
  if (options.tracking_lag > 0.0) {
    const double decay = std::exp(-dt_sim / options.tracking_lag);
    next.x.q = desired.q + decay * (plant.x.q - desired.q);
    next.x.qd = desired.qd + decay * (plant.x.qd - desired.qd);
  } else {
    next.x = desired;
  }
  return next;
}

PlantState plant_step(const PlantState& plant, const SolveResult& plan, double dt_sim) {
  return plant_step(plant, plan, plant.t, dt_sim);
}

void TeleopLog::append(CycleRecord r) {
  if (!records_.empty() && !(r.t > records_.back().t)) {
    throw std::logic_error("log timestamps must be strictly increasing");
  }
  records_.push_back(std::move(r));
}

double roll_angle(const Mat3& R, const Mat3& R_home) {
  const Mat3 M = R * R_home.transpose();
  return std::atan2(M(2, 1), M(2, 2));
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("percentile of an empty series");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size()));
  const std::size_t idx = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  return values[std::min(idx, values.size() - 1)];
}

Metrics metrics(const TeleopLog& log) {
  if (log.empty()) throw InputError("metrics: empty log");
  Metrics m;
  m.cycles = static_cast<int>(log.size());
  std::vector<double> times;
  times.reserve(log.size());
  double lat_sum = 0.0, err_sq = 0.0, it_sum = 0.0;
  for (const auto& r : log.records()) {
    lat_sum += r.lateral_acceleration;
    m.max_lateral = std::max(m.max_lateral, r.lateral_acceleration);
    err_sq += r.tracking_error * r.tracking_error;
    it_sum += r.iterations;
    times.push_back(r.solve_time);
    if (r.degraded) ++m.degraded_cycles;
    if (r.overrun) ++m.overruns;
  }
  const double n = static_cast<double>(log.size());
  m.mean_lateral = lat_sum / n;
  m.rms_tracking_error = std::sqrt(err_sq / n);
  m.mean_iterations = it_sum / n;
  double t_sum = 0.0;
  for (const double t : times) t_sum += t;
  m.solve_mean = t_sum / n;
  m.solve_max = *std::max_element(times.begin(), times.end());
  m.solve_p50 = percentile(times, 0.50);
  m.solve_p99 = percentile(times, 0.99);
  return m;
}

std::string to_json(const Metrics& m) {
  nlohmann::json j;
  j["cycles"] = m.cycles;
  j["degraded_cycles"] = m.degraded_cycles;
  j["overruns"] = m.overruns;
  j["mean_lateral_acceleration"] = m.mean_lateral;
  j["max_lateral_acceleration"] = m.max_lateral;
  j["rms_tracking_error"] = m.rms_tracking_error;
  j["solve_time"] = {{"mean", m.solve_mean}, {"max", m.solve_max}, {"p50", m.solve_p50},
                     {"p99", m.solve_p99}};
  j["mean_iterations"] = m.mean_iterations;
  return j.dump(2);
}

Runner::Runner(RobotConfig robot, ParameterSet params, PlantOptions plant)
    : robot_(std::move(robot)),
      params_(std::move(params)),
      plant_options_(plant),
      solver_(build_problem(robot_, params_)) {
  plant_.x.q = robot_.home;
}

void Runner::request_params(ParameterSet p) {
  p.validate();
  std::lock_guard lock(pending_mu_);
  pending_params_ = std::move(p);
}

void Runner::request_reset() {
  std::lock_guard lock(pending_mu_);
  pending_reset_ = true;
}

void Runner::apply_pending() {
  std::optional<ParameterSet> next;
  bool reset = false;
  {
    std::lock_guard lock(pending_mu_);
    next.swap(pending_params_);
    std::swap(reset, pending_reset_);
  }
  if (reset) {
    plant_.x = JointState{robot_.home, JointVector::Zero()};
    plan_.reset();
    targets_.clear();
  }
  if (next) {
    if (next->horizon != params_.horizon || next->dt != params_.dt) plan_.reset();
    solver_ = OcpSolver(build_problem(robot_, *next));
    params_ = std::move(*next);
    switched_ = true;
  }
}

ReferenceTrajectory Runner::reference(double now) {
  auto samples = targets_.snapshot();
  while (!samples.empty() && samples.back().t > now + kTimeEps) samples.pop_back();
  Vec3 p0;
  Mat3 R0;
  Twist tw;
  if (samples.empty()) {
    const auto fk = forward_kinematics(plant_.x.q, robot_.dh);
    p0 = fk.ee.p;
    R0 = fk.ee.R;
  } else {
    const auto& last = samples.back();
    const double lead = std::max(0.0, now - last.t);
    p0 = last.pose.p;
    R0 = last.pose.R;
    if (lead <= kStaleTargetAge) {
      tw = estimate_twist(samples, params_.velocity_window);
      p0 += lead * tw.v;
      R0 = rotation_exp(lead * tw.omega) * R0;
    }
  }
  return predict(p0, R0, tw, params_.dt, params_.horizon, robot_.reach);
}

CycleOutput Runner::run_cycle(double now) {
  const auto wall_begin = std::chrono::steady_clock::now();
  apply_pending();

  if (!log_.empty() && !(now > log_.records().back().t)) {
    throw InputError("run_cycle: time must increase between cycles");
  }
  if (now > plant_.t + kTimeEps && plan_) {
    plant_ = plant_step(plant_, *plan_, plan_start_, now - plant_.t, plant_options_);
  }
  plant_.t = now;

  CycleRecord rec;
  rec.cycle = cycle_++;
  rec.t = now;
  rec.params = params_.name;
  rec.params_switched = std::exchange(switched_, false);
  rec.x0 = plant_.x;

  const ReferenceTrajectory ref = reference(now);
  rec.p_ref = ref.positions.front();
  rec.R_ref = ref.orientations.front();

  const auto& prob = solver_.problem();
  InitialGuess guess =
      plan_ ? shift_warm_start(WarmStart{*plan_, plan_start_}, now - plan_start_, prob)
            : cold_start(plant_.x, prob);
  rec.cold_start = guess.cold;
  const SolveResult res = solver_.solve(plant_.x, ref, guess.U);

  const bool failed =
      !res.converged &&
      (res.iterations == 0 || res.max_bound_violation > 1e-8 ||
       res.min_collision_margin < -prob.settings.constraint_tol);
  if (failed && plan_) {
    rec.degraded = true;
  } else {
    rec.degraded = failed;
    plan_ = res;
    plan_start_ = now;
  }

  rec.status = to_string(res.status);
  rec.iterations = res.iterations;
  rec.objective = res.objective;
  rec.kkt_residual = res.kkt_residual;
  rec.max_constraint_violation = res.max_constraint_violation;
  rec.max_bound_violation = res.max_bound_violation;
  rec.min_collision_margin = res.min_collision_margin;
  rec.dynamics_residual = res.dynamics_residual;
  rec.solve_time = res.wall_time;

  rec.u = plan_control(*plan_, now - plan_start_);
  plant_ = plant_step(plant_, *plan_, plan_start_, params_.dt, plant_options_);
  rec.x = plant_.x;
  const auto fk = forward_kinematics(rec.x.q, robot_.dh);
  rec.ee = fk.ee;
  rec.a_local = local_acceleration(rec.x.q, rec.x.qd, rec.u, params_.gravity, robot_.dh);
  rec.lateral_acceleration = std::hypot(rec.a_local.x(), rec.a_local.y());
  rec.tracking_error = (rec.ee.p - rec.p_ref).norm();

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_begin).count();
  rec.overrun = wall > params_.dt;

  log_.append(rec);
  return {std::move(rec), *plan_, plan_start_};
}

TeleopLog replay(const std::vector<TargetSample>& recording, const ParameterSet& params,
                 const RobotConfig& robot, const ReplayOptions& options) {
  if (recording.empty()) return {};
  for (std::size_t i = 1; i < recording.size(); ++i) {
    if (!(recording[i].t > recording[i - 1].t)) {
      throw InputError("recording timestamps must be strictly increasing");
    }
  }
  ParameterSet p = params;
  if (options.max_iterations) p.solver.max_iterations = *options.max_iterations;
  Runner runner(robot, p, options.plant);

  const double t0 = recording.front().t;
  const double duration = recording_duration(recording);
  const long cycles = static_cast<long>(std::ceil(duration / p.dt - kTimeEps));
  std::size_t next = 0;
  for (long i = 0; i < cycles; ++i) {
    const double now = t0 + static_cast<double>(i) * p.dt;
    while (next < recording.size() && recording[next].t <= now + kTimeEps) {
      runner.targets().push(recording[next++]);
    }
    runner.run_cycle(now);
  }
  return runner.log();
}

std::vector<TargetSample> default_fixture(const RobotConfig& robot, double duration) {
  SweepSpec spec;
  spec.duration = duration;
  return make_sweep_recording(forward_kinematics(robot.home, robot.dh).ee, spec);
}

}  // namespace teleop
