#include <cstdio>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "teleop/teleop_runner.hpp"

namespace teleop {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const TeleopLog& log, const Mat3& R_home, bool wall_clock) {
  out << "cycle,t,params,params_switched,cold_start,degraded";
  if (wall_clock) out << ",overrun";
  out << ",status,iterations,objective,kkt_residual,max_constraint_violation,"
         "min_collision_margin,dynamics_residual";
  if (wall_clock) out << ",solve_time";
  for (int i = 0; i < kJointCount; ++i) out << ",q0_" << i;
  for (int i = 0; i < kJointCount; ++i) out << ",qd0_" << i;
  out << ",p_ref_x,p_ref_y,p_ref_z,roll_ref";
  for (int i = 0; i < kJointCount; ++i) out << ",q_" << i;
  for (int i = 0; i < kJointCount; ++i) out << ",qd_" << i;
  for (int i = 0; i < kJointCount; ++i) out << ",u_" << i;
  out << ",ee_x,ee_y,ee_z,roll,a_local_x,a_local_y,a_local_z,lateral_acceleration,"
         "tracking_error\n";

  for (const auto& r : log.records()) {
    out << r.cycle << ',' << num(r.t) << ',' << r.params << ',' << int(r.params_switched) << ','
        << int(r.cold_start) << ',' << int(r.degraded);
    if (wall_clock) out << ',' << int(r.overrun);
    out << ',' << r.status << ',' << r.iterations << ',' << num(r.objective) << ','
        << num(r.kkt_residual) << ',' << num(r.max_constraint_violation) << ','
        << num(r.min_collision_margin) << ',' << num(r.dynamics_residual);
    if (wall_clock) out << ',' << num(r.solve_time);
    for (int i = 0; i < kJointCount; ++i) out << ',' << num(r.x0.q[i]);
    for (int i = 0; i < kJointCount; ++i) out << ',' << num(r.x0.qd[i]);
    for (int i = 0; i < 3; ++i) out << ',' << num(r.p_ref[i]);
    out << ',' << num(roll_angle(r.R_ref, R_home));
    for (int i = 0; i < kJointCount; ++i) out << ',' << num(r.x.q[i]);
    for (int i = 0; i < kJointCount; ++i) out << ',' << num(r.x.qd[i]);
    for (int i = 0; i < kJointCount; ++i) out << ',' << num(r.u[i]);
    for (int i = 0; i < 3; ++i) out << ',' << num(r.ee.p[i]);
    out << ',' << num(roll_angle(r.ee.R, R_home));
    for (int i = 0; i < 3; ++i) out << ',' << num(r.a_local[i]);
    out << ',' << num(r.lateral_acceleration) << ',' << num(r.tracking_error) << '\n';
  }
}

nlohmann::json vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json mat(const Mat3& R) {
  nlohmann::json j = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) j.push_back({R(r, 0), R(r, 1), R(r, 2)});
  return j;
}

}  // namespace

void write_log_csv(std::ostream& out, const TeleopLog& log, const Mat3& R_home) {
  write_csv(out, log, R_home, true);
}

std::string log_fingerprint(const TeleopLog& log) {
  std::ostringstream out;
  write_csv(out, log, Mat3::Identity(), false);
  return out.str();
}

void write_log_jsonl(std::ostream& out, const TeleopLog& log) {
  for (const auto& r : log.records()) {
    nlohmann::json j;
    j["cycle"] = r.cycle;
    j["t"] = r.t;
    j["params"] = r.params;
    j["params_switched"] = r.params_switched;
    j["cold_start"] = r.cold_start;
    j["degraded"] = r.degraded;
    j["overrun"] = r.overrun;
    j["status"] = r.status;
    j["iterations"] = r.iterations;
    j["objective"] = r.objective;
    j["kkt_residual"] = r.kkt_residual;
    j["max_constraint_violation"] = r.max_constraint_violation;
    j["max_bound_violation"] = r.max_bound_violation;
    j["min_collision_margin"] = r.min_collision_margin;
    j["dynamics_residual"] = r.dynamics_residual;
    j["solve_time"] = r.solve_time;
    j["x0"] = {{"q", vec(r.x0.q)}, {"qd", vec(r.x0.qd)}};
    j["p_ref"] = vec(r.p_ref);
    j["R_ref"] = mat(r.R_ref);
    j["x"] = {{"q", vec(r.x.q)}, {"qd", vec(r.x.qd)}};
    j["u"] = vec(r.u);
    j["ee"] = {{"p", vec(r.ee.p)}, {"R", mat(r.ee.R)}};
    j["a_local"] = vec(r.a_local);
    j["lateral_acceleration"] = r.lateral_acceleration;
    j["tracking_error"] = r.tracking_error;
    out << j.dump() << '\n';
  }
}

}  // namespace teleop
