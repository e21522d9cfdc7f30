#include "teleop/teleop_service.hpp"

#include <atomic>
#include <chrono>
#include <cmath>

#include "json.hpp"

namespace teleop {

using nlohmann::json;

namespace {

json vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json quat(const Mat3& R) {
  Eigen::Quaterniond q(R);
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

json pose_json(const Pose& p) { return {{"p", vec(p.p)}, {"q", quat(p.R)}}; }

double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// Parse {"p": [3], "q": [w,x,y,z]} into a pose; empty string on success.
std::string read_pose(const json& j, Pose& out) {
  if (!j.is_object()) return "pose must be an object";
  if (!j.contains("p") || !j["p"].is_array() || j["p"].size() != 3) {
    return "pose.p must be an array of 3 numbers";
  }
  if (!j.contains("q") || !j["q"].is_array() || j["q"].size() != 4) {
    return "pose.q must be an array [w, x, y, z]";
  }
  double v[7];
  for (int i = 0; i < 3; ++i) {
    if (!j["p"][i].is_number()) return "pose.p must hold numbers";
    v[i] = j["p"][i].get<double>();
  }
  for (int i = 0; i < 4; ++i) {
    if (!j["q"][i].is_number()) return "pose.q must hold numbers";
    v[3 + i] = j["q"][i].get<double>();
  }
  for (const double x : v) {
    if (!std::isfinite(x)) return "pose contains non-finite values";
  }
  Eigen::Quaterniond q(v[3], v[4], v[5], v[6]);
  if (q.norm() < 1e-9) return "pose.q must be non-zero";
  out.p = Vec3(v[0], v[1], v[2]);
  out.R = q.normalized().toRotationMatrix();
  return {};
}

}  // namespace

void Outbox::push(std::string msg) {
  {
    std::lock_guard lock(mu_);
    ordered_.push_back(std::move(msg));
  }
  cv_.notify_all();
}

void Outbox::push_state(std::string msg) {
  {
    std::lock_guard lock(mu_);
    state_ = std::move(msg);
  }
  cv_.notify_all();
}

void Outbox::push_preview(std::string msg) {
  {
    std::lock_guard lock(mu_);
    preview_ = std::move(msg);
  }
  cv_.notify_all();
}

std::vector<std::string> Outbox::drain() {
  std::lock_guard lock(mu_);
  std::vector<std::string> out(std::make_move_iterator(ordered_.begin()),
                               std::make_move_iterator(ordered_.end()));
  ordered_.clear();
  if (preview_) out.push_back(std::move(*preview_));
  if (state_) out.push_back(std::move(*state_));
  preview_.reset();
  state_.reset();
  return out;
}

bool Outbox::wait(double timeout_s) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, std::chrono::duration<double>(timeout_s),
                      [&] { return !ordered_.empty() || state_ || preview_; });
}

std::size_t Outbox::pending() const {
  std::lock_guard lock(mu_);
  return ordered_.size() + (state_ ? 1 : 0) + (preview_ ? 1 : 0);
}

void Outbox::wake() { cv_.notify_all(); }

struct SessionService::Session {
  SessionId id = 0;
  std::unique_ptr<Runner> runner;
  std::shared_ptr<Outbox> outbox = std::make_shared<Outbox>();

  std::mutex cycle_mu;  // serializes cycles and log reads
  std::mutex mu;        // guards the fields below
  Retargeter retarget;
  std::map<std::string, std::uint64_t> seq;
  double opened_at = 0.0;
  double next_cycle = 0.0;  // session time of the next scheduled cycle
  double last_heartbeat = 0.0;
  double last_sample = -1.0;
  bool attached = true;
  double detached_at = 0.0;
  bool paused = false;

  std::thread thread;
  std::atomic<bool> stop{false};
  std::condition_variable cv;

  // Fills the common envelope; seq counts per message type.
  json envelope(const std::string& type, std::optional<std::uint64_t> seq_override = {}) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["type"] = type;
    j["session"] = id;
    auto& counter = seq[type];
    counter = seq_override ? *seq_override : counter + 1;
    j["seq"] = counter;
    return j;
  }

  json state_body(const PlantState& plant, const RobotConfig& robot) {
    json j;
    j["t"] = plant.t;
    j["q"] = vec(plant.x.q);
    j["qd"] = vec(plant.x.qd);
    const auto fk = forward_kinematics(plant.x.q, robot.dh);
    j["ee"] = pose_json(fk.ee);
    json centers = json::array();
    for (const auto& s : robot.spheres) centers.push_back(vec(fk.frames[s.link] * s.local_center));
    j["spheres"] = centers;
    json frames = json::array();
    for (const auto& f : fk.frames) frames.push_back(vec(f.translation()));
    j["frame_origins"] = frames;
    return j;
  }

  // Caller holds mu.
  std::string error_event(const std::string& code, const std::string& message) {
    json j = envelope("event");
    j["level"] = "error";
    j["code"] = code;
    j["message"] = message;
    std::string out = j.dump();
    outbox->push(out);
    return out;
  }
};

SessionService::SessionService(RobotConfig robot, ServiceOptions options, Clock clock)
    : robot_(std::move(robot)), options_(std::move(options)), clock_(std::move(clock)) {
  if (!clock_) clock_ = steady_seconds;
  robot_.validate();
  resolve_parameter_set(options_.default_params).validate();
}

SessionService::~SessionService() {
  std::map<SessionId, std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mu_);
    sessions.swap(sessions_);
  }
  for (auto& [id, s] : sessions) {
    s->stop = true;
    s->cv.notify_all();
    if (s->thread.joinable()) s->thread.join();
  }
}

std::shared_ptr<SessionService::Session> SessionService::find(SessionId id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

OpenResult SessionService::open_session(std::optional<SessionId> resume) {
  const double now = clock_();
  auto refuse = [&](const std::string& reason) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["type"] = "refused";
    j["session"] = resume.value_or(0);
    j["seq"] = 1;
    j["reason"] = reason;
    return OpenResult{false, 0, j.dump()};
  };

  std::shared_ptr<Session> s;
  if (resume) {
    s = find(*resume);
    if (!s) return refuse("unknown or expired session " + std::to_string(*resume) + "; open a new one");
    std::lock_guard lock(s->mu);
    if (s->attached) return refuse("session " + std::to_string(*resume) + " already has a client");
    s->attached = true;
    if (s->paused) {
      s->paused = false;
      const double t = now - s->opened_at;
      const double dt = s->runner->period();
      s->next_cycle = std::max(s->next_cycle, std::ceil(t / dt) * dt);
    }
  } else {
    std::lock_guard lock(mu_);
    if (sessions_.size() >= options_.max_sessions) {
      return refuse("capacity exceeded: " + std::to_string(options_.max_sessions) +
                    " sessions already open");
    }
    s = std::make_shared<Session>();
    s->id = next_id_++;
    s->runner = std::make_unique<Runner>(robot_, resolve_parameter_set(options_.default_params));
    s->opened_at = now;
    s->next_cycle = 0.0;
    s->last_heartbeat = 0.0;
    sessions_[s->id] = s;
  }

  json j;
  {
    std::scoped_lock lock(s->cycle_mu, s->mu);
    j = s->envelope("snapshot");
    j["resumed"] = resume.has_value();
    j["params"] = s->runner->params().name;
    j["period"] = s->runner->period();
    j["horizon"] = s->runner->params().horizon;
    json robot;
    json dh = json::array();
    for (const auto& r : robot_.dh.rows) {
      dh.push_back({{"a", r.a}, {"d", r.d}, {"alpha", r.alpha}, {"theta_offset", r.theta_offset}});
    }
    robot["dh"] = dh;
    json spheres = json::array();
    for (const auto& sp : robot_.spheres) {
      spheres.push_back({{"id", sp.id}, {"link", sp.link}, {"center", vec(sp.local_center)},
                         {"radius", sp.radius}});
    }
    robot["spheres"] = spheres;
    robot["home"] = vec(robot_.home);
    robot["reach"] = robot_.reach;
    robot["limits"] = {{"q_min", vec(robot_.limits.q_min)},   {"q_max", vec(robot_.limits.q_max)},
                       {"qd_min", vec(robot_.limits.qd_min)}, {"qd_max", vec(robot_.limits.qd_max)},
                       {"u_min", vec(robot_.limits.u_min)},   {"u_max", vec(robot_.limits.u_max)}};
    j["robot"] = robot;
    j["state"] = s->state_body(s->runner->plant(), robot_);
  }
  const std::string msg = j.dump();
  if (options_.threaded && !s->thread.joinable()) {
    s->thread = std::thread([this, s] { session_loop(s); });
  }
  return {true, s->id, msg};
}

std::string SessionService::handle_inbound(SessionId id, const std::string& text) {
  auto s = find(id);
  if (!s) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["type"] = "event";
    j["session"] = id;
    j["seq"] = 1;
    j["level"] = "error";
    j["code"] = "unknown_session";
    j["message"] = "no live session " + std::to_string(id);
    return j.dump();
  }
  const double t_session = clock_() - s->opened_at;

  std::lock_guard lock(s->mu);
  auto error = [&](const std::string& code, const std::string& message) {
    return s->error_event(code, message);
  };

  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    return error("malformed", std::string("invalid JSON: ") + e.what());
  }
  if (!msg.is_object()) return error("malformed", "message must be a JSON object");
  if (!msg.contains("type") || !msg["type"].is_string()) {
    return error("malformed", "field 'type' must be a string");
  }
  std::optional<std::int64_t> ref_seq;
  if (msg.contains("seq")) {
    if (!msg["seq"].is_number_integer()) return error("malformed", "field 'seq' must be an integer");
    ref_seq = msg["seq"].get<std::int64_t>();
  }
  if (msg.contains("session") &&
      (!msg["session"].is_number_unsigned() || msg["session"].get<SessionId>() != id)) {
    return error("wrong_session", "message addressed to another session");
  }

  const std::string type = msg["type"].get<std::string>();
  json ack = s->envelope("ack");
  ack["command"] = type;
  if (ref_seq) ack["ref_seq"] = *ref_seq;

  auto push_target = [&](const Pose& target) {
    const double t = std::max(t_session, s->last_sample + 1e-6);
    s->runner->targets().push({t, target});
    s->last_sample = t;
  };

  if (type == "set_target") {
    if (!msg.contains("pose")) return error("invalid", "set_target needs 'pose'");
    Pose device;
    if (const auto why = read_pose(msg["pose"], device); !why.empty()) return error("invalid", why);
    const Pose target = s->retarget.map(device);
    if (!s->retarget.clutch_engaged()) push_target(target);
    ack["clutch"] = s->retarget.clutch_engaged();
  } else if (type == "set_params") {
    if (!msg.contains("name") || !msg["name"].is_string()) {
      return error("invalid", "set_params needs a string 'name'");
    }
    const auto name = msg["name"].get<std::string>();
    if (name != "P1" && name != "P2") return error("invalid", "unknown parameter set '" + name + "'");
    try {
      s->runner->request_params(resolve_parameter_set(name));
    } catch (const std::exception& e) {
      return error("invalid", e.what());
    }
    ack["pending_params"] = name;
  } else if (type == "clutch") {
    if (!msg.contains("engaged") || !msg["engaged"].is_boolean()) {
      return error("invalid", "clutch needs a boolean 'engaged'");
    }
    const bool engaged = msg["engaged"].get<bool>();
    const bool was = s->retarget.clutch_engaged();
    s->retarget.set_clutch(engaged);
    if (engaged && !was) {
      // Freeze: drop the motion history so the reference stops where it is.
      const auto latest = s->runner->targets().latest();
      s->runner->targets().clear();
      if (latest) push_target(latest->pose);
    }
    ack["clutch"] = engaged;
  } else if (type == "reset") {
    s->runner->request_reset();
    s->last_sample = std::max(s->last_sample, t_session);
  } else if (type == "ping") {
  } else if (type == "open") {
    return error("invalid", "session already open");
  } else {
    return error("unknown_type", "unknown message type '" + type + "'");
  }
  std::string out = ack.dump();
  s->outbox->push(out);
  return out;
}

void SessionService::report_malformed(SessionId id, const std::string& message) {
  if (auto s = find(id)) {
    std::lock_guard lock(s->mu);
    s->error_event("malformed", message);
  }
}

void SessionService::detach(SessionId id) {
  if (auto s = find(id)) {
    std::lock_guard lock(s->mu);
    if (s->attached) {
      s->attached = false;
      s->detached_at = clock_();
    }
  }
}

void SessionService::close_session(SessionId id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return;
    s = it->second;
    sessions_.erase(it);
  }
  s->stop = true;
  s->cv.notify_all();
  s->outbox->wake();
  if (s->thread.joinable() && s->thread.get_id() != std::this_thread::get_id()) s->thread.join();
}

void SessionService::run_session_cycle(Session& s, double t) {
  std::lock_guard cycle_lock(s.cycle_mu);
  const CycleOutput out = s.runner->run_cycle(t);
  const auto& r = out.record;
  const std::uint64_t n = static_cast<std::uint64_t>(r.cycle) + 1;

  std::lock_guard lock(s.mu);
  if (r.params_switched) {
    json e = s.envelope("event");
    e["level"] = "info";
    e["code"] = "params_switched";
    e["message"] = "parameter set " + r.params + " active from cycle " + std::to_string(n);
    e["cycle"] = n;
    s.outbox->push(e.dump());
  }
  if (r.degraded) {
    json e = s.envelope("event");
    e["level"] = "warning";
    e["code"] = "degraded";
    e["message"] = "solver failed (" + r.status + "); holding the previous plan";
    e["cycle"] = n;
    s.outbox->push(e.dump());
  }

  json m = s.envelope("metrics", n);
  m["cycle"] = n;
  m["t"] = r.t;
  m["params"] = r.params;
  m["lateral_acceleration"] = r.lateral_acceleration;
  m["tracking_error"] = r.tracking_error;
  m["solve_time"] = r.solve_time;
  m["iterations"] = r.iterations;
  m["status"] = r.status;
  m["degraded"] = r.degraded;
  m["overrun"] = r.overrun;
  s.outbox->push(m.dump());

  json p = s.envelope("plan_preview", n);
  p["cycle"] = n;
  p["t"] = r.t;
  json poses = json::array();
  for (std::size_t k = 1; k < out.plan.X.size(); ++k) {
    poses.push_back(pose_json(forward_kinematics(out.plan.X[k].q, robot_.dh).ee));
  }
  p["poses"] = poses;
  p["reference"] = pose_json(Pose{r.p_ref, r.R_ref});
  s.outbox->push_preview(p.dump());

  json st = s.envelope("state", n);
  st["cycle"] = n;
  st.update(s.state_body(s.runner->plant(), robot_));
  st["params"] = s.runner->params().name;
  st["clutch"] = s.retarget.clutch_engaged();
  s.outbox->push_state(st.dump());
}

void SessionService::run_cycle(SessionId id) {
  auto s = find(id);
  if (!s) return;
  double t;
  {
    std::lock_guard lock(s->mu);
    t = s->next_cycle;
    s->next_cycle += s->runner->period();
  }
  run_session_cycle(*s, t);
}

void SessionService::session_loop(std::shared_ptr<Session> s) {
  std::mutex wait_mu;
  while (!s->stop) {
    double due;
    bool paused;
    {
      std::lock_guard lock(s->mu);
      due = s->next_cycle;
      paused = s->paused;
    }
    const double t = clock_() - s->opened_at;
    if (paused || t < due) {
      std::unique_lock lock(wait_mu);
      const double wait = paused ? 0.05 : std::min(0.05, due - t);
      s->cv.wait_for(lock, std::chrono::duration<double>(wait));
      continue;
    }
    {
      // Fixed rate: a late cycle keeps the grid; missed slots are skipped.
      std::lock_guard lock(s->mu);
      const double dt = s->runner->period();
      s->next_cycle = due + dt;
      if (t > s->next_cycle) s->next_cycle = (std::floor(t / dt) + 1.0) * dt;
    }
    try {
      run_session_cycle(*s, due);
    } catch (const std::exception& e) {
      std::lock_guard lock(s->mu);
      json ev = s->envelope("event");
      ev["level"] = "error";
      ev["code"] = "cycle_failed";
      ev["message"] = e.what();
      s->outbox->push(ev.dump());
    }
  }
}

void SessionService::tick() {
  const double now = clock_();
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, s] : sessions_) sessions.push_back(s);
  }
  for (auto& s : sessions) {
    const double t = now - s->opened_at;
    bool expired = false;
    {
      std::lock_guard lock(s->mu);
      if (!s->attached) {
        const double idle = now - s->detached_at;
        if (idle >= options_.idle_timeout) expired = true;
        else if (idle >= options_.pause_grace) s->paused = true;
      }
      if (!expired && t - s->last_heartbeat >= options_.heartbeat_period) {
        s->last_heartbeat = t;
        json h = s->envelope("heartbeat");
        h["t"] = t;
        h["paused"] = s->paused;
        s->outbox->push(h.dump());
      }
    }
    if (expired) {
      close_session(s->id);
      continue;
    }
    if (options_.threaded) continue;
    for (;;) {
      double due;
      {
        std::lock_guard lock(s->mu);
        if (s->paused || s->next_cycle > t + 1e-9) break;
        due = s->next_cycle;
        s->next_cycle += s->runner->period();
      }
      run_session_cycle(*s, due);
    }
  }
}

std::vector<std::string> SessionService::drain(SessionId id) {
  auto s = find(id);
  return s ? s->outbox->drain() : std::vector<std::string>{};
}

std::shared_ptr<Outbox> SessionService::outbox(SessionId id) {
  auto s = find(id);
  return s ? s->outbox : nullptr;
}

bool SessionService::alive(SessionId id) const { return find(id) != nullptr; }

bool SessionService::paused(SessionId id) const {
  auto s = find(id);
  if (!s) return false;
  std::lock_guard lock(s->mu);
  return s->paused;
}

std::size_t SessionService::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

TeleopLog SessionService::log(SessionId id) const {
  auto s = find(id);
  if (!s) return {};
  std::lock_guard lock(s->cycle_mu);
  return s->runner->log();
}

std::string SessionService::active_params(SessionId id) const {
  auto s = find(id);
  if (!s) return {};
  std::lock_guard lock(s->cycle_mu);
  return s->runner->params().name;
}

}  // namespace teleop
