#pragma once

// Live planner sessions behind a JSON message interface.
//
// Inbound (client -> service) messages are JSON objects with a "type":
//   open        {"resume": id?}           handled by open_session / the endpoint
//   set_target  {"pose": {"p": [x,y,z], "q": [w,x,y,z]}}
//   set_params  {"name": "P1" | "P2"}
//   clutch      {"engaged": bool}
//   reset       {}
//   ping        {}
// An optional integer "seq" is echoed back in the acknowledgement.
//
// Outbound messages carry "schema_version", "type", "session" and "seq".
// seq counts per message type within a session, starting at 1; cycle
// messages (state, plan_preview, metrics) use the cycle number, so a
// consumer can detect coalesced state frames. The schema is published in
// schema/session_message.schema.json.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "teleop/teleop_runner.hpp"

namespace teleop {

inline constexpr int kSchemaVersion = 1;

using SessionId = std::uint64_t;

/// Per-session outbound queue. State and plan previews are latest-wins;
/// everything else (metrics, events, acks, heartbeats) is kept in order.
class Outbox {
 public:
  void push(std::string msg);
  void push_state(std::string msg);
  void push_preview(std::string msg);

  /// Ordered messages first, then the latest preview and state.
  std::vector<std::string> drain();
  /// Waits until something is queued or the timeout elapses.
  bool wait(double timeout_s);
  std::size_t pending() const;
  void wake();

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> ordered_;
  std::optional<std::string> state_;
  std::optional<std::string> preview_;
};

struct ServiceOptions {
  std::size_t max_sessions = 8;
  double heartbeat_period = 1.0;   // s
  double idle_timeout = 30.0;      // s without an attached client before teardown
  double pause_grace = 2.0;        // s without a client before the runner pauses
  std::string default_params = "P2";
  /// When true each session runs its loop on its own thread; otherwise the
  /// owner drives cycles through tick().
  bool threaded = false;
};

struct OpenResult {
  bool accepted = false;
  SessionId id = 0;
  std::string message;  // snapshot on success, refusal otherwise
};

class SessionService {
 public:
  using Clock = std::function<double()>;

  SessionService(RobotConfig robot, ServiceOptions options = {}, Clock clock = {});
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// New session (resume = nullopt) or re-attachment to a live, detached one.
  OpenResult open_session(std::optional<SessionId> resume = std::nullopt);
  /// Process one inbound JSON text. Returns the acknowledgement or error
  /// event, which is also queued on the session's outbox.
  std::string handle_inbound(SessionId id, const std::string& text);
  /// Queues a "malformed" error event, for input rejected before parsing.
  void report_malformed(SessionId id, const std::string& message);
  void detach(SessionId id);
  void close_session(SessionId id);

  /// Runs every due cycle and performs housekeeping (heartbeats, pause,
  /// teardown). In threaded mode only housekeeping happens here.
  void tick();
  /// Run one cycle of a session immediately, regardless of schedule.
  void run_cycle(SessionId id);

  /// Outbound messages for a session (empty if the id is unknown).
  std::vector<std::string> drain(SessionId id);
  std::shared_ptr<Outbox> outbox(SessionId id);

  bool alive(SessionId id) const;
  bool paused(SessionId id) const;
  std::size_t session_count() const;
  /// Copy of a session's cycle log.
  TeleopLog log(SessionId id) const;
  std::string active_params(SessionId id) const;

  double now() const { return clock_(); }
  const ServiceOptions& options() const { return options_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(SessionId id) const;
  void run_session_cycle(Session& s, double t);
  void session_loop(std::shared_ptr<Session> s);

  RobotConfig robot_;
  ServiceOptions options_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<SessionId, std::shared_ptr<Session>> sessions_;
  SessionId next_id_ = 1;
};

}  // namespace teleop
