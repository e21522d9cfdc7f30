#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "teleop/recording.hpp"
#include "teleop/tcp_endpoint.hpp"
#include "teleop/teleop_runner.hpp"
#include "teleop/teleop_service.hpp"

namespace teleop::cli {

namespace fs = std::filesystem;

namespace {

RobotConfig load_robot(const std::string& path) {
  return path.empty() ? default_robot_config() : load_robot_config(path);
}

std::vector<TargetSample> load_input(const std::string& path, const RobotConfig& robot) {
  return path.empty() ? default_fixture(robot) : load_recording(path);
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

// Throws std::logic_error when a plan the plant executed breaks a solver
// guarantee.
void check_log(const TeleopLog& log) {
  for (const auto& r : log.records()) {
    if (r.degraded) continue;
    if (r.dynamics_residual > 1e-10) {
      throw std::logic_error("cycle " + std::to_string(r.cycle) + ": dynamics residual " +
                             std::to_string(r.dynamics_residual));
    }
    if (r.min_collision_margin < -1e-6) {
      throw std::logic_error("cycle " + std::to_string(r.cycle) + ": collision margin " +
                             std::to_string(r.min_collision_margin));
    }
  }
}

void print_metrics(std::ostream& out, const std::string& label, const Metrics& m) {
  out << std::left << std::setw(10) << label << std::right << std::fixed << std::setprecision(4)
      << std::setw(8) << m.cycles << std::setw(12) << m.mean_lateral << std::setw(12)
      << m.max_lateral << std::setw(12) << m.rms_tracking_error << std::setw(11)
      << m.solve_mean * 1e3 << std::setw(11) << m.solve_p99 * 1e3 << std::setw(10)
      << m.degraded_cycles << '\n';
  out.unsetf(std::ios::floatfield);
}

void print_header(std::ostream& out) {
  out << std::left << std::setw(10) << "params" << std::right << std::setw(8) << "cycles"
      << std::setw(12) << "lat_mean" << std::setw(12) << "lat_max" << std::setw(12) << "rms_err"
      << std::setw(11) << "solve_ms" << std::setw(11) << "p99_ms" << std::setw(10) << "degraded"
      << '\n';
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << '\n';
    return kInvariantBreach;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInvariantBreach;
  }
}

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

}  // namespace

int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RobotConfig robot = load_robot(o.common.robot);
    const ParameterSet params = resolve_parameter_set(o.params);
    const auto recording = load_input(o.recording, robot);
    const fs::path dir = prepare_out(o.common.out);

    teleop::ReplayOptions ro;
    ro.max_iterations = o.max_iterations;
    const TeleopLog log = replay(recording, params, robot, ro);
    check_log(log);

    const Mat3 R_home = forward_kinematics(robot.home, robot.dh).ee.R;
    {
      auto f = open_out(dir / "log.csv");
      write_log_csv(f, log, R_home);
    }
    {
      auto f = open_out(dir / "log.jsonl");
      write_log_jsonl(f, log);
    }
    auto summary = open_out(dir / "summary.json");
    if (log.empty()) {
      summary << "{\"cycles\": 0}\n";
      out << "empty recording: 0 cycles\n";
      return kOk;
    }
    const Metrics m = metrics(log);
    summary << to_json(m) << '\n';
    print_header(out);
    print_metrics(out, params.name, m);
    if (m.degraded_cycles > 0) {
      err << "warning: " << m.degraded_cycles << " degraded cycle(s) held the previous plan\n";
    }
    return kOk;
  });
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.cycles < 1) throw ConfigError("--cycles must be >= 1");
    if (!(o.jitter >= 0.0)) throw ConfigError("--jitter must be >= 0");
    const RobotConfig robot = load_robot(o.common.robot);
    const ParameterSet params = resolve_parameter_set(o.params);
    std::vector<TargetSample> recording;
    if (o.recording.empty()) {
      recording = default_fixture(robot, o.cycles * params.dt);
    } else {
      recording = load_recording(o.recording);
    }
    if (o.jitter > 0.0) {
      std::mt19937_64 rng(o.common.seed);
      std::normal_distribution<double> noise(0.0, o.jitter);
      for (auto& s : recording) {
        for (int i = 0; i < 3; ++i) s.pose.p[i] += noise(rng);
      }
    }
    TeleopLog log = replay(recording, params, robot);
    check_log(log);
    if (static_cast<int>(log.size()) > o.cycles) {
      TeleopLog trimmed;
      for (int i = 0; i < o.cycles; ++i) trimmed.append(log.records()[i]);
      log = std::move(trimmed);
    }
    if (log.empty()) throw ConfigError("recording too short for a single cycle");
    const Metrics m = metrics(log);

    nlohmann::json j;
    j["params"] = params.name;
    j["cycles"] = m.cycles;
    j["seed"] = o.common.seed;
    j["solve_time_s"] = {{"mean", m.solve_mean}, {"max", m.solve_max}, {"p50", m.solve_p50},
                         {"p99", m.solve_p99}};
    j["mean_iterations"] = m.mean_iterations;
    j["degraded_cycles"] = m.degraded_cycles;
    j["overruns"] = m.overruns;
    std::vector<int> iters;
    for (const auto& r : log.records()) iters.push_back(r.iterations);
    j["iterations"] = iters;
    const fs::path dir = prepare_out(o.common.out);
    open_out(dir / "bench.json") << j.dump(2) << '\n';

    out << std::fixed << std::setprecision(3);
    out << "cycles      " << m.cycles << '\n'
        << "mean  [ms]  " << m.solve_mean * 1e3 << '\n'
        << "p50   [ms]  " << m.solve_p50 * 1e3 << '\n'
        << "p99   [ms]  " << m.solve_p99 * 1e3 << '\n'
        << "max   [ms]  " << m.solve_max * 1e3 << '\n'
        << "iters mean  " << m.mean_iterations << '\n'
        << "degraded    " << m.degraded_cycles << '\n';
    out.unsetf(std::ios::floatfield);
    return kOk;
  });
}

int cmd_compare(const CompareOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RobotConfig robot = load_robot(o.common.robot);
    const ParameterSet a = resolve_parameter_set(o.params_a);
    const ParameterSet b = resolve_parameter_set(o.params_b);
    if (a.dt != b.dt) throw ConfigError("parameter sets must share dt to be aligned");
    const auto recording = load_input(o.recording, robot);
    const fs::path dir = prepare_out(o.common.out);

    const TeleopLog la = replay(recording, a, robot);
    const TeleopLog lb = replay(recording, b, robot);
    check_log(la);
    check_log(lb);
    const Mat3 R_home = forward_kinematics(robot.home, robot.dh).ee.R;

    auto f = open_out(dir / "compare.csv");
    f << "t,y_ref,roll_ref,y_a,roll_a,lat_a,y_b,roll_b,lat_b\n";
    char buf[512];
    for (std::size_t i = 0; i < la.size(); ++i) {
      const auto& ra = la.records()[i];
      const auto& rb = lb.records()[i];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    ra.t, ra.p_ref.y(), roll_angle(ra.R_ref, R_home), ra.ee.p.y(),
                    roll_angle(ra.ee.R, R_home), ra.lateral_acceleration, rb.ee.p.y(),
                    roll_angle(rb.ee.R, R_home), rb.lateral_acceleration);
      f << buf;
    }
    if (la.empty()) {
      out << "empty recording: 0 cycles\n";
      return kOk;
    }
    print_header(out);
    print_metrics(out, "a:" + a.name, metrics(la));
    print_metrics(out, "b:" + b.name, metrics(lb));
    if (to_json(a) == to_json(b)) {
      out << "note: identical parameter sets, expect zero difference between a and b\n";
    }
    return kOk;
  });
}

int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.port < 0 || o.port > 65535) throw ConfigError("--port must be in 0..65535");
    if (o.max_sessions < 1) throw ConfigError("--max-sessions must be >= 1");
    ServiceOptions so;
    so.threaded = true;
    so.max_sessions = static_cast<std::size_t>(o.max_sessions);
    so.default_params = o.params;
    SessionService service(load_robot(o.robot), so);
    TcpServer server(service, static_cast<std::uint16_t>(o.port), o.bind);
    server.start();
    out << "listening on " << o.bind << ':' << server.port() << std::endl;
    g_stop = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    out << "stopped\n";
    return kOk;
  });
}

int cmd_fixture(const FixtureOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(o.duration > 0.0)) throw ConfigError("--duration must be positive");
    const RobotConfig robot = load_robot(o.robot);
    const auto rec = default_fixture(robot, o.duration);
    const fs::path p(o.out);
    if (p.has_parent_path()) prepare_out(p.parent_path().string());
    save_recording(p, rec);
    out << "wrote " << rec.size() << " samples to " << p.string() << '\n';
    return kOk;
  });
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Receding-horizon teleoperation planner"};
  app.require_subcommand(1);

  ReplayOptions replay_o;
  BenchOptions bench_o;
  CompareOptions compare_o;
  ServeOptions serve_o;
  FixtureOptions fixture_o;
  int max_iter = -1;

  auto add_common = [](CLI::App* c, CommonOptions& co) {
    c->add_option("--robot", co.robot, "Robot description file (default: bundled UR5e)");
    c->add_option("--out", co.out, "Output directory");
    c->add_option("--seed", co.seed, "Random seed");
  };

  auto* rep = app.add_subcommand("replay", "Replay a recording through the planner loop");
  add_common(rep, replay_o.common);
  rep->add_option("--params", replay_o.params, "Parameter set: P1, P2 or a JSON file");
  rep->add_option("--recording", replay_o.recording, "Recording (JSONL); default: bundled sweep");
  rep->add_option("--max-iterations", max_iter, "Override the solver iteration cap");

  auto* ben = app.add_subcommand("bench", "Time the planner loop on the fixture");
  add_common(ben, bench_o.common);
  ben->add_option("--params", bench_o.params, "Parameter set");
  ben->add_option("--recording", bench_o.recording, "Recording; default: bundled sweep");
  ben->add_option("--cycles", bench_o.cycles, "Number of cycles");
  ben->add_option("--jitter", bench_o.jitter, "Std-dev of seeded position noise (m)");

  auto* cmp = app.add_subcommand("compare", "Replay with two parameter sets and export plot data");
  add_common(cmp, compare_o.common);
  std::vector<std::string> compare_sets;
  cmp->add_option("--params", compare_sets, "Two parameter sets a and b (repeat the flag)")
      ->expected(1, 2);
  cmp->add_option("--recording", compare_o.recording, "Recording; default: bundled sweep");

  auto* srv = app.add_subcommand("serve", "Run the session service");
  srv->add_option("--robot", serve_o.robot, "Robot description file");
  srv->add_option("--bind", serve_o.bind, "Bind address");
  srv->add_option("--port", serve_o.port, "TCP port (0 = ephemeral)");
  srv->add_option("--max-sessions", serve_o.max_sessions, "Session capacity");
  srv->add_option("--params", serve_o.params, "Default parameter set");

  auto* fix = app.add_subcommand("fixture", "Write the synthetic sweep recording");
  fix->add_option("--robot", fixture_o.robot, "Robot description file");
  fix->add_option("--out", fixture_o.out, "Output file");
  fix->add_option("--duration", fixture_o.duration, "Duration (s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  if (*rep) {
    if (max_iter >= 0) replay_o.max_iterations = max_iter;
    return cmd_replay(replay_o, out, err);
  }
  if (*ben) return cmd_bench(bench_o, out, err);
  if (*cmp) {
    if (!compare_sets.empty()) {
      if (compare_sets.size() != 2) {
        err << "error: compare needs exactly two --params values\n";
        return kConfigError;
      }
      compare_o.params_a = compare_sets[0];
      compare_o.params_b = compare_sets[1];
    }
    return cmd_compare(compare_o, out, err);
  }
  if (*srv) return cmd_serve(serve_o, out, err);
  if (*fix) return cmd_fixture(fixture_o, out, err);
  return kConfigError;
}

}  // namespace teleop::cli
