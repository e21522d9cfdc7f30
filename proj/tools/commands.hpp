#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace teleop::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kInvariantBreach = 3 };

struct CommonOptions {
  std::string robot;  // robot description file; empty = bundled
  std::string out = ".";
  std::uint64_t seed = 0;
};

struct ReplayOptions {
  CommonOptions common;
  std::string params = "P2";
  std::string recording;  // empty = bundled fixture
  std::optional<int> max_iterations;
};

struct BenchOptions {
  CommonOptions common;
  std::string params = "P2";
  std::string recording;
  int cycles = 200;
  double jitter = 0.0;  // m; seeded noise added to the fixture positions
};

struct CompareOptions {
  CommonOptions common;
  std::string params_a = "P1";
  std::string params_b = "P2";
  std::string recording;
};

struct ServeOptions {
  std::string robot;
  std::string bind = "127.0.0.1";
  int port = 8765;
  int max_sessions = 8;
  std::string params = "P2";
};

struct FixtureOptions {
  std::string robot;
  std::string out = "sweep.jsonl";
  double duration = 10.0;
};

// Each command writes human-readable output to `out`, diagnostics to `err`,
// and returns an exit code. Exceptions are mapped to exit codes inside.
int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareOptions& o, std::ostream& out, std::ostream& err);
int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err);
int cmd_fixture(const FixtureOptions& o, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace teleop::cli
