#include <benchmark/benchmark.h>

#include "teleop/cost.hpp"
#include "teleop/kinematics.hpp"
#include "teleop/ocp_solver.hpp"
#include "teleop/teleop_runner.hpp"

using namespace teleop;

namespace {

const RobotConfig& robot() {
  static const RobotConfig r = default_robot_config();
  return r;
}

JointVector moving_q() {
  JointVector q = robot().home;
  q.array() += 0.1;
  return q;
}

void BM_ForwardKinematics(benchmark::State& state) {
  const JointVector q = moving_q();
  for (auto _ : state) benchmark::DoNotOptimize(forward_kinematics(q, robot().dh));
}
BENCHMARK(BM_ForwardKinematics);

void BM_NodeKinematics(benchmark::State& state) {
  const JointVector q = moving_q(), qd = JointVector::Constant(0.3), u = JointVector::Constant(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(node_kinematics(q, qd, u, robot().dh));
}
BENCHMARK(BM_NodeKinematics);

void BM_StageResidual(benchmark::State& state) {
  const JointState x{moving_q(), JointVector::Constant(0.3)};
  const ControlInput u = ControlInput::Constant(1.0);
  const Pose ref = forward_kinematics(robot().home, robot().dh).ee;
  const Weights w = builtin_p2().weights;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stage_residual(x, u, ref.p, ref.R, w, default_gravity(), robot().dh));
  }
}
BENCHMARK(BM_StageResidual);

void BM_SphereKinematics(benchmark::State& state) {
  const JointVector q = moving_q();
  for (auto _ : state) benchmark::DoNotOptimize(sphere_kinematics(q, robot().spheres, robot().dh));
}
BENCHMARK(BM_SphereKinematics);

void BM_SolveCold(benchmark::State& state) {
  const ParameterSet p = state.range(0) ? builtin_p2() : builtin_p1();
  const OcpSolver solver(build_problem(robot(), p));
  const JointState x0{robot().home, JointVector::Zero()};
  const Pose ee = forward_kinematics(robot().home, robot().dh).ee;
  const auto ref = predict(ee.p, ee.R, {Vec3(0.0, 0.6, 0.0), Vec3(0.5, 0.0, 0.0)}, p.dt, p.horizon,
                           robot().reach);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(x0, ref));
}
BENCHMARK(BM_SolveCold)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RunnerCycle(benchmark::State& state) {
  const auto rec = default_fixture(robot(), 10.0);
  for (auto _ : state) {
    state.PauseTiming();
    Runner runner(robot(), builtin_p2());
    std::size_t next = 0;
    state.ResumeTiming();
    for (int c = 0; c < 20; ++c) {
      const double t = rec.front().t + 0.05 * (c + 100);
      while (next < rec.size() && rec[next].t <= t) runner.targets().push(rec[next++]);
      benchmark::DoNotOptimize(runner.run_cycle(t));
    }
  }
  state.SetItemsProcessed(state.iterations() * 20);
}
BENCHMARK(BM_RunnerCycle)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
