#pragma once

// Exhaustive control-grid search for tiny instances: two active joints,
// horizon 2, every other joint's acceleration locked at zero. The rollout
// uses the closed-form quadratic q + qd t + u t^2 / 2 directly.

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "teleop/constraints.hpp"
#include "teleop/cost.hpp"
#include "teleop/ocp_solver.hpp"
#include "teleop/robot_config.hpp"

namespace oracle {

struct TinyInstance {
  teleop::OcpProblem prob;
  teleop::JointState x0;
  teleop::ReferenceTrajectory ref;
  std::array<int, 2> active{};
  double u_bound = 0.0;
};

inline TinyInstance make_tiny_instance(std::uint64_t seed, const teleop::RobotConfig& robot) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  TinyInstance inst;
  inst.u_bound = 10.0;
  const int N = 2;
  const double dt = 0.05;

  inst.active[0] = static_cast<int>(rng() % 6);
  do {
    inst.active[1] = static_cast<int>(rng() % 6);
  } while (inst.active[1] == inst.active[0]);

  teleop::Limits lim = robot.limits;
  lim.u_min.setZero();
  lim.u_max.setZero();
  for (const int j : inst.active) {
    lim.u_min[j] = -inst.u_bound;
    lim.u_max[j] = inst.u_bound;
  }

  teleop::Weights w;
  w.w3 = (rng() % 2) ? 10.0 * (0.5 + 0.5 * unit(rng)) : 0.0;

  inst.x0.q = robot.home;
  for (int j = 0; j < 6; ++j) inst.x0.q[j] += 0.2 * unit(rng);
  for (const int j : inst.active) inst.x0.qd[j] = 0.5 * unit(rng);

  // Reference: the pose reached by a random admissible constant control, so
  // the optimum is interior for the tracking terms.
  teleop::JointVector q_target = inst.x0.q;
  for (const int j : inst.active) {
    const double u = 0.8 * inst.u_bound * unit(rng);
    const double T = N * dt;
    q_target[j] += inst.x0.qd[j] * T + 0.5 * u * T * T;
  }
  const auto target = teleop::forward_kinematics(q_target, robot.dh).ee;
  inst.ref.dt = dt;
  for (int k = 0; k < N; ++k) {
    inst.ref.positions.push_back(target.p);
    inst.ref.orientations.push_back(target.R);
  }
  inst.prob = teleop::build_problem(robot.dh, robot.spheres, lim, w, N, dt);
  return inst;
}

struct GridResult {
  double minimum = std::numeric_limits<double>::infinity();
  std::vector<teleop::ControlInput> argmin;
  long evaluated = 0;
  long feasible = 0;
};

inline GridResult grid_minimum(const TinyInstance& inst, int levels = 21) {
  const auto& prob = inst.prob;
  const double dt = prob.dt;
  std::vector<double> grid(levels);
  for (int i = 0; i < levels; ++i) grid[i] = -inst.u_bound + 2.0 * inst.u_bound * i / (levels - 1);

  GridResult best;
  std::vector<teleop::JointState> X(3);
  std::vector<teleop::ControlInput> U(2, teleop::ControlInput::Zero());
  for (int a = 0; a < levels; ++a)
    for (int b = 0; b < levels; ++b)
      for (int c = 0; c < levels; ++c)
        for (int d = 0; d < levels; ++d) {
          U[0].setZero();
          U[1].setZero();
          U[0][inst.active[0]] = grid[a];
          U[0][inst.active[1]] = grid[b];
          U[1][inst.active[0]] = grid[c];
          U[1][inst.active[1]] = grid[d];
          X[0] = inst.x0;
          for (int k = 0; k < 2; ++k) {
            X[k + 1].q = X[k].q + dt * X[k].qd + 0.5 * dt * dt * U[k];
            X[k + 1].qd = X[k].qd + dt * U[k];
          }
          ++best.evaluated;
          bool ok = true;
          for (int k = 1; k <= 2 && ok; ++k) {
            ok = teleop::box_violations(X[k], U[k - 1], prob.limits).maxCoeff() == 0.0;
            if (ok && !prob.pairs.empty()) {
              for (const double m : teleop::collision_margins(X[k].q, prob.spheres, prob.pairs, prob.dh)) {
                if (m < 0.0) ok = false;
              }
            }
          }
          if (!ok) continue;
          ++best.feasible;
          const double J = teleop::total_cost(X, U, inst.ref, prob.weights, dt, prob.dh, prob.gravity);
          if (J < best.minimum) {
            best.minimum = J;
            best.argmin = U;
          }
        }
  return best;
}

}  // namespace oracle
