#include "teleop/ocp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "teleop/qp.hpp"

namespace teleop {

namespace {

constexpr double kBoundTolerance = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(const JointState& x) { return x.q.allFinite() && x.qd.allFinite(); }

bool all_finite(const ReferenceTrajectory& ref) {
  for (const auto& p : ref.positions) {
    if (!p.allFinite()) return false;
  }
  for (const auto& R : ref.orientations) {
    if (!R.allFinite()) return false;
  }
  return true;
}

// Values needed by the merit function at one iterate.
struct Evaluation {
  std::vector<JointState> X;
  double objective = 0.0;
  double bound_violation_sum = 0.0;
  double bound_violation_max = 0.0;
  double collision_violation_sum = 0.0;
  double min_margin = kInf;
  // node-major margins, one block of pairs.size() per node k = 1..N
  std::vector<double> margins;

  double violation_sum() const { return bound_violation_sum + collision_violation_sum; }
  double collision_violation_max() const { return std::max(0.0, -min_margin); }
  double max_violation() const { return std::max(bound_violation_max, collision_violation_max()); }
};

std::vector<JointState> rollout(const OcpProblem& prob, const JointState& x0,
                                const Eigen::VectorXd& U) {
  std::vector<JointState> X(prob.horizon + 1);
  X[0] = x0;
  for (int k = 0; k < prob.horizon; ++k) {
    X[k + 1] = step(X[k], ControlInput(U.segment<kJointCount>(k * kJointCount)), prob.model);
  }
  return X;
}

Evaluation evaluate(const OcpProblem& prob, const JointState& x0, const ReferenceTrajectory& ref,
                    const Eigen::VectorXd& U) {
  Evaluation e;
  e.X = rollout(prob, x0, U);
  const int N = prob.horizon;
  for (int k = 1; k <= N; ++k) {
    const ControlInput u = U.segment<kJointCount>((k - 1) * kJointCount);
    e.objective += stage_cost(e.X[k], u, ref.positions[k - 1], ref.orientations[k - 1],
                              prob.weights, prob.gravity, prob.dh);
    const BoxViolations v = box_violations(e.X[k], u, prob.limits);
    e.bound_violation_sum += v.sum();
    e.bound_violation_max = std::max(e.bound_violation_max, v.maxCoeff());
    if (!prob.pairs.empty()) {
      const auto m = collision_margins(e.X[k].q, prob.spheres, prob.pairs, prob.dh);
      for (const double mi : m) {
        e.min_margin = std::min(e.min_margin, mi);
        if (mi < 0.0) e.collision_violation_sum += -mi;
      }
      e.margins.insert(e.margins.end(), m.begin(), m.end());
    }
  }
  e.objective *= prob.dt;
  return e;
}

// Gauss-Newton model of the objective in U.
struct QuadraticModel {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

QuadraticModel linearize_objective(const OcpProblem& prob, const ReferenceTrajectory& ref,
                                   const std::vector<JointState>& X, const Eigen::VectorXd& U) {
  const int N = prob.horizon;
  const int nu = prob.control_size();
  QuadraticModel qm;
  qm.gradient = Eigen::VectorXd::Zero(nu);
  qm.hessian = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::MatrixXd M(kResidualSize, nu);
  for (int k = 1; k <= N; ++k) {
    const ControlInput u = U.segment<kJointCount>((k - 1) * kJointCount);
    const StageResidual s = stage_residual(X[k], u, ref.positions[k - 1], ref.orientations[k - 1],
                                           prob.weights, prob.gravity, prob.dh);
    const int cols = k * kJointCount;  // x_k depends on u_0..u_{k-1} only
    const auto gamma = prob.state_sensitivity.block((k - 1) * kStateSize, 0, kStateSize, cols);
    M.setZero();
    M.leftCols(cols).noalias() = s.J.leftCols<kStateSize>() * gamma;
    M.block<kResidualSize, kJointCount>(0, (k - 1) * kJointCount) += s.J.rightCols<kJointCount>();
    const auto Mk = M.leftCols(cols);
    qm.gradient.head(cols).noalias() += (2.0 * prob.dt) * (Mk.transpose() * s.r);
    qm.hessian.topLeftCorner(cols, cols).noalias() += (2.0 * prob.dt) * (Mk.transpose() * Mk);
  }
  return qm;
}

// Linearized constraint rows C d >= b around U.
struct ConstraintRows {
  Eigen::MatrixXd C;
  Eigen::VectorXd b;
};

ConstraintRows linearize_constraints(const OcpProblem& prob, const Evaluation& e,
                                     const Eigen::VectorXd& U) {
  const int N = prob.horizon;
  const int nu = prob.control_size();
  const auto& lim = prob.limits;
  const StateVector x_min = lim.x_min();
  const StateVector x_max = lim.x_max();

  // Collision rows for pairs near contact.
  std::vector<std::pair<int, int>> near;  // (node k, pair index)
  const auto& pairs = prob.pairs.pairs();
  const double act = prob.settings.activation_distance;
  for (int k = 1; k <= N && !pairs.empty(); ++k) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double m = e.margins[(k - 1) * pairs.size() + p];
      const double rr = prob.spheres[pairs[p].first].radius + prob.spheres[pairs[p].second].radius;
      // |c_i - c_j| < rr + act  <=>  m < (rr + act)^2 - rr^2
      if (m < act * (2.0 * rr + act)) near.emplace_back(k, static_cast<int>(p));
    }
  }

  const int rows = 2 * nu + 2 * N * kStateSize + static_cast<int>(near.size());
  ConstraintRows c;
  c.C = Eigen::MatrixXd::Zero(rows, nu);
  c.b.resize(rows);
  int r = 0;
  for (int i = 0; i < nu; ++i) {
    const int j = i % kJointCount;
    c.C(r, i) = 1.0;
    c.b[r++] = lim.u_min[j] - U[i];
    c.C(r, i) = -1.0;
    c.b[r++] = U[i] - lim.u_max[j];
  }
  for (int k = 1; k <= N; ++k) {
    const StateVector x = e.X[k].stacked();
    const int cols = k * kJointCount;
    for (int s = 0; s < kStateSize; ++s) {
      const auto grow = prob.state_sensitivity.row((k - 1) * kStateSize + s).head(cols);
      c.C.row(r).head(cols) = grow;
      c.b[r++] = x_min[s] - x[s];
      c.C.row(r).head(cols) = -grow;
      c.b[r++] = x[s] - x_max[s];
    }
  }
  int cached_node = -1;
  SphereKinematics sk;
  for (const auto& [k, p] : near) {
    if (k != cached_node) {
      sk = sphere_kinematics(e.X[k].q, prob.spheres, prob.dh);
      cached_node = k;
    }
    const auto [i, j] = pairs[p];
    const Vec3 diff = sk.centers[i] - sk.centers[j];
    const Eigen::Matrix<double, 1, kJointCount> dm_dq =
        2.0 * diff.transpose() * (sk.jacobians[i] - sk.jacobians[j]);
    const int cols = k * kJointCount;
    c.C.row(r).head(cols) =
        dm_dq * prob.state_sensitivity.block((k - 1) * kStateSize, 0, kJointCount, cols);
    c.b[r++] = -e.margins[(k - 1) * pairs.size() + p];
  }
  return c;
}

JointState interpolate(const std::vector<JointState>& X, double t, double dt) {
  const int N = static_cast<int>(X.size()) - 1;
  const double s = t / dt;
  const int i = static_cast<int>(std::floor(s + 1e-9));
  if (i >= N) return X[N];
  if (i < 0) return X[0];
  const double frac = std::clamp(s - i, 0.0, 1.0);
  if (frac < 1e-9) return X[i];
  return {X[i].q + frac * (X[i + 1].q - X[i].q), X[i].qd + frac * (X[i + 1].qd - X[i].qd)};
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIterations:
      return "max-iter";
    case SolveStatus::kInfeasibleStartRecovered:
      return "infeasible-start-recovered";
  }
  return "unknown";
}

OcpProblem build_problem(const DhTable& dh, std::vector<SphereSpec> spheres, const Limits& limits,
                         const Weights& weights, int horizon, double dt, const Vec3& gravity,
                         const SolverSettings& settings) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  dh.validate();
  limits.validate();
  weights.validate();
  for (const auto& s : spheres) s.validate();
  if (settings.max_iterations < 0) throw ConfigError("max_iterations must be >= 0");

  OcpProblem prob;
  try {
    prob.model = discretize(dt);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  prob.weights = weights;
  prob.limits = limits;
  prob.pairs = build_pairs(spheres);
  prob.spheres = std::move(spheres);
  prob.horizon = horizon;
  prob.dt = dt;
  prob.dh = dh;
  prob.gravity = gravity;
  prob.settings = settings;

  const int N = horizon;
  prob.state_sensitivity = Eigen::MatrixXd::Zero(N * kStateSize, N * kJointCount);
  // Gamma_{k,j} = A^{k-1-j} B for j < k
  InputMatrix AB = prob.model.B_d;
  for (int lag = 0; lag < N; ++lag) {
    for (int j = 0; j + lag < N; ++j) {
      const int k = j + lag + 1;
      prob.state_sensitivity.block<kStateSize, kJointCount>((k - 1) * kStateSize,
                                                             j * kJointCount) = AB;
    }
    AB = prob.model.A_d * AB;
  }
  return prob;
}

OcpProblem build_problem(const RobotConfig& robot, const ParameterSet& params) {
  robot.validate();
  params.validate();
  return build_problem(robot.dh, robot.spheres, robot.limits, params.weights, params.horizon,
                       params.dt, params.gravity, params.solver);
}

Eigen::VectorXd flatten_controls(std::span<const ControlInput> U) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(U.size()) * kJointCount);
  for (std::size_t k = 0; k < U.size(); ++k) out.segment<kJointCount>(k * kJointCount) = U[k];
  return out;
}

std::vector<ControlInput> unflatten_controls(const Eigen::VectorXd& U) {
  std::vector<ControlInput> out(U.size() / kJointCount);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = U.segment<kJointCount>(k * kJointCount);
  return out;
}

InitialGuess cold_start(const JointState& x0, const OcpProblem& prob) {
  InitialGuess g;
  g.x0 = x0;
  g.X.assign(prob.horizon + 1, x0);
  g.U.assign(prob.horizon, ControlInput::Zero());
  g.cold = true;
  return g;
}

InitialGuess shift_warm_start(const WarmStart& warm, double elapsed, const OcpProblem& prob) {
  const auto& prev = warm.previous;
  const int N = prob.horizon;
  const double dt = prob.dt;
  if (prev.X.empty()) throw ParameterError("shift_warm_start: empty previous solution");
  if (!(elapsed >= 0.0) || elapsed > N * dt + 1e-12 ||
      static_cast<int>(prev.U.size()) != N || static_cast<int>(prev.X.size()) != N + 1) {
    JointState x0{prev.X.back().q, JointVector::Zero()};
    return cold_start(x0, prob);
  }
  InitialGuess g;
  g.x0 = interpolate(prev.X, elapsed, dt);
  g.X.resize(N + 1);
  g.U.resize(N);
  for (int k = 0; k <= N; ++k) {
    const double t = elapsed + k * dt;
    if (t > N * dt + 1e-9) {
      g.X[k] = prev.X[N];
    } else {
      g.X[k] = interpolate(prev.X, t, dt);
    }
    if (k < N) {
      const int j = static_cast<int>(std::floor(t / dt + 1e-9));
      g.U[k] = j < N ? prev.U[j] : ControlInput::Zero();
    }
  }
  return g;
}

CondensedProblem::CondensedProblem(const OcpProblem& prob, const JointState& x0,
                                   const ReferenceTrajectory& ref)
    : prob_(&prob), x0_(x0), ref_(&ref) {
  if (ref.horizon() != prob.horizon) throw ParameterError("reference length differs from horizon");
}

std::vector<JointState> CondensedProblem::rollout(const Eigen::VectorXd& U) const {
  return teleop::rollout(*prob_, x0_, U);
}

double CondensedProblem::objective(const Eigen::VectorXd& U) const {
  return evaluate(*prob_, x0_, *ref_, U).objective;
}

Eigen::VectorXd CondensedProblem::gradient(const Eigen::VectorXd& U) const {
  const auto X = rollout(U);
  return linearize_objective(*prob_, *ref_, X, U).gradient;
}

Eigen::VectorXd CondensedProblem::collision_margins(const Eigen::VectorXd& U) const {
  const auto e = evaluate(*prob_, x0_, *ref_, U);
  return Eigen::Map<const Eigen::VectorXd>(e.margins.data(),
                                           static_cast<Eigen::Index>(e.margins.size()));
}

Eigen::MatrixXd CondensedProblem::collision_jacobian(const Eigen::VectorXd& U) const {
  const auto X = rollout(U);
  const auto& pairs = prob_->pairs.pairs();
  const int N = prob_->horizon;
  Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(N * static_cast<int>(pairs.size()), size());
  for (int k = 1; k <= N; ++k) {
    const auto sk = sphere_kinematics(X[k].q, prob_->spheres, prob_->dh);
    const auto gq = prob_->state_sensitivity.block((k - 1) * kStateSize, 0, kJointCount, size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      const Vec3 diff = sk.centers[i] - sk.centers[j];
      const Eigen::Matrix<double, 1, kJointCount> dm_dq =
          2.0 * diff.transpose() * (sk.jacobians[i] - sk.jacobians[j]);
      Jm.row((k - 1) * static_cast<int>(pairs.size()) + static_cast<int>(p)) = dm_dq * gq;
    }
  }
  return Jm;
}

OcpSolver::OcpSolver(OcpProblem problem) : prob_(std::move(problem)) {
  if (prob_.state_sensitivity.rows() != prob_.horizon * kStateSize) {
    throw ConfigError("OcpSolver: problem was not assembled with build_problem");
  }
}

SolveResult OcpSolver::solve(const JointState& x0, const ReferenceTrajectory& ref,
                             const std::optional<WarmStart>& warm, double now) const {
  if (!warm) return solve(x0, ref);
  const auto guess = shift_warm_start(*warm, now - warm->start_time, prob_);
  return solve(x0, ref, guess.U);
}

SolveResult OcpSolver::solve(const JointState& x0_in, const ReferenceTrajectory& ref,
                             std::span<const ControlInput> initial_controls) const {
  const auto t_begin = std::chrono::steady_clock::now();
  const auto& prob = prob_;
  const auto& set = prob.settings;
  const int N = prob.horizon;
  const int nu = prob.control_size();

  if (!all_finite(x0_in)) throw InputError("solve: x0 contains non-finite values");
  if (ref.horizon() != N || static_cast<int>(ref.orientations.size()) != N) {
    throw ParameterError("solve: reference has " + std::to_string(ref.horizon()) +
                         " nodes, horizon is " + std::to_string(N));
  }
  if (!all_finite(ref)) throw InputError("solve: reference contains non-finite values");
  for (const auto& u : initial_controls) {
    if (!u.allFinite()) throw InputError("solve: initial guess contains non-finite values");
  }

  SolveResult out;
  JointState x0 = x0_in;
  x0.q = x0.q.cwiseMax(prob.limits.q_min).cwiseMin(prob.limits.q_max);
  x0.qd = x0.qd.cwiseMax(prob.limits.qd_min).cwiseMin(prob.limits.qd_max);
  out.x0_clamped = (x0.q != x0_in.q) || (x0.qd != x0_in.qd);

  Eigen::VectorXd U = Eigen::VectorXd::Zero(nu);
  if (static_cast<int>(initial_controls.size()) == N) U = flatten_controls(initial_controls);
  for (int i = 0; i < nu; ++i) {
    const int j = i % kJointCount;
    U[i] = std::clamp(U[i], prob.limits.u_min[j], prob.limits.u_max[j]);
  }

  std::vector<int> free;
  std::vector<int> kept_rows;
  for (int i = 0; i < nu; ++i) {
    const int j = i % kJointCount;
    if (prob.limits.u_max[j] > prob.limits.u_min[j]) {
      free.push_back(i);
      kept_rows.push_back(2 * i);
      kept_rows.push_back(2 * i + 1);
    }
  }

  Evaluation cur = evaluate(prob, x0, ref, U);
  const bool start_feasible = cur.bound_violation_max <= kBoundTolerance &&
                              cur.collision_violation_max() <= set.constraint_tol;

  struct Candidate {
    Eigen::VectorXd U;
    Evaluation eval;
    double kkt = kInf;
    int iteration = 0;
  };
  std::optional<Candidate> best;
  auto feasible = [&](const Evaluation& e) {
    return e.bound_violation_max <= kBoundTolerance &&
           e.collision_violation_max() <= set.constraint_tol;
  };
  auto better = [&](const Evaluation& a, const Evaluation& b) {
    const bool fa = feasible(a), fb = feasible(b);
    if (fa != fb) return fa;
    if (fa) return a.objective < b.objective;
    return a.max_violation() < b.max_violation();
  };

  double mu = 1.0;
  bool converged = false;
  int iterations = 0;
  double kkt = kInf;
  for (;;) {
    const QuadraticModel qm = linearize_objective(prob, ref, cur.X, U);
    const ConstraintRows rows = linearize_constraints(prob, cur, U);
    kept_rows.resize(2 * free.size());
    for (int r = 2 * nu; r < rows.b.size(); ++r) kept_rows.push_back(r);
    // Locked controls (u_min == u_max) are removed from the QP.
    Eigen::MatrixXd H = qm.hessian(free, free);
    H.diagonal().array() += 1e-9 * (1.0 + H.diagonal().array().abs());
    const Eigen::VectorXd g = qm.gradient(free);
    const Eigen::MatrixXd C = rows.C(kept_rows, free);
    const Eigen::VectorXd b = rows.b(kept_rows);
    const QpResult qp = solve_qp(H, g, C, b);

    if (qp.status == QpStatus::kSolved) {
      const Eigen::VectorXd lagr = g - C.transpose() * qp.multipliers;
      const double comp =
          b.size() ? (qp.multipliers.array() * b.array().abs()).maxCoeff() : 0.0;
      kkt = std::max(lagr.lpNorm<Eigen::Infinity>(), comp);
    } else {
      kkt = kInf;
    }
    if (!best || better(cur, best->eval) ||
        (best->iteration == iterations - 1 && cur.objective == best->eval.objective)) {
      best = Candidate{U, cur, kkt, iterations};
    }
    if (kkt <= set.stationarity_tol && feasible(cur)) {
      converged = true;
      break;
    }
    if (qp.status != QpStatus::kSolved || iterations >= set.max_iterations) break;

    Eigen::VectorXd d = Eigen::VectorXd::Zero(nu);
    d(free) = qp.x;
    if (qp.multipliers.size()) mu = std::max(mu, 2.0 * qp.multipliers.lpNorm<Eigen::Infinity>());
    const double merit0 = cur.objective + mu * cur.violation_sum();
    const double slope = g.dot(qp.x) - mu * cur.violation_sum();
    if (!(slope < 0.0)) break;

    double alpha = 1.0;
    bool accepted = false;
    Evaluation trial;
    Eigen::VectorXd U_trial;
    for (int ls = 0; ls < set.line_search_steps; ++ls, alpha *= 0.5) {
      U_trial = U + alpha * d;
      for (int i = 0; i < nu; ++i) {
        const int j = i % kJointCount;
        U_trial[i] = std::clamp(U_trial[i], prob.limits.u_min[j], prob.limits.u_max[j]);
      }
      trial = evaluate(prob, x0, ref, U_trial);
      if (trial.objective + mu * trial.violation_sum() <= merit0 + set.armijo * alpha * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    U = std::move(U_trial);
    cur = std::move(trial);
    ++iterations;
  }

  const Candidate& chosen =
      converged ? Candidate{U, cur, kkt, iterations} : *best;
  out.U = unflatten_controls(chosen.U);
  out.dt = prob.dt;
  out.X = chosen.eval.X;
  out.objective = chosen.eval.objective;
  out.kkt_residual = chosen.kkt;
  out.iterations = iterations;
  out.converged = converged;
  out.max_bound_violation = chosen.eval.bound_violation_max;
  out.min_collision_margin = chosen.eval.min_margin;
  out.max_constraint_violation = chosen.eval.max_violation();
  out.dynamics_residual = check_constraints(prob, out.X, out.U).dynamics_residual;
  if (out.x0_clamped || (!start_feasible && feasible(chosen.eval))) {
    out.status = SolveStatus::kInfeasibleStartRecovered;
  } else {
    out.status = converged ? SolveStatus::kConverged : SolveStatus::kMaxIterations;
  }
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return out;
}

ConstraintReport check_constraints(const OcpProblem& prob, std::span<const JointState> X,
                                   std::span<const ControlInput> U) {
  ConstraintReport rep;
  rep.min_collision_margin = kInf;
  const int N = static_cast<int>(U.size());
  for (int k = 0; k < N; ++k) {
    const StateVector pred = prob.model.A_d * X[k].stacked() + prob.model.B_d * U[k];
    rep.dynamics_residual =
        std::max(rep.dynamics_residual, (pred - X[k + 1].stacked()).lpNorm<Eigen::Infinity>());
    rep.max_bound_violation =
        std::max(rep.max_bound_violation, box_violations(X[k + 1], U[k], prob.limits).maxCoeff());
    if (!prob.pairs.empty()) {
      for (const double m : collision_margins(X[k + 1].q, prob.spheres, prob.pairs, prob.dh)) {
        rep.min_collision_margin = std::min(rep.min_collision_margin, m);
      }
    }
  }
  return rep;
}

}  // namespace teleop
