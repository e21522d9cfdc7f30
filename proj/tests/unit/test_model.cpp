#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "expm_series.hpp"
#include "teleop/model.hpp"

using namespace teleop;

TEST(Model, MatchesMatrixExponentialSeries) {
  for (double dt : {1e-3, 0.01, 0.05, 0.2, 1.0}) {
    const auto m = discretize(dt);
    const auto s = oracle::expm_series(oracle::double_integrator_A(6), oracle::double_integrator_B(6), dt);
    EXPECT_LE((m.A_d - s.A_d).lpNorm<Eigen::Infinity>(), 1e-12) << dt;
    EXPECT_LE((m.B_d - s.B_d).lpNorm<Eigen::Infinity>(), 1e-12) << dt;
  }
}

TEST(Model, InputGainsAtDefaultStep) {
  const auto m = discretize(0.05);
  for (int j = 0; j < 6; ++j) {
    EXPECT_DOUBLE_EQ(m.B_d(j, j), 0.00125);
    EXPECT_DOUBLE_EQ(m.B_d(6 + j, j), 0.05);
    EXPECT_DOUBLE_EQ(m.A_d(j, 6 + j), 0.05);
  }
  EXPECT_EQ(m.dt, 0.05);
}

TEST(Model, SmallStepApproachesIdentity) {
  const auto m = discretize(1e-12);
  EXPECT_LE((m.A_d - StateMatrix::Identity()).norm(), 1e-11);
  EXPECT_LE(m.B_d.norm(), 1e-11);
}

TEST(Model, NonPositiveStepIsParameterError) {
  EXPECT_THROW(discretize(0.0), ParameterError);
  EXPECT_THROW(discretize(-0.05), ParameterError);
  EXPECT_THROW(discretize(std::numeric_limits<double>::quiet_NaN()), ParameterError);
  EXPECT_THROW(discretize(std::numeric_limits<double>::infinity()), ParameterError);
}

TEST(Model, EquilibriumStaysPut) {
  const auto m = discretize(0.05);
  EXPECT_EQ(step(StateVector::Zero().eval(), ControlInput::Zero(), m), StateVector::Zero());
}

TEST(Model, ConstantVelocityAdvancesAngle) {
  const auto m = discretize(0.05);
  JointState x;
  x.qd[0] = 1.0;
  const auto next = step(x, ControlInput::Zero(), m);
  JointVector expected = JointVector::Zero();
  expected[0] = 0.05;
  EXPECT_LE((next.q - expected).norm(), 1e-15);
  EXPECT_EQ(next.qd, x.qd);
}

TEST(Model, ChainedStepsIntegrateQuadraticExactly) {
  const double dt = 0.05;
  const auto m = discretize(dt);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    JointState x0;
    ControlInput u;
    for (int j = 0; j < 6; ++j) {
      x0.q[j] = d(rng);
      x0.qd[j] = d(rng);
      u[j] = 5.0 * d(rng);
    }
    JointState x = x0;
    for (int k = 1; k <= 20; ++k) {
      x = step(x, u, m);
      const double t = k * dt;
      const JointVector q = x0.q + x0.qd * t + 0.5 * u * t * t;
      const JointVector qd = x0.qd + u * t;
      ASSERT_LE((x.q - q).lpNorm<Eigen::Infinity>(), 1e-12);
      ASSERT_LE((x.qd - qd).lpNorm<Eigen::Infinity>(), 1e-12);
    }
  }
}

TEST(Model, StepIsLinear) {
  const auto m = discretize(0.05);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  StateVector x1, x2;
  ControlInput u1, u2;
  for (auto& v : x1) v = n(rng);
  for (auto& v : x2) v = n(rng);
  for (auto& v : u1) v = n(rng);
  for (auto& v : u2) v = n(rng);
  const StateVector lhs = step((x1 + x2).eval(), (u1 + u2).eval(), m);
  const StateVector rhs = step(x1, u1, m) + step(x2, u2, m);
  EXPECT_LE((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-14);
}
