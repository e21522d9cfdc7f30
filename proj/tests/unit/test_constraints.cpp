#include <gtest/gtest.h>

#include <set>

#include "teleop/constraints.hpp"
#include "teleop/robot_config.hpp"

using namespace teleop;

namespace {

SphereSpec sphere(int id, int link, double r = 0.1) { return {id, link, Vec3::Zero(), r}; }

}  // namespace

TEST(BuildPairs, SameLinkGivesNothing) {
  std::vector<SphereSpec> s{sphere(0, 3), sphere(1, 3), sphere(2, 3), sphere(3, 3)};
  EXPECT_TRUE(build_pairs(s).empty());
}

TEST(BuildPairs, AdjacencyRule) {
  std::vector<SphereSpec> s{sphere(0, 0), sphere(1, 1), sphere(2, 2)};
  const auto p = build_pairs(s);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.pairs()[0], std::make_pair(0, 2));
}

TEST(BuildPairs, MatchesBruteForceOnBundledSpheres) {
  const RobotConfig r = default_robot_config();
  ASSERT_EQ(r.spheres.size(), 29u);
  std::set<std::pair<int, int>> expected;
  for (int i = 0; i < 29; ++i) {
    for (int j = 0; j < 29; ++j) {
      if (i == j) continue;
      const int li = r.spheres[i].link, lj = r.spheres[j].link;
      if (li == lj || li == lj + 1 || lj == li + 1) continue;
      expected.insert({std::min(i, j), std::max(i, j)});
    }
  }
  const auto pairs = build_pairs(r.spheres);
  const std::set<std::pair<int, int>> got(pairs.pairs().begin(), pairs.pairs().end());
  EXPECT_EQ(got.size(), pairs.size());
  EXPECT_EQ(got, expected);
  for (const auto& [i, j] : pairs.pairs()) {
    EXPECT_LT(i, j);
    EXPECT_GE(std::abs(r.spheres[i].link - r.spheres[j].link), 2);
  }
}

TEST(CollisionMargins, Arithmetic) {
  std::vector<SphereSpec> s{sphere(0, 0), sphere(1, 2)};
  const CollisionPairSet pairs({{0, 1}});
  {
    std::vector<Vec3> c{Vec3::Zero(), Vec3(0.3, 0, 0)};
    EXPECT_NEAR(collision_margins(c, s, pairs)[0], 0.05, 1e-15);
  }
  {
    std::vector<Vec3> c{Vec3::Zero(), Vec3(0, 0.15, 0)};
    EXPECT_NEAR(collision_margins(c, s, pairs)[0], -0.0175, 1e-15);
  }
  {
    std::vector<Vec3> c{Vec3(1, 2, 3), Vec3(1, 2, 3)};
    EXPECT_NEAR(collision_margins(c, s, pairs)[0], -0.04, 1e-15);
  }
}

TEST(CollisionMargins, HomeConfigurationIsCollisionFree) {
  const RobotConfig r = default_robot_config();
  const auto pairs = build_pairs(r.spheres);
  const auto m = collision_margins(r.home, r.spheres, pairs, r.dh);
  ASSERT_EQ(m.size(), pairs.size());
  for (double v : m) EXPECT_GT(v, 0.0);
}

TEST(CollisionMargins, ContinuousInJointAngles) {
  const RobotConfig r = default_robot_config();
  const auto pairs = build_pairs(r.spheres);
  JointVector q = r.home;
  const auto a = collision_margins(q, r.spheres, pairs, r.dh);
  q.array() += 1e-7;
  const auto b = collision_margins(q, r.spheres, pairs, r.dh);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1e-5);
}

TEST(BoxViolations, Examples) {
  const Limits lim;
  JointState mid;
  EXPECT_EQ(box_violations(mid, ControlInput::Zero(), lim), BoxViolations::Zero());

  JointState at_max;
  at_max.q = lim.q_max;
  at_max.qd = lim.qd_min;
  EXPECT_EQ(box_violations(at_max, lim.u_max, lim), BoxViolations::Zero());

  JointState over;
  over.q[2] = lim.q_max[2] + 0.1;
  const BoxViolations v = box_violations(over, ControlInput::Zero(), lim);
  EXPECT_NEAR(v[6 + 2], 0.1, 1e-12);
  EXPECT_EQ((v.array() > 0).count(), 1);
}

TEST(BoxViolations, LayoutCoversEveryBound) {
  const Limits lim;
  JointState x;
  x.q[0] = lim.q_min[0] - 1;
  x.qd[1] = lim.qd_min[1] - 2;
  x.qd[4] = lim.qd_max[4] + 3;
  ControlInput u = ControlInput::Zero();
  u[5] = lim.u_min[5] - 4;
  u[3] = lim.u_max[3] + 5;
  const BoxViolations v = box_violations(x, u, lim);
  EXPECT_NEAR(v[0], 1, 1e-12);
  EXPECT_NEAR(v[12 + 1], 2, 1e-12);
  EXPECT_NEAR(v[18 + 4], 3, 1e-12);
  EXPECT_NEAR(v[24 + 5], 4, 1e-12);
  EXPECT_NEAR(v[30 + 3], 5, 1e-12);
  EXPECT_EQ((v.array() > 0).count(), 5);
}

TEST(Limits, Validation) {
  Limits lim;
  EXPECT_NO_THROW(lim.validate());
  lim.u_min[1] = lim.u_max[1] = 0.0;
  EXPECT_NO_THROW(lim.validate());
  lim.q_min[0] = lim.q_max[0];
  EXPECT_THROW(lim.validate(), ConfigError);
  Limits bad;
  bad.u_min[2] = 11.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  Limits stacked;
  EXPECT_EQ(stacked.x_min().head<6>(), stacked.q_min);
  EXPECT_EQ(stacked.x_max().tail<6>(), stacked.qd_max);
}
