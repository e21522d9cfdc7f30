#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "teleop/reference.hpp"

using namespace teleop;

namespace {

TargetSample sample(double t, const Vec3& p, const Mat3& R = Mat3::Identity()) { return {t, {p, R}}; }

Mat3 rot(double angle, const Vec3& axis) { return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(); }

}  // namespace

TEST(EstimateTwist, TwoSamplesFiniteDifference) {
  std::vector<TargetSample> s{sample(0.0, Vec3::Zero()), sample(0.05, Vec3(0.01, 0, 0))};
  const auto tw = estimate_twist(s);
  EXPECT_LE((tw.v - Vec3(0.2, 0, 0)).norm(), 1e-12);
  EXPECT_LE(tw.omega.norm(), 1e-15);
}

TEST(EstimateTwist, StationarySamplesGiveZero) {
  std::vector<TargetSample> s;
  for (int i = 0; i < 6; ++i) s.push_back(sample(0.05 * i, Vec3(0.3, 0.1, 0.2), rot(0.4, Vec3(1, 1, 0))));
  const auto tw = estimate_twist(s);
  EXPECT_LE(tw.v.norm(), 1e-12);
  EXPECT_LE(tw.omega.norm(), 1e-12);
}

TEST(EstimateTwist, ExactLineIsFitExactly) {
  const Vec3 v(0.3, -0.2, 0.15), p0(0.4, 0.1, 0.3);
  std::vector<TargetSample> s;
  const double times[] = {0.0, 0.03, 0.05, 0.11, 0.12, 0.2, 0.27};
  for (double t : times) s.push_back(sample(t, p0 + v * t));
  EXPECT_LE((estimate_twist(s).v - v).norm(), 1e-10);
}

TEST(EstimateTwist, UsesOnlyTheWindow) {
  std::vector<TargetSample> s;
  for (int i = 0; i < 5; ++i) s.push_back(sample(0.05 * i, Vec3(1.0, 0, 0)));  // old, still
  for (int i = 5; i < 10; ++i) s.push_back(sample(0.05 * i, Vec3(1.0 + 0.5 * 0.05 * (i - 5), 0, 0)));
  EXPECT_LE((estimate_twist(s, 5).v - Vec3(0.5, 0, 0)).norm(), 1e-10);
}

TEST(EstimateTwist, ConstantAngularVelocity) {
  const Vec3 w(0.2, -0.5, 1.0);
  const Mat3 R0 = rot(0.3, Vec3(0, 1, 1));
  std::vector<TargetSample> s;
  for (int i = 0; i < 5; ++i) s.push_back(sample(0.04 * i, Vec3::Zero(), rotation_exp(w * 0.04 * i) * R0));
  EXPECT_LE((estimate_twist(s).omega - w).norm(), 1e-10);
}

TEST(EstimateTwist, FewerThanTwoSamplesIsZero) {
  std::vector<TargetSample> none;
  EXPECT_EQ(estimate_twist(none).v, Vec3::Zero());
  std::vector<TargetSample> one{sample(0.0, Vec3(1, 2, 3))};
  const auto tw = estimate_twist(one);
  EXPECT_EQ(tw.v, Vec3::Zero());
  EXPECT_EQ(tw.omega, Vec3::Zero());
}

TEST(Predict, LinearExtrapolation) {
  const auto r = predict(Vec3(0.4, 0, 0.3), Mat3::Identity(), {Vec3(0.1, 0, 0), Vec3::Zero()}, 0.05, 3, 0.85);
  ASSERT_EQ(r.horizon(), 3);
  EXPECT_LE((r.positions[0] - Vec3(0.405, 0, 0.3)).norm(), 1e-15);
  EXPECT_LE((r.positions[1] - Vec3(0.41, 0, 0.3)).norm(), 1e-15);
  EXPECT_LE((r.positions[2] - Vec3(0.415, 0, 0.3)).norm(), 1e-15);
  EXPECT_EQ(r.dt, 0.05);
}

TEST(Predict, ClipsOntoReachSphere) {
  const auto r = predict(Vec3(1.0, 0, 0), Mat3::Identity(), {}, 0.05, 8, 0.85);
  for (const auto& p : r.positions) EXPECT_LE((p - Vec3(0.85, 0, 0)).norm(), 1e-15);
}

TEST(Predict, ZeroAngularVelocityKeepsOrientation) {
  const Mat3 R0 = rot(1.1, Vec3(1, -2, 0.5));
  const auto r = predict(Vec3(0.3, 0.1, 0.2), R0, {Vec3(0.2, 0.1, 0), Vec3::Zero()}, 0.05, 8, 0.85);
  for (const auto& R : r.orientations) EXPECT_LE((R - R0).norm(), 1e-15);
}

TEST(Predict, ZeroTwistIsConstant) {
  const Mat3 R0 = rot(0.4, Vec3::UnitZ());
  const auto r = predict(Vec3(0.3, 0.1, 0.2), R0, {}, 0.05, 5, 0.85);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(r.positions[k], Vec3(0.3, 0.1, 0.2));
    EXPECT_LE((r.orientations[k] - R0).norm(), 1e-15);
  }
}

TEST(Predict, RandomPredictionsRespectInvariants) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    const Vec3 p0(n(rng), n(rng), n(rng));
    const Twist tw{Vec3(n(rng), n(rng), n(rng)) * 3.0, Vec3(n(rng), n(rng), n(rng)) * 5.0};
    const Mat3 R0 = rotation_exp(Vec3(n(rng), n(rng), n(rng)));
    const auto r = predict(p0, R0, tw, 0.05, 8, 0.85);
    for (int k = 0; k < 8; ++k) {
      EXPECT_LE(r.positions[k].norm(), 0.85 + 1e-12);
      const Mat3& R = r.orientations[k];
      EXPECT_LE((R.transpose() * R - Mat3::Identity()).norm(), 1e-9);
      EXPECT_NEAR(R.determinant(), 1.0, 1e-9);
      EXPECT_LE((R - rotation_exp(tw.omega * 0.05 * (k + 1)) * R0).norm(), 1e-9);
    }
  }
}

TEST(Rotation, ExpLogRoundTrip) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vec3 w(d(rng), d(rng), d(rng));
    w = w.normalized() * (3.1 * std::abs(d(rng)));
    EXPECT_LE((rotation_log(rotation_exp(w)) - w).norm(), 1e-9);
  }
  EXPECT_EQ(rotation_log(Mat3::Identity()), Vec3::Zero());
  EXPECT_NEAR(rotation_log(rot(EIGEN_PI, Vec3::UnitY())).norm(), EIGEN_PI, 1e-9);
}

TEST(Rotation, OrthonormalizeRepairsDrift) {
  Mat3 R = rot(0.7, Vec3(1, 2, 3));
  R(0, 1) += 1e-6;
  const Mat3 Q = orthonormalize(R);
  EXPECT_LE((Q.transpose() * Q - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LE((Q - R).norm(), 1e-5);
}

TEST(ClipToReach, InsideIsUntouched) {
  EXPECT_EQ(clip_to_reach(Vec3(0.1, 0.2, 0.3), 0.85), Vec3(0.1, 0.2, 0.3));
  EXPECT_LE((clip_to_reach(Vec3(0, 3, 4), 1.0) - Vec3(0, 0.6, 0.8)).norm(), 1e-15);
}

TEST(Retargeter, IdentityMapPassesThrough) {
  Retargeter rt;
  const Pose dev{Vec3(0.3, 0.1, 0.2), rot(0.3, Vec3::UnitX())};
  const Pose out = rt.map(dev);
  EXPECT_LE((out.p - dev.p).norm(), 1e-15);
  EXPECT_LE((out.R - dev.R).norm(), 1e-12);
}

TEST(Retargeter, FixedTransformIsApplied) {
  Eigen::Isometry3d fixed = Eigen::Isometry3d::Identity();
  fixed.translation() = Vec3(0.5, 0, 0);
  fixed.linear() = rot(EIGEN_PI / 2, Vec3::UnitZ());
  Retargeter rt(fixed);
  const Pose out = rt.map({Vec3(0.1, 0, 0), Mat3::Identity()});
  EXPECT_LE((out.p - Vec3(0.5, 0.1, 0)).norm(), 1e-12);
}

TEST(Retargeter, ClutchFreezesAndRecenters) {
  Retargeter rt;
  rt.map({Vec3(0.3, 0, 0.2), Mat3::Identity()});
  rt.set_clutch(true);
  EXPECT_TRUE(rt.clutch_engaged());
  // Device moves while clutched: the target stays frozen.
  const Pose frozen = rt.map({Vec3(0.0, 0.5, 0.0), rot(0.5, Vec3::UnitZ())});
  EXPECT_LE((frozen.p - Vec3(0.3, 0, 0.2)).norm(), 1e-15);
  rt.set_clutch(false);
  // The first pose after release continues from the frozen target.
  const Pose resumed = rt.map({Vec3(0.0, 0.5, 0.0), rot(0.5, Vec3::UnitZ())});
  EXPECT_LE((resumed.p - Vec3(0.3, 0, 0.2)).norm(), 1e-12);
  EXPECT_LE((resumed.R - Mat3::Identity()).norm(), 1e-12);
  // Subsequent device motion is applied relative to the new offset.
  const Pose moved = rt.map({Vec3(0.0, 0.6, 0.0), rot(0.5, Vec3::UnitZ())});
  EXPECT_NEAR((moved.p - resumed.p).norm(), 0.1, 1e-12);
}

TEST(TargetBuffer, RejectsNonIncreasingTimes) {
  TargetBuffer b;
  EXPECT_TRUE(b.push(sample(0.1, Vec3::Zero())));
  EXPECT_FALSE(b.push(sample(0.1, Vec3::Ones())));
  EXPECT_FALSE(b.push(sample(0.05, Vec3::Ones())));
  EXPECT_TRUE(b.push(sample(0.2, Vec3::Ones())));
  EXPECT_EQ(b.snapshot().size(), 2u);
  EXPECT_EQ(b.latest()->t, 0.2);
}

TEST(TargetBuffer, BoundedCapacity) {
  TargetBuffer b(4);
  for (int i = 0; i < 10; ++i) b.push(sample(i, Vec3::Zero()));
  const auto s = b.snapshot();
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.front().t, 6.0);
  b.clear();
  EXPECT_FALSE(b.latest().has_value());
}

TEST(TargetBuffer, ConcurrentWriterAndReader) {
  TargetBuffer b(16);
  std::thread writer([&] {
    for (int i = 1; i <= 2000; ++i) b.push(sample(i * 1e-3, Vec3(i, 0, 0)));
  });
  for (int i = 0; i < 2000; ++i) {
    const auto s = b.snapshot();
    for (std::size_t k = 1; k < s.size(); ++k) ASSERT_GT(s[k].t, s[k - 1].t);
  }
  writer.join();
  EXPECT_EQ(b.latest()->t, 2.0);
}
