// Copyright 2026 The trajadapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trajadapt/environment.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "gtest/gtest.h"

namespace trajadapt::environment {
namespace {

using kinematics::Vector3d;

PlatePose Tilted(double angle_rad, const Vector3d& axis = Vector3d::UnitY()) {
  PlatePose p;
  p.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis));
  return p;
}

BallParams Frictionless() {
  BallParams b;
  b.rolling_friction = 0.0;
  b.friction_range = {0.0, 0.0};
  return b;
}

TEST(StepBall, FlatStationaryPlateIsEquilibrium) {
  const PlateGeometry geo;
  BallState s;
  s.position = Vector2d(0.03, -0.02);
  const BallState next = StepBall(s, std::vector<PlatePose>(1000, PlatePose{}),
                                  BallParams{}, geo, 0.005);
  EXPECT_EQ(next.position, s.position);
  EXPECT_EQ(next.velocity, Vector2d::Zero());
  EXPECT_TRUE(next.on_plate);
  EXPECT_EQ(DrivingAcceleration(PlatePose{}), Vector2d::Zero());
}

TEST(StepBall, StaticTiltRollingAcceleration) {
  const double expected = 5.0 / 7.0 * 9.81 * std::sin(DegToRad(5.0));
  EXPECT_NEAR(expected, 0.6107, 1e-4);
  for (const Vector3d& axis : {Vector3d(Vector3d::UnitX()), Vector3d(Vector3d::UnitY()),
                               Vector3d(1, 1, 0).normalized()}) {
    EXPECT_NEAR(DrivingAcceleration(Tilted(DegToRad(5.0), axis)).norm(), expected,
                1e-12);
  }
  // Measured from the trajectory: v after one second at 5 ms substeps.
  PlateGeometry big{100.0, 100.0};
  BallState s;
  for (int k = 0; k < 200; ++k) {
    s = StepBall(s, Tilted(DegToRad(5.0)), Frictionless(), big, 0.005);
  }
  EXPECT_NEAR(s.velocity.norm(), expected, 1e-6);
}

TEST(StepBall, HorizontalAccelerationPseudoForce) {
  PlatePose p;
  p.linear_acceleration = Vector3d(0.8, -0.3, 0.0);
  const Vector2d a = DrivingAcceleration(p);
  EXPECT_NEAR(a.x(), -5.0 / 7.0 * 0.8, 1e-12);
  EXPECT_NEAR(a.y(), 5.0 / 7.0 * 0.3, 1e-12);
}

TEST(StepBall, EnergyDriftOnTiltedPlate) {
  // Large plate so the ball stays on for the whole 10 s.
  PlateGeometry big{100.0, 100.0};
  const PlatePose plate = Tilted(DegToRad(5.0));
  auto energy = [&](const BallState& s) {
    const Vector3d world =
        plate.orientation * Vector3d(s.position.x(), s.position.y(), 0.0);
    return 0.7 * s.velocity.squaredNorm() + kGravity * world.z();  // per unit mass
  };
  BallState s;
  const double e0 = energy(s);
  double max_drift = 0.0, max_kinetic = 0.0;
  for (int k = 0; k < 2000; ++k) {
    s = StepBall(s, plate, Frictionless(), big, 0.005);
    max_drift = std::max(max_drift, std::abs(energy(s) - e0));
    max_kinetic = std::max(max_kinetic, 0.7 * s.velocity.squaredNorm());
  }
  ASSERT_TRUE(s.on_plate);
  EXPECT_LT(max_drift / max_kinetic, 0.01);
}

TEST(StepBall, RollingResistanceOnlyBrakes) {
  BallParams params;
  params.rolling_friction = 0.005;
  BallState s;
  s.velocity = Vector2d(0.01, 0.0);
  for (int k = 0; k < 2000; ++k) s = StepBall(s, PlatePose{}, params, PlateGeometry{}, 0.005);
  EXPECT_EQ(s.velocity, Vector2d::Zero());
  EXPECT_GT(s.position.x(), 0.0);
}

TEST(StepBall, LeavesPlateAtBorderMinusRadius) {
  PlateGeometry geo;
  BallParams params = Frictionless();
  BallState s;
  s.position = Vector2d(geo.half_x - params.radius - 1e-4, 0.0);
  s.velocity = Vector2d(0.1, 0.0);
  s = StepBall(s, PlatePose{}, params, geo, 0.005);
  EXPECT_FALSE(s.on_plate);
  const BallState frozen = StepBall(s, Tilted(0.3), params, geo, 0.005);
  EXPECT_EQ(frozen.position, s.position);
}

TEST(TaskReward, InPlaceValues) {
  TaskSpec spec;
  PlateGeometry geo;
  BallState s;
  spec.initial_position = Vector2d(0.02, 0.01);
  s.position = spec.initial_position;
  EXPECT_EQ(TaskReward(s, spec, geo, 0.02), 1.0);
  s.position = spec.initial_position + Vector2d(0.03, 0.0);
  EXPECT_NEAR(TaskReward(s, spec, geo, 0.02), 0.75, 1e-12);
  s.position = spec.initial_position + Vector2d(0.0, 0.07);
  EXPECT_EQ(TaskReward(s, spec, geo, 0.02), 0.0);
  s.on_plate = false;
  s.position = spec.initial_position;
  EXPECT_EQ(TaskReward(s, spec, geo, 0.02), 0.0);
}

TEST(TaskReward, OnPlateDecaysToZeroAtBorder) {
  TaskSpec spec;
  spec.kind = TaskKind::kOnPlate;
  PlateGeometry geo;
  const double r = 0.02;
  BallState s;
  EXPECT_EQ(TaskReward(s, spec, geo, r), 1.0);
  s.position = Vector2d(0.5 * (geo.half_x - r), 0.0);
  EXPECT_NEAR(TaskReward(s, spec, geo, r), 0.75, 1e-12);
  s.position = Vector2d(0.0, geo.half_y - r - 1e-12);
  EXPECT_NEAR(TaskReward(s, spec, geo, r), 0.0, 1e-9);
  s.on_plate = false;
  EXPECT_EQ(TaskReward(s, spec, geo, r), 0.0);
}

TEST(TaskReward, ContinuousInTheInterior) {
  for (TaskKind kind : {TaskKind::kOnPlate, TaskKind::kInPlace}) {
    TaskSpec spec;
    spec.kind = kind;
    PlateGeometry geo;
    Rng rng(3);
    for (int n = 0; n < 2000; ++n) {
      BallState a, b;
      a.position = Vector2d(rng.Uniform(-0.14, 0.14), rng.Uniform(-0.11, 0.11));
      b.position = a.position + Vector2d(1e-9, -1e-9);
      EXPECT_LT(std::abs(TaskReward(a, spec, geo, 0.02) - TaskReward(b, spec, geo, 0.02)),
                1e-6);
    }
  }
}

TEST(SensorFeedback, StationaryBallAtCentreGivesZeros) {
  TaskSpec spec;
  spec.noise_std = 0.0;
  BallEnvironment env(PlateGeometry{}, BallParams{}, spec, false);
  EXPECT_EQ(env.Feedback(), VectorXd::Zero(6));
  EXPECT_EQ(env.Feedback(), VectorXd::Zero(6));
}

TEST(SensorFeedback, Lengths) {
  TaskSpec spec;
  EXPECT_EQ(SensorFeedback(Vector2d::Zero(), Vector2d::Zero(), spec, PlateGeometry{}).size(), 6);
  spec.kind = TaskKind::kOnPlate;
  EXPECT_EQ(SensorFeedback(Vector2d::Zero(), Vector2d::Zero(), spec, PlateGeometry{}).size(), 4);
}

TEST(SensorFeedback, NormalizedAndClamped) {
  TaskSpec spec;
  spec.initial_position = Vector2d(-0.1, 0.0);
  PlateGeometry geo;
  const VectorXd f = SensorFeedback(Vector2d(0.085, 0.2), Vector2d(-0.17, 0.0), spec, geo);
  EXPECT_NEAR(f[0], 0.5, 1e-12);
  EXPECT_EQ(f[1], 1.0);
  EXPECT_EQ(f[2], -1.0);
  EXPECT_NEAR(f[4], 1.0, 1e-12);
}

TEST(SensorFeedback, NoiseStatistics) {
  PlateGeometry geo;
  TaskSpec spec;
  spec.noise_std = 0.001;
  BallState s;
  s.position = Vector2d(0.05, -0.02);
  Rng rng(17);
  const int n = 20000;
  double sum = 0, sum2 = 0;
  for (int k = 0; k < n; ++k) {
    const VectorXd f = SensorFeedback(MeasurePosition(s, spec.noise_std, rng),
                                      s.position, spec, geo);
    sum += f[0];
    sum2 += f[0] * f[0];
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum2 / n - mean * mean);
  EXPECT_NEAR(std, 0.001 / geo.half_x, 0.1 * 0.001 / geo.half_x);
  EXPECT_NEAR(mean, 0.05 / geo.half_x, 1e-3);
}

TEST(SensorFeedback, FirstReadingDuplicatesCurrent) {
  TaskSpec spec;
  spec.start_offset = Vector2d(0.02, 0.0);
  BallEnvironment env(PlateGeometry{}, BallParams{}, spec, false);
  env.Reset(5);
  const VectorXd f = env.Feedback();
  EXPECT_EQ(f[0], f[2]);
  EXPECT_EQ(f[1], f[3]);
}

TEST(RandomizeBall, DegenerateRangesGiveDefaults) {
  BallParams p;
  p.mass_range = {p.mass, p.mass};
  p.radius_range = {p.radius, p.radius};
  p.friction_range = {p.rolling_friction, p.rolling_friction};
  Rng rng(1);
  const BallParams out = RandomizeBall(p, rng);
  EXPECT_EQ(out.mass, p.mass);
  EXPECT_EQ(out.radius, p.radius);
  EXPECT_EQ(out.rolling_friction, p.rolling_friction);
}

TEST(RandomizeBall, SeedDeterminismAndBounds) {
  const BallParams p;
  Rng a(9), b(9);
  for (int k = 0; k < 10000; ++k) {
    const BallParams x = RandomizeBall(p, a);
    const BallParams y = RandomizeBall(p, b);
    ASSERT_EQ(x.mass, y.mass);
    ASSERT_EQ(x.radius, y.radius);
    ASSERT_GE(x.mass, p.mass_range.lo);
    ASSERT_LE(x.mass, p.mass_range.hi);
    ASSERT_GE(x.radius, p.radius_range.lo);
    ASSERT_LE(x.radius, p.radius_range.hi);
    ASSERT_GE(x.rolling_friction, p.friction_range.lo);
    ASSERT_LE(x.rolling_friction, p.friction_range.hi);
  }
}

TEST(BallParams, ValidationRejectsDefaultsOutsideRanges) {
  BallParams p;
  p.mass = 1.0;
  EXPECT_THROW(p.Validate(), ConfigError);
  BallParams q;
  q.radius_range = {0.0, 0.03};
  EXPECT_THROW(q.Validate(), ConfigError);
}

TEST(EpisodeMetrics, BallLeavesHalfway) {
  std::vector<MetricSample> log(51);
  log[50].task_ok = false;
  const auto r = EpisodeMetrics(log, 100, false);
  EXPECT_FALSE(r.success);
  EXPECT_DOUBLE_EQ(r.trajectory_fraction, 0.5);
}

TEST(EpisodeMetrics, PerfectStationaryEpisode) {
  const auto r = EpisodeMetrics(std::vector<MetricSample>(200), 200, false);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.trajectory_fraction, 1.0);
  EXPECT_EQ(r.error_distance, 0.0);
}

TEST(EpisodeMetrics, MeanNormalizedAcceleration) {
  std::vector<MetricSample> log(80);
  for (auto& s : log) s.mean_accel = 0.07;
  const auto r = EpisodeMetrics(log, 80, false);
  EXPECT_NEAR(100.0 * r.mean_accel, 7.0, 1e-12);
}

TEST(EpisodeMetrics, TerminationIsNotSuccess) {
  const auto r = EpisodeMetrics(std::vector<MetricSample>(30), 100, true);
  EXPECT_FALSE(r.success);
  EXPECT_DOUBLE_EQ(r.trajectory_fraction, 0.3);
}

TEST(EpisodeMetrics, ChunkedAccumulationMatches) {
  Rng rng(4);
  std::vector<MetricSample> log(123);
  for (auto& s : log) {
    s.error_distance = rng.Uniform(0, 0.05);
    s.mean_accel = rng.Uniform();
    s.mean_jerk = rng.Uniform();
    s.task_ok = rng.Uniform() > 0.02;
  }
  const auto whole = EpisodeMetrics(log, 150, false);
  EpisodeAccumulator acc(150);
  for (std::size_t k = 0; k < 40; ++k) acc.Add(log[k]);
  for (std::size_t k = 40; k < log.size(); ++k) acc.Add(log[k]);
  const auto chunked = acc.Report(false);
  EXPECT_EQ(whole.trajectory_fraction, chunked.trajectory_fraction);
  EXPECT_EQ(whole.error_distance, chunked.error_distance);
  EXPECT_EQ(whole.mean_accel, chunked.mean_accel);
  EXPECT_EQ(whole.mean_jerk, chunked.mean_jerk);
  EXPECT_EQ(whole.success, chunked.success);
}

TEST(BallEnvironment, ResetIsDeterministic) {
  TaskSpec spec;
  BallEnvironment a(PlateGeometry{}, BallParams{}, spec, true);
  BallEnvironment b(PlateGeometry{}, BallParams{}, spec, true);
  a.Reset(77);
  b.Reset(77);
  EXPECT_EQ(a.params().mass, b.params().mass);
  EXPECT_EQ(a.Feedback(), b.Feedback());
  a.Reset(78);
  EXPECT_NE(a.params().radius, b.params().radius);
}

}  // namespace
}  // namespace trajadapt::environment
