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

#include "trajadapt/adaptation.hpp"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace trajadapt::adaptation {
namespace {

using limits::JointLimits;
using limits::JointState;

constexpr double kContinuity = 1e-12;

double Below(double x) { return std::nextafter(x, -1e300); }
double Above(double x) { return std::nextafter(x, 1e300); }

trajectory::ReferenceTrajectory Stationary(const VectorXd& q, int rows) {
  trajectory::ReferenceTrajectory ref;
  ref.positions = q.transpose().replicate(rows, 1);
  return ref;
}

// Emits a fixed vector every step.
class ConstantPolicy : public policy::Policy {
 public:
  explicit ConstantPolicy(VectorXd value) : value_(std::move(value)) {}
  VectorXd Act(const VectorXd&, Rng&) override { return value_; }
  std::string name() const override { return "constant"; }

 private:
  VectorXd value_;
};

// ---------------------------------------------------------------------------
// Observation.

TEST(Observation, HasDocumentedLength) {
  const auto limits = testing::ArmLimits();
  const auto state = JointState::AtRest(kinematics::DefaultHome());
  const MatrixXd ref = kinematics::DefaultHome().transpose().replicate(5, 1);
  const VectorXd f = VectorXd::Zero(6);
  EXPECT_EQ(BuildObservation(state, limits, f, ref, 0, 1).size(), 34);
  EXPECT_EQ(BuildObservation(state, limits, f, ref, 0, 3).size(), 48);
  EXPECT_EQ(BuildObservation(state, limits, VectorXd(), ref, 0, 1).size(), 28);
  EXPECT_EQ(policy::ObservationLayout({7, 6, 1}).size(), 34u);
}

TEST(Observation, NormalizesByLimits) {
  const auto limits = testing::ArmLimits();
  JointState s = JointState::AtRest(limits.p_min);
  s.v = 0.5 * limits.v_max;
  s.a = -limits.a_max;
  const MatrixXd ref = limits.p_max.transpose().replicate(2, 1);
  const VectorXd obs = BuildObservation(s, limits, VectorXd(), ref, 0, 1);
  for (int i = 0; i < 7; ++i) {
    EXPECT_NEAR(obs[i], -1.0, 1e-15);
    EXPECT_NEAR(obs[7 + i], 0.5, 1e-15);
    EXPECT_NEAR(obs[14 + i], -1.0, 1e-15);
    EXPECT_NEAR(obs[21 + i], 1.0, 1e-15);
  }
}

TEST(Observation, AlwaysWithinUnitBox) {
  const auto limits = testing::ArmLimits();
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    JointState s;
    s.p = 4.0 * VectorXd::Random(7);
    s.v = 3.0 * VectorXd::Random(7);
    s.a = 20.0 * VectorXd::Random(7);
    const MatrixXd ref = 4.0 * MatrixXd::Random(3, 7);
    const VectorXd f = 2.0 * VectorXd::Random(6);
    const VectorXd obs = BuildObservation(s, limits, f, ref, 0, 2);
    ASSERT_LE(obs.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Observation, PaddingHoldsLastRow) {
  const auto limits = testing::ArmLimits();
  MatrixXd ref(3, 7);
  ref.row(0).setConstant(0.1);
  ref.row(1).setConstant(0.2);
  ref.row(2).setConstant(0.3);
  const auto s = JointState::AtRest(VectorXd::Zero(7));
  const VectorXd obs = BuildObservation(s, limits, VectorXd(), ref, 1, 3);
  const VectorXd last = policy::NormalizePosition(ref.row(2).transpose(), limits);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(obs.segment(21 + 7 * k, 7), last);
  }
}

// ---------------------------------------------------------------------------
// Penalties.

TEST(AccelPenalty, BoundaryValues) {
  EXPECT_EQ(AccelPenalty(0.0, 0.8), 0.0);
  EXPECT_EQ(AccelPenalty(0.8, 0.8), 0.0);
  EXPECT_NEAR(AccelPenalty(1.0, 0.8), 1.0, 1e-15);
  EXPECT_NEAR(AccelPenalty(0.9, 0.8), 0.25, 1e-12);
}

TEST(AccelPenalty, ContinuousAtThreshold) {
  for (double th : {0.0, 0.3, 0.8, 0.95}) {
    EXPECT_NEAR(AccelPenalty(Below(th), th), AccelPenalty(th, th), kContinuity);
    EXPECT_NEAR(AccelPenalty(Above(th), th), AccelPenalty(th, th), kContinuity);
  }
  EXPECT_NEAR(AccelPenalty(Below(1.0), 0.8), AccelPenalty(Above(1.0), 0.8),
              kContinuity);
}

TEST(AccelPenalty, UsesLargestJoint) {
  const auto limits = testing::ArmLimits();
  VectorXd a = VectorXd::Zero(7);
  a[3] = -0.9 * limits.a_max[3];
  EXPECT_NEAR(AccelPenalty(a, limits, 0.8), 0.25, 1e-12);
}

TEST(JerkPenalty, WorkedValue) {
  // j_sat = 1/4, j_p = 0.09 -> (0.36)^2.
  EXPECT_NEAR(JerkPenalty(VectorXd::Constant(1, 0.3), VectorXd::Ones(1), 4.0),
              0.1296, 1e-12);
  EXPECT_EQ(JerkPenalty(VectorXd::Zero(3), VectorXd::Ones(3), 4.0), 0.0);
}

TEST(JerkPenalty, SaturatesAtOne) {
  const VectorXd j_max = VectorXd::Constant(2, 80.0);
  // j_p = j_sat when every |j| = j_max / sqrt(c).
  const VectorXd at = VectorXd::Constant(2, 40.0);
  EXPECT_NEAR(JerkPenalty(at, j_max, 4.0), 1.0, 1e-15);
  EXPECT_EQ(JerkPenalty(3.0 * at, j_max, 4.0), 1.0);
  const VectorXd below = VectorXd::Constant(2, Below(40.0));
  EXPECT_NEAR(JerkPenalty(below, j_max, 4.0), 1.0, kContinuity);
}

TEST(DeviationPenalty, BoundaryValues) {
  const double lo = DegToRad(2.0), hi = DegToRad(10.0);
  EXPECT_EQ(DeviationPenalty(0.0, lo, hi), 0.0);
  EXPECT_EQ(DeviationPenalty(lo, lo, hi), 0.0);
  EXPECT_EQ(DeviationPenalty(hi, lo, hi), 1.0);
  EXPECT_NEAR(DeviationPenalty(0.5 * (lo + hi), lo, hi), 0.25, 1e-12);
  EXPECT_NEAR(DeviationPenalty(Below(lo), lo, hi), DeviationPenalty(Above(lo), lo, hi),
              kContinuity);
  EXPECT_NEAR(DeviationPenalty(Below(hi), lo, hi), DeviationPenalty(Above(hi), lo, hi),
              kContinuity);
}

TEST(DeviationPenalty, UsesLargestJointDeviation) {
  VectorXd p = VectorXd::Zero(3), ref = VectorXd::Zero(3);
  p[1] = 0.6;
  ref[2] = 0.2;
  EXPECT_NEAR(DeviationPenalty(p, ref, 0.2, 1.0), 0.25, 1e-12);
}

TEST(ComposeReward, ProductForm) {
  const auto r = ComposeReward(0.8, 0.2, 0.4, 0.5);
  EXPECT_NEAR(r.smooth, 0.3, 1e-15);
  EXPECT_NEAR(r.total, 0.8 * 0.7 * 0.5, 1e-15);
  EXPECT_EQ(ComposeReward(0.0, 0.1, 0.1, 0.1).total, 0.0);
  EXPECT_EQ(ComposeReward(1.0, 0.1, 0.1, 1.0).total, 0.0);
  EXPECT_EQ(ComposeReward(1.0, 0.0, 0.0, 0.0).total, 1.0);
}

TEST(ComposeReward, StaysInUnitIntervalForRandomInputs) {
  Rng rng(77);
  const RewardWeights w;
  const VectorXd j_max = VectorXd::Constant(7, 80.0);
  for (int k = 0; k < 100000; ++k) {
    VectorXd jerk(7);
    for (int i = 0; i < 7; ++i) jerk[i] = rng.Uniform(-200.0, 200.0);
    const auto r = ComposeReward(
        rng.Uniform(), AccelPenalty(rng.Uniform(0.0, 1.5), w.accel_threshold),
        JerkPenalty(jerk, j_max, w.jerk_saturation),
        DeviationPenalty(rng.Uniform(0.0, 0.3), w.deviation_low, w.deviation_high));
    ASSERT_GE(r.total, 0.0);
    ASSERT_LE(r.total, 1.0);
  }
}

TEST(Termination, StrictInequality) {
  const double th = DegToRad(10.0);
  const VectorXd ref = VectorXd::Zero(7);
  VectorXd p = ref;
  EXPECT_FALSE(ShouldTerminate(p, ref, th));
  p[4] = th;
  EXPECT_FALSE(ShouldTerminate(p, ref, th));
  p[4] = th + 1e-6;
  EXPECT_TRUE(ShouldTerminate(p, ref, th));
  p[4] = -(th + 1e-6);
  EXPECT_TRUE(ShouldTerminate(p, ref, th));
}

TEST(RewardWeights, Validation) {
  RewardWeights w;
  EXPECT_NO_THROW(w.Validate());
  w.accel_threshold = 1.0;
  EXPECT_THROW(w.Validate(), ConfigError);
  w = RewardWeights{};
  w.deviation_high = w.deviation_low;
  EXPECT_THROW(w.Validate(), ConfigError);
  w = RewardWeights{};
  w.termination = DegToRad(5.0);
  EXPECT_THROW(w.Validate(), ConfigError);
  w = RewardWeights{};
  w.jerk_saturation = 0.0;
  EXPECT_THROW(w.Validate(), ConfigError);
}

// ---------------------------------------------------------------------------
// Rollout.

class RolloutTest : public ::testing::Test {
 protected:
  JointLimits limits_ = testing::ArmLimits();
  kinematics::ChainModel model_ = kinematics::DefaultArm();
  RolloutParams params_;
};

TEST_F(RolloutTest, ZeroPolicyOnStationaryReferenceNeverMoves) {
  const auto ref = Stationary(kinematics::DefaultHome(), 41);
  policy::ZeroPolicy zero(7);
  const auto r = Rollout(ref, zero, limits_, params_, 1);
  EXPECT_TRUE(r.report.success);
  EXPECT_EQ(r.report.trajectory_fraction, 1.0);
  EXPECT_EQ(r.report.executed_steps, 40u);
  ASSERT_EQ(r.log.size(), 40u);
  for (const auto& rec : r.log) {
    ASSERT_EQ(rec.state.p, kinematics::DefaultHome());
    ASSERT_EQ(rec.reward.total, 1.0);
  }
}

TEST_F(RolloutTest, RandomPolicyRespectsLimitsAtEverySubstep) {
  params_.terminate_on_deviation = false;
  params_.check_substeps = true;
  params_.record_log = false;
  policy::RandomPolicy random(7);
  Rng rng(9);
  for (int episode = 0; episode < 50; ++episode) {
    JointLimits l = limits_;
    for (int i = 0; i < 7; ++i) {
      l.v_max[i] = rng.Uniform(0.5, 2.5);
      l.a_max[i] = rng.Uniform(1.0, 15.0);
      l.j_max[i] = rng.Uniform(10.0, 500.0);
    }
    const auto r = Rollout(Stationary(VectorXd::Zero(7), 201), random, l,
                           params_, static_cast<std::uint64_t>(episode));
    ASSERT_EQ(r.peak.violations, 0u) << "episode " << episode;
    ASSERT_LE(r.peak.velocity, 1.0 + 1e-9);
    ASSERT_LE(r.peak.accel, 1.0 + 1e-9);
    ASSERT_LE(r.peak.jerk, 1.0 + 1e-9);
    EXPECT_EQ(r.report.executed_steps, 200u);
  }
}

TEST_F(RolloutTest, HugeActionsMatchRangeBoundActions) {
  params_.terminate_on_deviation = false;
  const auto ref = Stationary(kinematics::DefaultHome(), 61);
  VectorXd sign(7);
  sign << 1, -1, 1, -1, 1, -1, 1;
  ConstantPolicy huge(1e6 * sign);
  ConstantPolicy bound(sign);
  const auto a = Rollout(ref, huge, limits_, params_, 3);
  const auto b = Rollout(ref, bound, limits_, params_, 3);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    ASSERT_EQ(a.log[k].accel, b.log[k].accel);
    ASSERT_EQ(a.log[k].state.p, b.log[k].state.p);
  }
}

TEST_F(RolloutTest, UntrainedMotionIndependentOfReference) {
  params_.terminate_on_deviation = false;
  Rng rng(4);
  trajectory::ReferenceTrajectory r1, r2;
  r1.positions = MatrixXd::Zero(80, 7);
  r2.positions = MatrixXd(80, 7);
  for (int k = 0; k < 80; ++k) {
    for (int i = 0; i < 7; ++i) r2.positions(k, i) = 0.3 + 0.01 * k + 0.02 * i;
  }
  policy::RandomPolicy random(7);
  const auto a = Rollout(r1, random, limits_, params_, 42);
  const auto b = Rollout(r2, random, limits_, params_, 42);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    ASSERT_EQ(a.log[k].action, b.log[k].action);
    ASSERT_EQ(a.log[k].accel, b.log[k].accel);
    ASSERT_EQ(a.log[k].jerk, b.log[k].jerk);
    ASSERT_EQ(a.log[k].state.v, b.log[k].state.v);
    ASSERT_EQ(a.log[k].state.a, b.log[k].state.a);
    const VectorXd da = a.log[k].state.p - r1.positions.row(0).transpose();
    const VectorXd db = b.log[k].state.p - r2.positions.row(0).transpose();
    ASSERT_LT((da - db).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(RolloutTest, TerminationRefusesTheDeviatingStep) {
  const auto ref = Stationary(kinematics::DefaultHome(), 201);
  policy::GreedyMaxPolicy greedy(7);
  const auto r = Rollout(ref, greedy, limits_, params_, 0);
  EXPECT_TRUE(r.report.terminated);
  EXPECT_FALSE(r.report.success);
  EXPECT_LT(r.report.executed_steps, 200u);
  ASSERT_FALSE(r.log.empty());
  const auto& last = r.log.back();
  EXPECT_TRUE(last.terminated);
  EXPECT_EQ(r.log.size(), r.report.executed_steps + 1);
  // The refused step keeps the previous state, which is within the bound.
  EXPECT_FALSE(ShouldTerminate(last.state.p, last.reference,
                               params_.weights.termination));
  EXPECT_NEAR(r.report.trajectory_fraction,
              static_cast<double>(r.report.executed_steps) / 200.0, 1e-15);
}

// Without termination every reference row is executed, so the adapted
// trajectory has the reference duration.
TEST_F(RolloutTest, TrackingKeepsStepCountOfReference) {
  params_.terminate_on_deviation = false;
  auto config = testing::ArmPipeline();
  const auto data = trajectory::GenerateDataset(config, model_, limits_, 11, 4, 2);
  ASSERT_EQ(data.records.size(), 4u);
  for (const auto& ref : data.records) {
    policy::TrackingPolicy tracking({7, 0, 1}, limits_, params_.step.dt);
    const auto r = Rollout(ref, tracking, limits_, params_, 1);
    EXPECT_FALSE(r.report.terminated);
    EXPECT_EQ(r.report.executed_steps,
              static_cast<std::size_t>(ref.positions.rows() - 1));
    EXPECT_NEAR(r.log.back().time, ref.duration(), 1e-12);
  }
}

TEST_F(RolloutTest, BallEpisodeIsDeterministicAndRewardBounded) {
  environment::TaskSpec task;
  task.start_offset = {0.01, -0.01};
  environment::BallEnvironment env({}, {}, task, true);
  params_.terminate_on_deviation = false;
  policy::RandomPolicy random(7);
  const auto ref = Stationary(kinematics::DefaultHome(), 101);
  const auto a = Rollout(ref, random, limits_, params_, 8, &env, &model_);
  const auto b = Rollout(ref, random, limits_, params_, 8, &env, &model_);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    ASSERT_EQ(a.log[k].ball.position, b.log[k].ball.position);
    ASSERT_EQ(a.log[k].feedback, b.log[k].feedback);
    ASSERT_GE(a.log[k].reward.total, 0.0);
    ASSERT_LE(a.log[k].reward.total, 1.0);
    ASSERT_LE(a.log[k].observation.cwiseAbs().maxCoeff(), 1.0);
    ASSERT_EQ(a.log[k].observation.size(), 34);
  }
  EXPECT_EQ(a.report.total_reward, b.report.total_reward);
}

TEST_F(RolloutTest, BallLossEndsEpisodeWithZeroReward) {
  environment::BallEnvironment env({}, {}, environment::TaskSpec{}, false);
  params_.terminate_on_deviation = false;
  VectorXd tilt = VectorXd::Zero(7);
  tilt[5] = 1.0;
  ConstantPolicy policy(tilt);
  const auto r = Rollout(Stationary(kinematics::DefaultHome(), 201), policy,
                         limits_, params_, 2, &env, &model_);
  EXPECT_TRUE(r.ball_lost);
  EXPECT_LT(r.report.executed_steps, 200u);
  EXPECT_FALSE(r.report.success);
  EXPECT_FALSE(r.log.back().ball.on_plate);
  EXPECT_EQ(r.log.back().reward.total, 0.0);
}

TEST_F(RolloutTest, RejectsBadInputs) {
  policy::ZeroPolicy zero(7);
  EXPECT_THROW(Rollout(Stationary(VectorXd::Zero(7), 1), zero, limits_, params_, 0),
               ConfigError);
  EXPECT_THROW(Rollout(Stationary(VectorXd::Zero(6), 5), zero, limits_, params_, 0),
               ConfigError);
  environment::BallEnvironment env({}, {}, environment::TaskSpec{}, false);
  EXPECT_THROW(Rollout(Stationary(VectorXd::Zero(7), 5), zero, limits_, params_, 0,
                       &env, nullptr),
               ConfigError);
  policy::ZeroPolicy short_policy(3);
  EXPECT_THROW(Rollout(Stationary(VectorXd::Zero(7), 5), short_policy, limits_,
                       params_, 0),
               ConfigError);
  JointLimits broken = limits_;
  broken.a_max[2] = 0.0;
  EXPECT_THROW(Rollout(Stationary(VectorXd::Zero(7), 5), zero, broken, params_, 0),
               ConfigError);
}

}  // namespace
}  // namespace trajadapt::adaptation
