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

#include "trajadapt/limits.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace trajadapt::limits {
namespace {

constexpr double kDt = 0.05;

StepParams Params(bool correction = true) {
  return StepParams{kDt, 0.005, correction};
}

TEST(MaxAccelJerk, HandEvaluated) {
  EXPECT_DOUBLE_EQ(MaxAccelJerk(0.2, 4.0, 0.05), 0.4);
  EXPECT_DOUBLE_EQ(MaxAccelJerk(1.0, 0.0, 0.05), 1.0);
  EXPECT_DOUBLE_EQ(MaxAccelJerk(0.0, 20.0, 0.05), 1.0);
  EXPECT_DOUBLE_EQ(MinAccelJerk(0.2, 4.0, 0.05), 0.0);
}

TEST(MaxAccelVelocity, BeforeLimitBranch) {
  const double expected = -0.25 * (1.0 - std::sqrt(29.0));
  EXPECT_NEAR(MaxAccelVelocity(0.9, 0.5, 1.0, 10.0, 0.05), expected, 1e-12);
  EXPECT_NEAR(expected, 1.0963, 1e-4);
  EXPECT_NEAR(oracle::MaxAccelVelocityBisection(0.9, 0.5, 1.0, 10.0, 0.05),
              expected, 1e-9);
}

TEST(MaxAccelVelocity, PeakInsideStepBranch) {
  for (double j : {1.0, 10.0, 1000.0}) {
    EXPECT_NEAR(MaxAccelVelocity(0.99, 1.0, 1.0, j, 0.05), -1.5, 1e-12);
  }
  // The linear ramp 1.0 -> -1.5 crosses zero at t = 0.02 s where the
  // velocity is 0.99 + 0.5 * 1.0 * 0.02 = 1.0.
  EXPECT_NEAR(oracle::PeakVelocity(oracle::RampThenBrake(1.0, -1.5, 10, 0.05),
                                   0.99),
              1.0, 1e-12);
}

TEST(MaxAccelVelocity, DegenerateAtLimit) {
  EXPECT_EQ(MaxAccelVelocity(1.0, 0.0, 1.0, 10.0, 0.05), 0.0);
  EXPECT_EQ(MaxAccelVelocity(1.0 + 1e-12, 0.0, 1.0, 10.0, 0.05), 0.0);
  // v0 == v_max with a0 > 0 falls through to the braking formula.
  const double a = MaxAccelVelocity(1.0, 0.5, 1.0, 10.0, 0.05);
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_LT(a, 0.5);
  EXPECT_EQ(MinAccelVelocity(-1.0, 0.0, 1.0, 10.0, 0.05), 0.0);
}

TEST(MaxAccelVelocity, MatchesBisectionOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const double v_max = rng.Uniform(0.2, 3.0);
    const double j = rng.Uniform(1.0, 500.0);
    const double dt = rng.Uniform(0.005, 0.1);
    const double v0 = rng.Uniform(-v_max, v_max * (1.0 - 1e-6));
    const double a0 = rng.Uniform(-20.0, 20.0);
    const double closed = MaxAccelVelocity(v0, a0, v_max, j, dt);
    const double numeric = oracle::MaxAccelVelocityBisection(v0, a0, v_max, j, dt);
    ASSERT_NEAR(closed, numeric, 1e-8)
        << "v0=" << v0 << " a0=" << a0 << " v_max=" << v_max << " j=" << j
        << " dt=" << dt;
    EXPECT_LE(oracle::PeakVelocity(oracle::RampThenBrake(a0, closed, j, dt), v0),
              v_max + 1e-9);
  }
}

TEST(MaxAccelVelocity, LowerBoundIsReflection) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const double v0 = rng.Uniform(-1.0, 1.0);
    const double a0 = rng.Uniform(-3.0, 3.0);
    EXPECT_DOUBLE_EQ(MinAccelVelocity(v0, a0, 1.0, 30.0, kDt),
                     -MaxAccelVelocity(-v0, -a0, 1.0, 30.0, kDt));
  }
}

TEST(AreaEqualizedCorrection, DisabledIsIdentity) {
  const double hi = MaxAccelVelocity(0.95, 0.8, 1.0, 10.0, kDt);
  EXPECT_EQ(AreaEqualizedCorrection(0.95, 0.8, hi, 1.0, 10.0, kDt, false), hi);
}

TEST(AreaEqualizedCorrection, InactiveFarFromLimit) {
  const StepParams with = Params(true);
  const StepParams without = Params(false);
  const auto limits = JointLimits::Uniform(1, 3.0, 100.0, 5.0, 50.0);
  const auto state = JointState::AtRest(VectorXd::Zero(1));
  const auto a = ValidAccelRange(state, limits, with);
  const auto b = ValidAccelRange(state, limits, without);
  EXPECT_EQ(a.hi[0], b.hi[0]);
  EXPECT_EQ(a.lo[0], b.lo[0]);
  EXPECT_EQ(a.hi[0], 2.5);  // jerk bound 50 * 0.05
}

TEST(AreaEqualizedCorrection, ShiftsBoundDown) {
  const double hi = MaxAccelVelocity(0.95, 0.8, 1.0, 10.0, kDt);
  const double c = AreaEqualizedCorrection(0.95, 0.8, hi, 1.0, 10.0, kDt);
  EXPECT_LE(c, hi);
  const double searched = oracle::CorrectionBySearch(0.95, 0.8, 1.0, 10.0, kDt);
  EXPECT_NEAR(c, searched, 1e-8);
}

TEST(AreaEqualizedCorrection, MatchesSearchOracle) {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double v_max = rng.Uniform(0.5, 2.0);
    const double j = rng.Uniform(5.0, 100.0);
    const double dt = 0.05;
    const double v0 = v_max - rng.Uniform(1e-4, 0.3);
    const double a0 = rng.Uniform(-1.0, 3.0);
    const double hi = MaxAccelVelocity(v0, a0, v_max, j, dt);
    if (v0 + 0.5 * a0 * dt >= v_max) continue;
    const double c = AreaEqualizedCorrection(v0, a0, hi, v_max, j, dt);
    const double searched = oracle::CorrectionBySearch(v0, a0, v_max, j, dt);
    ASSERT_FALSE(std::isnan(searched));
    ASSERT_NEAR(c, searched, 1e-8) << "v0=" << v0 << " a0=" << a0;
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

// Runs the max-valid-acceleration policy on a single joint and returns the
// velocities at every controller tick.
struct GreedyTrace {
  std::vector<double> a;       // per decision step
  std::vector<double> v_tick;  // per controller tick
};

GreedyTrace RunGreedy(const JointLimits& limits, const StepParams& params,
                      int steps) {
  GreedyTrace trace;
  auto state = JointState::AtRest(VectorXd::Zero(1));
  const int substeps = params.Substeps();
  for (int s = 0; s < steps; ++s) {
    const auto range = ValidAccelRange(state, limits, params);
    const VectorXd a1 = range.hi;
    for (int k = 1; k <= substeps; ++k) {
      trace.v_tick.push_back(EvaluateProfile(state.p[0], state.v[0], state.a[0],
                                             a1[0], params.dt,
                                             k * params.control_dt)
                                 .v);
    }
    state = IntegrateStep(state, a1, params.dt);
    trace.a.push_back(state.a[0]);
  }
  return trace;
}

double TailRipple(const std::vector<double>& v, std::size_t tail) {
  const auto begin = v.end() - static_cast<long>(tail);
  const auto [lo, hi] = std::minmax_element(begin, v.end());
  return *hi - *lo;
}

TEST(AreaEqualizedCorrection, SuppressesVelocityRipple) {
  const auto limits = JointLimits::Uniform(1, 100.0, 1.0, 4.0, 10.0);
  const auto corrected = RunGreedy(limits, Params(true), 200);
  const auto plain = RunGreedy(limits, Params(false), 200);
  const double ripple_corrected = TailRipple(corrected.v_tick, 500);
  const double ripple_plain = TailRipple(plain.v_tick, 500);
  EXPECT_LT(ripple_corrected, 1e-3 * limits.v_max[0]);
  EXPECT_GT(ripple_plain, 10.0 * ripple_corrected);
  EXPECT_GT(ripple_plain, 1e-4);
  for (double v : corrected.v_tick) EXPECT_LE(v, 1.0 + 1e-6);
  for (double v : plain.v_tick) EXPECT_LE(v, 1.0 + 1e-6);
}

TEST(ValidAccelRange, UnconstrainedState) {
  const auto limits = JointLimits::Uniform(3, 3.0, 100.0, 2.0, 1000.0);
  const auto range = ValidAccelRange(JointState::AtRest(VectorXd::Zero(3)),
                                     limits, Params());
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(range.hi[i], 2.0);
    EXPECT_EQ(range.lo[i], -2.0);
  }
}

TEST(ValidAccelRange, AtVelocityLimit) {
  const auto limits = JointLimits::Uniform(1, 3.0, 1.0, 2.0, 50.0);
  JointState state = JointState::AtRest(VectorXd::Zero(1));
  state.v[0] = 1.0;
  for (bool correction : {false, true}) {
    const auto range = ValidAccelRange(state, limits, Params(correction));
    EXPECT_EQ(range.hi[0], 0.0);
    EXPECT_LT(range.lo[0], 0.0);
  }
}

TEST(ValidAccelRange, AccelerationLimitBindsOverJerk) {
  const auto limits = JointLimits::Uniform(1, 3.0, 100.0, 2.0, 1.0);
  JointState state = JointState::AtRest(VectorXd::Zero(1));
  state.a[0] = 2.0;
  const auto range = ValidAccelRange(state, limits, Params());
  EXPECT_EQ(range.hi[0], 2.0);
  EXPECT_DOUBLE_EQ(range.lo[0], 2.0 - 0.05);
}

TEST(ValidAccelRange, LengthMismatchIsConfigError) {
  const auto limits = JointLimits::Uniform(2, 3.0, 1.0, 2.0, 50.0);
  EXPECT_THROW(ValidAccelRange(JointState::AtRest(VectorXd::Zero(3)), limits,
                               Params()),
               ConfigError);
}

TEST(ClipAction, Clamps) {
  const AccelRange range{VectorXd::Constant(3, -0.5), VectorXd::Constant(3, 0.5)};
  VectorXd raw(3);
  raw << 0.7, 0.3, -0.9;
  const VectorXd out = ClipAction(raw, range);
  EXPECT_EQ(out[0], 0.5);
  EXPECT_EQ(out[1], 0.3);
  EXPECT_EQ(out[2], -0.5);
}

TEST(ClipAction, IdempotentProjection) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    AccelRange range{VectorXd(4), VectorXd(4)};
    VectorXd raw(4);
    for (int i = 0; i < 4; ++i) {
      const double a = rng.Uniform(-3, 3);
      const double b = rng.Uniform(-3, 3);
      range.lo[i] = std::min(a, b);
      range.hi[i] = std::max(a, b);
      raw[i] = rng.Uniform(-5, 5);
    }
    const VectorXd once = ClipAction(raw, range);
    EXPECT_EQ(ClipAction(once, range), once);
    EXPECT_TRUE((once.array() >= range.lo.array()).all());
    EXPECT_TRUE((once.array() <= range.hi.array()).all());
  }
}

TEST(IntegrateStep, ClosedForms) {
  auto r = IntegrateStep(0.0, 1.0, 0.0, 0.0, 0.05);
  EXPECT_DOUBLE_EQ(r.p, 0.05);
  EXPECT_DOUBLE_EQ(r.v, 1.0);
  r = IntegrateStep(0.0, 0.0, 1.0, 1.0, 0.05);
  EXPECT_NEAR(r.p, 0.00125, 1e-15);
  EXPECT_NEAR(r.v, 0.05, 1e-15);
  r = IntegrateStep(0.0, 0.0, 0.0, 1.0, 0.05);
  EXPECT_NEAR(r.p, 0.05 * 0.05 / 6.0, 1e-15);
  EXPECT_NEAR(r.p, 4.1667e-4, 1e-8);
  EXPECT_NEAR(r.v, 0.025, 1e-15);
}

TEST(IntegrateStep, MatchesHalvedStepIntegration) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const double p0 = rng.Uniform(-2, 2);
    const double v0 = rng.Uniform(-2, 2);
    const double a0 = rng.Uniform(-5, 5);
    const double a1 = rng.Uniform(-5, 5);
    const double dt = rng.Uniform(0.001, 0.2);
    // Two half steps with the midpoint acceleration of the linear ramp.
    const double am = 0.5 * (a0 + a1);
    const auto half = IntegrateStep(p0, v0, a0, am, 0.5 * dt);
    const auto full_halved = IntegrateStep(half.p, half.v, am, a1, 0.5 * dt);
    const auto full = IntegrateStep(p0, v0, a0, a1, dt);
    EXPECT_NEAR(full.p, full_halved.p, 1e-10);
    EXPECT_NEAR(full.v, full_halved.v, 1e-10);
  }
}

TEST(IntermediateSetpoints, EndpointAndShape) {
  const auto params = Params();
  const auto series = IntermediateSetpoints(0.3, -0.2, 0.7, -1.1, params);
  ASSERT_EQ(series.size(), 10u);
  EXPECT_NEAR(series.back(), IntegrateStep(0.3, -0.2, 0.7, -1.1, kDt).p, 1e-12);

  const auto constant = IntermediateSetpoints(0.0, 1.0, 0.0, 0.0, params);
  for (std::size_t k = 0; k < constant.size(); ++k) {
    EXPECT_NEAR(constant[k], 0.005 * static_cast<double>(k + 1), 1e-15);
  }

  const auto ramp = IntermediateSetpoints(0.0, 0.0, 0.0, 1.0, params);
  for (std::size_t k = 0; k < ramp.size(); ++k) {
    const double t = 0.005 * static_cast<double>(k + 1);
    EXPECT_NEAR(ramp[k], t * t * t / (6.0 * kDt), 1e-15);
  }
}

TEST(IntermediateSetpoints, NonIntegerRatioRejected) {
  StepParams params{0.05, 0.007, true};
  EXPECT_THROW(IntermediateSetpoints(0, 0, 0, 0, params), ConfigError);
}

TEST(JointLimits, Validation) {
  auto limits = JointLimits::Uniform(2, 1.0, 1.0, 1.0, 1.0);
  EXPECT_NO_THROW(limits.Validate());
  limits.a_max[1] = 0.0;
  EXPECT_THROW(limits.Validate(), ConfigError);
  limits = JointLimits::Uniform(2, 1.0, 1.0, 1.0, 1.0);
  limits.p_min[0] = 2.0;
  EXPECT_THROW(limits.Validate(), ConfigError);
}

// Random valid actions from rest never violate any limit at any tick.
TEST(SafetyFuzz, RandomActionsStayWithinLimits) {
  Rng rng(2024);
  const auto params = Params();
  const int substeps = params.Substeps();
  for (int episode = 0; episode < 300; ++episode) {
    JointLimits limits = JointLimits::Uniform(3, 10.0, 1.0, 1.0, 1.0);
    for (int i = 0; i < 3; ++i) {
      limits.v_max[i] = rng.Uniform(0.5, 2.5);
      limits.a_max[i] = rng.Uniform(1.0, 15.0);
      limits.j_max[i] = rng.Uniform(10.0, 500.0);
    }
    auto state = JointState::AtRest(VectorXd::Zero(3));
    for (int step = 0; step < 200; ++step) {
      const auto range = ValidAccelRange(state, limits, params);
      VectorXd raw(3);
      for (int i = 0; i < 3; ++i) raw[i] = rng.Uniform(-1, 1) * limits.a_max[i];
      const VectorXd a1 = ClipAction(raw, range);
      for (int i = 0; i < 3; ++i) {
        ASSERT_LE(std::abs(a1[i] - state.a[i]) / kDt,
                  limits.j_max[i] * (1.0 + kLimitEpsilon));
        // Implied interpolation jerk never exceeds 2 a_max / dt.
        ASSERT_LE(std::abs(a1[i] - state.a[i]) / kDt,
                  2.0 * limits.a_max[i] / kDt + kLimitEpsilon);
        for (int k = 1; k <= substeps; ++k) {
          const auto pt = EvaluateProfile(state.p[i], state.v[i], state.a[i],
                                          a1[i], kDt, k * params.control_dt);
          ASSERT_LE(std::abs(pt.v), limits.v_max[i] + kLimitEpsilon)
              << "episode " << episode << " step " << step;
          ASSERT_LE(std::abs(pt.a), limits.a_max[i] + kLimitEpsilon);
        }
      }
      state = IntegrateStep(state, a1, kDt);
    }
  }
}

// Max-acceleration policy: jerk-limited ramp, plateau at a_max, then decay
// with the velocity converging to v_max.
TEST(GreedyPhases, JerkThenPlateauThenVelocity) {
  const auto limits = JointLimits::Uniform(1, 100.0, 1.0, 2.0, 10.0);
  const auto trace = RunGreedy(limits, Params(true), 120);
  std::size_t k = 0;
  double prev = 0.0;
  // Jerk phase.
  while (k < trace.a.size() && std::abs((trace.a[k] - prev) / kDt - 10.0) < 1e-6) {
    prev = trace.a[k++];
  }
  EXPECT_GE(k, 3u);
  // Plateau.
  std::size_t plateau = 0;
  while (k < trace.a.size() && std::abs(trace.a[k] - 2.0) < 1e-12) {
    ++plateau;
    ++k;
  }
  EXPECT_GE(plateau, 1u);
  // Decay to zero.
  for (; k + 1 < trace.a.size(); ++k) EXPECT_LE(trace.a[k + 1], trace.a[k] + 1e-12);
  EXPECT_NEAR(trace.a.back(), 0.0, 1e-12);
  const double peak = *std::max_element(trace.v_tick.begin(), trace.v_tick.end());
  EXPECT_LE(peak, 1.0 + 1e-6);
  EXPECT_NEAR(trace.v_tick.back(), 1.0, 1e-6);
}

// The corrected target can land exactly on the jerk floor a0 - j dt; it
// must still be used, giving a monotone approach without undershoot.
TEST(GreedyPhases, CorrectionOnJerkFloorIsKept) {
  const auto limits = JointLimits::Uniform(1, 100.0, DegToRad(130.0), 8.0, 80.0);
  const auto trace = RunGreedy(limits, Params(true), 40);
  for (std::size_t k = 2; k + 1 < trace.a.size(); ++k) {
    EXPECT_LE(trace.a[k + 1], trace.a[k] + 1e-12) << "step " << k;
    EXPECT_GE(trace.a[k + 1], -1e-12) << "step " << k;
  }
  EXPECT_NEAR(trace.v_tick.back(), limits.v_max[0], 1e-12);
}

}  // namespace
}  // namespace trajadapt::limits
