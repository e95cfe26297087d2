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

// Ball-on-plate environment. The ball is a solid sphere rolling without
// slip, modelled as a point in the plate frame; rotational pseudo-forces of
// the plate (Coriolis, Euler, centrifugal) are neglected.

#ifndef TRAJADAPT_ENVIRONMENT_HPP_
#define TRAJADAPT_ENVIRONMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "trajadapt/common.hpp"
#include "trajadapt/kinematics.hpp"

namespace trajadapt::environment {

using Eigen::Vector2d;
using kinematics::PlatePose;

inline constexpr double kGravity = 9.81;         // m/s^2
inline constexpr double kRollingFactor = 5.0 / 7.0;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct BallParams {
  double mass = 0.05;              // kg
  double radius = 0.02;            // m
  double rolling_friction = 0.003;  // rolling-resistance coefficient
  Range mass_range{0.02, 0.10};
  Range radius_range{0.015, 0.025};
  Range friction_range{0.001, 0.006};

  void Validate() const;
};

struct BallState {
  Vector2d position = Vector2d::Zero();  // plate frame, m
  Vector2d velocity = Vector2d::Zero();  // plate frame, m/s
  bool on_plate = true;
};

struct PlateGeometry {
  double half_x = 0.17;   // m
  double half_y = 0.135;  // m

  void Validate() const;
};

enum class TaskKind { kOnPlate, kInPlace };

struct TaskSpec {
  TaskKind kind = TaskKind::kInPlace;
  /// Where the ball is placed and, for in_place, where it should stay.
  Vector2d initial_position = Vector2d::Zero();
  /// Added to the initial position when the ball is placed (disturbance).
  Vector2d start_offset = Vector2d::Zero();
  double success_bound = 0.06;  // m, in_place
  double noise_std = 0.001;     // m
  double reward_exponent = 2.0;

  void Validate(const PlateGeometry& geometry) const;
  std::size_t FeedbackSize() const { return kind == TaskKind::kOnPlate ? 4 : 6; }
};

// ---------------------------------------------------------------------------
// Physics.

/// In-plane acceleration of the ball on a plate with the given pose,
/// without rolling resistance.
Vector2d DrivingAcceleration(const PlatePose& plate);

/// Magnitude of the rolling-resistance deceleration on that plate.
double RollingResistance(const PlatePose& plate, const BallParams& params);

/// True while the ball centre is strictly inside the rectangle shrunk by the
/// ball radius (touching the border counts as off the plate).
bool InsidePlate(const Vector2d& position, const PlateGeometry& geometry,
                 double radius);

/// One semi-implicit Euler substep of length h. A ball that is off the plate
/// is returned unchanged.
BallState StepBall(const BallState& state, const PlatePose& plate,
                   const BallParams& params, const PlateGeometry& geometry,
                   double h);

/// Applies StepBall for every pose in order.
BallState StepBall(const BallState& state, const std::vector<PlatePose>& plate,
                   const BallParams& params, const PlateGeometry& geometry,
                   double h);

// ---------------------------------------------------------------------------
// Task reward and sensing.

/// R_T in [0, 1]; 0 off the plate.
double TaskReward(const BallState& state, const TaskSpec& spec,
                  const PlateGeometry& geometry, double radius);

/// Whether the task criterion holds in this state.
bool TaskSatisfied(const BallState& state, const TaskSpec& spec);

/// Position reading with zero-mean Gaussian noise.
Vector2d MeasurePosition(const BallState& state, double noise_std, Rng& rng);

/// f_t from the current and previous readings: positions normalized by the
/// half-extents, plus for in_place the offset to the initial position
/// normalized the same way. Clamped to [-1, 1].
VectorXd SensorFeedback(const Vector2d& current, const Vector2d& last,
                        const TaskSpec& spec, const PlateGeometry& geometry);

/// Uniform draw of every field from its range.
BallParams RandomizeBall(const BallParams& params, Rng& rng);

// ---------------------------------------------------------------------------
// Metrics.

/// One executed decision step as seen by the metrics.
struct MetricSample {
  bool task_ok = true;
  double error_distance = 0.0;  // m
  double mean_accel = 0.0;      // mean over joints of |a| / a_max
  double mean_jerk = 0.0;       // mean over joints of |j| / j_max
};

struct EpisodeReport {
  bool success = false;
  double trajectory_fraction = 0.0;
  double error_distance = 0.0;  // mean over executed steps, m
  double mean_accel = 0.0;      // fraction of the limit
  double mean_jerk = 0.0;       // fraction of the limit
  std::size_t executed_steps = 0;
  std::size_t total_steps = 0;
  bool terminated = false;
  double total_reward = 0.0;
};

/// Streaming form of EpisodeMetrics; feeding a log in consecutive chunks
/// gives the same report as feeding it at once.
class EpisodeAccumulator {
 public:
  explicit EpisodeAccumulator(std::size_t total_steps) : total_(total_steps) {}

  void Add(const MetricSample& sample, double reward = 0.0);
  /// `terminated`: the deviation check ended the episode early.
  EpisodeReport Report(bool terminated) const;

 private:
  std::size_t total_;
  std::size_t count_ = 0;
  std::size_t leading_ok_ = 0;
  bool failed_ = false;
  double error_sum_ = 0.0;
  double accel_sum_ = 0.0;
  double jerk_sum_ = 0.0;
  double reward_sum_ = 0.0;
};

/// Success: the task criterion held at every step and all `total_steps` ran.
/// Fraction: steps before the first failure (or all executed steps) over
/// `total_steps`.
EpisodeReport EpisodeMetrics(const std::vector<MetricSample>& log,
                             std::size_t total_steps, bool terminated);

// ---------------------------------------------------------------------------

/// Single-owner environment instance.
class BallEnvironment {
 public:
  BallEnvironment(PlateGeometry geometry, BallParams params, TaskSpec spec,
                  bool randomize);

  /// Draws ball parameters (when randomizing), places the ball at rest and
  /// clears the sensor history.
  void Reset(std::uint64_t seed);

  /// Advances one substep per pose.
  void Step(const std::vector<PlatePose>& poses, double h);

  /// Takes a reading and returns f_t. The first call after Reset uses the
  /// reading as its own previous value.
  VectorXd Feedback();

  double Reward() const;
  bool TaskOk() const { return TaskSatisfied(state_, spec_); }
  double ErrorDistance() const;

  const BallState& state() const { return state_; }
  const BallParams& params() const { return params_; }
  const TaskSpec& spec() const { return spec_; }
  const PlateGeometry& geometry() const { return geometry_; }
  const VectorXd& last_feedback() const { return feedback_; }

 private:
  PlateGeometry geometry_;
  BallParams defaults_;
  BallParams params_;
  TaskSpec spec_;
  bool randomize_;
  Rng rng_;
  BallState state_;
  Vector2d last_reading_ = Vector2d::Zero();
  bool has_reading_ = false;
  VectorXd feedback_;
};

}  // namespace trajadapt::environment

#endif  // TRAJADAPT_ENVIRONMENT_HPP_
