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

#include <algorithm>
#include <cmath>

namespace trajadapt::environment {
namespace {

using kinematics::Vector3d;

/// Gravity minus the plate-origin acceleration, in plate coordinates.
Vector3d ApparentGravity(const PlatePose& plate) {
  const Vector3d g(0.0, 0.0, -kGravity);
  return plate.orientation.conjugate() * (g - plate.linear_acceleration);
}

void CheckRange(const char* name, double value, const Range& range,
                bool allow_zero = false) {
  const bool lo_ok = allow_zero ? range.lo >= 0.0 : range.lo > 0.0;
  if (!lo_ok || !(range.lo <= range.hi) || !std::isfinite(range.hi)) {
    throw ConfigError(std::string("ball params: invalid ") + name + " range");
  }
  if (!(value >= range.lo && value <= range.hi)) {
    throw ConfigError(std::string("ball params: default ") + name +
                      " outside its range");
  }
}

}  // namespace

void BallParams::Validate() const {
  CheckRange("mass", mass, mass_range);
  CheckRange("radius", radius, radius_range);
  // Zero resistance is allowed (frictionless checks).
  CheckRange("rolling friction", rolling_friction, friction_range, true);
}

void PlateGeometry::Validate() const {
  if (!(half_x > 0.0) || !(half_y > 0.0)) {
    throw ConfigError("plate geometry: half-extents must be positive");
  }
}

void TaskSpec::Validate(const PlateGeometry& geometry) const {
  const Vector2d start = initial_position + start_offset;
  if (std::abs(start.x()) >= geometry.half_x ||
      std::abs(start.y()) >= geometry.half_y ||
      std::abs(initial_position.x()) >= geometry.half_x ||
      std::abs(initial_position.y()) >= geometry.half_y) {
    throw ConfigError("task: initial ball position must be on the plate");
  }
  if (!(success_bound > 0.0)) throw ConfigError("task: success bound must be positive");
  if (!(noise_std >= 0.0)) throw ConfigError("task: noise std must be non-negative");
  if (!(reward_exponent > 0.0)) {
    throw ConfigError("task: reward exponent must be positive");
  }
}

Vector2d DrivingAcceleration(const PlatePose& plate) {
  return kRollingFactor * ApparentGravity(plate).head<2>();
}

double RollingResistance(const PlatePose& plate, const BallParams& params) {
  const double normal = std::max(0.0, -ApparentGravity(plate).z());
  return kRollingFactor * params.rolling_friction * normal;
}

bool InsidePlate(const Vector2d& position, const PlateGeometry& geometry,
                 double radius) {
  return std::abs(position.x()) < geometry.half_x - radius &&
         std::abs(position.y()) < geometry.half_y - radius;
}

BallState StepBall(const BallState& state, const PlatePose& plate,
                   const BallParams& params, const PlateGeometry& geometry,
                   double h) {
  if (!state.on_plate) return state;
  BallState next = state;
  next.velocity += DrivingAcceleration(plate) * h;
  const double drag = RollingResistance(plate, params) * h;
  const double speed = next.velocity.norm();
  // Resistance only brakes; it never reverses the motion.
  next.velocity = speed <= drag ? Vector2d::Zero()
                                : Vector2d(next.velocity * (1.0 - drag / speed));
  next.position += next.velocity * h;
  next.on_plate = InsidePlate(next.position, geometry, params.radius);
  return next;
}

BallState StepBall(const BallState& state, const std::vector<PlatePose>& plate,
                   const BallParams& params, const PlateGeometry& geometry,
                   double h) {
  BallState s = state;
  for (const auto& pose : plate) s = StepBall(s, pose, params, geometry, h);
  return s;
}

double TaskReward(const BallState& state, const TaskSpec& spec,
                  const PlateGeometry& geometry, double radius) {
  if (!state.on_plate) return 0.0;
  double r;
  if (spec.kind == TaskKind::kOnPlate) {
    r = std::max(std::abs(state.position.x()) / (geometry.half_x - radius),
                 std::abs(state.position.y()) / (geometry.half_y - radius));
  } else {
    r = (state.position - spec.initial_position).norm() / spec.success_bound;
  }
  return std::clamp(1.0 - std::pow(r, spec.reward_exponent), 0.0, 1.0);
}

bool TaskSatisfied(const BallState& state, const TaskSpec& spec) {
  if (!state.on_plate) return false;
  if (spec.kind == TaskKind::kOnPlate) return true;
  return (state.position - spec.initial_position).norm() <= spec.success_bound;
}

Vector2d MeasurePosition(const BallState& state, double noise_std, Rng& rng) {
  if (noise_std == 0.0) return state.position;
  Vector2d noisy = state.position;
  noisy.x() += noise_std * rng.Normal();
  noisy.y() += noise_std * rng.Normal();
  return noisy;
}

VectorXd SensorFeedback(const Vector2d& current, const Vector2d& last,
                        const TaskSpec& spec, const PlateGeometry& geometry) {
  const Vector2d scale(1.0 / geometry.half_x, 1.0 / geometry.half_y);
  VectorXd f(static_cast<Eigen::Index>(spec.FeedbackSize()));
  f.segment<2>(0) = current.cwiseProduct(scale);
  f.segment<2>(2) = last.cwiseProduct(scale);
  if (spec.kind == TaskKind::kInPlace) {
    f.segment<2>(4) = (current - spec.initial_position).cwiseProduct(scale);
  }
  return f.cwiseMax(-1.0).cwiseMin(1.0);
}

BallParams RandomizeBall(const BallParams& params, Rng& rng) {
  params.Validate();
  BallParams out = params;
  out.mass = rng.Uniform(params.mass_range.lo, params.mass_range.hi);
  out.radius = rng.Uniform(params.radius_range.lo, params.radius_range.hi);
  out.rolling_friction =
      rng.Uniform(params.friction_range.lo, params.friction_range.hi);
  return out;
}

void EpisodeAccumulator::Add(const MetricSample& sample, double reward) {
  ++count_;
  if (!sample.task_ok) failed_ = true;
  if (!failed_) ++leading_ok_;
  error_sum_ += sample.error_distance;
  accel_sum_ += sample.mean_accel;
  jerk_sum_ += sample.mean_jerk;
  reward_sum_ += reward;
}

EpisodeReport EpisodeAccumulator::Report(bool terminated) const {
  EpisodeReport r;
  r.total_steps = total_;
  r.executed_steps = count_;
  r.terminated = terminated;
  r.success = !failed_ && !terminated && count_ >= total_;
  r.trajectory_fraction =
      total_ == 0 ? 1.0
                  : static_cast<double>(std::min(leading_ok_, total_)) /
                        static_cast<double>(total_);
  if (count_ > 0) {
    const double n = static_cast<double>(count_);
    r.error_distance = error_sum_ / n;
    r.mean_accel = accel_sum_ / n;
    r.mean_jerk = jerk_sum_ / n;
  }
  r.total_reward = reward_sum_;
  return r;
}

EpisodeReport EpisodeMetrics(const std::vector<MetricSample>& log,
                             std::size_t total_steps, bool terminated) {
  EpisodeAccumulator acc(total_steps);
  for (const auto& s : log) acc.Add(s);
  return acc.Report(terminated);
}

BallEnvironment::BallEnvironment(PlateGeometry geometry, BallParams params,
                                 TaskSpec spec, bool randomize)
    : geometry_(geometry),
      defaults_(params),
      params_(params),
      spec_(std::move(spec)),
      randomize_(randomize) {
  geometry_.Validate();
  defaults_.Validate();
  spec_.Validate(geometry_);
  Reset(0);
}

void BallEnvironment::Reset(std::uint64_t seed) {
  rng_.Seed(seed);
  params_ = randomize_ ? RandomizeBall(defaults_, rng_) : defaults_;
  state_ = BallState{};
  state_.position = spec_.initial_position + spec_.start_offset;
  state_.on_plate = InsidePlate(state_.position, geometry_, params_.radius);
  has_reading_ = false;
  feedback_ = VectorXd::Zero(static_cast<Eigen::Index>(spec_.FeedbackSize()));
}

void BallEnvironment::Step(const std::vector<PlatePose>& poses, double h) {
  state_ = StepBall(state_, poses, params_, geometry_, h);
}

VectorXd BallEnvironment::Feedback() {
  const Vector2d reading = MeasurePosition(state_, spec_.noise_std, rng_);
  const Vector2d last = has_reading_ ? last_reading_ : reading;
  feedback_ = SensorFeedback(reading, last, spec_, geometry_);
  last_reading_ = reading;
  has_reading_ = true;
  return feedback_;
}

double BallEnvironment::Reward() const {
  return TaskReward(state_, spec_, geometry_, params_.radius);
}

double BallEnvironment::ErrorDistance() const {
  return (state_.position - spec_.initial_position).norm();
}

}  // namespace trajadapt::environment
