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

// Reference trajectory generation: Cartesian waypoints sampled in boxes,
// natural cubic spline, dense IK, a forward-backward time
// parameterization and uniform resampling at the decision period.

#ifndef TRAJADAPT_TRAJECTORY_HPP_
#define TRAJADAPT_TRAJECTORY_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trajadapt/common.hpp"
#include "trajadapt/kinematics.hpp"
#include "trajadapt/limits.hpp"

namespace trajadapt::trajectory {

using kinematics::Vector3d;

struct Box {
  Vector3d lo = Vector3d::Zero();
  Vector3d hi = Vector3d::Zero();
};

/// Boxes in visiting order (start, via..., end). When `height_band` is set
/// one height is drawn per trajectory and shared by all waypoints.
struct SamplingAreas {
  std::vector<Box> boxes;
  std::optional<std::pair<double, double>> height_band;

  void Validate() const;
};

/// One uniform sample per box.
std::vector<Vector3d> SampleWaypoints(const SamplingAreas& areas, Rng& rng);

/// Natural cubic spline through the waypoints, parameterized by cumulative
/// chord length.
class CubicSpline {
 public:
  /// Throws PathRejected (index of the second point) on duplicate
  /// consecutive waypoints and ConfigError on fewer than two.
  explicit CubicSpline(std::vector<Vector3d> waypoints);

  double length() const { return knots_.back(); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<Vector3d>& waypoints() const { return points_; }

  /// Position at parameter u, clamped to [0, length()].
  Vector3d Evaluate(double u) const;

 private:
  std::vector<Vector3d> points_;
  std::vector<double> knots_;
  std::vector<Vector3d> second_;  // second derivatives at the knots
};

/// Joint positions (one row per sample) along a path.
struct JointPath {
  MatrixXd q;
};

/// Dense IK with seed continuation, plate kept level. Throws PathRejected
/// with the sample index on IK failure or when consecutive samples differ by
/// more than `max_jump` rad in any joint.
JointPath PathToJointSpace(const CubicSpline& path,
                           const kinematics::ChainModel& model, int samples,
                           const VectorXd& seed,
                           kinematics::IkOptions options = {},
                           double max_jump = 0.2);

/// Same for an arbitrary path given as a function of u in [0, 1].
JointPath PathToJointSpace(const std::function<Vector3d(double)>& path,
                           const kinematics::ChainModel& model, int samples,
                           const VectorXd& seed,
                           kinematics::IkOptions options = {},
                           double max_jump = 0.2);

/// Joint trajectory through knots. Between knots the joints move along the
/// straight segment; progress along it is linear in time unless path speeds
/// are given, in which case the path acceleration is constant per segment.
struct TimedTrajectory {
  VectorXd t;  // strictly increasing, t[0] = 0 (single knot if stationary)
  MatrixXd q;
  VectorXd speed;  // optional path speed at the knots (any common scale)

  double duration() const { return t.size() ? t[t.size() - 1] : 0.0; }
  /// Position at `time`, clamped to [0, duration()].
  VectorXd Evaluate(double time) const;
};

/// Assigns a path speed with a forward-backward pass on the squared speed
/// so that every joint stays within v_max and a_max. Starts and ends at
/// rest. A path without motion yields a zero-duration trajectory.
TimedTrajectory TimeParameterize(const JointPath& path,
                                 const limits::JointLimits& limits);

/// Multiplies all knot times by `factor` (> 0).
TimedTrajectory StretchTime(const TimedTrajectory& traj, double factor);

enum class Split { kTrain, kTest };

const char* SplitName(Split split);

struct ReferenceTrajectory {
  double dt = 0.05;
  MatrixXd positions;  // one row per decision step
  std::uint64_t id = 0;
  std::uint64_t base = 0;  // base trajectory the record derives from
  int variant = 0;         // 0 original, k > 0 the k-th mirrored variant
  Split split = Split::kTrain;
  std::vector<Vector3d> waypoints;

  double duration() const {
    return positions.rows() > 0 ? dt * static_cast<double>(positions.rows() - 1)
                                : 0.0;
  }
};

/// Samples at t = k*dt for k = 0..floor(T/dt), times clamped to T.
ReferenceTrajectory ResampleUniform(const TimedTrajectory& traj, double dt);

/// Finite-difference velocities and accelerations of a reference at its own
/// dt, as a fraction of the limits.
struct LimitCheck {
  double max_velocity_ratio = 0.0;
  double max_accel_ratio = 0.0;
  bool positions_inside = true;

  /// True when both ratios stay within 1 - headroom and positions are inside.
  bool Passes(double headroom) const;
};
LimitCheck CheckReference(const ReferenceTrajectory& ref,
                          const limits::JointLimits& limits);

struct MirrorPlane {
  Vector3d point = Vector3d::Zero();
  Vector3d normal = Vector3d::UnitY();
};

/// Reflection of a point across the plane.
Vector3d Reflect(const MirrorPlane& plane, const Vector3d& point);

/// Reflects the plate path across `plane` and re-solves it through IK row by
/// row, each row seeded with the previous solution. The first row is seeded
/// with `first_seed` when given, otherwise with the original first row.
/// Timing is kept. Throws PathRejected with the row index on IK failure or
/// a joint jump above `max_jump`.
ReferenceTrajectory MirrorTrajectory(
    const ReferenceTrajectory& ref, const MirrorPlane& plane,
    const kinematics::ChainModel& model, kinematics::IkOptions options = {},
    const std::optional<VectorXd>& first_seed = std::nullopt,
    double max_jump = 0.2);

struct PipelineConfig {
  SamplingAreas areas;
  double dt = 0.05;
  int path_samples = 400;
  double headroom = 0.05;
  double test_fraction = 0.2;
  int max_attempts = 20;
  std::vector<MirrorPlane> mirror_planes;
  bool mirror = false;
  VectorXd ik_seed;  // joint seed for the first waypoint

  void Validate() const;
};

/// Time-parameterizes with v_max and a_max shrunk by the headroom, stretches
/// to whole decision steps and resamples. While the finite-difference check
/// fails the limits are tightened by 10% and the pass repeated. Throws
/// PathRejected if it never passes.
ReferenceTrajectory BuildReference(const JointPath& path,
                                   const limits::JointLimits& limits,
                                   const PipelineConfig& config);

/// Deterministic train/test assignment of a base trajectory.
Split AssignSplit(std::uint64_t seed, std::uint64_t base_index,
                  double test_fraction);

/// Generates the trajectory for one base index plus its mirrored variants
/// (each plane, then both planes in order) when mirroring is enabled.
/// Tries up to max_attempts waypoint draws; returns an empty vector and
/// fills `rejections` when every attempt fails. Record ids are left at 0.
std::vector<ReferenceTrajectory> GenerateBase(
    const PipelineConfig& config, const kinematics::ChainModel& model,
    const limits::JointLimits& limits, std::uint64_t seed,
    std::uint64_t base_index, std::vector<std::string>* rejections);

struct Dataset {
  std::vector<ReferenceTrajectory> records;
  std::size_t bases_tried = 0;
  std::size_t bases_failed = 0;
  std::vector<std::string> rejections;  // one line per rejected attempt
};

/// Generates `count` records (ids 0..count-1), fanning base trajectories out
/// over `workers` threads. Gives up after `count` failed bases, in which
/// case fewer records are returned.
Dataset GenerateDataset(const PipelineConfig& config,
                        const kinematics::ChainModel& model,
                        const limits::JointLimits& limits, std::uint64_t seed,
                        std::size_t count, int workers = 1);

}  // namespace trajadapt::trajectory

#endif  // TRAJADAPT_TRAJECTORY_HPP_
