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

#ifndef TRAJADAPT_KINEMATICS_HPP_
#define TRAJADAPT_KINEMATICS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "trajadapt/common.hpp"

namespace trajadapt::kinematics {

using Eigen::Isometry3d;
using Eigen::Matrix3d;
using Eigen::Quaterniond;
using Eigen::Vector3d;

/// Standard Denavit-Hartenberg row; the joint rotates about the previous
/// frame's z axis: T = Rz(q + theta_offset) Tz(d) Tx(a) Rx(alpha).
struct DhRow {
  double d = 0.0;
  double a = 0.0;
  double alpha = 0.0;
  double theta_offset = 0.0;
};

struct ChainModel {
  std::vector<DhRow> joints;
  Isometry3d base = Isometry3d::Identity();
  /// Flange to plate frame. The plate normal is the plate frame's z axis.
  Isometry3d plate_offset = Isometry3d::Identity();

  std::size_t dof() const { return joints.size(); }
  void Validate() const;
};

/// Transform contributed by one joint at angle q.
Isometry3d JointTransform(const DhRow& row, double q);

/// Composition of joints [first, last) only (no base, no plate offset).
Isometry3d PartialChain(const ChainModel& model, const VectorXd& q,
                        std::size_t first, std::size_t last);

/// World pose of the plate frame.
Isometry3d ForwardKinematics(const ChainModel& model, const VectorXd& q);

/// Geometric Jacobian of the plate frame origin: rows 0-2 linear, 3-5
/// angular, both in world coordinates.
Eigen::Matrix<double, 6, Eigen::Dynamic> Jacobian(const ChainModel& model,
                                                  const VectorXd& q);

enum class IkTask {
  kPosition,        // 3 constraints
  kPositionNormal,  // position plus plate normal direction (yaw free)
  kFull,            // position and orientation
};

struct IkOptions {
  IkTask task = IkTask::kPositionNormal;
  double damping = 1e-3;
  double step_clamp = 0.2;  // rad, per joint per iteration
  int max_iterations = 200;
  double position_tolerance = 1e-6;  // m
  double rotation_tolerance = 1e-6;  // rad
  /// When set, solutions are clamped into [p_min, p_max] every iteration.
  std::optional<VectorXd> q_min;
  std::optional<VectorXd> q_max;
  /// Included in error messages (e.g. the waypoint index).
  std::string label;
};

struct IkResult {
  VectorXd q;
  int iterations = 0;
  double position_error = 0.0;
  double rotation_error = 0.0;
};

/// Damped least squares from `seed`. Throws IkError on non-convergence.
IkResult InverseKinematics(const ChainModel& model, const Isometry3d& target,
                           const VectorXd& seed, const IkOptions& options = {});

/// Task-space residual of `pose` against `target` for the given task.
void TaskResidual(const Isometry3d& pose, const Isometry3d& target,
                  IkTask task, double* position_error,
                  double* rotation_error);

struct PlatePose {
  Vector3d position = Vector3d::Zero();
  Quaterniond orientation = Quaterniond::Identity();
  Vector3d linear_acceleration = Vector3d::Zero();  // world frame, m/s^2
  Vector3d angular_velocity = Vector3d::Zero();     // world frame, rad/s
};

/// Plate poses for a uniformly spaced series of joint positions (one row per
/// tick, spacing h). Accelerations and angular velocities are central
/// differences, second-order one-sided at the ends. Requires >= 3 rows.
std::vector<PlatePose> PlateMotion(const ChainModel& model,
                                   const MatrixXd& q_series, double h);

/// Seven-joint chain modelled on the published KUKA LBR iiwa geometry with
/// a plate mounted 0.05 m in front of the flange.
ChainModel DefaultArm();

/// Joint configuration of DefaultArm() with the plate level at roughly
/// (0.77, 0, 0.64) m; joints 6 and 7 tilt the plate.
VectorXd DefaultHome();

}  // namespace trajadapt::kinematics

#endif  // TRAJADAPT_KINEMATICS_HPP_
