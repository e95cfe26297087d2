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

#include "trajadapt/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace trajadapt::kinematics {
namespace {

using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;

void CheckLength(const ChainModel& model, const VectorXd& q) {
  if (static_cast<std::size_t>(q.size()) != model.dof()) {
    throw ConfigError("kinematics: joint vector has " +
                      std::to_string(q.size()) + " entries, chain has " +
                      std::to_string(model.dof()));
  }
}

/// Rotation vector (axis * angle) of R.
Vector3d RotationVector(const Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

/// Rotation vector taking unit vector `from` onto unit vector `to`.
Vector3d AlignmentVector(const Vector3d& from, const Vector3d& to) {
  const Vector3d cross = from.cross(to);
  const double s = cross.norm();
  const double c = std::clamp(from.dot(to), -1.0, 1.0);
  const double angle = std::atan2(s, c);
  if (s < 1e-15) {
    if (c > 0.0) return Vector3d::Zero();
    // Antiparallel: any perpendicular axis.
    Vector3d axis = from.unitOrthogonal();
    return axis * angle;
  }
  return cross / s * angle;
}

}  // namespace

void ChainModel::Validate() const {
  if (joints.empty()) throw ConfigError("chain: at least one joint required");
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const auto& j = joints[i];
    if (!std::isfinite(j.d) || !std::isfinite(j.a) || !std::isfinite(j.alpha) ||
        !std::isfinite(j.theta_offset)) {
      throw ConfigError("chain: non-finite parameter in joint " +
                        std::to_string(i));
    }
  }
  if (!base.matrix().allFinite() || !plate_offset.matrix().allFinite()) {
    throw ConfigError("chain: non-finite base or plate transform");
  }
}

Isometry3d JointTransform(const DhRow& row, double q) {
  const double theta = q + row.theta_offset;
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);
  Isometry3d t = Isometry3d::Identity();
  t.linear() << ct, -st * ca, st * sa,  //
      st, ct * ca, -ct * sa,            //
      0.0, sa, ca;
  t.translation() << row.a * ct, row.a * st, row.d;
  return t;
}

Isometry3d PartialChain(const ChainModel& model, const VectorXd& q,
                        std::size_t first, std::size_t last) {
  CheckLength(model, q);
  Isometry3d t = Isometry3d::Identity();
  for (std::size_t i = first; i < last && i < model.dof(); ++i) {
    t = t * JointTransform(model.joints[i], q[static_cast<Eigen::Index>(i)]);
  }
  return t;
}

Isometry3d ForwardKinematics(const ChainModel& model, const VectorXd& q) {
  return model.base * PartialChain(model, q, 0, model.dof()) *
         model.plate_offset;
}

Matrix6Xd Jacobian(const ChainModel& model, const VectorXd& q) {
  CheckLength(model, q);
  const auto n = static_cast<Eigen::Index>(model.dof());
  std::vector<Vector3d> axes(model.dof());
  std::vector<Vector3d> origins(model.dof());
  Isometry3d t = model.base;
  for (Eigen::Index i = 0; i < n; ++i) {
    axes[i] = t.linear().col(2);
    origins[i] = t.translation();
    t = t * JointTransform(model.joints[i], q[i]);
  }
  const Vector3d tip = (t * model.plate_offset).translation();
  Matrix6Xd jac(6, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    jac.block<3, 1>(0, i) = axes[i].cross(tip - origins[i]);
    jac.block<3, 1>(3, i) = axes[i];
  }
  return jac;
}

void TaskResidual(const Isometry3d& pose, const Isometry3d& target,
                  IkTask task, double* position_error,
                  double* rotation_error) {
  *position_error = (target.translation() - pose.translation()).norm();
  switch (task) {
    case IkTask::kPosition:
      *rotation_error = 0.0;
      break;
    case IkTask::kPositionNormal:
      *rotation_error = AlignmentVector(pose.linear().col(2),
                                        target.linear().col(2))
                            .norm();
      break;
    case IkTask::kFull:
      *rotation_error =
          RotationVector(target.linear() * pose.linear().transpose()).norm();
      break;
  }
}

IkResult InverseKinematics(const ChainModel& model, const Isometry3d& target,
                           const VectorXd& seed, const IkOptions& options) {
  CheckLength(model, seed);
  const Eigen::Index rows = options.task == IkTask::kPosition ? 3 : 6;
  const double lambda2 = options.damping * options.damping;

  IkResult result{seed, 0, 0.0, 0.0};
  for (int iter = 0;; ++iter) {
    const Isometry3d pose = ForwardKinematics(model, result.q);
    TaskResidual(pose, target, options.task, &result.position_error,
                 &result.rotation_error);
    result.iterations = iter;
    if (result.position_error < options.position_tolerance &&
        result.rotation_error < options.rotation_tolerance) {
      return result;
    }
    if (iter >= options.max_iterations) break;

    Matrix6Xd jac = Jacobian(model, result.q);
    Eigen::Matrix<double, 6, 1> err;
    err.head<3>() = target.translation() - pose.translation();
    switch (options.task) {
      case IkTask::kPosition:
        err.tail<3>().setZero();
        break;
      case IkTask::kPositionNormal: {
        const Vector3d normal = pose.linear().col(2);
        err.tail<3>() = AlignmentVector(normal, target.linear().col(2));
        // Rotation about the normal does not change the task.
        const Matrix3d project = Matrix3d::Identity() - normal * normal.transpose();
        jac.bottomRows<3>() = project * jac.bottomRows<3>();
        break;
      }
      case IkTask::kFull:
        err.tail<3>() =
            RotationVector(target.linear() * pose.linear().transpose());
        break;
    }
    const MatrixXd j = jac.topRows(rows);
    const MatrixXd jjt =
        j * j.transpose() + lambda2 * MatrixXd::Identity(rows, rows);
    VectorXd dq = j.transpose() * jjt.ldlt().solve(err.head(rows));
    const double largest = dq.cwiseAbs().maxCoeff();
    if (largest > options.step_clamp) dq *= options.step_clamp / largest;
    result.q += dq;
    if (options.q_min) result.q = result.q.cwiseMax(*options.q_min);
    if (options.q_max) result.q = result.q.cwiseMin(*options.q_max);
  }
  throw IkError("inverse kinematics did not converge" +
                (options.label.empty() ? std::string() : " for " + options.label) +
                " (position error " + std::to_string(result.position_error) +
                " m, rotation error " + std::to_string(result.rotation_error) +
                " rad)");
}

std::vector<PlatePose> PlateMotion(const ChainModel& model,
                                   const MatrixXd& q_series, double h) {
  const auto rows = q_series.rows();
  if (rows < 3) {
    throw ConfigError("plate_motion: at least 3 ticks required, got " +
                      std::to_string(rows));
  }
  if (!(h > 0.0)) throw ConfigError("plate_motion: spacing must be positive");
  std::vector<Isometry3d> poses;
  poses.reserve(static_cast<std::size_t>(rows));
  for (Eigen::Index k = 0; k < rows; ++k) {
    poses.push_back(ForwardKinematics(model, q_series.row(k).transpose()));
  }
  auto pos = [&](Eigen::Index k) -> Vector3d { return poses[k].translation(); };
  auto rot = [&](Eigen::Index k) -> Matrix3d { return poses[k].linear(); };

  std::vector<PlatePose> out(static_cast<std::size_t>(rows));
  const double h2 = h * h;
  for (Eigen::Index k = 0; k < rows; ++k) {
    auto& p = out[k];
    p.position = pos(k);
    p.orientation = Quaterniond(rot(k)).normalized();
    if (k > 0 && k + 1 < rows) {
      p.linear_acceleration = (pos(k + 1) - 2.0 * pos(k) + pos(k - 1)) / h2;
      p.angular_velocity =
          RotationVector(rot(k + 1) * rot(k - 1).transpose()) / (2.0 * h);
      continue;
    }
    // One-sided second-order stencils at the ends.
    const Eigen::Index s = k == 0 ? 1 : -1;
    if (rows >= 4) {
      p.linear_acceleration = (2.0 * pos(k) - 5.0 * pos(k + s) +
                               4.0 * pos(k + 2 * s) - pos(k + 3 * s)) /
                              h2;
    } else {
      p.linear_acceleration =
          (pos(k) - 2.0 * pos(k + s) + pos(k + 2 * s)) / h2;
    }
    const Vector3d phi1 = RotationVector(rot(k + s) * rot(k).transpose());
    const Vector3d phi2 = RotationVector(rot(k + 2 * s) * rot(k).transpose());
    p.angular_velocity = static_cast<double>(s) * (4.0 * phi1 - phi2) / (2.0 * h);
  }
  return out;
}

ChainModel DefaultArm() {
  ChainModel model;
  const double h = kPi / 2.0;
  model.joints = {
      {0.36, 0.0, -h, 0.0},  {0.0, 0.0, h, 0.0},   {0.42, 0.0, h, 0.0},
      {0.0, 0.0, -h, 0.0},   {0.40, 0.0, -h, 0.0}, {0.0, 0.0, h, 0.0},
      {0.126, 0.0, 0.0, 0.0},
  };
  // Plate mounted on an angle bracket: its normal is the flange's -x axis,
  // so the plate is level when the flange points horizontally.
  model.plate_offset = Isometry3d::Identity();
  model.plate_offset.translation() << 0.0, 0.0, 0.05;
  model.plate_offset.linear() =
      Eigen::AngleAxisd(-kPi / 2.0, Vector3d::UnitY()).toRotationMatrix();
  return model;
}

VectorXd DefaultHome() {
  VectorXd q(7);
  q << 0.0, 0.5, 0.0, -1.3, 0.0, kPi / 2.0 - 1.8, 0.0;
  return q;
}

}  // namespace trajadapt::kinematics
