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

#include "trajadapt/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace trajadapt::trajectory {
namespace {

using kinematics::ChainModel;
using kinematics::IkOptions;
using kinematics::Isometry3d;
using limits::JointLimits;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Level plate: target orientation with the normal along world z.
Isometry3d LevelTarget(const Vector3d& position) {
  Isometry3d target = Isometry3d::Identity();
  target.translation() = position;
  return target;
}

/// Feasible path accelerations s'' at a path point for squared speed x,
/// given the path derivatives d1 = dq/ds and d2 = d2q/ds2. Returns
/// lo > hi when infeasible.
std::pair<double, double> PathAccelRange(const VectorXd& d1,
                                         const VectorXd& d2, double x,
                                         const VectorXd& a_max) {
  double lo = -kInf, hi = kInf;
  for (Eigen::Index i = 0; i < d1.size(); ++i) {
    const double c = d2[i] * x;
    if (std::abs(d1[i]) < 1e-12) {
      if (std::abs(c) > a_max[i]) return {1.0, -1.0};
      continue;
    }
    double a = (-a_max[i] - c) / d1[i];
    double b = (a_max[i] - c) / d1[i];
    if (a > b) std::swap(a, b);
    lo = std::max(lo, a);
    hi = std::min(hi, b);
  }
  return {lo, hi};
}

IkOptions WithLimits(IkOptions options, const JointLimits& limits) {
  options.q_min = limits.p_min;
  options.q_max = limits.p_max;
  return options;
}

}  // namespace

void SamplingAreas::Validate() const {
  if (boxes.size() < 2) {
    throw ConfigError("sampling areas: at least two boxes required");
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (!b.lo.allFinite() || !b.hi.allFinite() ||
        (b.lo.array() > b.hi.array()).any()) {
      throw ConfigError("sampling areas: box " + std::to_string(i) +
                        " has lo above hi");
    }
  }
  if (height_band &&
      !(height_band->first <= height_band->second &&
        std::isfinite(height_band->first) && std::isfinite(height_band->second))) {
    throw ConfigError("sampling areas: invalid height band");
  }
}

std::vector<Vector3d> SampleWaypoints(const SamplingAreas& areas, Rng& rng) {
  areas.Validate();
  std::optional<double> height;
  if (areas.height_band) {
    height = rng.Uniform(areas.height_band->first, areas.height_band->second);
  }
  std::vector<Vector3d> out;
  out.reserve(areas.boxes.size());
  for (const auto& box : areas.boxes) {
    Vector3d p;
    for (int k = 0; k < 3; ++k) p[k] = rng.Uniform(box.lo[k], box.hi[k]);
    if (height) p.z() = *height;
    out.push_back(p);
  }
  return out;
}

CubicSpline::CubicSpline(std::vector<Vector3d> waypoints)
    : points_(std::move(waypoints)) {
  const std::size_t n = points_.size();
  if (n < 2) throw ConfigError("spline: at least two waypoints required");
  knots_.assign(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double h = (points_[k] - points_[k - 1]).norm();
    if (h < 1e-12) {
      throw PathRejected("spline: duplicate consecutive waypoints",
                         static_cast<long>(k));
    }
    knots_[k] = knots_[k - 1] + h;
  }
  // Natural end conditions; tridiagonal solve (Thomas algorithm) for the
  // interior second derivatives.
  second_.assign(n, Vector3d::Zero());
  if (n == 2) return;
  const std::size_t m = n - 2;
  std::vector<double> diag(m), upper(m), lower(m);
  std::vector<Vector3d> rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = i + 1;
    const double h0 = knots_[k] - knots_[k - 1];
    const double h1 = knots_[k + 1] - knots_[k];
    lower[i] = h0;
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((points_[k + 1] - points_[k]) / h1 -
                    (points_[k] - points_[k - 1]) / h0);
  }
  for (std::size_t i = 1; i < m; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  second_[m] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) {
    second_[i + 1] = (rhs[i] - upper[i] * second_[i + 2]) / diag[i];
  }
}

Vector3d CubicSpline::Evaluate(double u) const {
  u = std::clamp(u, 0.0, length());
  auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
  std::size_t k = static_cast<std::size_t>(it - knots_.begin());
  k = std::clamp<std::size_t>(k, 1, knots_.size() - 1);
  const double h = knots_[k] - knots_[k - 1];
  const double a = (knots_[k] - u) / h;
  const double b = 1.0 - a;
  return a * points_[k - 1] + b * points_[k] +
         ((a * a * a - a) * second_[k - 1] + (b * b * b - b) * second_[k]) *
             (h * h / 6.0);
}

JointPath PathToJointSpace(const CubicSpline& path, const ChainModel& model,
                           int samples, const VectorXd& seed,
                           IkOptions options, double max_jump) {
  return PathToJointSpace(
      [&path](double u) { return path.Evaluate(u * path.length()); }, model,
      samples, seed, std::move(options), max_jump);
}

JointPath PathToJointSpace(const std::function<Vector3d(double)>& path,
                           const ChainModel& model, int samples,
                           const VectorXd& seed, IkOptions options,
                           double max_jump) {
  if (samples < 2) throw ConfigError("path_to_joint_space: samples must be >= 2");
  JointPath out{MatrixXd(samples, static_cast<Eigen::Index>(model.dof()))};
  VectorXd q = seed;
  for (int k = 0; k < samples; ++k) {
    const double u = static_cast<double>(k) / (samples - 1);
    options.label = "path sample " + std::to_string(k);
    VectorXd next;
    try {
      next = kinematics::InverseKinematics(model, LevelTarget(path(u)),
                                           q, options)
                 .q;
    } catch (const IkError& e) {
      throw PathRejected(e.what(), k);
    }
    if (k > 0 && (next - q).cwiseAbs().maxCoeff() > max_jump) {
      throw PathRejected("path_to_joint_space: joint jump above " +
                             std::to_string(max_jump) + " rad at sample " +
                             std::to_string(k),
                         k);
    }
    q = next;
    out.q.row(k) = q.transpose();
  }
  return out;
}

VectorXd TimedTrajectory::Evaluate(double time) const {
  const auto n = t.size();
  if (n == 1 || time <= t[0]) return q.row(0).transpose();
  if (time >= t[n - 1]) return q.row(n - 1).transpose();
  const auto it = std::upper_bound(t.data(), t.data() + n, time);
  const auto k = static_cast<Eigen::Index>(it - t.data());
  const double h = t[k] - t[k - 1];
  const double tau = (time - t[k - 1]) / h;
  double w = tau;
  if (speed.size() == t.size()) {
    const double u0 = speed[k - 1], u1 = speed[k];
    if (u0 + u1 > 0.0) {
      w = (2.0 * u0 * tau + (u1 - u0) * tau * tau) / (u0 + u1);
    } else {
      // Rest to rest: accelerate for half the segment, then brake.
      w = tau < 0.5 ? 2.0 * tau * tau : 1.0 - 2.0 * (1.0 - tau) * (1.0 - tau);
    }
  }
  return ((1.0 - w) * q.row(k - 1) + w * q.row(k)).transpose();
}

TimedTrajectory TimeParameterize(const JointPath& path,
                                 const JointLimits& limits) {
  limits.Validate();
  if (path.q.rows() == 0) throw ConfigError("time_parameterize: empty path");
  if (static_cast<std::size_t>(path.q.cols()) != limits.size()) {
    throw ConfigError("time_parameterize: path/limits joint count mismatch");
  }
  // Drop repeated samples and parameterize by joint-space arc length.
  std::vector<Eigen::Index> keep{0};
  std::vector<double> s{0.0};
  for (Eigen::Index k = 1; k < path.q.rows(); ++k) {
    const double step = (path.q.row(k) - path.q.row(keep.back())).norm();
    if (step < 1e-12) continue;
    keep.push_back(k);
    s.push_back(s.back() + step);
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  TimedTrajectory out;
  if (n == 1) {
    out.t = VectorXd::Zero(1);
    out.q = path.q.topRows(1);
    return out;
  }
  MatrixXd q(n, path.q.cols());
  for (Eigen::Index k = 0; k < n; ++k) q.row(k) = path.q.row(keep[k]);

  // Path derivatives on the non-uniform grid.
  std::vector<VectorXd> d1(n), d2(n);
  for (Eigen::Index k = 1; k + 1 < n; ++k) {
    const double h0 = s[k] - s[k - 1];
    const double h1 = s[k + 1] - s[k];
    const VectorXd qm = q.row(k - 1).transpose();
    const VectorXd q0 = q.row(k).transpose();
    const VectorXd qp = q.row(k + 1).transpose();
    d1[k] = (h0 * h0 * qp - h1 * h1 * qm + (h1 * h1 - h0 * h0) * q0) /
            (h0 * h1 * (h0 + h1));
    d2[k] = 2.0 * (h0 * qp - (h0 + h1) * q0 + h1 * qm) / (h0 * h1 * (h0 + h1));
  }
  d1[0] = (q.row(1) - q.row(0)).transpose() / (s[1] - s[0]);
  d1[n - 1] = (q.row(n - 1) - q.row(n - 2)).transpose() / (s[n - 1] - s[n - 2]);
  d2[0] = n > 2 ? d2[1] : VectorXd::Zero(q.cols());
  d2[n - 1] = n > 2 ? d2[n - 2] : VectorXd::Zero(q.cols());

  // Squared-speed cap from the velocity limits and from acceleration
  // feasibility (the feasible set in (x, s'') is convex and contains the
  // origin, so feasible x form an interval found by bisection).
  std::vector<double> cap(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double xv = kInf;
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
      if (std::abs(d1[k][i]) > 1e-12) {
        xv = std::min(xv, std::pow(limits.v_max[i] / d1[k][i], 2));
      }
    }
    const double upper = std::min(xv, 1e12);
    auto feasible = [&](double x) {
      const auto [lo, hi] = PathAccelRange(d1[k], d2[k], x, limits.a_max);
      return lo <= hi;
    };
    if (feasible(upper)) {
      cap[k] = upper;
      continue;
    }
    double lo = 0.0, hi = upper;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    cap[k] = lo;
  }

  std::vector<double> x(n);
  x[0] = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double ds = s[k + 1] - s[k];
    const double beta = PathAccelRange(d1[k], d2[k], x[k], limits.a_max).second;
    x[k + 1] = std::clamp(x[k] + 2.0 * ds * beta, 0.0, cap[k + 1]);
  }
  x[n - 1] = 0.0;
  for (Eigen::Index k = n - 1; k > 0; --k) {
    const double ds = s[k] - s[k - 1];
    const double alpha =
        PathAccelRange(d1[k], d2[k], x[k], limits.a_max).first;
    x[k - 1] = std::min(x[k - 1], std::max(0.0, x[k] - 2.0 * ds * alpha));
  }

  out.t = VectorXd(n);
  out.q = q;
  out.speed = VectorXd(n);
  for (Eigen::Index k = 0; k < n; ++k) out.speed[k] = std::sqrt(x[k]);
  out.t[0] = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double ds = s[k + 1] - s[k];
    const double speed = std::sqrt(x[k]) + std::sqrt(x[k + 1]);
    double dt;
    if (speed > 1e-12) {
      dt = 2.0 * ds / speed;
    } else {
      // Rest to rest within one segment.
      const double beta = PathAccelRange(d1[k], d2[k], 0.0, limits.a_max).second;
      dt = 2.0 * std::sqrt(ds / beta);
    }
    out.t[k + 1] = out.t[k] + dt;
  }
  return out;
}

TimedTrajectory StretchTime(const TimedTrajectory& traj, double factor) {
  if (!(factor > 0.0)) throw ConfigError("stretch_time: factor must be positive");
  TimedTrajectory out = traj;
  out.t *= factor;
  return out;
}

const char* SplitName(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

ReferenceTrajectory ResampleUniform(const TimedTrajectory& traj, double dt) {
  if (!(dt > 0.0)) throw ConfigError("resample_uniform: dt must be positive");
  const double duration = traj.duration();
  const auto count =
      static_cast<Eigen::Index>(std::floor(duration / dt + 1e-9)) + 1;
  ReferenceTrajectory out;
  out.dt = dt;
  out.positions.resize(count, traj.q.cols());
  for (Eigen::Index k = 0; k < count; ++k) {
    const double t = std::min(static_cast<double>(k) * dt, duration);
    out.positions.row(k) = traj.Evaluate(t).transpose();
  }
  return out;
}

bool LimitCheck::Passes(double headroom) const {
  const double bound = 1.0 - headroom + kLimitEpsilon;
  return positions_inside && max_velocity_ratio <= bound &&
         max_accel_ratio <= bound;
}

LimitCheck CheckReference(const ReferenceTrajectory& ref,
                          const JointLimits& limits) {
  LimitCheck check;
  const MatrixXd& p = ref.positions;
  if (static_cast<std::size_t>(p.cols()) != limits.size()) {
    throw ConfigError("check_reference: joint count mismatch");
  }
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
      if (p(k, i) < limits.p_min[i] || p(k, i) > limits.p_max[i]) {
        check.positions_inside = false;
      }
      if (k + 1 < p.rows()) {
        const double v = (p(k + 1, i) - p(k, i)) / ref.dt;
        check.max_velocity_ratio =
            std::max(check.max_velocity_ratio, std::abs(v) / limits.v_max[i]);
      }
      if (k > 0 && k + 1 < p.rows()) {
        const double a = (p(k + 1, i) - 2.0 * p(k, i) + p(k - 1, i)) /
                         (ref.dt * ref.dt);
        check.max_accel_ratio =
            std::max(check.max_accel_ratio, std::abs(a) / limits.a_max[i]);
      }
    }
  }
  return check;
}

Vector3d Reflect(const MirrorPlane& plane, const Vector3d& point) {
  const Vector3d n = plane.normal.normalized();
  return point - 2.0 * n.dot(point - plane.point) * n;
}

ReferenceTrajectory MirrorTrajectory(const ReferenceTrajectory& ref,
                                     const MirrorPlane& plane,
                                     const ChainModel& model,
                                     IkOptions options,
                                     const std::optional<VectorXd>& first_seed,
                                     double max_jump) {
  if (!(plane.normal.norm() > 0.0)) {
    throw ConfigError("mirror: plane normal must be nonzero");
  }
  const Vector3d n = plane.normal.normalized();
  const Eigen::Matrix3d reflect =
      Eigen::Matrix3d::Identity() - 2.0 * n * n.transpose();
  ReferenceTrajectory out = ref;
  for (auto& w : out.waypoints) w = Reflect(plane, w);
  VectorXd q = first_seed ? *first_seed : VectorXd(ref.positions.row(0).transpose());
  for (Eigen::Index k = 0; k < ref.positions.rows(); ++k) {
    const Isometry3d pose =
        kinematics::ForwardKinematics(model, ref.positions.row(k).transpose());
    // The reflected normal fixes the target; yaw about it is free.
    Isometry3d target = Isometry3d::Identity();
    target.translation() = Reflect(plane, pose.translation());
    target.linear() = Eigen::Quaterniond::FromTwoVectors(
                          Vector3d::UnitZ(), reflect * pose.linear().col(2))
                          .toRotationMatrix();
    options.label = "mirrored row " + std::to_string(k);
    VectorXd next;
    try {
      next = kinematics::InverseKinematics(model, target, q, options).q;
    } catch (const IkError& e) {
      throw PathRejected(e.what(), static_cast<long>(k));
    }
    if (k > 0 && (next - q).cwiseAbs().maxCoeff() > max_jump) {
      throw PathRejected("mirror: joint jump above " + std::to_string(max_jump) +
                             " rad at row " + std::to_string(k),
                         static_cast<long>(k));
    }
    q = next;
    out.positions.row(k) = q.transpose();
  }
  return out;
}

void PipelineConfig::Validate() const {
  areas.Validate();
  if (!(dt > 0.0)) throw ConfigError("pipeline: dt must be positive");
  if (path_samples < 2) throw ConfigError("pipeline: path_samples must be >= 2");
  if (!(headroom >= 0.0 && headroom < 1.0)) {
    throw ConfigError("pipeline: headroom must be in [0, 1)");
  }
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ConfigError("pipeline: test_fraction must be in [0, 1]");
  }
  if (max_attempts < 1) throw ConfigError("pipeline: max_attempts must be >= 1");
  if (mirror && mirror_planes.empty()) {
    throw ConfigError("pipeline: mirroring enabled without planes");
  }
}

Split AssignSplit(std::uint64_t seed, std::uint64_t base_index,
                  double test_fraction) {
  const std::uint64_t h = DeriveSeed(seed ^ 0x5a17c0de5a17c0deULL, base_index);
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < test_fraction ? Split::kTest : Split::kTrain;
}

ReferenceTrajectory BuildReference(const JointPath& path,
                                   const JointLimits& limits,
                                   const PipelineConfig& config) {
  double scale = 1.0 - config.headroom;
  for (int attempt = 0; attempt < 12; ++attempt) {
    JointLimits scaled = limits;
    scaled.v_max *= scale;
    scaled.a_max *= scale;
    TimedTrajectory timed = TimeParameterize(path, scaled);
    const double duration = timed.duration();
    if (duration > 0.0) {
      // Round up to whole decision steps so the end point is sampled.
      const double steps = std::ceil(duration / config.dt - 1e-9);
      timed = StretchTime(timed, steps * config.dt / duration);
    }
    ReferenceTrajectory ref = ResampleUniform(timed, config.dt);
    if (CheckReference(ref, limits).Passes(config.headroom)) return ref;
    scale *= 0.9;
  }
  throw PathRejected("limit re-check failed after time parameterization", -1);
}

std::vector<ReferenceTrajectory> GenerateBase(
    const PipelineConfig& config, const ChainModel& model,
    const JointLimits& limits, std::uint64_t seed, std::uint64_t base_index,
    std::vector<std::string>* rejections) {
  const IkOptions ik = WithLimits({}, limits);
  const Split split = AssignSplit(seed, base_index, config.test_fraction);
  const std::string base = "base " + std::to_string(base_index);
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Rng rng(DeriveSeed(DeriveSeed(seed, base_index), static_cast<std::uint64_t>(attempt)));
    const auto waypoints = SampleWaypoints(config.areas, rng);
    ReferenceTrajectory ref;
    try {
      const CubicSpline spline(waypoints);
      const VectorXd& seed_q = config.ik_seed;
      if (static_cast<std::size_t>(seed_q.size()) != model.dof()) {
        throw ConfigError("pipeline: ik_seed length does not match the chain");
      }
      const JointPath path =
          PathToJointSpace(spline, model, config.path_samples, seed_q, ik);
      ref = BuildReference(path, limits, config);
    } catch (const PathRejected& e) {
      if (rejections) {
        rejections->push_back(base + " attempt " + std::to_string(attempt) +
                              " (index " + std::to_string(e.index()) +
                              "): " + e.what());
      }
      continue;
    }
    ref.split = split;
    ref.base = base_index;
    ref.waypoints = waypoints;
    int variant_index = 0;
    std::vector<ReferenceTrajectory> out{ref};
    if (!config.mirror) return out;

    // Variants mirror the waypoints and rerun the pipeline. Reflection keeps
    // chord lengths, so the spline is exactly the mirrored path; re-timing
    // keeps the variant within the limits for its own joint motion.
    auto add_variant = [&](const std::vector<std::size_t>& planes) {
      ++variant_index;
      std::vector<Vector3d> mirrored = waypoints;
      std::string name = "mirror";
      for (std::size_t p : planes) {
        name += " " + std::to_string(p);
        for (auto& w : mirrored) w = Reflect(config.mirror_planes[p], w);
      }
      try {
        const JointPath path = PathToJointSpace(
            CubicSpline(mirrored), model, config.path_samples, config.ik_seed, ik);
        ReferenceTrajectory variant = BuildReference(path, limits, config);
        variant.split = split;
        variant.base = base_index;
        variant.variant = variant_index;
        variant.waypoints = mirrored;
        out.push_back(std::move(variant));
      } catch (const PathRejected& e) {
        if (rejections) {
          rejections->push_back(base + " " + name + " (index " +
                                std::to_string(e.index()) + "): " + e.what());
        }
      }
    };
    for (std::size_t p = 0; p < config.mirror_planes.size(); ++p) add_variant({p});
    if (config.mirror_planes.size() >= 2) {
      std::vector<std::size_t> all(config.mirror_planes.size());
      for (std::size_t p = 0; p < all.size(); ++p) all[p] = p;
      add_variant(all);
    }
    return out;
  }
  return {};
}

Dataset GenerateDataset(const PipelineConfig& config, const ChainModel& model,
                        const JointLimits& limits, std::uint64_t seed,
                        std::size_t count, int workers) {
  config.Validate();
  limits.Validate();
  model.Validate();
  Dataset out;
  const std::size_t threads = static_cast<std::size_t>(std::max(1, workers));
  std::uint64_t next_base = 0;
  while (out.records.size() < count && out.bases_failed < count) {
    // Bases are computed in batches; results are consumed in base order so
    // the output does not depend on the worker count.
    const std::size_t batch = std::max<std::size_t>(threads, count - out.records.size());
    std::vector<std::vector<ReferenceTrajectory>> results(batch);
    std::vector<std::vector<std::string>> rejected(batch);
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
      for (std::size_t j = cursor++; j < batch; j = cursor++) {
        results[j] = GenerateBase(config, model, limits, seed, next_base + j,
                                  &rejected[j]);
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < std::min(threads, batch); ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    for (std::size_t j = 0; j < batch; ++j) {
      if (out.records.size() >= count || out.bases_failed >= count) break;
      ++out.bases_tried;
      for (auto& line : rejected[j]) out.rejections.push_back(std::move(line));
      if (results[j].empty()) ++out.bases_failed;
      for (auto& rec : results[j]) {
        if (out.records.size() >= count) break;
        rec.id = out.records.size();
        out.records.push_back(std::move(rec));
      }
    }
    next_base += batch;
  }
  return out;
}

}  // namespace trajadapt::trajectory
