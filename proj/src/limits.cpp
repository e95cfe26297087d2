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
#include <string>

namespace trajadapt::limits {

void JointLimits::Validate() const {
  const auto n = v_max.size();
  if (n == 0) throw ConfigError("joint limits: no joints");
  if (p_min.size() != n || p_max.size() != n || a_max.size() != n ||
      j_max.size() != n) {
    throw ConfigError("joint limits: inconsistent vector lengths");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string joint = "joint " + std::to_string(i);
    if (!(p_min[i] < p_max[i])) {
      throw ConfigError(joint + ": p_min must be below p_max");
    }
    if (!(v_max[i] > 0.0) || !std::isfinite(v_max[i])) {
      throw ConfigError(joint + ": v_max must be positive");
    }
    if (!(a_max[i] > 0.0) || !std::isfinite(a_max[i])) {
      throw ConfigError(joint + ": a_max must be positive");
    }
    if (!(j_max[i] > 0.0) || !std::isfinite(j_max[i])) {
      throw ConfigError(joint + ": j_max must be positive");
    }
  }
}

JointLimits JointLimits::Uniform(std::size_t joints, double p_lim,
                                 double v_max, double a_max, double j_max) {
  const auto n = static_cast<Eigen::Index>(joints);
  return {VectorXd::Constant(n, -p_lim), VectorXd::Constant(n, p_lim),
          VectorXd::Constant(n, v_max), VectorXd::Constant(n, a_max),
          VectorXd::Constant(n, j_max)};
}

int StepParams::Substeps() const {
  Validate();
  return static_cast<int>(std::lround(dt / control_dt));
}

void StepParams::Validate() const {
  if (!(dt > 0.0)) throw ConfigError("step params: dt must be positive");
  if (!(control_dt > 0.0)) {
    throw ConfigError("step params: control_dt must be positive");
  }
  const double ratio = dt / control_dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw ConfigError("step params: dt must be an integer multiple of " +
                      std::string("control_dt"));
  }
}

double MaxAccelJerk(double a0, double j_max, double dt) {
  return a0 + j_max * dt;
}

double MinAccelJerk(double a0, double j_max, double dt) {
  return a0 - j_max * dt;
}

double BrakingJerk(double j_max, double a_max, double dt) {
  return std::min(j_max, a_max / dt);
}

double MaxAccelVelocity(double v0, double a0, double v_max, double j_brake,
                        double dt) {
  const double deficit = v_max - v0;
  const bool ends_accelerating = v0 + 0.5 * a0 * dt < v_max;
  if (ends_accelerating || (a0 > 0.0 && deficit <= 0.0)) {
    // Peak reached after the step while braking at -j_brake. Written as
    // -x / (1 + sqrt(1 + x)) instead of 1 - sqrt(1 + x) to avoid
    // cancellation when the argument is small.
    const double numer = 4.0 * deficit - 2.0 * a0 * dt;
    const double x = 2.0 * numer / (j_brake * dt * dt);
    return numer / (dt * (1.0 + std::sqrt(std::max(0.0, 1.0 + x))));
  }
  // Peak reached inside the step where the ramp crosses zero.
  if (a0 <= 0.0) return 0.0;
  return a0 * (1.0 - 0.5 * a0 * dt / deficit);
}

double MinAccelVelocity(double v0, double a0, double v_max, double j_brake,
                        double dt) {
  return -MaxAccelVelocity(-v0, -a0, v_max, j_brake, dt);
}

int CorrectionSteps(double v0, double a0, double v_max, double j_brake,
                    double dt) {
  // Velocity gain still available once a0 has been ramped out, expressed
  // as an acceleration-sum over decision steps.
  const double gain = (v_max - v0 - 0.5 * a0 * dt) / dt;
  if (!(gain > 0.0)) return 0;
  const double q = 2.0 * gain / (j_brake * dt);
  // Smallest n with n (n + 1) >= q.
  auto n = static_cast<long>(std::ceil(0.5 * (std::sqrt(1.0 + 4.0 * q) - 1.0)));
  n = std::max(n, 1L);
  while (n > 1 && static_cast<double>(n - 1) * n >= q) --n;
  while (static_cast<double>(n) * (n + 1) < q) ++n;
  if (n > 1'000'000L) return 0;
  return static_cast<int>(n);
}

double AreaEqualizedCorrection(double v0, double a0, double uncorrected,
                               double v_max, double j_brake, double dt,
                               bool enabled) {
  if (!enabled) return uncorrected;
  const int n = CorrectionSteps(v0, a0, v_max, j_brake, dt);
  if (n == 0) return uncorrected;
  const double gain = (v_max - v0 - 0.5 * a0 * dt) / dt;
  const double shifted = gain / n + 0.5 * j_brake * dt * (n - 1);
  const double last = shifted - j_brake * dt * (n - 1);
  if (last < -kLimitEpsilon || last > j_brake * dt + kLimitEpsilon) {
    return uncorrected;
  }
  if (shifted > uncorrected + kLimitEpsilon) return uncorrected;
  return std::min(shifted, uncorrected);
}

AccelRange ValidAccelRange(const JointState& state, const JointLimits& limits,
                           const StepParams& params) {
  const auto n = static_cast<Eigen::Index>(limits.size());
  if (state.p.size() != n || state.v.size() != n || state.a.size() != n) {
    throw ConfigError("valid_accel_range: state/limits length mismatch");
  }
  const double dt = params.dt;
  AccelRange range{VectorXd(n), VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v0 = state.v[i];
    const double a0 = state.a[i];
    const double v_max = limits.v_max[i];
    const double a_max = limits.a_max[i];
    const double j_max = limits.j_max[i];
    const double j_brake = BrakingJerk(j_max, a_max, dt);

    const double hi_jerk = MaxAccelJerk(a0, j_max, dt);
    const double lo_jerk = MinAccelJerk(a0, j_max, dt);
    const double hi_vel = MaxAccelVelocity(v0, a0, v_max, j_brake, dt);
    const double lo_vel = MinAccelVelocity(v0, a0, v_max, j_brake, dt);

    double hi = std::min({hi_jerk, a_max, hi_vel});
    double lo = std::max({lo_jerk, -a_max, lo_vel});

    if (params.correction_enabled) {
      if (hi_vel < std::min(hi_jerk, a_max)) {
        // A target below the jerk-reachable floor is projected onto it.
        const double c = AreaEqualizedCorrection(v0, a0, hi_vel, v_max,
                                                 j_brake, dt);
        hi = std::min(hi, std::max(c, lo));
      }
      if (lo_vel > std::max(lo_jerk, -a_max)) {
        const double c = -AreaEqualizedCorrection(-v0, -a0, -lo_vel, v_max,
                                                  j_brake, dt);
        lo = std::max(lo, std::min(c, hi));
      }
    }

    if (lo > hi) {
      // Exactly on the braking boundary the velocity bounds are evaluated
      // with a near-zero denominator and can miss the jerk bound by a few
      // ulps of the result. Inside that tolerance the hard jerk and
      // acceleration bounds win; the velocity error is second order.
      const double tolerance = 1e-6 * std::max(1.0, a_max);
      if (lo - hi > tolerance) {
        throw ConsistencyError(
            "valid_accel_range: empty acceleration interval for joint " +
            std::to_string(i) + " (lo=" + std::to_string(lo) +
            ", hi=" + std::to_string(hi) + ")");
      }
      const double hard_lo = std::max(lo_jerk, -a_max);
      const double hard_hi = std::min(hi_jerk, a_max);
      lo = hi = std::clamp(0.5 * (lo + hi), hard_lo, std::max(hard_lo, hard_hi));
    }
    range.lo[i] = lo;
    range.hi[i] = hi;
  }
  return range;
}

VectorXd ClipAction(const VectorXd& raw, const AccelRange& range) {
  if (raw.size() != range.lo.size()) {
    throw ConfigError("clip_action: length mismatch");
  }
  return raw.cwiseMax(range.lo).cwiseMin(range.hi);
}

Integrated IntegrateStep(double p0, double v0, double a0, double a1,
                         double dt) {
  return {p0 + v0 * dt + (2.0 * a0 + a1) / 6.0 * dt * dt,
          v0 + 0.5 * (a0 + a1) * dt};
}

JointState IntegrateStep(const JointState& state, const VectorXd& a1,
                         double dt) {
  JointState next{state.p + state.v * dt + (2.0 * state.a + a1) * (dt * dt / 6.0),
                  state.v + 0.5 * (state.a + a1) * dt, a1};
  return next;
}

ProfilePoint EvaluateProfile(double p0, double v0, double a0, double a1,
                             double dt, double t) {
  const double slope = (a1 - a0) / dt;
  return {p0 + v0 * t + 0.5 * a0 * t * t + slope * t * t * t / 6.0,
          v0 + a0 * t + 0.5 * slope * t * t, a0 + slope * t};
}

std::vector<double> IntermediateSetpoints(double p0, double v0, double a0,
                                          double a1,
                                          const StepParams& params) {
  const int substeps = params.Substeps();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(substeps));
  for (int k = 1; k < substeps; ++k) {
    out.push_back(
        EvaluateProfile(p0, v0, a0, a1, params.dt, k * params.control_dt).p);
  }
  // Last tick uses the step formula so it matches IntegrateStep bit-for-bit.
  out.push_back(IntegrateStep(p0, v0, a0, a1, params.dt).p);
  return out;
}

MatrixXd IntermediateSetpoints(const JointState& state, const VectorXd& a1,
                               const StepParams& params) {
  const int substeps = params.Substeps();
  const auto n = state.p.size();
  MatrixXd out(substeps + 1, n);
  out.row(0) = state.p.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto series = IntermediateSetpoints(state.p[i], state.v[i],
                                              state.a[i], a1[i], params);
    for (int k = 0; k < substeps; ++k) out(k + 1, i) = series[k];
  }
  return out;
}

}  // namespace trajadapt::limits
