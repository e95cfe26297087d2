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

// Per-joint computation of the next-step acceleration interval that keeps
// jerk, acceleration and velocity within their limits, plus the exact
// integration of piecewise-linear accelerations into position setpoints.
//
// Lower bounds are obtained from the upper-bound formulas by sign
// reflection (limits are symmetric: a_min = -a_max, j_min = -j_max).

#ifndef TRAJADAPT_LIMITS_HPP_
#define TRAJADAPT_LIMITS_HPP_

#include <cstddef>
#include <vector>

#include "trajadapt/common.hpp"

namespace trajadapt::limits {

struct JointLimits {
  VectorXd p_min;  // rad
  VectorXd p_max;  // rad
  VectorXd v_max;  // rad/s
  VectorXd a_max;  // rad/s^2
  VectorXd j_max;  // rad/s^3

  std::size_t size() const { return static_cast<std::size_t>(v_max.size()); }

  /// Throws ConfigError naming the first offending joint.
  void Validate() const;

  /// Same bounds for every joint.
  static JointLimits Uniform(std::size_t joints, double p_lim, double v_max,
                             double a_max, double j_max);
};

/// Setpoints (not measurements) at a decision step.
struct JointState {
  VectorXd p;
  VectorXd v;
  VectorXd a;

  static JointState AtRest(const VectorXd& p) {
    return {p, VectorXd::Zero(p.size()), VectorXd::Zero(p.size())};
  }
};

struct AccelRange {
  VectorXd lo;
  VectorXd hi;
};

struct StepParams {
  double dt = 0.05;           // decision period
  double control_dt = 0.005;  // position-controller period
  bool correction_enabled = true;

  /// Number of controller ticks per decision step; throws ConfigError when
  /// dt is not an integer multiple of control_dt.
  int Substeps() const;
  void Validate() const;
};

// ---------------------------------------------------------------------------
// Scalar bounds.

/// a0 + j_max * dt.
double MaxAccelJerk(double a0, double j_max, double dt);
/// a0 - j_max * dt.
double MinAccelJerk(double a0, double j_max, double dt);

/// Braking jerk used for the velocity continuation. It is j_max unless a
/// single decision step at full jerk would already span more than a_max, in
/// which case the continuation could not be realized within the acceleration
/// limit; then a_max / dt is used.
double BrakingJerk(double j_max, double a_max, double dt);

/// Largest a1 such that ramping linearly from a0 to a1 over dt and then
/// braking with constant jerk -j_brake until a = 0 never exceeds v_max.
double MaxAccelVelocity(double v0, double a0, double v_max, double j_brake,
                        double dt);
/// Mirror image of MaxAccelVelocity for the -v_max bound.
double MinAccelVelocity(double v0, double a0, double v_max, double j_brake,
                        double dt);

/// Shifts the velocity-derived upper bound so that the braking continuation
/// (constant -j_brake for whole decision steps, then one final segment of
/// milder jerk) ends with a = 0 exactly on a decision boundary at v = v_max.
/// The velocity gain matches the uncorrected profile, which removes the
/// limit cycle the uncorrected bound produces near v_max.
///
/// Returns `uncorrected` when disabled, when the velocity bound does not
/// apply (v0 + a0*dt/2 >= v_max) or when no feasible shift exists.
double AreaEqualizedCorrection(double v0, double a0, double uncorrected,
                               double v_max, double j_brake, double dt,
                               bool enabled = true);

/// Number of whole braking steps in the corrected continuation, or 0 when
/// no feasible shift exists. Exposed for tests.
int CorrectionSteps(double v0, double a0, double v_max, double j_brake,
                    double dt);

// ---------------------------------------------------------------------------
// Vector operations.

/// Per joint: hi = min(jerk bound, a_max, velocity bound [corrected]) and lo
/// symmetric. Throws ConsistencyError if lo > hi by more than kLimitEpsilon.
AccelRange ValidAccelRange(const JointState& state, const JointLimits& limits,
                           const StepParams& params);

/// Component-wise clamp of `raw` into `range`.
VectorXd ClipAction(const VectorXd& raw, const AccelRange& range);

struct Integrated {
  double p;
  double v;
};

/// Exact double integration of an acceleration ramping linearly from a0 to
/// a1 over dt.
Integrated IntegrateStep(double p0, double v0, double a0, double a1,
                         double dt);

/// Vector form: returns the next setpoint state with acceleration a1.
JointState IntegrateStep(const JointState& state, const VectorXd& a1,
                         double dt);

/// Position, velocity and acceleration of the cubic profile at time t in
/// [0, dt] within one decision step.
struct ProfilePoint {
  double p;
  double v;
  double a;
};
ProfilePoint EvaluateProfile(double p0, double v0, double a0, double a1,
                             double dt, double t);

/// Positions at the controller ticks k * control_dt, k = 1..Substeps().
/// The last entry coincides with IntegrateStep's p1.
std::vector<double> IntermediateSetpoints(double p0, double v0, double a0,
                                          double a1, const StepParams& params);

/// Positions for all joints at ticks 0..Substeps() (row 0 is the start).
MatrixXd IntermediateSetpoints(const JointState& state, const VectorXd& a1,
                               const StepParams& params);

}  // namespace trajadapt::limits

#endif  // TRAJADAPT_LIMITS_HPP_
