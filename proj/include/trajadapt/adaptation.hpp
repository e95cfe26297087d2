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

// Trajectory adaptation: observations, penalties, reward composition and
// the rollout engine that executes a policy along a reference trajectory.

#ifndef TRAJADAPT_ADAPTATION_HPP_
#define TRAJADAPT_ADAPTATION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "trajadapt/common.hpp"
#include "trajadapt/environment.hpp"
#include "trajadapt/kinematics.hpp"
#include "trajadapt/limits.hpp"
#include "trajadapt/policy.hpp"
#include "trajadapt/trajectory.hpp"

namespace trajadapt::adaptation {

using policy::ObservationLayout;

struct RewardWeights {
  double accel_threshold = 0.8;                  // a_th, fraction of a_max
  double jerk_saturation = 4.0;                  // c
  double deviation_low = DegToRad(2.0);          // Δp_l, rad
  double deviation_high = DegToRad(10.0);        // Δp_h, rad
  double termination = DegToRad(10.0);           // rad

  void Validate() const;
};

/// Normalized observation, every entry clamped to [-1, 1]. Reference rows
/// t+1..t+horizon are used; past the end the last row is repeated.
VectorXd BuildObservation(const limits::JointState& state,
                          const limits::JointLimits& limits,
                          const VectorXd& feedback,
                          const MatrixXd& reference, std::size_t t,
                          std::size_t horizon);

/// P_A from the largest |a| / a_max over joints.
double AccelPenalty(double a_abs, double threshold);
double AccelPenalty(const VectorXd& a, const limits::JointLimits& limits,
                    double threshold);

/// P_J from the jerk vector and the per-joint jerk limits.
double JerkPenalty(const VectorXd& jerk, const VectorXd& j_max, double c);

/// P_D from the largest absolute joint deviation (rad).
double DeviationPenalty(double deviation, double low, double high);
double DeviationPenalty(const VectorXd& p, const VectorXd& p_ref, double low,
                        double high);

struct RewardTerms {
  double task = 0.0;       // R_T
  double accel = 0.0;      // P_A
  double jerk = 0.0;       // P_J
  double smooth = 0.0;     // P_S = (P_A + P_J) / 2
  double deviation = 0.0;  // P_D
  double total = 0.0;      // R = R_T (1 - P_S)(1 - P_D)
};

RewardTerms ComposeReward(double task, double accel, double jerk,
                          double deviation);

/// True when any joint deviates from the reference by more than the
/// threshold (strict).
bool ShouldTerminate(const VectorXd& p, const VectorXd& p_ref,
                     double threshold);

// ---------------------------------------------------------------------------
// Rollout.

struct RolloutParams {
  limits::StepParams step;
  RewardWeights weights;
  std::size_t horizon = 1;
  bool terminate_on_deviation = true;
  /// Stop the episode as soon as the ball leaves the plate.
  bool stop_when_ball_lost = true;
  /// Keep per-step records (disable for large campaigns).
  bool record_log = true;
  /// Evaluate v, a and j at every controller tick against the limits.
  bool check_substeps = false;

  void Validate() const;
};

/// One decision step of an episode.
struct StepRecord {
  std::size_t step = 0;
  double time = 0.0;           // end of the step, s
  VectorXd observation;        // input to the policy
  VectorXd action;             // policy output (normalized)
  VectorXd accel;              // clipped physical acceleration a_{t+1}
  limits::JointState state;    // after the step
  VectorXd jerk;               // (a_{t+1} - a_t) / dt
  VectorXd reference;          // reference row t+1
  RewardTerms reward;
  environment::BallState ball;
  VectorXd feedback;           // f_t seen by the policy
  bool terminated = false;     // the step was refused by the deviation check
};

/// Largest |value| / limit seen at controller ticks.
struct SubstepPeak {
  double velocity = 0.0;
  double accel = 0.0;
  double jerk = 0.0;
  /// Count of ticks where some ratio exceeded 1 + kLimitEpsilon.
  std::size_t violations = 0;
  /// Decision step of the first violation, -1 if none.
  long first_violation_step = -1;
};

struct RolloutResult {
  environment::EpisodeReport report;
  std::vector<StepRecord> log;
  SubstepPeak peak;
  bool ball_lost = false;
};

/// Runs one episode: the arm starts at rest on the first reference row and
/// takes rows-1 decision steps. `env` and `model` are optional together;
/// without them R_T = 1 and the task criterion always holds. The policy is
/// reset with `seed`, the environment with a seed derived from it.
RolloutResult Rollout(const trajectory::ReferenceTrajectory& reference,
                      policy::Policy& policy,
                      const limits::JointLimits& limits,
                      const RolloutParams& params, std::uint64_t seed,
                      environment::BallEnvironment* env = nullptr,
                      const kinematics::ChainModel* model = nullptr);

/// Layout matching a rollout with these settings.
ObservationLayout LayoutFor(std::size_t joints,
                            const environment::BallEnvironment* env,
                            std::size_t horizon);

}  // namespace trajadapt::adaptation

#endif  // TRAJADAPT_ADAPTATION_HPP_
