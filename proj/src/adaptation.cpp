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

#include "trajadapt/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace trajadapt::adaptation {
namespace {

using limits::JointLimits;
using limits::JointState;

bool Exceeds(double value, double limit) {
  return std::abs(value) > limit * (1.0 + kLimitEpsilon) + kLimitEpsilon;
}

}  // namespace

void RewardWeights::Validate() const {
  if (!(accel_threshold >= 0.0 && accel_threshold < 1.0)) {
    throw ConfigError("reward: acceleration threshold must be in [0, 1)");
  }
  if (!(jerk_saturation > 0.0)) {
    throw ConfigError("reward: jerk saturation factor must be positive");
  }
  if (!(deviation_low >= 0.0 && deviation_high > deviation_low)) {
    throw ConfigError("reward: need 0 <= deviation_low < deviation_high");
  }
  if (!(termination >= deviation_high)) {
    throw ConfigError("reward: termination threshold below deviation_high");
  }
}

void RolloutParams::Validate() const {
  step.Validate();
  weights.Validate();
  if (horizon < 1) throw ConfigError("rollout: horizon must be >= 1");
}

VectorXd BuildObservation(const JointState& state, const JointLimits& limits,
                          const VectorXd& feedback, const MatrixXd& reference,
                          std::size_t t, std::size_t horizon) {
  const auto n = static_cast<Eigen::Index>(limits.size());
  if (state.p.size() != n || reference.cols() != n || reference.rows() == 0) {
    throw ConfigError("observation: state/reference/limits size mismatch");
  }
  const ObservationLayout layout{limits.size(),
                                 static_cast<std::size_t>(feedback.size()),
                                 horizon};
  VectorXd obs(static_cast<Eigen::Index>(layout.size()));
  obs.segment(layout.position(), n) = policy::NormalizePosition(state.p, limits);
  obs.segment(layout.velocity(), n) = state.v.cwiseQuotient(limits.v_max);
  obs.segment(layout.acceleration(), n) = state.a.cwiseQuotient(limits.a_max);
  obs.segment(layout.feedback_offset(), feedback.size()) = feedback;
  const auto last = static_cast<std::size_t>(reference.rows() - 1);
  for (std::size_t k = 0; k < horizon; ++k) {
    const auto row = static_cast<Eigen::Index>(std::min(t + 1 + k, last));
    obs.segment(layout.reference(k), n) =
        policy::NormalizePosition(reference.row(row).transpose(), limits);
  }
  return obs.cwiseMax(-1.0).cwiseMin(1.0);
}

double AccelPenalty(double a_abs, double threshold) {
  if (a_abs < threshold) return 0.0;
  const double x = 1.0 - (1.0 - std::min(a_abs, 1.0)) / (1.0 - threshold);
  return x * x;
}

double AccelPenalty(const VectorXd& a, const JointLimits& limits,
                    double threshold) {
  return AccelPenalty(a.cwiseAbs().cwiseQuotient(limits.a_max).maxCoeff(),
                      threshold);
}

double JerkPenalty(const VectorXd& jerk, const VectorXd& j_max, double c) {
  const double j_p = jerk.squaredNorm();
  const double j_sat = j_max.squaredNorm() / c;
  if (j_p >= j_sat) return 1.0;
  const double x = j_p / j_sat;
  return x * x;
}

double DeviationPenalty(double deviation, double low, double high) {
  if (deviation < low) return 0.0;
  if (deviation >= high) return 1.0;
  const double x = (deviation - low) / (high - low);
  return x * x;
}

double DeviationPenalty(const VectorXd& p, const VectorXd& p_ref, double low,
                        double high) {
  return DeviationPenalty((p - p_ref).cwiseAbs().maxCoeff(), low, high);
}

RewardTerms ComposeReward(double task, double accel, double jerk,
                          double deviation) {
  RewardTerms r;
  r.task = task;
  r.accel = accel;
  r.jerk = jerk;
  r.smooth = 0.5 * (accel + jerk);
  r.deviation = deviation;
  r.total = task * (1.0 - r.smooth) * (1.0 - deviation);
  return r;
}

bool ShouldTerminate(const VectorXd& p, const VectorXd& p_ref,
                     double threshold) {
  return (p - p_ref).cwiseAbs().maxCoeff() > threshold;
}

ObservationLayout LayoutFor(std::size_t joints,
                            const environment::BallEnvironment* env,
                            std::size_t horizon) {
  return ObservationLayout{joints, env ? env->spec().FeedbackSize() : 0,
                           horizon};
}

RolloutResult Rollout(const trajectory::ReferenceTrajectory& reference,
                      policy::Policy& policy, const JointLimits& limits,
                      const RolloutParams& params, std::uint64_t seed,
                      environment::BallEnvironment* env,
                      const kinematics::ChainModel* model) {
  params.Validate();
  limits.Validate();
  const auto n = static_cast<Eigen::Index>(limits.size());
  const MatrixXd& ref = reference.positions;
  if (ref.rows() < 2) throw ConfigError("rollout: reference needs at least two rows");
  if (ref.cols() != n) {
    throw ConfigError("rollout: reference does not match the joint count");
  }
  if ((env == nullptr) != (model == nullptr)) {
    throw ConfigError("rollout: environment and chain model go together");
  }
  if (model != nullptr && model->dof() != limits.size()) {
    throw ConfigError("rollout: chain model does not match the joint count");
  }

  const double dt = params.step.dt;
  const double h = params.step.control_dt;
  const int substeps = params.step.Substeps();
  const auto total = static_cast<std::size_t>(ref.rows() - 1);

  policy.Reset(seed);
  Rng rng(seed);
  if (env) env->Reset(DeriveSeed(seed, 1));

  RolloutResult result;
  environment::EpisodeAccumulator metrics(total);
  JointState state = JointState::AtRest(ref.row(0).transpose());
  bool terminated = false;
  std::vector<kinematics::PlatePose> ticks(static_cast<std::size_t>(substeps));

  for (std::size_t t = 0; t < total; ++t) {
    const VectorXd feedback = env ? env->Feedback() : VectorXd();
    const VectorXd obs = BuildObservation(state, limits, feedback, ref, t,
                                          params.horizon);
    const VectorXd action = policy.Act(obs, rng);
    if (action.size() != n) {
      throw ConfigError("rollout: policy returned the wrong action length");
    }
    limits::AccelRange range;
    try {
      range = limits::ValidAccelRange(state, limits, params.step);
    } catch (const ConsistencyError& e) {
      throw ConsistencyError("rollout step " + std::to_string(t) + ": " + e.what());
    }
    const VectorXd a1 =
        limits::ClipAction(action.cwiseProduct(limits.a_max), range);
    const JointState next = limits::IntegrateStep(state, a1, dt);
    const VectorXd jerk = (a1 - state.a) / dt;
    const VectorXd p_ref = ref.row(static_cast<Eigen::Index>(t + 1)).transpose();

    StepRecord record;
    if (params.record_log) {
      record.step = t;
      record.time = dt * static_cast<double>(t + 1);
      record.observation = obs;
      record.action = action;
      record.accel = a1;
      record.state = next;
      record.jerk = jerk;
      record.reference = p_ref;
      record.feedback = feedback;
    }

    if (params.terminate_on_deviation &&
        ShouldTerminate(next.p, p_ref, params.weights.termination)) {
      // The refused step is logged but not executed.
      terminated = true;
      if (params.record_log) {
        record.state = state;
        record.terminated = true;
        if (env) record.ball = env->state();
        result.log.push_back(std::move(record));
      }
      break;
    }

    if (params.check_substeps) {
      auto& peak = result.peak;
      const std::size_t before = peak.violations;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double j_ratio = std::abs(jerk[i]) / limits.j_max[i];
        peak.jerk = std::max(peak.jerk, j_ratio);
        if (Exceeds(jerk[i], limits.j_max[i])) ++peak.violations;
        for (int k = 1; k <= substeps; ++k) {
          const auto pt = limits::EvaluateProfile(state.p[i], state.v[i],
                                                  state.a[i], a1[i], dt, k * h);
          peak.velocity = std::max(peak.velocity, std::abs(pt.v) / limits.v_max[i]);
          peak.accel = std::max(peak.accel, std::abs(pt.a) / limits.a_max[i]);
          if (Exceeds(pt.v, limits.v_max[i]) || Exceeds(pt.a, limits.a_max[i])) {
            ++peak.violations;
          }
        }
      }
      if (peak.violations > before && peak.first_violation_step < 0) {
        peak.first_violation_step = static_cast<long>(t);
      }
    }

    if (env) {
      const MatrixXd window = limits::IntermediateSetpoints(state, a1, params.step);
      const auto poses = kinematics::PlateMotion(*model, window, h);
      std::copy(poses.begin() + 1, poses.end(), ticks.begin());
      env->Step(ticks, h);
    }

    const double task = env ? env->Reward() : 1.0;
    const auto& w = params.weights;
    const RewardTerms reward = ComposeReward(
        task, AccelPenalty(a1, limits, w.accel_threshold),
        JerkPenalty(jerk, limits.j_max, w.jerk_saturation),
        DeviationPenalty(next.p, p_ref, w.deviation_low, w.deviation_high));

    environment::MetricSample sample;
    sample.task_ok = env ? env->TaskOk() : true;
    sample.error_distance =
        env && env->spec().kind == environment::TaskKind::kInPlace
            ? env->ErrorDistance()
            : 0.0;
    sample.mean_accel = a1.cwiseAbs().cwiseQuotient(limits.a_max).mean();
    sample.mean_jerk = jerk.cwiseAbs().cwiseQuotient(limits.j_max).mean();
    metrics.Add(sample, reward.total);

    if (params.record_log) {
      record.reward = reward;
      if (env) record.ball = env->state();
      result.log.push_back(std::move(record));
    }
    state = next;

    if (env && !env->state().on_plate) {
      result.ball_lost = true;
      if (params.stop_when_ball_lost) break;
    }
  }
  result.report = metrics.Report(terminated);
  return result;
}

}  // namespace trajadapt::adaptation
