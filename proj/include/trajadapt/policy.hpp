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

// Policies map a normalized observation to normalized joint accelerations
// in [-1, 1]. The engine scales by a_max and clips to the valid range.

#ifndef TRAJADAPT_POLICY_HPP_
#define TRAJADAPT_POLICY_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "trajadapt/common.hpp"
#include "trajadapt/environment.hpp"
#include "trajadapt/kinematics.hpp"
#include "trajadapt/limits.hpp"

namespace trajadapt::policy {

/// Observation = [p (N_J), v (N_J), a (N_J), f (feedback), N reference rows].
struct ObservationLayout {
  std::size_t joints = 7;
  std::size_t feedback = 0;
  std::size_t horizon = 1;

  std::size_t size() const { return 3 * joints + feedback + horizon * joints; }
  Eigen::Index position() const { return 0; }
  Eigen::Index velocity() const { return static_cast<Eigen::Index>(joints); }
  Eigen::Index acceleration() const { return static_cast<Eigen::Index>(2 * joints); }
  Eigen::Index feedback_offset() const { return static_cast<Eigen::Index>(3 * joints); }
  Eigen::Index reference(std::size_t k) const {
    return static_cast<Eigen::Index>(3 * joints + feedback + k * joints);
  }
};

/// Position normalization onto [-1, 1] over [p_min, p_max] and back.
VectorXd NormalizePosition(const VectorXd& p, const limits::JointLimits& limits);
VectorXd DenormalizePosition(const VectorXd& x, const limits::JointLimits& limits);

class Policy {
 public:
  virtual ~Policy() = default;
  /// Normalized accelerations for the next decision step.
  virtual VectorXd Act(const VectorXd& observation, Rng& rng) = 0;
  /// Clears per-episode memory; called by the engine before each episode.
  virtual void Reset(std::uint64_t /*seed*/) {}
  virtual std::string name() const = 0;
};

/// Uniform in [-1, 1] per joint, drawn from the caller's generator.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::size_t joints) : joints_(joints) {}
  VectorXd Act(const VectorXd& observation, Rng& rng) override;
  std::string name() const override { return "random"; }

 private:
  std::size_t joints_;
};

/// Always +1: the largest valid acceleration after clipping.
class GreedyMaxPolicy : public Policy {
 public:
  explicit GreedyMaxPolicy(std::size_t joints) : joints_(joints) {}
  VectorXd Act(const VectorXd& observation, Rng& rng) override;
  std::string name() const override { return "greedy"; }

 private:
  std::size_t joints_;
};

/// Outputs zero acceleration.
class ZeroPolicy : public Policy {
 public:
  explicit ZeroPolicy(std::size_t joints) : joints_(joints) {}
  VectorXd Act(const VectorXd&, Rng&) override {
    return VectorXd::Zero(static_cast<Eigen::Index>(joints_));
  }
  std::string name() const override { return "zero"; }

 private:
  std::size_t joints_;
};

struct TrackingGains {
  double kp = 100.0;  // 1/s^2
  double kd = 20.0;  // 1/s
};

/// PD on the deviation from the next reference row with reference
/// acceleration feed-forward. Reference velocity and acceleration are
/// differences of consecutive rows, so the policy keeps the two previous
/// rows between calls (cleared by Reset).
class TrackingPolicy : public Policy {
 public:
  TrackingPolicy(ObservationLayout layout, limits::JointLimits limits,
                 double dt, TrackingGains gains = {});
  VectorXd Act(const VectorXd& observation, Rng& rng) override;
  void Reset(std::uint64_t seed) override;
  std::string name() const override { return "tracking"; }

  /// Physical acceleration command towards `target` (positions) moving at
  /// `target_velocity` with `target_accel`, from state (p, v, a).
  VectorXd Command(const VectorXd& p, const VectorXd& v, const VectorXd& a,
                   const VectorXd& target, const VectorXd& target_velocity,
                   const VectorXd& target_accel) const;

 protected:
  /// Denormalized next reference row with velocity and acceleration
  /// estimates; updates the stored rows.
  void ReferenceTarget(const VectorXd& observation, VectorXd* target,
                       VectorXd* velocity, VectorXd* accel);

  ObservationLayout layout_;
  limits::JointLimits limits_;
  double dt_;
  TrackingGains gains_;
  VectorXd previous_reference_;
  VectorXd earlier_reference_;
};

struct BalanceGains {
  double kp = 6.0;  // desired ball acceleration per metre of error, 1/s^2
  double kd = 4.0;  // per m/s of ball velocity, 1/s
};

/// Scripted balancer: the masked joints follow their reference shifted by
/// the tilt that produces the desired ball acceleration (PD on the ball
/// error, tilt mapping from a finite-difference Jacobian of the plate
/// gravity component); the other joints run the tracking law. With zero
/// balance gains it is exactly the tracking policy.
class PdBalancePolicy : public TrackingPolicy {
 public:
  /// Throws ConfigError if fewer than two joints are masked or if the masked
  /// joints cannot tilt the plate about two axes at `check_q`.
  PdBalancePolicy(ObservationLayout layout, limits::JointLimits limits,
                  double dt, kinematics::ChainModel model,
                  environment::PlateGeometry geometry,
                  environment::TaskSpec task, std::vector<int> mask,
                  const VectorXd& check_q, BalanceGains balance = {},
                  TrackingGains tracking = {});
  VectorXd Act(const VectorXd& observation, Rng& rng) override;
  std::string name() const override { return "pd_balance"; }

  /// d(in-plane gravity acceleration)/d(masked joints), 2 x |mask|.
  Eigen::MatrixXd TiltJacobian(const VectorXd& q) const;

 private:
  kinematics::ChainModel model_;
  environment::PlateGeometry geometry_;
  environment::TaskSpec task_;
  std::vector<int> mask_;
  BalanceGains balance_;
};

/// Minimum |det| of the (normalized) tilt Jacobian accepted as authority.
inline constexpr double kMinTiltAuthority = 1e-3;

/// action = clamp(W [obs; 1], -1, 1), W is N_J x (|obs| + 1).
class LinearPolicy : public Policy {
 public:
  explicit LinearPolicy(MatrixXd weights) : weights_(std::move(weights)) {}
  VectorXd Act(const VectorXd& observation, Rng& rng) override;
  std::string name() const override { return "linear"; }
  const MatrixXd& weights() const { return weights_; }

 private:
  MatrixXd weights_;
};

/// Plain-text matrix: a header line, "rows cols", then one row per line.
void SaveWeights(const std::string& path, const MatrixXd& weights);
MatrixXd LoadWeights(const std::string& path);

struct CemOptions {
  int generations = 20;
  int population = 32;
  double elite_fraction = 0.25;
  double initial_std = 1.0;
  double extra_std = 0.5;  // added to the elite spread, decays to 0
  double min_std = 1e-3;
};

struct CemResult {
  MatrixXd best;
  double best_return = 0.0;
  std::vector<double> elite_mean;  // per generation
  std::vector<double> best_per_generation;
};

/// Elitist cross-entropy method over the entries of a rows x cols weight
/// matrix starting from `initial`. Elites from the previous generation stay
/// in the candidate pool, so the elite mean return never decreases. An
/// elite fraction of 1 leaves the sampling distribution unchanged.
CemResult CemTrain(const MatrixXd& initial,
                   const std::function<double(const MatrixXd&)>& objective,
                   const CemOptions& options, std::uint64_t seed);

}  // namespace trajadapt::policy

#endif  // TRAJADAPT_POLICY_HPP_
