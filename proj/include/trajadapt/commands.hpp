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

// Command implementations behind the trajadapt tool. Each verb writes its
// files into an output directory and returns a process exit code.

#ifndef TRAJADAPT_COMMANDS_HPP_
#define TRAJADAPT_COMMANDS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "trajadapt/adaptation.hpp"
#include "trajadapt/config.hpp"
#include "trajadapt/environment.hpp"
#include "trajadapt/policy.hpp"
#include "trajadapt/trajectory.hpp"

namespace trajadapt::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation failure or violation
inline constexpr int kExitConfig = 2;   // configuration error

/// Worker count after resolving 0 to the hardware concurrency.
int ResolveWorkers(int workers);

/// Calls fn(i) for every i in [0, count) on up to `workers` threads. If any
/// call throws, the exception of the lowest index is rethrown after all
/// threads finish.
void ParallelFor(std::size_t count, int workers,
                 const std::function<void(std::size_t)>& fn);

/// Seed of episode `episode` under a run seed.
std::uint64_t EpisodeSeed(std::uint64_t seed, std::size_t episode);

/// Stationary reference holding `q` for `rows` rows.
trajectory::ReferenceTrajectory StationaryReference(const VectorXd& q,
                                                    std::size_t rows, double dt);

/// nullptr when the task kind is none.
std::unique_ptr<environment::BallEnvironment> MakeEnvironment(
    const config::RunConfig& config);

std::unique_ptr<policy::Policy> MakePolicy(const config::RunConfig& config,
                                           const policy::ObservationLayout& layout);

/// Linear-policy weights loaded from the configured file.
MatrixXd LoadPolicyWeights(const config::RunConfig& config);

/// References the rollout and eval verbs cycle through; episode e uses
/// entry e mod size.
std::vector<trajectory::ReferenceTrajectory> EpisodeReferences(
    const config::RunConfig& config);

struct EpisodeOutcome {
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  std::uint64_t reference_id = 0;
  limits::JointState initial;
  adaptation::RolloutResult result;
};

/// Runs config.episodes episodes in parallel, in episode order. Step logs
/// are kept for the first `logged_episodes` episodes. Engine errors are
/// rethrown with the episode id.
std::vector<EpisodeOutcome> RunEpisodes(const config::RunConfig& config,
                                        std::size_t logged_episodes);

/// The five table columns plus bookkeeping.
struct MetricsSummary {
  std::size_t episodes = 0;
  double success_rate = 0.0;         // fraction of successful episodes
  double trajectory_fraction = 0.0;  // mean of per-episode fractions
  double error_distance = 0.0;       // mean of per-episode means, m
  double mean_accel = 0.0;           // fraction of a_max
  double mean_jerk = 0.0;            // fraction of j_max
  std::size_t terminated = 0;
  double mean_reward = 0.0;          // per executed step
};

MetricsSummary AggregateReports(
    const std::vector<environment::EpisodeReport>& reports);
std::string MetricsJson(const MetricsSummary& summary);
std::string MetricsTable(const MetricsSummary& summary);

struct ValidationSummary {
  std::size_t episodes = 0;
  std::size_t steps = 0;
  double max_velocity = 0.0;  // normalized peaks over all substeps
  double max_accel = 0.0;
  double max_jerk = 0.0;
  std::size_t violations = 0;
  long first_episode = -1;  // first episode with a violation
  std::uint64_t first_seed = 0;
  long first_step = -1;
};

/// Random-policy episodes on a stationary reference at the chain's home pose
/// with per-joint v, a and j bounds drawn from the validate ranges. Every
/// controller tick is checked.
ValidationSummary RunValidation(const config::RunConfig& config);

/// Linear policy trained by CEM on the mean episode return.
policy::CemResult RunTraining(const config::RunConfig& config);

// Verbs. Configuration problems throw ConfigError.
int CmdGenerate(const config::RunConfig& config, const std::string& out_dir,
                std::ostream& log);
int CmdValidateLimits(const config::RunConfig& config, const std::string& out_dir,
                      std::ostream& log);
int CmdRollout(const config::RunConfig& config, const std::string& out_dir,
               std::ostream& log);
int CmdEval(const config::RunConfig& config, const std::string& out_dir,
            std::ostream& log);
int CmdTrain(const config::RunConfig& config, const std::string& out_dir,
             std::ostream& log);

}  // namespace trajadapt::commands

#endif  // TRAJADAPT_COMMANDS_HPP_
