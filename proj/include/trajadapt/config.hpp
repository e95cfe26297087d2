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

// Run configuration (JSON with unit-suffixed keys) and the chain
// description file. See config/default.json and config/iiwa7.chain.

#ifndef TRAJADAPT_CONFIG_HPP_
#define TRAJADAPT_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajadapt/adaptation.hpp"
#include "trajadapt/environment.hpp"
#include "trajadapt/kinematics.hpp"
#include "trajadapt/limits.hpp"
#include "trajadapt/policy.hpp"
#include "trajadapt/trajectory.hpp"

namespace trajadapt::config {

/// Chain geometry plus the joint limits listed next to it.
struct Chain {
  kinematics::ChainModel model;
  limits::JointLimits limits;
  VectorXd home;  // rad
};

/// Chain description file. Line-oriented, '#' starts a comment:
///   base  <x_m> <y_m> <z_m> <roll_deg> <pitch_deg> <yaw_deg>
///   plate <x_m> <y_m> <z_m> <roll_deg> <pitch_deg> <yaw_deg>
///   joint <d_m> <a_m> <alpha_deg> <theta_offset_deg> <p_min_deg> <p_max_deg>
///         <v_max_deg_per_s> <a_max_rad_per_s2> <j_max_rad_per_s3> <home_deg>
/// One joint line per joint, base to flange (standard DH about z).
Chain ParseChain(const std::string& text);
Chain LoadChain(const std::string& path);

enum class PolicyKind { kZero, kRandom, kGreedy, kTracking, kPdBalance, kLinear };
const char* PolicyName(PolicyKind kind);
PolicyKind ParsePolicyKind(const std::string& name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kPdBalance;
  policy::TrackingGains tracking;
  policy::BalanceGains balance;
  std::vector<int> mask{5, 6};
  std::string weights_file;  // linear policy
};

/// Which references the rollout and eval verbs run on.
enum class ReferenceSource { kStationary, kDataset };

struct RolloutConfig {
  ReferenceSource source = ReferenceSource::kStationary;
  int stationary_steps = 200;
  std::optional<trajectory::Split> split;  // dataset filter; none = all
  int max_logs = 20;  // step-log files written by the rollout verb
};

struct ValidateConfig {
  int steps = 200;
  environment::Range v_max{0.5, 2.5};   // rad/s
  environment::Range a_max{1.0, 15.0};  // rad/s^2
  environment::Range j_max{10.0, 500.0};  // rad/s^3
};

struct TrainConfig {
  policy::CemOptions cem;
  int episodes_per_candidate = 4;
};

struct RunConfig {
  std::string source_path;  // config file, for relative paths
  std::string chain_file;
  std::string dataset_file;
  Chain chain;

  std::uint64_t seed = 1;
  int episodes = 50;
  int workers = 0;  // 0 = hardware concurrency

  adaptation::RolloutParams rollout_params;
  trajectory::PipelineConfig pipeline;
  int dataset_count = 100;

  bool use_environment = true;
  environment::TaskSpec task;
  environment::PlateGeometry plate;
  environment::BallParams ball;
  bool randomize_ball = true;

  PolicyConfig policy;
  RolloutConfig rollout;
  ValidateConfig validate;
  TrainConfig train;

  /// FNV-1a of the chain file contents.
  std::uint64_t chain_hash = 0;

  void Validate() const;
};

/// Parses JSON text; missing keys keep their defaults, unknown keys are an
/// error. Relative paths resolve against `base_dir`.
RunConfig ParseRunConfig(const std::string& json_text,
                         const std::string& base_dir = ".");
RunConfig LoadRunConfig(const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t Fnv1a64(const std::string& data);

/// Canonical JSON of the effective configuration. File paths are replaced by
/// content hashes and the worker count is left out, so equal text means an
/// equal run.
std::string CanonicalJson(const RunConfig& config);

/// Fnv1a64 of CanonicalJson as 16 hex digits.
std::string ConfigHash(const RunConfig& config);

}  // namespace trajadapt::config

#endif  // TRAJADAPT_CONFIG_HPP_
