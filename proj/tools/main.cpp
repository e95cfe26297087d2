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

// trajadapt: dataset generation, limit validation, rollouts and evaluation.
//
//   trajadapt <verb> --config FILE [--seed N] [--episodes N] [--workers N]
//                    [--out DIR] [--policy KIND] [--dataset FILE] [--count N]
//
// Every flag can also be set through an environment variable with the
// TRAJADAPT_ prefix (TRAJADAPT_CONFIG, TRAJADAPT_SEED, ...). Flags win.
// Exit codes: 0 success, 1 validation failure or violation, 2 configuration
// error.

#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trajadapt/commands.hpp"
#include "trajadapt/config.hpp"

namespace {

using trajadapt::ConfigError;
using trajadapt::config::RunConfig;
namespace commands = trajadapt::commands;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> workers;
  std::string out = "out";
  std::optional<std::string> policy;
  std::optional<std::string> dataset;
  std::optional<int> count;
};

RunConfig LoadWithOverrides(const Flags& f) {
  RunConfig c = trajadapt::config::LoadRunConfig(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.episodes) c.episodes = *f.episodes;
  if (f.workers) c.workers = *f.workers;
  if (f.policy) c.policy.kind = trajadapt::config::ParsePolicyKind(*f.policy);
  if (f.dataset) {
    c.dataset_file = *f.dataset;
    c.rollout.source = trajadapt::config::ReferenceSource::kDataset;
  }
  if (f.count) c.dataset_count = *f.count;
  c.Validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jerk-limited online trajectory adaptation toolkit", "trajadapt"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(TRAJADAPT_VERSION));

  Flags flags;
  app.add_option("--config", flags.config, "Run configuration (JSON)")
      ->envname("TRAJADAPT_CONFIG")
      ->required();
  app.add_option("--seed", flags.seed, "Run seed")->envname("TRAJADAPT_SEED");
  app.add_option("--episodes", flags.episodes, "Episode count")
      ->envname("TRAJADAPT_EPISODES")
      ->check(CLI::PositiveNumber);
  app.add_option("--workers", flags.workers, "Worker threads (0 = all cores)")
      ->envname("TRAJADAPT_WORKERS")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", flags.out, "Output directory")
      ->envname("TRAJADAPT_OUT")
      ->capture_default_str();
  app.add_option("--policy", flags.policy,
                 "Policy: zero, random, greedy, tracking, pd_balance, linear")
      ->envname("TRAJADAPT_POLICY");
  app.add_option("--dataset", flags.dataset,
                 "Dataset file; selects dataset references")
      ->envname("TRAJADAPT_DATASET");
  app.add_option("--count", flags.count, "Records to generate")
      ->envname("TRAJADAPT_COUNT")
      ->check(CLI::PositiveNumber);

  using Verb = std::function<int(const RunConfig&, const std::string&, std::ostream&)>;
  Verb verb;
  const auto add = [&](const char* name, const char* help, Verb fn) {
    app.add_subcommand(name, help)->callback([&verb, fn] { verb = fn; });
  };
  add("generate", "Generate the reference dataset and its manifest",
      commands::CmdGenerate);
  add("validate-limits", "Random-policy limit-safety campaign",
      commands::CmdValidateLimits);
  add("rollout", "Run episodes and write per-step logs", commands::CmdRollout);
  add("eval", "Run episodes and aggregate the metrics table", commands::CmdEval);
  add("train", "Train a linear policy with the cross-entropy method",
      commands::CmdTrain);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? commands::kExitOk : commands::kExitConfig;
  }

  try {
    const RunConfig config = LoadWithOverrides(flags);
    return verb(config, flags.out, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return commands::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return commands::kExitFailure;
  }
}
