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

#include "trajadapt/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "trajadapt/io.hpp"

namespace trajadapt::commands {
namespace {

using config::PolicyKind;
using config::RunConfig;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

void WriteText(const std::string& path, const std::string& text) {
  auto out = OpenOut(path);
  out << text;
}

std::string Hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string FileHash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return Hex(config::Fnv1a64(ss.str()));
}

ordered_json Manifest(const RunConfig& config, const std::string& command) {
  ordered_json m;
  m["format"] = "trajadapt manifest v1";
  m["command"] = command;
  m["version"] = TRAJADAPT_VERSION;
  m["seed"] = config.seed;
  m["config_fnv1a64"] = config::ConfigHash(config);
  if (config.rollout.source == config::ReferenceSource::kDataset &&
      command != "generate") {
    m["dataset_fnv1a64"] = FileHash(config.dataset_file);
  }
  return m;
}

void WriteJson(const std::string& path, const ordered_json& j) {
  WriteText(path, j.dump(2) + "\n");
}

std::string EpisodeFileName(std::size_t episode) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "episode_%05zu.csv", episode);
  return buf;
}

void WriteEpisodeTable(const std::string& path,
                       const std::vector<EpisodeOutcome>& outcomes) {
  auto out = OpenOut(path);
  out << "episode,seed,reference_id,success,trajectory_fraction,error_distance_m,"
         "mean_accel,mean_jerk,executed_steps,total_steps,terminated,total_reward,"
         "ball_lost\n";
  for (const auto& o : outcomes) {
    const auto& r = o.result.report;
    out << o.episode << ',' << o.seed << ',' << o.reference_id << ','
        << (r.success ? 1 : 0) << ',' << io::FormatDouble(r.trajectory_fraction) << ','
        << io::FormatDouble(r.error_distance) << ',' << io::FormatDouble(r.mean_accel)
        << ',' << io::FormatDouble(r.mean_jerk) << ',' << r.executed_steps << ','
        << r.total_steps << ',' << (r.terminated ? 1 : 0) << ','
        << io::FormatDouble(r.total_reward) << ',' << (o.result.ball_lost ? 1 : 0)
        << '\n';
  }
}

adaptation::RolloutParams EpisodeParams(const RunConfig& config, bool record) {
  adaptation::RolloutParams p = config.rollout_params;
  p.record_log = record;
  return p;
}

// Runs one episode with a fresh environment and policy.
adaptation::RolloutResult RunOne(const RunConfig& config,
                                 const trajectory::ReferenceTrajectory& ref,
                                 policy::Policy* shared_policy, std::uint64_t seed,
                                 bool record) {
  auto env = MakeEnvironment(config);
  const auto layout = adaptation::LayoutFor(config.chain.model.dof(), env.get(),
                                            config.rollout_params.horizon);
  std::unique_ptr<policy::Policy> own;
  policy::Policy* policy = shared_policy;
  if (policy == nullptr) {
    own = MakePolicy(config, layout);
    policy = own.get();
  }
  return adaptation::Rollout(ref, *policy, config.chain.limits,
                             EpisodeParams(config, record), seed, env.get(),
                             &config.chain.model);
}

}  // namespace

int ResolveWorkers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void ParallelFor(std::size_t count, int workers,
                 const std::function<void(std::size_t)>& fn) {
  const auto threads = std::min<std::size_t>(
      count, static_cast<std::size_t>(ResolveWorkers(workers)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t EpisodeSeed(std::uint64_t seed, std::size_t episode) {
  return DeriveSeed(seed, static_cast<std::uint64_t>(episode));
}

trajectory::ReferenceTrajectory StationaryReference(const VectorXd& q,
                                                    std::size_t rows, double dt) {
  trajectory::ReferenceTrajectory ref;
  ref.dt = dt;
  ref.positions = q.transpose().replicate(static_cast<Eigen::Index>(rows), 1);
  return ref;
}

std::unique_ptr<environment::BallEnvironment> MakeEnvironment(const RunConfig& config) {
  if (!config.use_environment) return nullptr;
  return std::make_unique<environment::BallEnvironment>(
      config.plate, config.ball, config.task, config.randomize_ball);
}

MatrixXd LoadPolicyWeights(const RunConfig& config) {
  return policy::LoadWeights(config.policy.weights_file);
}

std::unique_ptr<policy::Policy> MakePolicy(const RunConfig& config,
                                           const policy::ObservationLayout& layout) {
  const std::size_t n = config.chain.model.dof();
  const auto& pc = config.policy;
  switch (pc.kind) {
    case PolicyKind::kZero:
      return std::make_unique<policy::ZeroPolicy>(n);
    case PolicyKind::kRandom:
      return std::make_unique<policy::RandomPolicy>(n);
    case PolicyKind::kGreedy:
      return std::make_unique<policy::GreedyMaxPolicy>(n);
    case PolicyKind::kTracking:
      return std::make_unique<policy::TrackingPolicy>(
          layout, config.chain.limits, config.rollout_params.step.dt, pc.tracking);
    case PolicyKind::kPdBalance:
      if (!config.use_environment) {
        throw ConfigError("pd_balance needs a ball task");
      }
      return std::make_unique<policy::PdBalancePolicy>(
          layout, config.chain.limits, config.rollout_params.step.dt,
          config.chain.model, config.plate, config.task, pc.mask, config.chain.home,
          pc.balance, pc.tracking);
    case PolicyKind::kLinear: {
      MatrixXd w = LoadPolicyWeights(config);
      if (w.rows() != static_cast<Eigen::Index>(n) ||
          w.cols() != static_cast<Eigen::Index>(layout.size() + 1)) {
        throw ConfigError("linear policy weights must be " + std::to_string(n) + " x " +
                          std::to_string(layout.size() + 1));
      }
      return std::make_unique<policy::LinearPolicy>(std::move(w));
    }
  }
  throw ConfigError("unknown policy kind");
}

std::vector<trajectory::ReferenceTrajectory> EpisodeReferences(const RunConfig& config) {
  const double dt = config.rollout_params.step.dt;
  if (config.rollout.source == config::ReferenceSource::kStationary) {
    return {StationaryReference(config.chain.home,
                                static_cast<std::size_t>(config.rollout.stationary_steps) + 1,
                                dt)};
  }
  auto all = io::LoadDataset(config.dataset_file);
  std::vector<trajectory::ReferenceTrajectory> refs;
  for (auto& r : all) {
    if (config.rollout.split && r.split != *config.rollout.split) continue;
    if (r.positions.cols() != static_cast<Eigen::Index>(config.chain.model.dof())) {
      throw ConfigError("dataset record " + std::to_string(r.id) +
                        " does not match the chain's joint count");
    }
    if (std::abs(r.dt - dt) > 1e-12) {
      throw ConfigError("dataset record " + std::to_string(r.id) +
                        " has a different decision period");
    }
    if (r.positions.rows() < 2) continue;
    refs.push_back(std::move(r));
  }
  if (refs.empty()) throw ConfigError("dataset has no usable records for this split");
  return refs;
}

std::vector<EpisodeOutcome> RunEpisodes(const RunConfig& config,
                                        std::size_t logged_episodes) {
  const auto refs = EpisodeReferences(config);
  const auto count = static_cast<std::size_t>(config.episodes);
  std::vector<EpisodeOutcome> outcomes(count);
  ParallelFor(count, config.workers, [&](std::size_t e) {
    const auto& ref = refs[e % refs.size()];
    EpisodeOutcome& o = outcomes[e];
    o.episode = e;
    o.seed = EpisodeSeed(config.seed, e);
    o.reference_id = ref.id;
    o.initial = limits::JointState::AtRest(ref.positions.row(0).transpose());
    try {
      o.result = RunOne(config, ref, nullptr, o.seed, e < logged_episodes);
    } catch (const ConfigError& err) {
      throw ConfigError("episode " + std::to_string(e) + ": " + err.what());
    } catch (const std::exception& err) {
      throw std::runtime_error("episode " + std::to_string(e) + " (seed " +
                               std::to_string(o.seed) + "): " + err.what());
    }
  });
  return outcomes;
}

MetricsSummary AggregateReports(const std::vector<environment::EpisodeReport>& reports) {
  MetricsSummary s;
  s.episodes = reports.size();
  if (reports.empty()) return s;
  double steps = 0.0;
  double reward = 0.0;
  for (const auto& r : reports) {
    s.success_rate += r.success ? 1.0 : 0.0;
    s.trajectory_fraction += r.trajectory_fraction;
    s.error_distance += r.error_distance;
    s.mean_accel += r.mean_accel;
    s.mean_jerk += r.mean_jerk;
    s.terminated += r.terminated ? 1 : 0;
    steps += static_cast<double>(r.executed_steps);
    reward += r.total_reward;
  }
  const auto n = static_cast<double>(reports.size());
  s.success_rate /= n;
  s.trajectory_fraction /= n;
  s.error_distance /= n;
  s.mean_accel /= n;
  s.mean_jerk /= n;
  s.mean_reward = steps > 0.0 ? reward / steps : 0.0;
  return s;
}

std::string MetricsJson(const MetricsSummary& s) {
  ordered_json j;
  j["episodes"] = s.episodes;
  j["success_rate"] = s.success_rate;
  j["trajectory_fraction"] = s.trajectory_fraction;
  j["error_distance_m"] = s.error_distance;
  j["mean_accel_fraction"] = s.mean_accel;
  j["mean_jerk_fraction"] = s.mean_jerk;
  j["terminated"] = s.terminated;
  j["mean_reward_per_step"] = s.mean_reward;
  return j.dump(2) + "\n";
}

std::string MetricsTable(const MetricsSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "| Success rate | Trajectory fraction | Error distance | Acceleration | Jerk   |\n"
                "|--------------|---------------------|----------------|--------------|--------|\n"
                "| %10.1f %% | %17.1f %% | %11.2f cm | %10.1f %% | %4.1f %% |\n"
                "episodes: %zu, terminated: %zu, mean reward per step: %.4f\n",
                100.0 * s.success_rate, 100.0 * s.trajectory_fraction,
                100.0 * s.error_distance, 100.0 * s.mean_accel, 100.0 * s.mean_jerk,
                s.episodes, s.terminated, s.mean_reward);
  return buf;
}

ValidationSummary RunValidation(const RunConfig& config) {
  const auto count = static_cast<std::size_t>(config.episodes);
  const std::size_t steps = static_cast<std::size_t>(config.validate.steps);
  const auto ref = StationaryReference(config.chain.home, steps + 1,
                                       config.rollout_params.step.dt);
  adaptation::RolloutParams params = config.rollout_params;
  params.terminate_on_deviation = false;
  params.record_log = false;
  params.check_substeps = true;
  const auto& vr = config.validate;

  std::vector<adaptation::SubstepPeak> peaks(count);
  ParallelFor(count, config.workers, [&](std::size_t e) {
    const std::uint64_t seed = EpisodeSeed(config.seed, e);
    limits::JointLimits l = config.chain.limits;
    Rng rng(DeriveSeed(seed, 2));
    for (Eigen::Index i = 0; i < l.v_max.size(); ++i) {
      l.v_max[i] = rng.Uniform(vr.v_max.lo, vr.v_max.hi);
      l.a_max[i] = rng.Uniform(vr.a_max.lo, vr.a_max.hi);
      l.j_max[i] = rng.Uniform(vr.j_max.lo, vr.j_max.hi);
    }
    policy::RandomPolicy random(config.chain.model.dof());
    try {
      peaks[e] = adaptation::Rollout(ref, random, l, params, seed).peak;
    } catch (const std::exception& err) {
      throw std::runtime_error("episode " + std::to_string(e) + " (seed " +
                               std::to_string(seed) + "): " + err.what());
    }
  });

  ValidationSummary s;
  s.episodes = count;
  s.steps = steps;
  for (std::size_t e = 0; e < count; ++e) {
    const auto& p = peaks[e];
    s.max_velocity = std::max(s.max_velocity, p.velocity);
    s.max_accel = std::max(s.max_accel, p.accel);
    s.max_jerk = std::max(s.max_jerk, p.jerk);
    s.violations += p.violations;
    if (p.violations > 0 && s.first_episode < 0) {
      s.first_episode = static_cast<long>(e);
      s.first_seed = EpisodeSeed(config.seed, e);
      s.first_step = p.first_violation_step;
    }
  }
  return s;
}

policy::CemResult RunTraining(const RunConfig& config) {
  const auto refs = EpisodeReferences(config);
  const auto env = MakeEnvironment(config);
  const auto layout = adaptation::LayoutFor(config.chain.model.dof(), env.get(),
                                            config.rollout_params.horizon);
  const auto episodes = static_cast<std::size_t>(config.train.episodes_per_candidate);
  const MatrixXd initial = MatrixXd::Zero(static_cast<Eigen::Index>(layout.joints),
                                          static_cast<Eigen::Index>(layout.size() + 1));
  const auto objective = [&](const MatrixXd& w) {
    std::vector<double> scores(episodes);
    ParallelFor(episodes, config.workers, [&](std::size_t k) {
      policy::LinearPolicy linear(w);
      const auto r = RunOne(config, refs[k % refs.size()], &linear,
                            EpisodeSeed(config.seed, k), false);
      scores[k] = r.report.total_reward;
    });
    double sum = 0.0;
    for (double s : scores) sum += s;
    return sum / static_cast<double>(episodes);
  };
  return policy::CemTrain(initial, objective, config.train.cem,
                          DeriveSeed(config.seed, 3));
}

int CmdGenerate(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
  EnsureDir(out_dir);
  const auto count = static_cast<std::size_t>(config.dataset_count);
  const auto dataset = trajectory::GenerateDataset(
      config.pipeline, config.chain.model, config.chain.limits, config.seed, count,
      ResolveWorkers(config.workers));
  const fs::path dir(out_dir);
  io::SaveDataset((dir / "dataset.csv").string(), dataset.records);
  {
    auto out = OpenOut((dir / "rejections.txt").string());
    for (const auto& line : dataset.rejections) out << line << '\n';
  }
  std::size_t train = 0;
  for (const auto& r : dataset.records) train += r.split == trajectory::Split::kTrain;
  const std::size_t test = dataset.records.size() - train;

  auto m = Manifest(config, "generate");
  m["requested"] = count;
  m["records"] = dataset.records.size();
  m["train"] = train;
  m["test"] = test;
  m["bases_tried"] = dataset.bases_tried;
  m["bases_failed"] = dataset.bases_failed;
  m["rejected_attempts"] = dataset.rejections.size();
  m["dataset_fnv1a64"] = FileHash((dir / "dataset.csv").string());
  WriteJson((dir / "manifest.json").string(), m);

  log << "generated " << dataset.records.size() << " of " << count << " records ("
      << train << " train, " << test << " test), " << dataset.rejections.size()
      << " rejected attempts\n";
  if (dataset.records.size() < count) {
    log << "error: yield below the requested count; first rejections:\n";
    const std::size_t shown = std::min<std::size_t>(dataset.rejections.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) log << "  " << dataset.rejections[i] << '\n';
    log << "full list in " << (dir / "rejections.txt").string() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int CmdValidateLimits(const RunConfig& config, const std::string& out_dir,
                      std::ostream& log) {
  EnsureDir(out_dir);
  const auto s = RunValidation(config);
  auto m = Manifest(config, "validate-limits");
  m["episodes"] = s.episodes;
  m["steps"] = s.steps;
  m["max_velocity_ratio"] = s.max_velocity;
  m["max_accel_ratio"] = s.max_accel;
  m["max_jerk_ratio"] = s.max_jerk;
  m["tolerance"] = kLimitEpsilon;
  m["violations"] = s.violations;
  if (s.violations > 0) {
    m["first_violation"] = {{"episode", s.first_episode},
                            {"seed", s.first_seed},
                            {"step", s.first_step}};
  }
  WriteJson((fs::path(out_dir) / "validate.json").string(), m);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%zu episodes x %zu steps: max |v|/v_max %.12f, |a|/a_max %.12f, "
                "|j|/j_max %.12f, violations %zu\n",
                s.episodes, s.steps, s.max_velocity, s.max_accel, s.max_jerk,
                s.violations);
  log << buf;
  if (s.violations > 0) {
    log << "error: first violation in episode " << s.first_episode << " (seed "
        << s.first_seed << ") at step " << s.first_step << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int CmdRollout(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
  const fs::path dir(out_dir);
  EnsureDir((dir / "logs").string());
  const auto logged = static_cast<std::size_t>(config.rollout.max_logs);
  const auto outcomes = RunEpisodes(config, logged);
  for (const auto& o : outcomes) {
    if (o.episode >= logged) break;
    auto out = OpenOut((dir / "logs" / EpisodeFileName(o.episode)).string());
    io::WriteStepLog(out, o.initial, o.result, config.chain.limits);
  }
  WriteEpisodeTable((dir / "episodes.csv").string(), outcomes);
  auto m = Manifest(config, "rollout");
  m["policy"] = config::PolicyName(config.policy.kind);
  m["episodes"] = outcomes.size();
  m["step_logs"] = std::min(logged, outcomes.size());
  WriteJson((dir / "manifest.json").string(), m);
  log << "rolled out " << outcomes.size() << " episodes with policy "
      << config::PolicyName(config.policy.kind) << ", wrote "
      << std::min(logged, outcomes.size()) << " step logs\n";
  return kExitOk;
}

int CmdEval(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
  EnsureDir(out_dir);
  const fs::path dir(out_dir);
  const auto outcomes = RunEpisodes(config, 0);
  std::vector<environment::EpisodeReport> reports;
  reports.reserve(outcomes.size());
  for (const auto& o : outcomes) reports.push_back(o.result.report);
  const auto summary = AggregateReports(reports);
  WriteEpisodeTable((dir / "episodes.csv").string(), outcomes);
  WriteText((dir / "metrics.json").string(), MetricsJson(summary));
  WriteText((dir / "metrics.txt").string(), MetricsTable(summary));
  auto m = Manifest(config, "eval");
  m["policy"] = config::PolicyName(config.policy.kind);
  m["episodes"] = outcomes.size();
  WriteJson((dir / "manifest.json").string(), m);
  log << "policy " << config::PolicyName(config.policy.kind) << '\n'
      << MetricsTable(summary);
  return kExitOk;
}

int CmdTrain(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
  EnsureDir(out_dir);
  const fs::path dir(out_dir);
  const auto result = RunTraining(config);
  policy::SaveWeights((dir / "weights.txt").string(), result.best);
  auto m = Manifest(config, "train");
  m["best_return"] = result.best_return;
  m["elite_mean"] = result.elite_mean;
  m["best_per_generation"] = result.best_per_generation;
  WriteJson((dir / "manifest.json").string(), m);
  log << "trained linear policy over " << result.elite_mean.size()
      << " generations, best mean episode return "
      << io::FormatDouble(result.best_return) << '\n';
  return kExitOk;
}

}  // namespace trajadapt::commands
