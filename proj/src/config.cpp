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

#include "trajadapt/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace trajadapt::config {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

kinematics::Isometry3d PoseFromRpy(const std::vector<double>& v) {
  using Eigen::AngleAxisd;
  kinematics::Isometry3d t = kinematics::Isometry3d::Identity();
  t.translation() << v[0], v[1], v[2];
  t.linear() = (AngleAxisd(DegToRad(v[5]), kinematics::Vector3d::UnitZ()) *
                AngleAxisd(DegToRad(v[4]), kinematics::Vector3d::UnitY()) *
                AngleAxisd(DegToRad(v[3]), kinematics::Vector3d::UnitX()))
                   .toRotationMatrix();
  return t;
}

// Object view that records which keys were read, so unknown keys (usually
// typos or missing unit suffixes) can be rejected.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool Has(const std::string& key) {
    used_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  template <typename T>
  void Read(const std::string& key, T* out) {
    if (!Has(key)) return;
    try {
      *out = node_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void ReadRange(const std::string& key, environment::Range* out) {
    std::vector<double> v;
    Read(key, &v);
    if (!Has(key)) return;
    if (v.size() != 2) throw ConfigError(path_ + "." + key + ": expected [lo, hi]");
    *out = {v[0], v[1]};
  }

  template <int N>
  void ReadFixed(const std::string& key, Eigen::Matrix<double, N, 1>* out) {
    std::vector<double> v;
    Read(key, &v);
    if (!Has(key)) return;
    if (v.size() != static_cast<std::size_t>(N)) {
      throw ConfigError(path_ + "." + key + ": expected " + std::to_string(N) +
                        " values");
    }
    for (int i = 0; i < N; ++i) (*out)[i] = v[static_cast<std::size_t>(i)];
  }

  Section Child(const std::string& key) {
    used_.insert(key);
    static const json kEmpty = json::object();
    return Section(node_.contains(key) ? node_.at(key) : kEmpty, path_ + "." + key);
  }

  const json& Raw(const std::string& key) {
    used_.insert(key);
    return node_.at(key);
  }

  void CheckUnknown() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!used_.count(it.key())) {
        throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

std::string ResolvePath(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

json Vec(const Eigen::Vector2d& v) { return std::vector<double>{v.x(), v.y()}; }
json Vec(const kinematics::Vector3d& v) {
  return std::vector<double>{v.x(), v.y(), v.z()};
}
json RangeJson(const environment::Range& r) { return std::vector<double>{r.lo, r.hi}; }

const char* TaskName(const RunConfig& c) {
  if (!c.use_environment) return "none";
  return c.task.kind == environment::TaskKind::kOnPlate ? "on_plate" : "in_place";
}

// Effective configuration after defaults; the chain is identified by its
// content hash so the text is independent of where files live.
json Effective(const RunConfig& c) {
  const auto& p = c.rollout_params;
  json boxes = json::array();
  for (const auto& b : c.pipeline.areas.boxes) {
    boxes.push_back({{"lo", Vec(b.lo)}, {"hi", Vec(b.hi)}});
  }
  json planes = json::array();
  for (const auto& m : c.pipeline.mirror_planes) {
    planes.push_back({{"point_m", Vec(m.point)}, {"normal", Vec(m.normal)}});
  }
  json band = nullptr;
  if (c.pipeline.areas.height_band) {
    band = std::vector<double>{c.pipeline.areas.height_band->first,
                               c.pipeline.areas.height_band->second};
  }
  std::string split = "all";
  if (c.rollout.split) split = trajectory::SplitName(*c.rollout.split);
  return {
      {"chain_fnv1a64", c.chain_hash},
      {"seed", c.seed},
      {"episodes", c.episodes},
      {"step",
       {{"decision_dt_s", p.step.dt},
        {"control_dt_s", p.step.control_dt},
        {"correction_enabled", p.step.correction_enabled}}},
      {"reward",
       {{"accel_threshold", p.weights.accel_threshold},
        {"jerk_saturation", p.weights.jerk_saturation},
        {"deviation_low_rad", p.weights.deviation_low},
        {"deviation_high_rad", p.weights.deviation_high},
        {"termination_rad", p.weights.termination}}},
      {"horizon_steps", p.horizon},
      {"terminate_on_deviation", p.terminate_on_deviation},
      {"pipeline",
       {{"count", c.dataset_count},
        {"boxes_m", boxes},
        {"height_band_m", band},
        {"path_samples", c.pipeline.path_samples},
        {"headroom", c.pipeline.headroom},
        {"test_fraction", c.pipeline.test_fraction},
        {"max_attempts", c.pipeline.max_attempts},
        {"mirror", c.pipeline.mirror},
        {"mirror_planes", planes}}},
      {"task",
       {{"kind", TaskName(c)},
        {"initial_position_m", Vec(c.task.initial_position)},
        {"start_offset_m", Vec(c.task.start_offset)},
        {"success_bound_m", c.task.success_bound},
        {"noise_std_m", c.task.noise_std},
        {"reward_exponent", c.task.reward_exponent}}},
      {"plate", {{"half_x_m", c.plate.half_x}, {"half_y_m", c.plate.half_y}}},
      {"ball",
       {{"randomize", c.randomize_ball},
        {"mass_kg", c.ball.mass},
        {"radius_m", c.ball.radius},
        {"rolling_friction", c.ball.rolling_friction},
        {"mass_range_kg", RangeJson(c.ball.mass_range)},
        {"radius_range_m", RangeJson(c.ball.radius_range)},
        {"rolling_friction_range", RangeJson(c.ball.friction_range)}}},
      {"policy",
       {{"kind", PolicyName(c.policy.kind)},
        {"tracking_kp_per_s2", c.policy.tracking.kp},
        {"tracking_kd_per_s", c.policy.tracking.kd},
        {"balance_kp_per_s2", c.policy.balance.kp},
        {"balance_kd_per_s", c.policy.balance.kd},
        {"mask", c.policy.mask}}},
      {"rollout",
       {{"reference", c.rollout.source == ReferenceSource::kDataset ? "dataset"
                                                                    : "stationary"},
        {"stationary_steps", c.rollout.stationary_steps},
        {"split", split},
        {"max_logs", c.rollout.max_logs}}},
      {"validate",
       {{"steps", c.validate.steps},
        {"v_max_range_rad_per_s", RangeJson(c.validate.v_max)},
        {"a_max_range_rad_per_s2", RangeJson(c.validate.a_max)},
        {"j_max_range_rad_per_s3", RangeJson(c.validate.j_max)}}},
      {"train",
       {{"generations", c.train.cem.generations},
        {"population", c.train.cem.population},
        {"elite_fraction", c.train.cem.elite_fraction},
        {"initial_std", c.train.cem.initial_std},
        {"extra_std", c.train.cem.extra_std},
        {"episodes_per_candidate", c.train.episodes_per_candidate}}},
  };
}

}  // namespace

Chain ParseChain(const std::string& text) {
  Chain chain;
  std::vector<double> p_min, p_max, v_max, a_max, j_max, home;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string keyword;
    if (!(fields >> keyword)) continue;
    std::vector<double> values;
    double x;
    while (fields >> x) values.push_back(x);
    if (!fields.eof()) {
      throw ConfigError("chain line " + std::to_string(line_no) + ": non-numeric field");
    }
    const auto expect = [&](std::size_t n) {
      if (values.size() != n) {
        throw ConfigError("chain line " + std::to_string(line_no) + ": '" + keyword +
                          "' needs " + std::to_string(n) + " values");
      }
    };
    if (keyword == "base") {
      expect(6);
      chain.model.base = PoseFromRpy(values);
    } else if (keyword == "plate") {
      expect(6);
      chain.model.plate_offset = PoseFromRpy(values);
    } else if (keyword == "joint") {
      expect(10);
      chain.model.joints.push_back(
          {values[0], values[1], DegToRad(values[2]), DegToRad(values[3])});
      p_min.push_back(DegToRad(values[4]));
      p_max.push_back(DegToRad(values[5]));
      v_max.push_back(DegToRad(values[6]));
      a_max.push_back(values[7]);
      j_max.push_back(values[8]);
      home.push_back(DegToRad(values[9]));
    } else {
      throw ConfigError("chain line " + std::to_string(line_no) +
                        ": unknown keyword '" + keyword + "'");
    }
  }
  if (chain.model.joints.empty()) throw ConfigError("chain: no joint lines");
  const auto vec = [](const std::vector<double>& v) {
    return VectorXd(Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  chain.limits = {vec(p_min), vec(p_max), vec(v_max), vec(a_max), vec(j_max)};
  chain.home = vec(home);
  chain.model.Validate();
  chain.limits.Validate();
  for (Eigen::Index i = 0; i < chain.home.size(); ++i) {
    if (chain.home[i] < chain.limits.p_min[i] || chain.home[i] > chain.limits.p_max[i]) {
      throw ConfigError("chain: home position of joint " + std::to_string(i + 1) +
                        " is outside its limits");
    }
  }
  return chain;
}

Chain LoadChain(const std::string& path) {
  try {
    return ParseChain(ReadFile(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

const char* PolicyName(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kZero: return "zero";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kGreedy: return "greedy";
    case PolicyKind::kTracking: return "tracking";
    case PolicyKind::kPdBalance: return "pd_balance";
    case PolicyKind::kLinear: return "linear";
  }
  return "unknown";
}

PolicyKind ParsePolicyKind(const std::string& name) {
  for (auto kind : {PolicyKind::kZero, PolicyKind::kRandom, PolicyKind::kGreedy,
                    PolicyKind::kTracking, PolicyKind::kPdBalance, PolicyKind::kLinear}) {
    if (name == PolicyName(kind)) return kind;
  }
  throw ConfigError("unknown policy kind '" + name + "'");
}

void RunConfig::Validate() const {
  chain.model.Validate();
  chain.limits.Validate();
  rollout_params.Validate();
  if (rollout_params.step.dt != pipeline.dt) {
    throw ConfigError("pipeline dt must equal the decision period");
  }
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (dataset_count < 1) throw ConfigError("pipeline.count must be >= 1");
  if (use_environment) {
    plate.Validate();
    ball.Validate();
    task.Validate(plate);
  }
  if (rollout.stationary_steps < 1) throw ConfigError("rollout.stationary_steps must be >= 1");
  if (rollout.max_logs < 0) throw ConfigError("rollout.max_logs must be >= 0");
  if (validate.steps < 1) throw ConfigError("validate.steps must be >= 1");
  for (const auto* r : {&validate.v_max, &validate.a_max, &validate.j_max}) {
    if (!(r->lo > 0.0 && r->lo <= r->hi && std::isfinite(r->hi))) {
      throw ConfigError("validate: limit ranges must satisfy 0 < lo <= hi");
    }
  }
  if (train.episodes_per_candidate < 1) {
    throw ConfigError("train.episodes_per_candidate must be >= 1");
  }
  if (policy.kind == PolicyKind::kPdBalance && !use_environment) {
    throw ConfigError("pd_balance needs a ball task (task.kind != none)");
  }
  if (policy.kind == PolicyKind::kLinear && policy.weights_file.empty()) {
    throw ConfigError("linear policy needs policy.weights_file");
  }
  if (rollout.source == ReferenceSource::kDataset && dataset_file.empty()) {
    throw ConfigError("rollout.reference = dataset needs dataset_file");
  }
}

RunConfig ParseRunConfig(const std::string& json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "config");

  std::string chain_file;
  top.Read("chain_file", &chain_file);
  if (chain_file.empty()) {
    throw ConfigError("config.chain_file is required");
  }
  c.chain_file = ResolvePath(base_dir, chain_file);
  {
    const std::string text = ReadFile(c.chain_file);
    c.chain_hash = Fnv1a64(text);
    try {
      c.chain = ParseChain(text);
    } catch (const ConfigError& e) {
      throw ConfigError(c.chain_file + ": " + e.what());
    }
  }
  std::string dataset_file;
  top.Read("dataset_file", &dataset_file);
  c.dataset_file = ResolvePath(base_dir, dataset_file);
  top.Read("seed", &c.seed);
  top.Read("episodes", &c.episodes);
  top.Read("workers", &c.workers);

  auto& p = c.rollout_params;
  {
    Section s = top.Child("step");
    s.Read("decision_dt_s", &p.step.dt);
    s.Read("control_dt_s", &p.step.control_dt);
    s.Read("correction_enabled", &p.step.correction_enabled);
    s.CheckUnknown();
  }
  {
    Section s = top.Child("reward");
    s.Read("accel_threshold", &p.weights.accel_threshold);
    s.Read("jerk_saturation", &p.weights.jerk_saturation);
    double deg;
    if (s.Has("deviation_low_deg")) {
      s.Read("deviation_low_deg", &deg);
      p.weights.deviation_low = DegToRad(deg);
    }
    if (s.Has("deviation_high_deg")) {
      s.Read("deviation_high_deg", &deg);
      p.weights.deviation_high = DegToRad(deg);
    }
    if (s.Has("termination_deg")) {
      s.Read("termination_deg", &deg);
      p.weights.termination = DegToRad(deg);
    }
    s.CheckUnknown();
  }
  int horizon = static_cast<int>(p.horizon);
  top.Read("horizon_steps", &horizon);
  if (horizon < 1) throw ConfigError("horizon_steps must be >= 1");
  p.horizon = static_cast<std::size_t>(horizon);
  top.Read("terminate_on_deviation", &p.terminate_on_deviation);

  c.pipeline.dt = p.step.dt;
  c.pipeline.ik_seed = c.chain.home;
  {
    Section s = top.Child("pipeline");
    s.Read("count", &c.dataset_count);
    if (s.Has("boxes_m")) {
      const json& boxes = s.Raw("boxes_m");
      if (!boxes.is_array()) throw ConfigError("pipeline.boxes_m: expected an array");
      for (std::size_t k = 0; k < boxes.size(); ++k) {
        Section b(boxes[k], "pipeline.boxes_m[" + std::to_string(k) + "]");
        trajectory::Box box;
        b.ReadFixed("lo", &box.lo);
        b.ReadFixed("hi", &box.hi);
        b.CheckUnknown();
        c.pipeline.areas.boxes.push_back(box);
      }
    }
    if (s.Has("height_band_m")) {
      environment::Range band;
      s.ReadRange("height_band_m", &band);
      c.pipeline.areas.height_band = std::make_pair(band.lo, band.hi);
    }
    s.Read("path_samples", &c.pipeline.path_samples);
    s.Read("headroom", &c.pipeline.headroom);
    s.Read("test_fraction", &c.pipeline.test_fraction);
    s.Read("max_attempts", &c.pipeline.max_attempts);
    s.Read("mirror", &c.pipeline.mirror);
    if (s.Has("mirror_planes")) {
      const json& planes = s.Raw("mirror_planes");
      if (!planes.is_array()) throw ConfigError("pipeline.mirror_planes: expected an array");
      for (std::size_t k = 0; k < planes.size(); ++k) {
        Section m(planes[k], "pipeline.mirror_planes[" + std::to_string(k) + "]");
        trajectory::MirrorPlane plane;
        m.ReadFixed("point_m", &plane.point);
        m.ReadFixed("normal", &plane.normal);
        m.CheckUnknown();
        c.pipeline.mirror_planes.push_back(plane);
      }
    }
    s.CheckUnknown();
  }
  {
    Section s = top.Child("task");
    std::string kind = "in_place";
    s.Read("kind", &kind);
    if (kind == "none") {
      c.use_environment = false;
    } else if (kind == "in_place") {
      c.task.kind = environment::TaskKind::kInPlace;
    } else if (kind == "on_plate") {
      c.task.kind = environment::TaskKind::kOnPlate;
    } else {
      throw ConfigError("task.kind must be none, in_place or on_plate");
    }
    s.ReadFixed("initial_position_m", &c.task.initial_position);
    s.ReadFixed("start_offset_m", &c.task.start_offset);
    s.Read("success_bound_m", &c.task.success_bound);
    s.Read("noise_std_m", &c.task.noise_std);
    s.Read("reward_exponent", &c.task.reward_exponent);
    s.CheckUnknown();
  }
  {
    Section s = top.Child("plate");
    s.Read("half_x_m", &c.plate.half_x);
    s.Read("half_y_m", &c.plate.half_y);
    s.CheckUnknown();
  }
  {
    Section s = top.Child("ball");
    s.Read("randomize", &c.randomize_ball);
    s.Read("mass_kg", &c.ball.mass);
    s.Read("radius_m", &c.ball.radius);
    s.Read("rolling_friction", &c.ball.rolling_friction);
    s.ReadRange("mass_range_kg", &c.ball.mass_range);
    s.ReadRange("radius_range_m", &c.ball.radius_range);
    s.ReadRange("rolling_friction_range", &c.ball.friction_range);
    s.CheckUnknown();
  }
  {
    Section s = top.Child("policy");
    std::string kind = PolicyName(c.policy.kind);
    s.Read("kind", &kind);
    c.policy.kind = ParsePolicyKind(kind);
    s.Read("tracking_kp_per_s2", &c.policy.tracking.kp);
    s.Read("tracking_kd_per_s", &c.policy.tracking.kd);
    s.Read("balance_kp_per_s2", &c.policy.balance.kp);
    s.Read("balance_kd_per_s", &c.policy.balance.kd);
    s.Read("mask", &c.policy.mask);
    std::string weights;
    s.Read("weights_file", &weights);
    c.policy.weights_file = ResolvePath(base_dir, weights);
    s.CheckUnknown();
  }
  {
    Section s = top.Child("rollout");
    std::string reference = "stationary";
    s.Read("reference", &reference);
    if (reference == "stationary") {
      c.rollout.source = ReferenceSource::kStationary;
    } else if (reference == "dataset") {
      c.rollout.source = ReferenceSource::kDataset;
    } else {
      throw ConfigError("rollout.reference must be stationary or dataset");
    }
    s.Read("stationary_steps", &c.rollout.stationary_steps);
    std::string split = "all";
    s.Read("split", &split);
    if (split == "train") {
      c.rollout.split = trajectory::Split::kTrain;
    } else if (split == "test") {
      c.rollout.split = trajectory::Split::kTest;
    } else if (split != "all") {
      throw ConfigError("rollout.split must be all, train or test");
    }
    s.Read("max_logs", &c.rollout.max_logs);
    s.CheckUnknown();
  }
  {
    Section s = top.Child("validate");
    s.Read("steps", &c.validate.steps);
    s.ReadRange("v_max_range_rad_per_s", &c.validate.v_max);
    s.ReadRange("a_max_range_rad_per_s2", &c.validate.a_max);
    s.ReadRange("j_max_range_rad_per_s3", &c.validate.j_max);
    s.CheckUnknown();
  }
  {
    Section s = top.Child("train");
    s.Read("generations", &c.train.cem.generations);
    s.Read("population", &c.train.cem.population);
    s.Read("elite_fraction", &c.train.cem.elite_fraction);
    s.Read("initial_std", &c.train.cem.initial_std);
    s.Read("extra_std", &c.train.cem.extra_std);
    s.Read("episodes_per_candidate", &c.train.episodes_per_candidate);
    s.CheckUnknown();
  }
  top.CheckUnknown();

  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  RunConfig c = ParseRunConfig(ReadFile(path), fs::path(path).parent_path().string());
  c.source_path = path;
  return c;
}

std::uint64_t Fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string CanonicalJson(const RunConfig& config) { return Effective(config).dump(); }

std::string ConfigHash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(CanonicalJson(config))));
  return buf;
}

}  // namespace trajadapt::config
