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

#include "trajadapt/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace trajadapt::policy {
namespace {

constexpr char kWeightsHeader[] = "# trajadapt linear-policy weights v1";

VectorXd Clamp(const VectorXd& x) { return x.cwiseMax(-1.0).cwiseMin(1.0); }

void CheckObservation(const VectorXd& obs, const ObservationLayout& layout) {
  if (static_cast<std::size_t>(obs.size()) != layout.size()) {
    throw ConfigError("policy: observation length " + std::to_string(obs.size()) +
                      " does not match the layout (" +
                      std::to_string(layout.size()) + ")");
  }
}

}  // namespace

VectorXd NormalizePosition(const VectorXd& p, const limits::JointLimits& limits) {
  const VectorXd span = limits.p_max - limits.p_min;
  return (2.0 * (p - limits.p_min)).cwiseQuotient(span).array() - 1.0;
}

VectorXd DenormalizePosition(const VectorXd& x, const limits::JointLimits& limits) {
  const VectorXd span = limits.p_max - limits.p_min;
  return limits.p_min + 0.5 * (x.array() + 1.0).matrix().cwiseProduct(span);
}

VectorXd RandomPolicy::Act(const VectorXd&, Rng& rng) {
  VectorXd a(static_cast<Eigen::Index>(joints_));
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.Uniform(-1.0, 1.0);
  return a;
}

VectorXd GreedyMaxPolicy::Act(const VectorXd&, Rng&) {
  return VectorXd::Ones(static_cast<Eigen::Index>(joints_));
}

TrackingPolicy::TrackingPolicy(ObservationLayout layout,
                               limits::JointLimits limits, double dt,
                               TrackingGains gains)
    : layout_(layout), limits_(std::move(limits)), dt_(dt), gains_(gains) {
  limits_.Validate();
  if (limits_.size() != layout_.joints) {
    throw ConfigError("tracking policy: layout and limits disagree on joints");
  }
  if (!(dt_ > 0.0)) throw ConfigError("tracking policy: dt must be positive");
  if (!(gains_.kp >= 0.0) || !(gains_.kd >= 0.0)) {
    throw ConfigError("tracking policy: gains must be non-negative");
  }
}

void TrackingPolicy::Reset(std::uint64_t) {
  previous_reference_.resize(0);
  earlier_reference_.resize(0);
}

void TrackingPolicy::ReferenceTarget(const VectorXd& obs, VectorXd* target,
                                     VectorXd* velocity, VectorXd* accel) {
  const auto n = static_cast<Eigen::Index>(layout_.joints);
  *target = DenormalizePosition(obs.segment(layout_.reference(0), n), limits_);
  // The first step of an episode starts at rest on the current reference
  // row, which is the arm position itself.
  if (previous_reference_.size() != n) {
    previous_reference_ =
        DenormalizePosition(obs.segment(layout_.position(), n), limits_);
    earlier_reference_ = previous_reference_;
  }
  // Second difference centred on the current row; extrapolated to the end
  // of the step for the velocity.
  *accel = (*target - 2.0 * previous_reference_ + earlier_reference_) / (dt_ * dt_);
  *velocity = (*target - previous_reference_) / dt_ + *accel * (0.5 * dt_);
  earlier_reference_ = previous_reference_;
  previous_reference_ = *target;
}

VectorXd TrackingPolicy::Command(const VectorXd& p, const VectorXd& v,
                                 const VectorXd& a, const VectorXd& target,
                                 const VectorXd& target_velocity,
                                 const VectorXd& target_accel) const {
  // PD on the state at the end of the step plus the reference acceleration,
  // solved for a1 (the end state depends linearly on it):
  // p1 = p + v dt + (2 a + a1) dt^2 / 6, v1 = v + (a + a1) dt / 2.
  const double dt = dt_;
  const double kp = gains_.kp;
  const double kd = gains_.kd;
  const double denom = 1.0 + kp * dt * dt / 6.0 + kd * dt / 2.0;
  const VectorXd p_free = p + v * dt + a * (dt * dt / 3.0);
  const VectorXd v_free = v + a * (dt / 2.0);
  return (target_accel + kp * (target - p_free) + kd * (target_velocity - v_free)) /
         denom;
}

VectorXd TrackingPolicy::Act(const VectorXd& obs, Rng&) {
  CheckObservation(obs, layout_);
  const auto n = static_cast<Eigen::Index>(layout_.joints);
  VectorXd target, target_velocity, target_accel;
  ReferenceTarget(obs, &target, &target_velocity, &target_accel);
  const VectorXd p = DenormalizePosition(obs.segment(layout_.position(), n), limits_);
  const VectorXd v = obs.segment(layout_.velocity(), n).cwiseProduct(limits_.v_max);
  const VectorXd a = obs.segment(layout_.acceleration(), n).cwiseProduct(limits_.a_max);
  const VectorXd command = Command(p, v, a, target, target_velocity, target_accel);
  return Clamp(command.cwiseQuotient(limits_.a_max));
}

PdBalancePolicy::PdBalancePolicy(ObservationLayout layout,
                                 limits::JointLimits limits, double dt,
                                 kinematics::ChainModel model,
                                 environment::PlateGeometry geometry,
                                 environment::TaskSpec task,
                                 std::vector<int> mask, const VectorXd& check_q,
                                 BalanceGains balance, TrackingGains tracking)
    : TrackingPolicy(layout, std::move(limits), dt, tracking),
      model_(std::move(model)),
      geometry_(geometry),
      task_(std::move(task)),
      mask_(std::move(mask)),
      balance_(balance) {
  model_.Validate();
  geometry_.Validate();
  if (model_.dof() != layout_.joints) {
    throw ConfigError("pd_balance: chain model and layout disagree on joints");
  }
  if (layout_.feedback != task_.FeedbackSize()) {
    throw ConfigError("pd_balance: layout has no matching ball feedback");
  }
  if (mask_.size() < 2) {
    throw ConfigError("pd_balance: at least two joints are needed to tilt the plate");
  }
  for (std::size_t k = 0; k < mask_.size(); ++k) {
    if (mask_[k] < 0 || static_cast<std::size_t>(mask_[k]) >= layout_.joints) {
      throw ConfigError("pd_balance: mask index out of range");
    }
    if (std::count(mask_.begin(), mask_.end(), mask_[k]) > 1) {
      throw ConfigError("pd_balance: duplicate mask index");
    }
  }
  if (check_q.size() != static_cast<Eigen::Index>(layout_.joints)) {
    throw ConfigError("pd_balance: check configuration has the wrong length");
  }
  // Authority: the masked joints must span both tilt directions.
  const MatrixXd g = TiltJacobian(check_q) / (environment::kRollingFactor *
                                              environment::kGravity);
  const double authority = std::sqrt(std::max(0.0, (g * g.transpose()).determinant()));
  if (!(authority > kMinTiltAuthority)) {
    throw ConfigError("pd_balance: masked joints cannot tilt the plate about two axes");
  }
  if (!(balance_.kp >= 0.0) || !(balance_.kd >= 0.0)) {
    throw ConfigError("pd_balance: gains must be non-negative");
  }
}

Eigen::MatrixXd PdBalancePolicy::TiltJacobian(const VectorXd& q) const {
  const auto gravity = [&](const VectorXd& x) -> Eigen::Vector2d {
    kinematics::PlatePose pose;
    pose.orientation = Eigen::Quaterniond(
        kinematics::ForwardKinematics(model_, x).linear());
    return environment::DrivingAcceleration(pose);
  };
  constexpr double kStep = 1e-6;
  MatrixXd g(2, static_cast<Eigen::Index>(mask_.size()));
  for (std::size_t k = 0; k < mask_.size(); ++k) {
    VectorXd plus = q, minus = q;
    plus[mask_[k]] += kStep;
    minus[mask_[k]] -= kStep;
    g.col(static_cast<Eigen::Index>(k)) = (gravity(plus) - gravity(minus)) / (2.0 * kStep);
  }
  return g;
}

VectorXd PdBalancePolicy::Act(const VectorXd& obs, Rng&) {
  CheckObservation(obs, layout_);
  const auto n = static_cast<Eigen::Index>(layout_.joints);
  VectorXd target, target_velocity, target_accel;
  ReferenceTarget(obs, &target, &target_velocity, &target_accel);
  const VectorXd p = DenormalizePosition(obs.segment(layout_.position(), n), limits_);
  const VectorXd v = obs.segment(layout_.velocity(), n).cwiseProduct(limits_.v_max);
  const VectorXd a = obs.segment(layout_.acceleration(), n).cwiseProduct(limits_.a_max);

  if (balance_.kp != 0.0 || balance_.kd != 0.0) {
    const auto f = obs.segment(layout_.feedback_offset(),
                               static_cast<Eigen::Index>(layout_.feedback));
    const Eigen::Vector2d half(geometry_.half_x, geometry_.half_y);
    const Eigen::Vector2d current = f.segment<2>(0).cwiseProduct(half);
    const Eigen::Vector2d last = f.segment<2>(2).cwiseProduct(half);
    const Eigen::Vector2d error =
        task_.kind == environment::TaskKind::kInPlace
            ? Eigen::Vector2d(f.segment<2>(4).cwiseProduct(half))
            : current;
    const Eigen::Vector2d rate = (current - last) / dt_;
    const Eigen::Vector2d desired = -balance_.kp * error - balance_.kd * rate;

    // Tilt offset of the masked joints that yields the desired in-plane
    // gravity component (least squares for more than two joints).
    const MatrixXd g = TiltJacobian(p);
    const VectorXd delta = g.completeOrthogonalDecomposition().solve(desired);
    for (std::size_t k = 0; k < mask_.size(); ++k) {
      target[mask_[k]] += delta[static_cast<Eigen::Index>(k)];
    }
  }
  const VectorXd command = Command(p, v, a, target, target_velocity, target_accel);
  return Clamp(command.cwiseQuotient(limits_.a_max));
}

VectorXd LinearPolicy::Act(const VectorXd& obs, Rng&) {
  if (obs.size() + 1 != weights_.cols()) {
    throw ConfigError("linear policy: weights expect " +
                      std::to_string(weights_.cols() - 1) +
                      " observation entries, got " + std::to_string(obs.size()));
  }
  VectorXd x(obs.size() + 1);
  x << obs, 1.0;
  return Clamp(weights_ * x);
}

void SaveWeights(const std::string& path, const MatrixXd& weights) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write weights file: " + path);
  out << kWeightsHeader << '\n'
      << weights.rows() << ' ' << weights.cols() << '\n'
      << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights.cols(); ++c) {
      out << (c ? " " : "") << weights(r, c);
    }
    out << '\n';
  }
  if (!out) throw ConfigError("failed writing weights file: " + path);
}

MatrixXd LoadWeights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read weights file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kWeightsHeader) {
    throw ConfigError("weights file has an unknown header: " + path);
  }
  long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) {
    throw ConfigError("weights file has an invalid shape line: " + path);
  }
  MatrixXd w(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!(in >> w(r, c)) || !std::isfinite(w(r, c))) {
        throw ConfigError("weights file is truncated or non-finite: " + path);
      }
    }
  }
  double extra;
  if (in >> extra) throw ConfigError("weights file has trailing values: " + path);
  return w;
}

CemResult CemTrain(const MatrixXd& initial,
                   const std::function<double(const MatrixXd&)>& objective,
                   const CemOptions& options, std::uint64_t seed) {
  if (options.generations < 1 || options.population < 1) {
    throw ConfigError("cem: generations and population must be positive");
  }
  if (!(options.elite_fraction > 0.0 && options.elite_fraction <= 1.0)) {
    throw ConfigError("cem: elite fraction must be in (0, 1]");
  }
  if (!(options.initial_std > 0.0) || !(options.min_std >= 0.0) ||
      !(options.extra_std >= 0.0)) {
    throw ConfigError("cem: invalid standard deviations");
  }
  const Eigen::Index rows = initial.rows();
  const Eigen::Index cols = initial.cols();
  const Eigen::Index dim = rows * cols;
  const auto reshape = [&](const VectorXd& theta) {
    return MatrixXd(Eigen::Map<const MatrixXd>(theta.data(), rows, cols));
  };
  const int elite_count = std::max(
      1, static_cast<int>(std::lround(options.elite_fraction * options.population)));

  Rng rng(seed);
  VectorXd mean = Eigen::Map<const VectorXd>(initial.data(), dim);
  VectorXd std_dev = VectorXd::Constant(dim, options.initial_std);
  struct Candidate {
    VectorXd theta;
    double score;
  };
  std::vector<Candidate> elites;
  CemResult result;
  result.best = initial;
  result.best_return = -std::numeric_limits<double>::infinity();

  for (int gen = 0; gen < options.generations; ++gen) {
    std::vector<Candidate> pool = elites;
    double gen_best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < options.population; ++k) {
      VectorXd theta(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        theta[i] = mean[i] + std_dev[i] * rng.Normal();
      }
      const double score = objective(reshape(theta));
      gen_best = std::max(gen_best, score);
      pool.push_back({std::move(theta), score});
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.score > b.score;
                     });
    pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(elite_count)));
    elites = std::move(pool);

    double score_sum = 0.0;
    for (const auto& e : elites) score_sum += e.score;
    result.elite_mean.push_back(score_sum / static_cast<double>(elites.size()));
    result.best_per_generation.push_back(gen_best);
    if (elites.front().score > result.best_return) {
      result.best_return = elites.front().score;
      result.best = reshape(elites.front().theta);
    }

    // With every sample elite the fit would only reproduce the sampling
    // noise, so the distribution is left unchanged.
    if (elite_count >= options.population) continue;
    VectorXd sum = VectorXd::Zero(dim);
    for (const auto& e : elites) sum += e.theta;
    mean = sum / static_cast<double>(elites.size());
    VectorXd var = VectorXd::Zero(dim);
    for (const auto& e : elites) var += (e.theta - mean).cwiseAbs2();
    // Added variance, fading out linearly, keeps the search from collapsing
    // before the mean has moved.
    const double extra =
        options.extra_std * (1.0 - static_cast<double>(gen + 1) / options.generations);
    std_dev = (var / static_cast<double>(elites.size())).array() + extra * extra;
    std_dev = std_dev.cwiseSqrt().cwiseMax(options.min_std);
  }
  return result;
}

}  // namespace trajadapt::policy
