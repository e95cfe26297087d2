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

// Python bindings for the limit computations, reward terms, ball physics and
// the command layer.

#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trajadapt/adaptation.hpp"
#include "trajadapt/commands.hpp"
#include "trajadapt/config.hpp"
#include "trajadapt/environment.hpp"
#include "trajadapt/kinematics.hpp"
#include "trajadapt/limits.hpp"

namespace py = pybind11;

namespace trajadapt {
namespace {

py::dict SummaryDict(const commands::MetricsSummary& s) {
  py::dict d;
  d["episodes"] = s.episodes;
  d["success_rate"] = s.success_rate;
  d["trajectory_fraction"] = s.trajectory_fraction;
  d["error_distance"] = s.error_distance;
  d["mean_accel"] = s.mean_accel;
  d["mean_jerk"] = s.mean_jerk;
  d["terminated"] = s.terminated;
  d["mean_reward"] = s.mean_reward;
  return d;
}

py::dict ValidationDict(const commands::ValidationSummary& s) {
  py::dict d;
  d["episodes"] = s.episodes;
  d["steps"] = s.steps;
  d["max_velocity_ratio"] = s.max_velocity;
  d["max_accel_ratio"] = s.max_accel;
  d["max_jerk_ratio"] = s.max_jerk;
  d["violations"] = s.violations;
  d["first_episode"] = s.first_episode;
  d["first_seed"] = s.first_seed;
  d["first_step"] = s.first_step;
  return d;
}

}  // namespace
}  // namespace trajadapt

PYBIND11_MODULE(_core, m) {
  using namespace trajadapt;
  m.doc() = "Limit-safe trajectory adaptation core.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);

  py::class_<limits::JointLimits>(m, "JointLimits")
      .def(py::init<>())
      .def(py::init([](VectorXd p_min, VectorXd p_max, VectorXd v_max, VectorXd a_max,
                       VectorXd j_max) {
             limits::JointLimits l{p_min, p_max, v_max, a_max, j_max};
             l.Validate();
             return l;
           }),
           py::arg("p_min"), py::arg("p_max"), py::arg("v_max"), py::arg("a_max"),
           py::arg("j_max"))
      .def_static("uniform", &limits::JointLimits::Uniform, py::arg("joints"),
                  py::arg("p_lim"), py::arg("v_max"), py::arg("a_max"), py::arg("j_max"))
      .def_readwrite("p_min", &limits::JointLimits::p_min)
      .def_readwrite("p_max", &limits::JointLimits::p_max)
      .def_readwrite("v_max", &limits::JointLimits::v_max)
      .def_readwrite("a_max", &limits::JointLimits::a_max)
      .def_readwrite("j_max", &limits::JointLimits::j_max)
      .def("validate", &limits::JointLimits::Validate)
      .def("__len__", &limits::JointLimits::size);

  py::class_<limits::JointState>(m, "JointState")
      .def(py::init([](VectorXd p, VectorXd v, VectorXd a) {
             return limits::JointState{p, v, a};
           }),
           py::arg("p"), py::arg("v"), py::arg("a"))
      .def_static("at_rest", &limits::JointState::AtRest, py::arg("p"))
      .def_readwrite("p", &limits::JointState::p)
      .def_readwrite("v", &limits::JointState::v)
      .def_readwrite("a", &limits::JointState::a);

  py::class_<limits::StepParams>(m, "StepParams")
      .def(py::init([](double dt, double control_dt, bool correction) {
             limits::StepParams p{dt, control_dt, correction};
             p.Validate();
             return p;
           }),
           py::arg("dt") = 0.05, py::arg("control_dt") = 0.005,
           py::arg("correction_enabled") = true)
      .def_readwrite("dt", &limits::StepParams::dt)
      .def_readwrite("control_dt", &limits::StepParams::control_dt)
      .def_readwrite("correction_enabled", &limits::StepParams::correction_enabled)
      .def("substeps", &limits::StepParams::Substeps);

  m.def("valid_accel_range",
        [](const limits::JointState& state, const limits::JointLimits& l,
           const limits::StepParams& params) {
          const auto r = limits::ValidAccelRange(state, l, params);
          return py::make_tuple(r.lo, r.hi);
        },
        py::arg("state"), py::arg("limits"), py::arg("params") = limits::StepParams{},
        "Per-joint (lo, hi) bounds on the next decision-step acceleration.");
  m.def("clip_action",
        [](const VectorXd& raw, const VectorXd& lo, const VectorXd& hi) {
          return limits::ClipAction(raw, {lo, hi});
        },
        py::arg("raw"), py::arg("lo"), py::arg("hi"));
  m.def("integrate_step",
        py::overload_cast<const limits::JointState&, const VectorXd&, double>(
            &limits::IntegrateStep),
        py::arg("state"), py::arg("a1"), py::arg("dt"));
  m.def("intermediate_setpoints",
        py::overload_cast<const limits::JointState&, const VectorXd&,
                          const limits::StepParams&>(&limits::IntermediateSetpoints),
        py::arg("state"), py::arg("a1"), py::arg("params") = limits::StepParams{},
        "Positions at every controller tick, first row the current position.");
  m.def("max_accel_velocity", &limits::MaxAccelVelocity, py::arg("v0"), py::arg("a0"),
        py::arg("v_max"), py::arg("j_brake"), py::arg("dt"));
  m.def("braking_jerk", &limits::BrakingJerk, py::arg("j_max"), py::arg("a_max"),
        py::arg("dt"));

  m.def("accel_penalty", py::overload_cast<double, double>(&adaptation::AccelPenalty),
        py::arg("a_abs"), py::arg("threshold"));
  m.def("jerk_penalty", &adaptation::JerkPenalty, py::arg("jerk"), py::arg("j_max"),
        py::arg("c"));
  m.def("deviation_penalty",
        py::overload_cast<double, double, double>(&adaptation::DeviationPenalty),
        py::arg("deviation"), py::arg("low"), py::arg("high"));
  m.def("compose_reward",
        [](double task, double accel, double jerk, double deviation) {
          const auto r = adaptation::ComposeReward(task, accel, jerk, deviation);
          py::dict d;
          d["R_T"] = r.task;
          d["P_A"] = r.accel;
          d["P_J"] = r.jerk;
          d["P_S"] = r.smooth;
          d["P_D"] = r.deviation;
          d["R"] = r.total;
          return d;
        },
        py::arg("task"), py::arg("accel"), py::arg("jerk"), py::arg("deviation"));

  m.def("tilt_acceleration",
        [](double angle_rad) {
          environment::PlatePose plate;
          plate.orientation = Eigen::Quaterniond(
              Eigen::AngleAxisd(angle_rad, kinematics::Vector3d::UnitX()));
          return environment::DrivingAcceleration(plate);
        },
        py::arg("angle_rad"),
        "In-plane ball acceleration on a plate tilted about its x axis.");

  m.def("default_home", &kinematics::DefaultHome);
  m.def("default_arm_fk",
        [](const VectorXd& q) {
          return kinematics::ForwardKinematics(kinematics::DefaultArm(), q).matrix();
        },
        py::arg("q"), "Plate pose of the built-in arm as a 4x4 matrix.");

  py::class_<config::RunConfig>(m, "RunConfig")
      .def_readwrite("seed", &config::RunConfig::seed)
      .def_readwrite("episodes", &config::RunConfig::episodes)
      .def_readwrite("workers", &config::RunConfig::workers)
      .def_readwrite("dataset_count", &config::RunConfig::dataset_count)
      .def_property_readonly("joints",
                             [](const config::RunConfig& c) { return c.chain.model.dof(); })
      .def_property_readonly("home",
                             [](const config::RunConfig& c) { return c.chain.home; })
      .def_property_readonly(
          "limits", [](const config::RunConfig& c) { return c.chain.limits; })
      .def("hash", &config::ConfigHash)
      .def("validate", &config::RunConfig::Validate);
  m.def("load_config", &config::LoadRunConfig, py::arg("path"));

  m.def("run_validation",
        [](const config::RunConfig& c) {
          commands::ValidationSummary s;
          {
            py::gil_scoped_release release;
            s = commands::RunValidation(c);
          }
          return ValidationDict(s);
        },
        py::arg("config"),
        "Random-policy campaign with randomized limits; returns peaks and violations.");
  m.def("evaluate",
        [](const config::RunConfig& c) {
          commands::MetricsSummary s;
          {
            py::gil_scoped_release release;
            std::vector<environment::EpisodeReport> reports;
            for (const auto& o : commands::RunEpisodes(c, 0)) {
              reports.push_back(o.result.report);
            }
            s = commands::AggregateReports(reports);
          }
          return SummaryDict(s);
        },
        py::arg("config"), "Runs the configured episodes and returns the metrics.");
}
