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

// Shared test setups for the seven-joint default arm.

#ifndef TRAJADAPT_TESTS_FIXTURES_HPP_
#define TRAJADAPT_TESTS_FIXTURES_HPP_

#include "trajadapt/kinematics.hpp"
#include "trajadapt/limits.hpp"
#include "trajadapt/trajectory.hpp"

namespace trajadapt::testing {

inline limits::JointLimits ArmLimits() {
  const double p[7] = {170, 120, 170, 120, 170, 120, 175};
  const double v[7] = {85, 85, 100, 75, 130, 135, 135};
  limits::JointLimits l = limits::JointLimits::Uniform(7, 1.0, 1.0, 8.0, 80.0);
  for (int i = 0; i < 7; ++i) {
    l.p_max[i] = DegToRad(p[i]);
    l.p_min[i] = -l.p_max[i];
    l.v_max[i] = DegToRad(v[i]);
  }
  return l;
}

inline trajectory::PipelineConfig ArmPipeline() {
  using V = kinematics::Vector3d;
  trajectory::PipelineConfig c;
  c.areas.boxes = {{V(0.55, -0.40, 0.0), V(0.70, -0.25, 0.0)},
                   {V(0.65, -0.10, 0.0), V(0.80, 0.10, 0.0)},
                   {V(0.55, 0.25, 0.0), V(0.70, 0.40, 0.0)}};
  c.areas.height_band = {{0.45, 0.60}};
  c.mirror_planes = {{V(0, 0, 0), V(0, 1, 0)}, {V(0.675, 0, 0), V(1, 0, 0)}};
  c.ik_seed = kinematics::DefaultHome();
  return c;
}

}  // namespace trajadapt::testing

#endif  // TRAJADAPT_TESTS_FIXTURES_HPP_
