# Copyright 2026 The trajadapt Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Limit-safe trajectory adaptation."""

from trajadapt._core import (
    ConfigError,
    ConsistencyError,
    JointLimits,
    JointState,
    RunConfig,
    StepParams,
    accel_penalty,
    braking_jerk,
    clip_action,
    compose_reward,
    default_arm_fk,
    default_home,
    deviation_penalty,
    evaluate,
    integrate_step,
    intermediate_setpoints,
    jerk_penalty,
    load_config,
    max_accel_velocity,
    run_validation,
    tilt_acceleration,
    valid_accel_range,
)

__all__ = [
    "ConfigError",
    "ConsistencyError",
    "JointLimits",
    "JointState",
    "RunConfig",
    "StepParams",
    "accel_penalty",
    "braking_jerk",
    "clip_action",
    "compose_reward",
    "default_arm_fk",
    "default_home",
    "deviation_penalty",
    "evaluate",
    "integrate_step",
    "intermediate_setpoints",
    "jerk_penalty",
    "load_config",
    "max_accel_velocity",
    "run_validation",
    "tilt_acceleration",
    "valid_accel_range",
]
