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

// Plain-text file formats: the reference dataset and per-episode step logs.
//
// Dataset (comma-separated, version line first):
//   # trajadapt dataset v1
//   record,<id>,<split>,<dt_s>,<n_joints>,<rows>,<base>,<variant>
//   <rows> lines of <n_joints> joint positions in rad
//   ... one block per record
//
// Step log (comma-separated, version line then a column header):
//   step, t_s, p<i>_rad, v<i>_rad_per_s, a<i>_rad_per_s2, j<i>_rad_per_s3,
//   raw<i>_rad_per_s2 (policy output times a_max, before clipping),
//   clipped<i>_rad_per_s2, ref<i>_rad, R_T, P_A, P_J, P_S, P_D, R,
//   ball_x_m, ball_y_m, ball_vx_m_per_s, ball_vy_m_per_s, on_plate,
//   terminated
// with <i> = 1..n_joints and one row per logged decision step. Row 0 is the
// initial state (t = 0) with empty action and reward fields.

#ifndef TRAJADAPT_IO_HPP_
#define TRAJADAPT_IO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "trajadapt/adaptation.hpp"
#include "trajadapt/trajectory.hpp"

namespace trajadapt::io {

inline constexpr const char* kDatasetVersion = "# trajadapt dataset v1";
inline constexpr const char* kStepLogVersion = "# trajadapt step-log v1";

/// Shortest text that reads back to the same double.
std::string FormatDouble(double x);

void WriteDataset(std::ostream& out,
                  const std::vector<trajectory::ReferenceTrajectory>& records);
std::vector<trajectory::ReferenceTrajectory> ReadDataset(std::istream& in);

void SaveDataset(const std::string& path,
                 const std::vector<trajectory::ReferenceTrajectory>& records);
/// Throws ConfigError on a missing or malformed file.
std::vector<trajectory::ReferenceTrajectory> LoadDataset(const std::string& path);

/// Column names of the step log for `joints` joints.
std::vector<std::string> StepLogColumns(std::size_t joints);

/// Writes the version line, the header, the initial state and every record.
void WriteStepLog(std::ostream& out, const limits::JointState& initial,
                  const adaptation::RolloutResult& result,
                  const limits::JointLimits& limits);

}  // namespace trajadapt::io

#endif  // TRAJADAPT_IO_HPP_
