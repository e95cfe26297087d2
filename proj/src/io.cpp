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

#include "trajadapt/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace trajadapt::io {
namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double ParseDouble(const std::string& text, long line_no) {
  double x = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, x);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("dataset line " + std::to_string(line_no) +
                      ": bad number '" + text + "'");
  }
  return x;
}

std::uint64_t ParseUnsigned(const std::string& text, long line_no) {
  std::uint64_t x = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, x);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("dataset line " + std::to_string(line_no) +
                      ": bad integer '" + text + "'");
  }
  return x;
}

void WriteRow(std::ostream& out, const VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out << ',';
    out << FormatDouble(v[i]);
  }
}

void WriteBlank(std::ostream& out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) out << ',';
}

}  // namespace

std::string FormatDouble(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void WriteDataset(std::ostream& out,
                  const std::vector<trajectory::ReferenceTrajectory>& records) {
  out << kDatasetVersion << '\n';
  for (const auto& r : records) {
    out << "record," << r.id << ',' << trajectory::SplitName(r.split) << ','
        << FormatDouble(r.dt) << ',' << r.positions.cols() << ','
        << r.positions.rows() << ',' << r.base << ',' << r.variant << '\n';
    for (Eigen::Index k = 0; k < r.positions.rows(); ++k) {
      WriteRow(out, r.positions.row(k).transpose());
      out << '\n';
    }
  }
}

std::vector<trajectory::ReferenceTrajectory> ReadDataset(std::istream& in) {
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line) || line != kDatasetVersion) {
    throw ConfigError("dataset: missing version line '" +
                      std::string(kDatasetVersion) + "'");
  }
  std::vector<trajectory::ReferenceTrajectory> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto head = SplitCsv(line);
    if (head.size() != 8 || head[0] != "record") {
      throw ConfigError("dataset line " + std::to_string(line_no) +
                        ": expected a record header");
    }
    trajectory::ReferenceTrajectory r;
    r.id = ParseUnsigned(head[1], line_no);
    if (head[2] == "train") {
      r.split = trajectory::Split::kTrain;
    } else if (head[2] == "test") {
      r.split = trajectory::Split::kTest;
    } else {
      throw ConfigError("dataset line " + std::to_string(line_no) +
                        ": split must be train or test");
    }
    r.dt = ParseDouble(head[3], line_no);
    const auto joints = static_cast<Eigen::Index>(ParseUnsigned(head[4], line_no));
    const auto rows = static_cast<Eigen::Index>(ParseUnsigned(head[5], line_no));
    r.base = ParseUnsigned(head[6], line_no);
    r.variant = static_cast<int>(ParseUnsigned(head[7], line_no));
    if (!(r.dt > 0.0) || joints < 1 || rows < 1) {
      throw ConfigError("dataset line " + std::to_string(line_no) +
                        ": dt, joints and rows must be positive");
    }
    r.positions.resize(rows, joints);
    for (Eigen::Index k = 0; k < rows; ++k) {
      if (!std::getline(in, line)) {
        throw ConfigError("dataset: record " + std::to_string(r.id) +
                          " is truncated");
      }
      ++line_no;
      const auto fields = SplitCsv(line);
      if (static_cast<Eigen::Index>(fields.size()) != joints) {
        throw ConfigError("dataset line " + std::to_string(line_no) + ": expected " +
                          std::to_string(joints) + " positions");
      }
      for (Eigen::Index i = 0; i < joints; ++i) {
        r.positions(k, i) = ParseDouble(fields[static_cast<std::size_t>(i)], line_no);
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

void SaveDataset(const std::string& path,
                 const std::vector<trajectory::ReferenceTrajectory>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write dataset: " + path);
  WriteDataset(out, records);
  if (!out) throw ConfigError("failed writing dataset: " + path);
}

std::vector<trajectory::ReferenceTrajectory> LoadDataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read dataset: " + path);
  try {
    return ReadDataset(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<std::string> StepLogColumns(std::size_t joints) {
  std::vector<std::string> cols = {"step", "t_s"};
  const auto per_joint = [&](const std::string& prefix, const std::string& unit) {
    for (std::size_t i = 1; i <= joints; ++i) {
      cols.push_back(prefix + std::to_string(i) + "_" + unit);
    }
  };
  per_joint("p", "rad");
  per_joint("v", "rad_per_s");
  per_joint("a", "rad_per_s2");
  per_joint("j", "rad_per_s3");
  per_joint("raw", "rad_per_s2");
  per_joint("clipped", "rad_per_s2");
  per_joint("ref", "rad");
  for (const char* c : {"R_T", "P_A", "P_J", "P_S", "P_D", "R", "ball_x_m", "ball_y_m",
                        "ball_vx_m_per_s", "ball_vy_m_per_s", "on_plate", "terminated"}) {
    cols.emplace_back(c);
  }
  return cols;
}

void WriteStepLog(std::ostream& out, const limits::JointState& initial,
                  const adaptation::RolloutResult& result,
                  const limits::JointLimits& limits) {
  const auto n = static_cast<std::size_t>(initial.p.size());
  const auto cols = StepLogColumns(n);
  out << kStepLogVersion << '\n';
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out << (c > 0 ? "," : "") << cols[c];
  }
  out << '\n';

  // Initial state: no action, jerk, reference or reward yet.
  out << "0,0,";
  WriteRow(out, initial.p);
  out << ',';
  WriteRow(out, initial.v);
  out << ',';
  WriteRow(out, initial.a);
  WriteBlank(out, 4 * n + 12);
  out << '\n';

  for (const auto& rec : result.log) {
    out << rec.step + 1 << ',' << FormatDouble(rec.time) << ',';
    WriteRow(out, rec.state.p);
    out << ',';
    WriteRow(out, rec.state.v);
    out << ',';
    WriteRow(out, rec.state.a);
    out << ',';
    WriteRow(out, rec.jerk);
    out << ',';
    WriteRow(out, rec.action.cwiseProduct(limits.a_max));
    out << ',';
    WriteRow(out, rec.accel);
    out << ',';
    WriteRow(out, rec.reference);
    const auto& r = rec.reward;
    for (double x : {r.task, r.accel, r.jerk, r.smooth, r.deviation, r.total,
                     rec.ball.position.x(), rec.ball.position.y(),
                     rec.ball.velocity.x(), rec.ball.velocity.y()}) {
      out << ',' << FormatDouble(x);
    }
    out << ',' << (rec.ball.on_plate ? 1 : 0) << ',' << (rec.terminated ? 1 : 0)
        << '\n';
  }
}

}  // namespace trajadapt::io
