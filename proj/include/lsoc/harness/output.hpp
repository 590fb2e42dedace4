// Copyright 2026 The LSOC Authors
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

#pragma once

// Trajectory, plot-data, weight-trace and summary files. Numbers are printed
// with %.17g so files round-trip and are byte-stable across runs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsoc/errors.hpp"
#include "lsoc/team.hpp"

namespace lsoc::harness {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path);
}

inline constexpr const char* kGridTrajectoryHeader = "time,agent,row,col,next_row,next_col,running_cost";
inline constexpr const char* kUavTrajectoryHeader = "time,agent,x,y,v,phi,accel,turn_rate,running_cost";

inline void write_grid_trajectory(const std::string& path, const std::vector<GridStepRecord>& steps) {
  auto out = open_out(path);
  out << kGridTrajectoryHeader << "\n";
  for (const auto& r : steps) {
    out << r.step << ',' << r.agent << ',' << r.cell.row << ',' << r.cell.col << ',' << r.next.row << ','
        << r.next.col << ',' << num(r.running_cost) << "\n";
  }
  close_out(out, path);
}

inline void write_uav_trajectory(const std::string& path, const std::vector<UavStepRecord>& steps) {
  auto out = open_out(path);
  out << kUavTrajectoryHeader << "\n";
  for (const auto& r : steps) {
    out << num(r.time) << ',' << r.agent;
    for (double s : r.state) out << ',' << num(s);
    for (double u : r.control) out << ',' << num(u);
    out << ',' << num(r.running_cost) << "\n";
  }
  close_out(out, path);
}

// One series per agent: (x, y) = (col, row) for the grid.
inline void write_grid_plot(const std::string& path, const std::vector<std::vector<Cell>>& team_path) {
  auto out = open_out(path);
  out << "agent,x,y\n";
  const std::size_t n = team_path.empty() ? 0 : team_path.front().size();
  for (std::size_t a = 0; a < n; ++a) {
    for (const auto& cells : team_path) out << a + 1 << ',' << cells[a].col << ',' << cells[a].row << "\n";
  }
  close_out(out, path);
}

inline void write_uav_plot(const std::string& path, const std::vector<UavStepRecord>& steps,
                           const std::vector<std::array<double, 4>>& final_state) {
  auto out = open_out(path);
  out << "agent,x,y\n";
  for (std::size_t a = 0; a < final_state.size(); ++a) {
    for (const auto& r : steps) {
      if (r.agent == static_cast<AgentId>(a + 1)) out << a + 1 << ',' << num(r.state[0]) << ',' << num(r.state[1]) << "\n";
    }
    out << a + 1 << ',' << num(final_state[a][0]) << ',' << num(final_state[a][1]) << "\n";
  }
  close_out(out, path);
}

inline void write_weight_trace(const std::string& path, const std::vector<WeightRecord>& trace) {
  auto out = open_out(path);
  out << "time,subsystem,component,weight\n";
  for (const auto& w : trace) {
    out << num(w.time) << ',' << w.subsystem << ',' << w.component << ',' << num(w.weight) << "\n";
  }
  close_out(out, path);
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  close_out(out, path);
}

}  // namespace lsoc::harness
