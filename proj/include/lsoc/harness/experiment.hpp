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

// Experiment orchestration: one entry point per mode, artifacts under
// config.output_dir, a short human-readable summary on the given stream.
//
//   solve-component  component_<f>.lsz (one block per subsystem), summary.json
//   run-component    trajectory_<r>.csv, plot_<r>.csv, summary.json
//   compose          as run-component plus weights_<r>.csv
//   compare          compare_report.json
//
// Run r uses seed config.seed + r.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsoc/harness/cache.hpp"
#include "lsoc/harness/compare.hpp"
#include "lsoc/harness/config.hpp"
#include "lsoc/harness/output.hpp"
#include "lsoc/team.hpp"

namespace lsoc::harness {

inline std::uint64_t scenario_fingerprint(const ExperimentConfig& c) {
  return fnv1a64(scenario_json(c).dump());
}

inline std::string cache_path(const ExperimentConfig& c, std::size_t f) {
  return (std::filesystem::path(c.output_dir) / ("component_" + std::to_string(f) + ".lsz")).string();
}

inline std::string run_file(const ExperimentConfig& c, const std::string& stem, int r) {
  return (std::filesystem::path(c.output_dir) / (stem + "_" + std::to_string(r) + ".csv")).string();
}

inline Json parameter_echo(const ExperimentConfig& c) {
  Json j;
  j["scenario"] = scenario_json(c);
  j["fingerprint"] = hex64(scenario_fingerprint(c));
  j["mode"] = mode_name(c.mode);
  j["seed"] = c.seed;
  j["runs"] = c.runs;
  j["component"] = c.component;
  j["sampling"] = {{"n_rollouts", c.sampling.n_rollouts},
                   {"dt", c.sampling.dt},
                   {"horizon_steps", c.sampling.horizon_steps}};
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter},
                 {"damping", c.solver.damping}, {"log_space", c.solver.log_space}};
  j["execution"] = {{"mode", c.execution.mode == ExecutionMode::kTape ? "tape" : "receding"},
                    {"episode_steps", c.execution.episode_steps},
                    {"control_period", c.execution.control_period},
                    {"component_runs", c.execution.component_runs},
                    {"step_cap", c.step_cap}};
  return j;
}

// Solves every component on every subsystem, or loads them from caches in
// the output directory when all are present. Mismatched caches are refused.
inline GridTeamSolution grid_components(const ExperimentConfig& c, bool* loaded = nullptr) {
  GridTeamSolution team = build_grid_team(c.grid);
  const std::size_t nf = c.grid.components.size();
  bool all = true;
  for (std::size_t f = 0; f < nf; ++f) all = all && std::filesystem::exists(cache_path(c, f));
  if (loaded) *loaded = all;
  if (!all) {
    solve_grid_components(team, c.solver);
    return team;
  }
  const auto fp = scenario_fingerprint(c);
  for (auto& t : team.tables) t.assign(nf, DesirabilityTable{});
  for (std::size_t f = 0; f < nf; ++f) {
    for (auto& b : read_cache(cache_path(c, f), fp)) {
      bool placed = false;
      for (std::size_t i = 0; i < team.problems.size(); ++i) {
        if (team.problems[i].subsystem.central == b.subsystem && b.component == f) {
          if (b.table.size() != team.problems[i].structure_mdp.n_states()) {
            throw IoError("cache " + cache_path(c, f) + ": state count mismatch");
          }
          team.tables[i][f] = std::move(b.table);
          placed = true;
        }
      }
      if (!placed) throw IoError("cache " + cache_path(c, f) + ": unexpected block");
    }
  }
  for (std::size_t i = 0; i < team.tables.size(); ++i) {
    for (std::size_t f = 0; f < nf; ++f) {
      if (team.tables[i][f].size() == 0) throw IoError("cache " + cache_path(c, f) + ": missing subsystem");
    }
  }
  return team;
}

inline Json solve_components(const ExperimentConfig& c, std::ostream& log) {
  GridTeamSolution team = build_grid_team(c.grid);
  solve_grid_components(team, c.solver);
  const auto fp = scenario_fingerprint(c);
  Json j = parameter_echo(c);
  Json subs = Json::array();
  for (std::size_t f = 0; f < c.grid.components.size(); ++f) {
    std::vector<CacheBlock> blocks;
    for (std::size_t i = 0; i < team.problems.size(); ++i) {
      blocks.push_back({team.problems[i].subsystem.central, f, team.tables[i][f]});
    }
    std::filesystem::create_directories(c.output_dir);
    write_cache(cache_path(c, f), fp, blocks);
    log << "wrote " << cache_path(c, f) << "\n";
  }
  for (std::size_t i = 0; i < team.problems.size(); ++i) {
    const LinearSystem sys(team.problems[i].structure_mdp);
    subs.push_back({{"subsystem", team.problems[i].subsystem.central},
                    {"states", team.problems[i].structure_mdp.n_states()},
                    {"iterations", team.iterations[i]},
                    {"residuals", team.residuals[i]},
                    {"spectral_radius", sys.spectral_radius()},
                    {"weights", team.weights[i]}});
  }
  j["subsystems"] = subs;
  return j;
}

inline Json grid_runs(const ExperimentConfig& c, std::ostream& log) {
  bool loaded = false;
  const GridTeamSolution team = grid_components(c, &loaded);
  const PolicyChoice choice =
      c.mode == Mode::kCompose ? PolicyChoice::composed() : PolicyChoice::component(c.component);
  Json j = parameter_echo(c);
  j["tables_from_cache"] = loaded;
  Json runs = Json::array();
  int successes = 0;
  for (int r = 0; r < c.runs; ++r) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(r);
    const GridEpisode ep = run_grid_team(team, choice, seed, c.step_cap);
    write_grid_trajectory(run_file(c, "trajectory", r), ep.steps);
    write_grid_plot(run_file(c, "plot", r), ep.path);
    if (choice.composite) write_weight_trace(run_file(c, "weights", r), ep.weight_trace);
    double running = 0.0;
    for (const auto& s : ep.steps) running += s.running_cost;
    double terminal = 0.0;
    for (double h : ep.terminal_cost) terminal += h;
    successes += ep.success;
    runs.push_back({{"run", r},
                    {"seed", seed},
                    {"success", ep.success},
                    {"terminated", ep.success || ep.n_steps < c.step_cap},
                    {"steps", ep.n_steps},
                    {"visited_obstacle", ep.visited_obstacle},
                    {"total_running_cost", running},
                    {"terminal_cost", ep.terminal_cost},
                    {"total_cost", running + terminal}});
  }
  j["runs_detail"] = runs;
  j["successes"] = successes;
  log << mode_name(c.mode) << " grid: " << successes << "/" << c.runs << " runs reached the target\n";
  return j;
}

inline Json uav_runs(const ExperimentConfig& c, std::ostream& log) {
  const UavTeam team(c.uav);
  const PolicyChoice choice =
      c.mode == Mode::kCompose ? PolicyChoice::composed() : PolicyChoice::component(c.component);
  UavRunParams p = c.execution;
  p.sampling = c.sampling;
  Json j = parameter_echo(c);
  j["weights"] = team.weights;
  Json runs = Json::array();
  int successes = 0;
  for (int r = 0; r < c.runs; ++r) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(r);
    const UavEpisode ep = run_uav_team(team, choice, p, seed);
    write_uav_trajectory(run_file(c, "trajectory", r), ep.steps);
    write_uav_plot(run_file(c, "plot", r), ep.steps, ep.final_state);
    if (choice.composite) write_weight_trace(run_file(c, "weights", r), ep.weight_trace);
    double running = 0.0;
    for (const auto& s : ep.steps) running += s.running_cost;
    double terminal = 0.0;
    for (double h : ep.terminal_cost) terminal += h;
    successes += ep.success;
    runs.push_back({{"run", r},
                    {"seed", seed},
                    {"success", ep.success},
                    {"terminated", true},
                    {"final_state", ep.final_state},
                    {"final_distance", ep.final_distance},
                    {"total_running_cost", running},
                    {"terminal_cost", ep.terminal_cost},
                    {"total_cost", running + terminal}});
  }
  j["runs_detail"] = runs;
  j["successes"] = successes;
  log << mode_name(c.mode) << " " << task_key(c.task) << ": " << successes << "/" << c.runs
      << " runs ended within " << c.uav.acceptance_radius << " of the target\n";
  return j;
}

inline Json compare_report(const ExperimentConfig& c, double tolerance = 1e-9) {
  Json j = parameter_echo(c);
  Json subs = Json::array();
  bool pass = true;
  for (const auto& s : compare_grid(c.grid, c.solver)) {
    const bool ok = s.gap.z_gap <= tolerance && s.gap.tv_gap <= tolerance;
    pass = pass && ok;
    subs.push_back({{"subsystem", s.subsystem},
                    {"states", s.n_states},
                    {"max_z_gap", s.gap.z_gap},
                    {"max_log_z_gap", s.gap.log_z_gap},
                    {"max_tv_gap", s.gap.tv_gap},
                    {"spectral_radius", s.gap.spectral_radius},
                    {"pass", ok}});
  }
  j["tolerance"] = tolerance;
  j["subsystems"] = subs;
  j["pass"] = pass;
  return j;
}

inline Json weight_report(const ExperimentConfig& c) {
  Json j = parameter_echo(c);
  if (c.discrete()) {
    const GridTeamSolution team = build_grid_team(c.grid);
    Json subs = Json::array();
    for (std::size_t i = 0; i < team.problems.size(); ++i) {
      subs.push_back({{"subsystem", team.problems[i].subsystem.central}, {"weights", team.weights[i]}});
    }
    j["subsystems"] = subs;
  } else {
    const UavTeam team(c.uav);
    Json subs = Json::array();
    for (std::size_t i = 0; i < team.subsystems.size(); ++i) {
      subs.push_back({{"subsystem", team.subsystems[i].central}, {"weights", team.weights[i]}});
    }
    j["subsystems"] = subs;
  }
  return j;
}

inline Json run_experiment(const ExperimentConfig& c, std::ostream& log) {
  validate(c);
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + c.output_dir + ": " + ec.message());
  Json summary;
  switch (c.mode) {
    case Mode::kSolveComponent:
      summary = solve_components(c, log);
      break;
    case Mode::kRunComponent:
    case Mode::kCompose:
      summary = c.discrete() ? grid_runs(c, log) : uav_runs(c, log);
      break;
    case Mode::kCompare: {
      summary = compare_report(c);
      write_json((std::filesystem::path(c.output_dir) / "compare_report.json").string(), summary);
      log << "compare: " << (summary["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
      for (const auto& s : summary["subsystems"]) {
        log << "  subsystem " << s["subsystem"] << ": max |dZ| " << s["max_z_gap"] << ", max TV "
            << s["max_tv_gap"] << "\n";
      }
      return summary;
    }
  }
  write_json((std::filesystem::path(c.output_dir) / "summary.json").string(), summary);
  return summary;
}

}  // namespace lsoc::harness
