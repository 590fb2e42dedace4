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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lsoc/harness/experiment.hpp"
#include "test_util.hpp"

namespace lsoc::harness {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("lsoc_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    load_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, BuiltInDefaults) {
  const auto c = load_config(R"({"scenario": "grid"})");
  EXPECT_EQ(c.task, BuiltinTask::kGrid);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.mode, Mode::kCompose);
  EXPECT_EQ(c.runs, 1);
  EXPECT_EQ(c.step_cap, 200);
  EXPECT_EQ(scenario_json(c), scenario_json(default_config(BuiltinTask::kGrid)));
  const auto u = load_config(R"({"scenario": "uav-example2", "seed": 12})");
  EXPECT_EQ(u.seed, 12u);
  EXPECT_EQ(u.uav.composite_target, (std::array<double, 4>{35, 20, 0, 0}));
}

TEST(Config, ValidationNamesTheField) {
  EXPECT_NE(error_of(R"({"scenario": "grid", "sampling": {"dt": -0.1}})").find("dt"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": "grid", "solver": {"tol": 0}})").find("tol"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": "grid", "runs": 0})").find("runs"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": "grid", "mode": "fly"})").find("mode"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": "uav-example2", "mode": "compare"})").find("mode"), std::string::npos);
  EXPECT_NE(error_of(R"({"mode": "compose"})").find("scenario"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": "maze"})").find("maze"), std::string::npos);
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_NE(error_of(R"({"scenario": "grid", "sede": 3})").find("sede"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": "grid", "sampling": {"n": 3}})").find("sampling.n"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": {"base": "grid", "colour": 1}})").find("colour"), std::string::npos);
}

TEST(Config, ParseErrorReportsLineAndColumn) {
  const std::string msg = error_of("{\n  \"scenario\": \"grid\",\n  \"seed\": ,\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, InlineOverrides) {
  const auto c = load_config(R"({
    "scenario": {"base": "grid", "obstacles": [[4, 4]], "initial": [[1, 1], [1, 2], [5, 1]]},
    "sampling": {"n_rollouts": 10}, "execution": {"step_cap": 50}, "kernel": {"width": 0.3}})");
  EXPECT_EQ(c.grid.obstacles, (std::vector<Cell>{{4, 4}}));
  EXPECT_EQ(c.grid.initial[2], (Cell{5, 1}));
  EXPECT_EQ(c.sampling.n_rollouts, 10);
  EXPECT_EQ(c.step_cap, 50);
  EXPECT_EQ(c.grid.kernel_width, 0.3);
}

// Every scenario constant written out and read back reproduces itself.
TEST(Config, ScenarioRoundTripsBitExactly) {
  for (auto task : {BuiltinTask::kGrid, BuiltinTask::kUavExample1, BuiltinTask::kUavExample2}) {
    const auto base = default_config(task);
    Json j;
    j["scenario"] = scenario_json(base);
    const auto c = load_config(j.dump());
    EXPECT_EQ(scenario_json(c).dump(), scenario_json(base).dump()) << task_key(task);
    EXPECT_EQ(scenario_fingerprint(c), scenario_fingerprint(base));
  }
  auto moved = default_config(BuiltinTask::kGrid);
  moved.grid.near_cost = 0.2;
  EXPECT_NE(scenario_fingerprint(moved), scenario_fingerprint(default_config(BuiltinTask::kGrid)));
}

TEST(Cache, RoundTripIsBitExact) {
  const auto dir = scratch("cache");
  std::mt19937_64 rng(1);
  const auto mdp = lsoc::testing::random_mdp(rng, 40, 4, 3, 0.0, 30.0);
  const auto t = solve(mdp).table;
  std::vector<double> lz = t.log_values();
  lz.push_back(kNegInf);
  const DesirabilityTable with_zero(lz);
  const std::string path = (dir / "a.lsz").string();
  write_cache(path, 0x1234, {{1, 0, t}, {3, 1, with_zero}});
  const auto back = read_cache(path, 0x1234);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].subsystem, 1);
  EXPECT_EQ(back[1].component, 1u);
  EXPECT_EQ(back[0].table.log_values(), t.log_values());
  EXPECT_EQ(back[1].table.log_values(), lz);
  for (std::size_t s = 0; s < t.size(); ++s) EXPECT_EQ(back[0].table.value(s), t.value(s));
}

TEST(Cache, MismatchedFingerprintIsRefused) {
  const auto dir = scratch("cache_fp");
  const std::string path = (dir / "a.lsz").string();
  write_cache(path, 7, {{1, 0, DesirabilityTable::from_values(std::vector<double>{0.5})}});
  EXPECT_THROW(read_cache(path, 8), IoError);
  std::ofstream(path) << "lsoc-desirability 1\nfingerprint 0000000000000007\nsubsystem 1\n";
  EXPECT_THROW(read_cache(path, 7), IoError);
  EXPECT_THROW(read_cache((dir / "missing.lsz").string(), 7), IoError);
}

TEST(Output, EmptyTrajectoryIsHeaderOnly) {
  const auto dir = scratch("empty");
  write_grid_trajectory((dir / "g.csv").string(), {});
  write_uav_trajectory((dir / "u.csv").string(), {});
  EXPECT_EQ(slurp(dir / "g.csv"), std::string(kGridTrajectoryHeader) + "\n");
  EXPECT_EQ(slurp(dir / "u.csv"), std::string(kUavTrajectoryHeader) + "\n");
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

ExperimentConfig grid_run_config(const fs::path& dir, std::uint64_t seed) {
  auto c = default_config(BuiltinTask::kGrid);
  c.output_dir = dir.string();
  c.seed = seed;
  c.runs = 2;
  return c;
}

TEST(Experiment, GridComposeArtifacts) {
  const auto dir = scratch("compose");
  std::ostringstream log;
  const auto summary = run_experiment(grid_run_config(dir, 7), log);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  for (int r = 0; r < 2; ++r) {
    const auto suffix = "_" + std::to_string(r) + ".csv";
    const auto plot = read_csv(dir / ("plot" + suffix));
    std::set<std::string> series;
    for (std::size_t k = 1; k < plot.size(); ++k) series.insert(plot[k][0]);
    EXPECT_EQ(series.size(), 3u);

    const auto traj = read_csv(dir / ("trajectory" + suffix));
    ASSERT_GE(traj.size(), 1u);
    EXPECT_EQ(traj[0].back(), "running_cost");
    double sum = 0.0;
    int prev = -1;
    for (std::size_t k = 1; k < traj.size(); ++k) {
      sum += std::stod(traj[k].back());
      EXPECT_GE(std::stoi(traj[k][0]), prev);
      prev = std::stoi(traj[k][0]);
    }
    const auto& run = summary["runs_detail"][r];
    EXPECT_NEAR(run["total_running_cost"].get<double>(), sum, 1e-9);
    double terminal = 0.0;
    for (double h : run["terminal_cost"]) terminal += h;
    EXPECT_NEAR(run["total_cost"].get<double>(), sum + terminal, 1e-9);
    EXPECT_TRUE(fs::exists(dir / ("weights" + suffix)));
  }
  EXPECT_EQ(summary["seed"].get<std::uint64_t>(), 7u);
  EXPECT_EQ(summary["runs_detail"][1]["seed"].get<std::uint64_t>(), 8u);
}

TEST(Experiment, GridComposeIsByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream log;
  run_experiment(grid_run_config(a, 7), log);
  run_experiment(grid_run_config(b, 7), log);
  for (const char* f : {"trajectory_0.csv", "trajectory_1.csv", "plot_0.csv", "weights_0.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  auto ja = Json::parse(slurp(a / "summary.json"));
  auto jb = Json::parse(slurp(b / "summary.json"));
  EXPECT_EQ(ja["runs_detail"], jb["runs_detail"]);
}

TEST(Experiment, SolveWritesOneCachePerComponentAndReloads) {
  const auto dir = scratch("solve");
  auto c = grid_run_config(dir, 7);
  c.mode = Mode::kSolveComponent;
  std::ostringstream log;
  run_experiment(c, log);
  EXPECT_TRUE(fs::exists(dir / "component_0.lsz"));
  EXPECT_TRUE(fs::exists(dir / "component_1.lsz"));
  EXPECT_FALSE(fs::exists(dir / "component_2.lsz"));
  EXPECT_EQ(read_cache((dir / "component_0.lsz").string(), scenario_fingerprint(c)).size(), 3u);

  // Composing from caches gives the same episodes as solving afresh.
  c.mode = Mode::kCompose;
  const auto cached = run_experiment(c, log);
  EXPECT_TRUE(cached["tables_from_cache"].get<bool>());
  const auto fresh_dir = scratch("solve_fresh");
  const auto fresh = run_experiment(grid_run_config(fresh_dir, 7), log);
  EXPECT_EQ(slurp(dir / "trajectory_1.csv"), slurp(fresh_dir / "trajectory_1.csv"));
  EXPECT_EQ(cached["successes"], fresh["successes"]);

  // A different scenario refuses these caches.
  c.grid.far_cost = 9.0;
  EXPECT_THROW(run_experiment(c, log), IoError);
}

TEST(Experiment, RunComponentHasNoWeightTrace) {
  const auto dir = scratch("component");
  auto c = grid_run_config(dir, 1);
  c.mode = Mode::kRunComponent;
  c.component = 1;
  c.runs = 1;
  c.step_cap = 30;
  std::ostringstream log;
  run_experiment(c, log);
  EXPECT_TRUE(fs::exists(dir / "trajectory_0.csv"));
  EXPECT_FALSE(fs::exists(dir / "weights_0.csv"));
}

TEST(Experiment, UavShortRunArtifacts) {
  const auto dir = scratch("uav");
  auto c = default_config(BuiltinTask::kUavExample2);
  c.output_dir = dir.string();
  c.sampling.n_rollouts = 40;
  c.sampling.horizon_steps = 10;
  c.execution.episode_steps = 20;
  c.execution.control_period = 10;
  std::ostringstream log;
  const auto summary = run_experiment(c, log);
  const auto traj = read_csv(dir / "trajectory_0.csv");
  EXPECT_EQ(traj[0], (std::vector<std::string>{"time", "agent", "x", "y", "v", "phi", "accel", "turn_rate", "running_cost"}));
  EXPECT_EQ(traj.size(), 1u + 20u * 3u);
  double sum = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) sum += std::stod(traj[k].back());
  EXPECT_NEAR(summary["runs_detail"][0]["total_running_cost"].get<double>(), sum, 1e-9);
  const auto w = read_csv(dir / "weights_0.csv");
  EXPECT_EQ(w.size(), 1u + 2u * 3u * 2u);
}

TEST(Compare, SingleComponentGapsAreZero) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto mdp = lsoc::testing::random_mdp(rng, 20, 4, 3, 0.0, 2.0);
    const auto h = lsoc::testing::random_boundary_costs(rng, mdp.boundary().size(), 5.0);
    const auto g = composite_vs_direct(mdp, {h}, std::vector<double>{1.0}, SolverOptions{});
    EXPECT_EQ(g.z_gap, 0.0);
    EXPECT_EQ(g.tv_gap, 0.0);
  }
}

TEST(Compare, RandomMdpsPass) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mdp = lsoc::testing::random_mdp(rng, 20, 2 + trial % 5, 4, 0.0, 3.0);
    const std::size_t nf = 1 + trial % 3;
    std::vector<std::vector<double>> hs;
    std::vector<double> lw;
    for (std::size_t f = 0; f < nf; ++f) {
      hs.push_back(lsoc::testing::random_boundary_costs(rng, mdp.boundary().size(), 6.0));
      lw.push_back(std::normal_distribution<double>(0.0, 1.0)(rng));
    }
    const auto g = composite_vs_direct(mdp, hs, normalize_log_weights(lw), SolverOptions{});
    EXPECT_LE(g.z_gap, 1e-9);
    EXPECT_LE(g.tv_gap, 1e-9);
    EXPECT_LT(g.spectral_radius, 1.0);
  }
}

TEST(Compare, ReportFile) {
  const auto dir = scratch("compare");
  auto c = default_config(BuiltinTask::kGrid);
  c.mode = Mode::kCompare;
  c.output_dir = dir.string();
  std::ostringstream log;
  const auto r = run_experiment(c, log);
  EXPECT_TRUE(r["pass"].get<bool>());
  EXPECT_EQ(r["subsystems"].size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "compare_report.json"));
  EXPECT_NE(log.str().find("pass"), std::string::npos);
}

}  // namespace
}  // namespace lsoc::harness
