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

// Experiment configuration. The format is JSON; see README.md for the grammar.
// Every level is checked against an allow-list of keys.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lsoc/continuous.hpp"
#include "lsoc/discrete.hpp"
#include "lsoc/errors.hpp"
#include "lsoc/scenarios.hpp"
#include "lsoc/team.hpp"

namespace lsoc::harness {

using Json = nlohmann::json;

enum class Mode { kSolveComponent, kRunComponent, kCompose, kCompare };

inline Mode parse_mode(const std::string& s) {
  if (s == "solve-component") return Mode::kSolveComponent;
  if (s == "run-component") return Mode::kRunComponent;
  if (s == "compose") return Mode::kCompose;
  if (s == "compare") return Mode::kCompare;
  throw ConfigError("mode: unknown value '" + s + "'");
}

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kSolveComponent: return "solve-component";
    case Mode::kRunComponent: return "run-component";
    case Mode::kCompose: return "compose";
    case Mode::kCompare: return "compare";
  }
  return "?";
}

struct ExperimentConfig {
  BuiltinTask task = BuiltinTask::kGrid;
  GridScenario grid;
  UavTeamScenario uav;
  Mode mode = Mode::kCompose;
  std::uint64_t seed = 0;
  int runs = 1;
  std::size_t component = 0;  // run-component
  SamplingParams sampling;
  SolverOptions solver;
  UavRunParams execution;     // sampling is copied in at load time
  int step_cap = 200;
  std::string output_dir = "lsoc_out";

  bool discrete() const { return task == BuiltinTask::kGrid; }
};

namespace detail {

// Reads keys from one JSON object, remembering which were consumed.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(where(key) + "expected a number");
    return v.get<double>();
  }
  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(where(key) + "must be > 0");
    return v;
  }
  double non_negative(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v >= 0.0)) throw ConfigError(where(key) + "must be >= 0");
    return v;
  }
  int integer(const std::string& key, int fallback, int min) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + "expected an integer");
    const auto x = v.get<long long>();
    if (x < min || x > 1'000'000'000) {
      throw ConfigError(where(key) + "must be >= " + std::to_string(min));
    }
    return static_cast<int>(x);
  }
  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    throw ConfigError(where(key) + "expected a non-negative integer");
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(where(key) + "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::size_t n) {
    const Json& v = raw(key);
    return numbers_of(v, key, n);
  }
  std::vector<double> numbers_of(const Json& v, const std::string& key, std::size_t n) const {
    if (!v.is_array() || (n && v.size() != n)) {
      throw ConfigError(where(key) + "expected an array of " + std::to_string(n) + " numbers");
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + "expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::string where(const std::string& key) const {
    std::string p = path_;
    if (!key.empty()) p += p.empty() ? key : "." + key;
    return p.empty() ? "" : p + ": ";
  }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(where(it.key()) + "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline Cell read_cell(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw ConfigError(path + ": expected a cell [row, col]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

inline std::vector<Cell> read_cells(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of cells");
  std::vector<Cell> out;
  for (const auto& e : v) out.push_back(read_cell(e, path));
  return out;
}

inline std::vector<std::pair<AgentId, AgentId>> read_edges(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of [a, b] pairs");
  std::vector<std::pair<AgentId, AgentId>> out;
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
      throw ConfigError(path + ": expected an array of [a, b] pairs");
    }
    out.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return out;
}

inline void apply_grid(Section& s, GridScenario& g) {
  g.rows = s.integer("rows", g.rows, 1);
  g.cols = s.integer("cols", g.cols, 1);
  g.n_agents = s.integer("n_agents", g.n_agents, 1);
  if (s.has("edges")) g.edges = read_edges(s.raw("edges"), s.child("edges"));
  if (s.has("obstacles")) g.obstacles = read_cells(s.raw("obstacles"), s.child("obstacles"));
  if (s.has("initial")) g.initial = read_cells(s.raw("initial"), s.child("initial"));
  if (s.has("composite")) g.composite = read_cells(s.raw("composite"), s.child("composite"));
  if (s.has("components")) {
    const Json& v = s.raw("components");
    if (!v.is_array()) throw ConfigError(s.child("components") + ": expected an array of tasks");
    g.components.clear();
    for (const auto& t : v) g.components.push_back(read_cells(t, s.child("components")));
  }
  g.near_cost = s.non_negative("near_cost", g.near_cost);
  g.far_cost = s.non_negative("far_cost", g.far_cost);
  g.kernel_width = s.positive("kernel_width", g.kernel_width);
  const std::string b = s.string("boundary", g.boundary == GridScenario::Boundary::kProduct ? "product" : "joint-targets");
  if (b == "product") {
    g.boundary = GridScenario::Boundary::kProduct;
  } else if (b == "joint-targets") {
    g.boundary = GridScenario::Boundary::kJointTargets;
  } else {
    throw ConfigError(s.child("boundary") + ": expected 'joint-targets' or 'product'");
  }
}

inline std::array<double, 4> to4(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

inline void apply_uav(Section& s, UavTeamScenario& u) {
  u.n_agents = s.integer("n_agents", u.n_agents, 1);
  if (s.has("edges")) u.edges = read_edges(s.raw("edges"), s.child("edges"));
  if (s.has("coordinated_pairs")) {
    u.coordinated_pairs = read_edges(s.raw("coordinated_pairs"), s.child("coordinated_pairs"));
  }
  if (s.has("initial")) {
    const Json& v = s.raw("initial");
    if (!v.is_array()) throw ConfigError(s.child("initial") + ": expected an array of states");
    u.initial.clear();
    for (const auto& e : v) u.initial.push_back(to4(s.numbers_of(e, "initial", 4)));
  }
  if (s.has("running_goal")) {
    const Json& v = s.raw("running_goal");
    if (!v.is_array()) throw ConfigError(s.child("running_goal") + ": expected an array of positions");
    u.running_goal.clear();
    for (const auto& e : v) {
      const auto p = s.numbers_of(e, "running_goal", 2);
      u.running_goal.push_back({p[0], p[1]});
    }
  }
  if (s.has("components")) {
    const Json& v = s.raw("components");
    if (!v.is_array()) throw ConfigError(s.child("components") + ": expected an array of tasks");
    u.components.clear();
    for (std::size_t f = 0; f < v.size(); ++f) {
      Section c(v[f], s.child("components[" + std::to_string(f) + "]"));
      UavComponent comp;
      comp.target = to4(c.numbers("target", 4));
      comp.cost.c = c.number("c", 0.0);
      comp.cost.d = c.non_negative("d", 2.0);
      comp.cost.alpha = c.number("alpha", 0.0);
      c.finish();
      u.components.push_back(comp);
    }
  }
  if (s.has("composite_target")) u.composite_target = to4(s.numbers("composite_target", 4));
  u.goal_weight = s.number("goal_weight", u.goal_weight);
  u.pair_weight = s.number("pair_weight", u.pair_weight);
  u.sigma = s.positive("sigma", u.sigma);
  u.nu = s.positive("nu", u.nu);
  u.lambda = s.positive("lambda", u.lambda);
  u.kernel_width = s.positive("kernel_width", u.kernel_width);
  u.acceptance_radius = s.positive("acceptance_radius", u.acceptance_radius);
}

}  // namespace detail

inline std::string task_key(BuiltinTask t) {
  switch (t) {
    case BuiltinTask::kGrid: return "grid";
    case BuiltinTask::kUavExample1: return "uav-example1";
    case BuiltinTask::kUavExample2: return "uav-example2";
  }
  return "?";
}

// Canonical form of the resolved scenario (keys sorted by the JSON library).
inline Json scenario_json(const ExperimentConfig& c) {
  Json j;
  j["base"] = task_key(c.task);
  if (c.discrete()) {
    const auto& g = c.grid;
    auto cells = [](const std::vector<Cell>& v) {
      Json a = Json::array();
      for (const auto& x : v) a.push_back({x.row, x.col});
      return a;
    };
    j["rows"] = g.rows;
    j["cols"] = g.cols;
    j["n_agents"] = g.n_agents;
    j["edges"] = g.edges;
    j["obstacles"] = cells(g.obstacles);
    j["initial"] = cells(g.initial);
    j["composite"] = cells(g.composite);
    Json comps = Json::array();
    for (const auto& t : g.components) comps.push_back(cells(t));
    j["components"] = comps;
    j["near_cost"] = g.near_cost;
    j["far_cost"] = g.far_cost;
    j["kernel_width"] = g.kernel_width;
    j["boundary"] = g.boundary == GridScenario::Boundary::kProduct ? "product" : "joint-targets";
  } else {
    const auto& u = c.uav;
    j["n_agents"] = u.n_agents;
    j["edges"] = u.edges;
    j["coordinated_pairs"] = u.coordinated_pairs;
    j["initial"] = u.initial;
    j["running_goal"] = u.running_goal;
    Json comps = Json::array();
    for (const auto& f : u.components) {
      comps.push_back({{"target", f.target}, {"c", f.cost.c}, {"d", f.cost.d}, {"alpha", f.cost.alpha}});
    }
    j["components"] = comps;
    j["composite_target"] = u.composite_target;
    j["goal_weight"] = u.goal_weight;
    j["pair_weight"] = u.pair_weight;
    j["sigma"] = u.sigma;
    j["nu"] = u.nu;
    j["lambda"] = u.lambda;
    j["kernel_width"] = u.kernel_width;
    j["acceptance_radius"] = u.acceptance_radius;
  }
  return j;
}

inline ExperimentConfig default_config(BuiltinTask task) {
  ExperimentConfig c;
  c.task = task;
  switch (task) {
    case BuiltinTask::kGrid: c.grid = grid_builtin_scenario(); break;
    case BuiltinTask::kUavExample1: c.uav = uav_example1_scenario(); break;
    case BuiltinTask::kUavExample2: c.uav = uav_example2_scenario(); break;
  }
  c.execution.sampling = c.sampling;
  return c;
}

inline void validate(const ExperimentConfig& c) {
  if (c.discrete()) {
    c.grid.validate();
    if (c.component >= c.grid.components.size()) throw ConfigError("component: index out of range");
  } else {
    c.uav.validate();
    if (c.component >= c.uav.components.size()) throw ConfigError("component: index out of range");
    if (c.mode == Mode::kSolveComponent || c.mode == Mode::kCompare) {
      throw ConfigError("mode: '" + mode_name(c.mode) + "' requires a discrete scenario");
    }
  }
  if (c.runs < 1) throw ConfigError("runs: must be >= 1");
  if (c.sampling.n_rollouts < 1) throw ConfigError("n_rollouts: must be >= 1");
  if (!(c.sampling.dt > 0.0)) throw ConfigError("dt: must be > 0");
  if (c.sampling.horizon_steps < 1) throw ConfigError("horizon_steps: must be >= 1");
  if (c.sampling.threads < 1) throw ConfigError("threads: must be >= 1");
  if (!(c.solver.tol > 0.0)) throw ConfigError("tol: must be > 0");
  if (c.solver.max_iter < 1) throw ConfigError("max_iter: must be >= 1");
  if (c.execution.episode_steps < 1) throw ConfigError("episode_steps: must be >= 1");
  if (c.execution.control_period < 1) throw ConfigError("control_period: must be >= 1");
  if (c.execution.component_runs < 1) throw ConfigError("component_runs: must be >= 1");
  if (c.step_cap < 1) throw ConfigError("step_cap: must be >= 1");
  if (c.output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

// Parse errors report line and column; validation errors name the field.
inline ExperimentConfig load_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }

  detail::Section top(j, "");
  BuiltinTask task = BuiltinTask::kGrid;
  std::optional<Json> inline_block;
  if (!top.has("scenario")) throw ConfigError("scenario: required");
  const Json& sc = top.raw("scenario");
  if (sc.is_string()) {
    task = parse_builtin_task(sc.get<std::string>());
  } else if (sc.is_object()) {
    if (!sc.contains("base") || !sc["base"].is_string()) throw ConfigError("scenario.base: required string");
    task = parse_builtin_task(sc["base"].get<std::string>());
    inline_block = sc;
  } else {
    throw ConfigError("scenario: expected a key or an object");
  }

  ExperimentConfig c = default_config(task);
  if (inline_block) {
    detail::Section s(*inline_block, "scenario");
    s.raw("base");
    if (c.discrete()) {
      detail::apply_grid(s, c.grid);
    } else {
      detail::apply_uav(s, c.uav);
    }
    s.finish();
  }

  c.mode = parse_mode(top.string("mode", "compose"));
  c.seed = top.unsigned64("seed", 0);
  c.runs = top.integer("runs", 1, 1);
  c.component = static_cast<std::size_t>(top.integer("component", 0, 0));
  c.output_dir = top.string("output_dir", c.output_dir);

  if (top.has("sampling")) {
    detail::Section s(top.raw("sampling"), "sampling");
    if (s.has("dt")) {
      const double dt = s.number("dt", 0.0);
      if (!(dt > 0.0)) throw ConfigError("dt: must be > 0");
      c.sampling.dt = dt;
    }
    c.sampling.n_rollouts = s.integer("n_rollouts", c.sampling.n_rollouts, 1);
    c.sampling.horizon_steps = s.integer("horizon_steps", c.sampling.horizon_steps, 1);
    c.sampling.threads = s.integer("threads", c.sampling.threads, 1);
    s.finish();
  }
  if (top.has("solver")) {
    detail::Section s(top.raw("solver"), "solver");
    if (s.has("tol")) {
      const double tol = s.number("tol", 0.0);
      if (!(tol > 0.0)) throw ConfigError("tol: must be > 0");
      c.solver.tol = tol;
    }
    c.solver.max_iter = s.integer("max_iter", c.solver.max_iter, 1);
    c.solver.damping = s.non_negative("damping", c.solver.damping);
    if (!(c.solver.damping < 1.0)) throw ConfigError("damping: must be < 1");
    if (s.has("log_space")) {
      const Json& v = s.raw("log_space");
      if (!v.is_boolean()) throw ConfigError("solver.log_space: expected a boolean");
      c.solver.log_space = v.get<bool>();
    }
    s.finish();
  }
  if (top.has("kernel")) {
    detail::Section s(top.raw("kernel"), "kernel");
    const double w = s.positive("width", c.discrete() ? c.grid.kernel_width : c.uav.kernel_width);
    (c.discrete() ? c.grid.kernel_width : c.uav.kernel_width) = w;
    s.finish();
  }
  if (top.has("execution")) {
    detail::Section s(top.raw("execution"), "execution");
    const std::string m = s.string("mode", "receding");
    if (m == "receding") {
      c.execution.mode = ExecutionMode::kReceding;
    } else if (m == "tape") {
      c.execution.mode = ExecutionMode::kTape;
    } else {
      throw ConfigError("execution.mode: expected 'receding' or 'tape'");
    }
    c.execution.episode_steps = s.integer("episode_steps", c.execution.episode_steps, 1);
    c.execution.control_period = s.integer("control_period", c.execution.control_period, 1);
    c.execution.component_runs = s.integer("component_runs", c.execution.component_runs, 1);
    c.step_cap = s.integer("step_cap", c.step_cap, 1);
    s.finish();
  }
  top.finish();
  c.execution.sampling = c.sampling;
  validate(c);
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str());
}

}  // namespace lsoc::harness
