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

// The two team experiments as data: a 5x5 grid UAV team with obstacles
// (discrete) and a three-unicycle team (continuous), with their cost
// functions and built-in task sets.

#include <array>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lsoc/composer.hpp"
#include "lsoc/continuous.hpp"
#include "lsoc/discrete.hpp"
#include "lsoc/errors.hpp"
#include "lsoc/graph.hpp"

namespace lsoc {

// ---------------------------------------------------------------------------
// Grid team

struct Cell {
  int row = 1;  // 1-based
  int col = 1;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline constexpr double kObstacleValue = 50.0;
inline constexpr double kFreeValue = 2.5;
inline constexpr double kGridPairWeight = 3.5;

struct GridScenario {
  int rows = 5;
  int cols = 5;
  std::vector<Cell> obstacles{{3, 2}, {4, 2}};
  int n_agents = 3;
  std::vector<std::pair<AgentId, AgentId>> edges{{1, 2}, {2, 3}};
  std::vector<Cell> initial{{1, 5}, {2, 5}, {5, 3}};
  // components[f][agent-1]
  std::vector<std::vector<Cell>> components{{{2, 2}, {2, 2}, {4, 5}}, {{3, 3}, {3, 3}, {5, 4}}};
  std::vector<Cell> composite{{2, 3}, {2, 3}, {5, 5}};
  // Per-agent terminal cost on candidate cells by Manhattan distance to the
  // task's target cell: 0 at the target, near_cost one step away, far_cost
  // otherwise. Joint terminal cost is the sum over subsystem members.
  double near_cost = 0.1;
  double far_cost = 10.0;
  double kernel_width = 0.1;
  // kJointTargets: boundary = the joint target configurations of all tasks.
  // kProduct: boundary = product of per-agent candidate cells.
  enum class Boundary { kJointTargets, kProduct };
  Boundary boundary = Boundary::kJointTargets;

  int n_cells() const { return rows * cols; }
  int cell_index(Cell c) const { return (c.row - 1) * cols + (c.col - 1); }
  Cell cell_at(int idx) const { return {idx / cols + 1, idx % cols + 1}; }
  bool on_grid(Cell c) const { return c.row >= 1 && c.row <= rows && c.col >= 1 && c.col <= cols; }
  bool is_obstacle(Cell c) const {
    for (const auto& o : obstacles) {
      if (o == c) return true;
    }
    return false;
  }
  // o(.): 50 on obstacles, 2.5 elsewhere.
  double state_value(Cell c) const { return is_obstacle(c) ? kObstacleValue : kFreeValue; }

  AgentGraph graph() const { return AgentGraph(n_agents, edges); }

  // Candidate terminal cells of an agent: the union of its targets over all
  // tasks, components and composite.
  std::vector<Cell> candidate_cells(AgentId a) const {
    std::set<Cell> s;
    for (const auto& comp : components) s.insert(comp.at(a - 1));
    s.insert(composite.at(a - 1));
    return {s.begin(), s.end()};
  }

  void validate() const {
    if (rows < 1 || cols < 1) throw ConfigError("grid dimensions must be positive");
    if (static_cast<int>(initial.size()) != n_agents || static_cast<int>(composite.size()) != n_agents) {
      throw ConfigError("one initial and composite cell per agent required");
    }
    if (components.empty()) throw ConfigError("at least one component task required");
    auto check = [&](Cell c, const std::string& what) {
      if (!on_grid(c)) throw ConfigError(what + " cell off grid");
      if (is_obstacle(c)) throw ConfigError(what + " cell is an obstacle");
    };
    for (const auto& c : initial) check(c, "initial");
    for (const auto& c : composite) check(c, "composite target");
    for (const auto& comp : components) {
      if (static_cast<int>(comp.size()) != n_agents) throw ConfigError("component needs one cell per agent");
      for (const auto& c : comp) check(c, "component target");
    }
    for (const auto& o : obstacles) {
      if (!on_grid(o)) throw ConfigError("obstacle cell off grid");
    }
    if (!(near_cost >= 0.0) || !(far_cost >= 0.0)) throw ConfigError("terminal costs must be >= 0");
    if (!(kernel_width > 0.0)) throw ConfigError("kernel_width must be > 0");
  }
};

// Passive wind: uniform over the feasible subset of {stay, up, down, left, right}.
inline AgentKernel wind_kernel(const GridScenario& g) {
  std::vector<Distribution> rows(static_cast<std::size_t>(g.n_cells()));
  static constexpr std::array<std::pair<int, int>, 5> kMoves{{{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  for (int idx = 0; idx < g.n_cells(); ++idx) {
    const Cell c = g.cell_at(idx);
    std::vector<std::size_t> next;
    for (auto [dr, dc] : kMoves) {
      const Cell n{c.row + dr, c.col + dc};
      if (g.on_grid(n)) next.push_back(static_cast<std::size_t>(g.cell_index(n)));
    }
    std::sort(next.begin(), next.end());
    for (std::size_t s : next) rows[idx].push_back({s, 1.0 / static_cast<double>(next.size())});
  }
  return AgentKernel(std::move(rows));
}

// State cost of subsystem `central` (1, 2 or 3) given member cells in
// canonical order. Subsystem 3 scales the obstacle product by 3.5 instead of adding a distance term.
inline double grid_state_cost(const GridScenario& g, AgentId central, std::span<const Cell> cells) {
  auto o = [&](std::size_t k) { return g.state_value(cells[k]); };
  auto pair_term = [&] {
    return kGridPairWeight *
           (std::abs(cells[1].row - cells[0].row) + std::abs(cells[1].col - cells[0].col));
  };
  switch (central) {
    case 1:  // members {1, 2}
      if (cells.size() != 2) break;
      return pair_term() + o(0) * o(1);
    case 2:  // members {1, 2, 3}
      if (cells.size() != 3) break;
      return pair_term() + o(0) * o(1) * o(2);
    case 3:  // members {2, 3}
      if (cells.size() != 2) break;
      return kGridPairWeight * o(0) * o(1);
    default:
      throw ConfigError("unknown grid subsystem id " + std::to_string(central));
  }
  throw StructureError("wrong number of cells for grid subsystem " + std::to_string(central));
}

inline int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

// One subsystem of the grid team with its shared structure.
struct GridSubsystemProblem {
  FactorialSubsystem subsystem;
  JointIndexer indexer{{1}};
  DiscreteJointMDP structure_mdp;  // zero terminal cost; use with_terminal_costs

  std::vector<Cell> cells_of(std::size_t joint, const GridScenario& g) const {
    std::vector<Cell> out(subsystem.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = g.cell_at(indexer.local(joint, k));
    return out;
  }
  std::size_t joint_of(std::span<const Cell> team_cells, const GridScenario& g) const {
    std::vector<int> locals;
    for (AgentId a : subsystem.members) locals.push_back(g.cell_index(team_cells[a - 1]));
    return indexer.flatten(locals);
  }
  // Joint target of a team task restricted to members, as (row, col, ...).
  std::vector<double> joint_target(std::span<const Cell> task) const {
    std::vector<double> t;
    for (AgentId a : subsystem.members) {
      t.push_back(task[a - 1].row);
      t.push_back(task[a - 1].col);
    }
    return t;
  }
};

inline GridSubsystemProblem build_grid_subsystem(const GridScenario& g, const FactorialSubsystem& s,
                                                 const AgentKernel& kernel) {
  GridSubsystemProblem p;
  p.subsystem = s;
  p.indexer = JointIndexer(std::vector<int>(s.size(), g.n_cells()));
  std::vector<std::set<int>> candidates;
  for (AgentId a : s.members) {
    std::set<int> c;
    for (const auto& cell : g.candidate_cells(a)) c.insert(g.cell_index(cell));
    candidates.push_back(std::move(c));
  }
  std::set<std::size_t> joint_targets;
  {
    std::vector<std::vector<Cell>> tasks = g.components;
    tasks.push_back(g.composite);
    for (const auto& task : tasks) {
      std::vector<int> locals;
      for (AgentId a : s.members) locals.push_back(g.cell_index(task[a - 1]));
      joint_targets.insert(p.indexer.flatten(locals));
    }
  }
  std::vector<const AgentKernel*> kernels(s.size(), &kernel);
  const auto& idx = p.indexer;
  p.structure_mdp = DiscreteJointMDP::from_product(
      idx, kernels,
      [&](std::size_t j) {
        std::vector<Cell> cells(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) cells[k] = g.cell_at(idx.local(j, k));
        return grid_state_cost(g, s.central, cells);
      },
      [&](std::size_t j) {
        if (g.boundary == GridScenario::Boundary::kJointTargets) return joint_targets.count(j) > 0;
        for (std::size_t k = 0; k < s.size(); ++k) {
          if (!candidates[k].count(idx.local(j, k))) return false;
        }
        return true;
      },
      [](std::size_t) { return 0.0; });
  return p;
}

// Terminal cost of a team task on a subsystem boundary state.
inline double grid_terminal_cost(const GridScenario& g, const GridSubsystemProblem& p,
                                 std::span<const Cell> task, std::size_t joint) {
  double h = 0.0;
  for (std::size_t k = 0; k < p.subsystem.size(); ++k) {
    const Cell c = g.cell_at(p.indexer.local(joint, k));
    const int d = manhattan(c, task[p.subsystem.members[k] - 1]);
    h += d == 0 ? 0.0 : (d == 1 ? g.near_cost : g.far_cost);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Unicycle team

struct TerminalParams {
  double c = 0.0;
  double d = 2.0;
  double alpha = 0.0;
  friend bool operator==(const TerminalParams&, const TerminalParams&) = default;
};

// h = (d/2)(||p - p_d|| - c) + alpha over (stacked) position coordinates.
inline double linear_terminal_cost(const TerminalParams& p, std::span<const double> positions,
                                   std::span<const double> target_positions) {
  if (positions.size() != target_positions.size()) throw StructureError("position size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double d = positions[i] - target_positions[i];
    s += d * d;
  }
  return 0.5 * p.d * (std::sqrt(s) - p.c) + p.alpha;
}

struct UavComponent {
  std::array<double, 4> target{};  // shared by all agents
  TerminalParams cost;
};

struct UavTeamScenario {
  int n_agents = 3;
  std::vector<std::pair<AgentId, AgentId>> edges{{1, 2}, {2, 3}};
  std::vector<std::array<double, 4>> initial;
  std::vector<UavComponent> components;
  std::array<double, 4> composite_target{};
  // Goal position each agent's running cost measures distance to.
  std::vector<std::array<double, 2>> running_goal;
  std::vector<std::pair<AgentId, AgentId>> coordinated_pairs{{1, 2}};
  double goal_weight = 0.9;
  double pair_weight = 1.5;
  double sigma = 0.05;
  double nu = 0.025;
  double lambda = 1.0;
  double kernel_width = 0.05;
  double acceptance_radius = 3.0;

  AgentGraph graph() const { return AgentGraph(n_agents, edges); }

  static double dist2(double ax, double ay, double bx, double by) {
    const double dx = ax - bx, dy = ay - by;
    return std::sqrt(dx * dx + dy * dy);
  }
  // d_i^max: initial distance to the running goal.
  double goal_reference(AgentId a) const {
    const auto& s = initial.at(a - 1);
    const auto& g = running_goal.at(a - 1);
    return dist2(s[0], s[1], g[0], g[1]);
  }
  // d_ij^max: initial inter-agent distance.
  double pair_reference(AgentId a, AgentId b) const {
    const auto& s = initial.at(a - 1);
    const auto& t = initial.at(b - 1);
    return dist2(s[0], s[1], t[0], t[1]);
  }

  void validate() const {
    if (static_cast<int>(initial.size()) != n_agents || static_cast<int>(running_goal.size()) != n_agents) {
      throw ConfigError("one initial state and running goal per agent required");
    }
    if (components.empty()) throw ConfigError("at least one component task required");
    for (const auto& c : components) {
      if (!(c.cost.d >= 0.0)) throw ConfigError("terminal parameter d must be >= 0");
    }
    if (!(sigma > 0.0) || !(nu > 0.0)) throw ConfigError("noise levels must be > 0");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (!(kernel_width > 0.0)) throw ConfigError("kernel_width must be > 0");
    if (!(acceptance_radius > 0.0)) throw ConfigError("acceptance_radius must be > 0");
  }
};

// Running cost of subsystem `central`: goal term for the central agent plus a
// separation term for each coordinated partner inside the subsystem.
// `joint` holds member states (x, y, v, phi) in canonical order.
inline double uav_running_cost(const UavTeamScenario& sc, const FactorialSubsystem& s,
                               std::span<const double> joint) {
  const int ci = s.central_position();
  if (ci < 0) throw StructureError("central agent missing from subsystem");
  const double* me = joint.data() + 4 * ci;
  const auto& goal = sc.running_goal.at(s.central - 1);
  double q = sc.goal_weight * (UavTeamScenario::dist2(me[0], me[1], goal[0], goal[1]) -
                               sc.goal_reference(s.central));
  for (auto [a, b] : sc.coordinated_pairs) {
    AgentId other = a == s.central ? b : (b == s.central ? a : 0);
    if (other == 0) continue;
    const int oi = s.position_of(other);
    if (oi < 0) continue;
    const double* them = joint.data() + 4 * oi;
    q += sc.pair_weight * (UavTeamScenario::dist2(me[0], me[1], them[0], them[1]) -
                           sc.pair_reference(s.central, other));
  }
  return q;
}

inline std::vector<double> member_positions(std::span<const double> joint) {
  std::vector<double> p;
  for (std::size_t k = 0; k + 3 < joint.size(); k += 4) {
    p.push_back(joint[k]);
    p.push_back(joint[k + 1]);
  }
  return p;
}

// Joint position target of a subsystem for a team target shared by all agents.
inline std::vector<double> joint_position_target(const FactorialSubsystem& s,
                                                 const std::array<double, 4>& target) {
  std::vector<double> t;
  for (std::size_t k = 0; k < s.size(); ++k) {
    t.push_back(target[0]);
    t.push_back(target[1]);
  }
  return t;
}

inline TerminalCostFn uav_terminal_cost(const FactorialSubsystem& s, const UavComponent& c) {
  return [target = joint_position_target(s, c.target), p = c.cost](std::span<const double> joint) {
    return linear_terminal_cost(p, member_positions(joint), target);
  };
}

inline ContinuousCost uav_subsystem_cost(const UavTeamScenario& sc, const FactorialSubsystem& s,
                                         const UavComponent& c) {
  ContinuousCost cost;
  cost.state_cost = [&sc, s](std::span<const double> x, double) { return uav_running_cost(sc, s, x); };
  cost.terminal_cost = uav_terminal_cost(s, c);
  DiffusionModel m = unicycle_team_model(static_cast<int>(s.size()), sc.sigma, sc.nu, sc.lambda);
  cost.control_penalty = cancellation_penalty(m);
  return cost;
}

// ---------------------------------------------------------------------------
// Built-in task sets

enum class BuiltinTask { kGrid, kUavExample1, kUavExample2 };

inline BuiltinTask parse_builtin_task(const std::string& key) {
  if (key == "grid") return BuiltinTask::kGrid;
  if (key == "uav-example1") return BuiltinTask::kUavExample1;
  if (key == "uav-example2") return BuiltinTask::kUavExample2;
  throw ConfigError("unknown scenario key '" + key + "'");
}

inline GridScenario grid_builtin_scenario() { return GridScenario{}; }

inline UavTeamScenario uav_example1_scenario() {
  UavTeamScenario sc;
  sc.initial = {{5, 5, 0.3, 0}, {5, 35, 0.3, 0}, {5, 20, 0.3, 0}};
  const std::array<double, 4> target{30, 20, 0, 0};
  sc.components = {{target, {0, 2, 0}}, {target, {1, 2, 0}}, {target, {0, 4, 1}}};
  sc.composite_target = target;
  sc.running_goal.assign(3, {target[0], target[1]});
  return sc;
}

inline UavTeamScenario uav_example2_scenario() {
  UavTeamScenario sc;
  sc.initial = {{10, 10, 0.3, 0}, {10, 30, 0.3, 0}, {10, 20, 0.3, 0}};
  sc.components = {{{35, 28, 0, 0}, {0, 2, 0}}, {{35, 14, 0, 0}, {0, 2, 0}}};
  sc.composite_target = {35, 20, 0, 0};
  // Shared running cost across the component family: distance to the mean of
  // the component targets.
  sc.running_goal.assign(3, {35.0, 21.0});
  return sc;
}

// Component libraries of a built-in task set, one per subsystem since joint
// target dimensions differ. Tables are left empty.
struct BuiltinTaskSet {
  BuiltinTask task = BuiltinTask::kGrid;
  std::vector<ComponentLibrary> libraries;
  std::vector<std::vector<double>> composite_targets;  // per subsystem
};

inline BuiltinTaskSet build_builtin_tasks(const std::string& key) {
  BuiltinTaskSet out;
  out.task = parse_builtin_task(key);
  auto add = [&](const FactorialSubsystem& s, std::vector<std::vector<double>> targets,
                 std::vector<double> goal, double width) {
    ComponentLibrary lib{KernelSpec::isotropic(width, goal.size()), {SubsystemLibrary{s, {}}}};
    for (std::size_t f = 0; f < targets.size(); ++f) {
      lib.subsystems[0].components.push_back({"component " + std::to_string(f), std::move(targets[f]), std::nullopt});
    }
    out.libraries.push_back(std::move(lib));
    out.composite_targets.push_back(std::move(goal));
  };
  if (out.task == BuiltinTask::kGrid) {
    const GridScenario g = grid_builtin_scenario();
    for (const auto& s : factorize(g.graph())) {
      auto flat = [&](const std::vector<Cell>& task) {
        std::vector<double> t;
        for (AgentId a : s.members) t.insert(t.end(), {double(task[a - 1].row), double(task[a - 1].col)});
        return t;
      };
      std::vector<std::vector<double>> targets;
      for (const auto& c : g.components) targets.push_back(flat(c));
      add(s, std::move(targets), flat(g.composite), g.kernel_width);
    }
  } else {
    const UavTeamScenario sc =
        out.task == BuiltinTask::kUavExample1 ? uav_example1_scenario() : uav_example2_scenario();
    for (const auto& s : factorize(sc.graph())) {
      std::vector<std::vector<double>> targets;
      for (const auto& c : sc.components) targets.push_back(joint_position_target(s, c.target));
      add(s, std::move(targets), joint_position_target(s, sc.composite_target), sc.kernel_width);
    }
  }
  return out;
}

}  // namespace lsoc
