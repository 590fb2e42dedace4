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

// Team execution: every agent acts on the controller of the subsystem it is
// central to (joint policy marginalized onto the agent, or the agent's slice
// of the joint continuous control), and all agents move simultaneously.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lsoc/composer.hpp"
#include "lsoc/continuous.hpp"
#include "lsoc/discrete.hpp"
#include "lsoc/graph.hpp"
#include "lsoc/scenarios.hpp"

namespace lsoc {

// Which controller drives the team: component `index`, or the composite.
struct PolicyChoice {
  bool composite = true;
  std::size_t index = 0;
  static PolicyChoice component(std::size_t f) { return {false, f}; }
  static PolicyChoice composed() { return {true, 0}; }
};

// ---------------------------------------------------------------------------
// Grid team

struct GridTeamSolution {
  GridScenario scenario;
  AgentKernel kernel;
  std::vector<GridSubsystemProblem> problems;      // one per central agent
  std::vector<std::vector<DesirabilityTable>> tables;  // [subsystem][component]
  std::vector<std::vector<double>> weights;            // [subsystem][component]
  std::vector<std::vector<int>> iterations;            // solver iterations
  std::vector<std::vector<double>> residuals;          // linear residuals

  std::vector<std::vector<double>> component_targets(std::size_t i) const {
    std::vector<std::vector<double>> t;
    for (const auto& comp : scenario.components) t.push_back(problems[i].joint_target(comp));
    return t;
  }
  DiscreteJointMDP component_mdp(std::size_t i, std::size_t f) const {
    const auto& p = problems[i];
    const auto& task = scenario.components[f];
    return p.structure_mdp.with_terminal_costs(
        [&](std::size_t j) { return grid_terminal_cost(scenario, p, task, j); });
  }
};

// Builds every subsystem problem and composition weights; tables are left
// empty for the caller to fill (solve or load from cache).
inline GridTeamSolution build_grid_team(const GridScenario& g) {
  g.validate();
  GridTeamSolution sol;
  sol.scenario = g;
  sol.kernel = wind_kernel(g);
  const auto subsystems = factorize(g.graph());
  for (const auto& s : subsystems) {
    sol.problems.push_back(build_grid_subsystem(g, s, sol.kernel));
    const auto& p = sol.problems.back();
    const auto targets = sol.component_targets(sol.problems.size() - 1);
    const auto goal = p.joint_target(g.composite);
    sol.weights.push_back(
        composition_weights(targets, goal, KernelSpec::isotropic(g.kernel_width, goal.size())));
  }
  sol.tables.resize(sol.problems.size());
  sol.iterations.resize(sol.problems.size());
  sol.residuals.resize(sol.problems.size());
  return sol;
}

inline void solve_grid_components(GridTeamSolution& sol, const SolverOptions& opt) {
  for (std::size_t i = 0; i < sol.problems.size(); ++i) {
    const LinearSystem sys(sol.problems[i].structure_mdp);
    sol.tables[i].clear();
    sol.iterations[i].clear();
    sol.residuals[i].clear();
    for (std::size_t f = 0; f < sol.scenario.components.size(); ++f) {
      auto solved = solve(sol.component_mdp(i, f), sys, opt);
      sol.tables[i].push_back(std::move(solved.table));
      sol.iterations[i].push_back(solved.iterations);
      sol.residuals[i].push_back(solved.residual);
    }
  }
}

struct GridStepRecord {
  int step = 0;
  AgentId agent = 0;
  Cell cell;
  Cell next;
  double running_cost = 0.0;
};

struct WeightRecord {
  double time = 0.0;
  AgentId subsystem = 0;
  std::size_t component = 0;
  double weight = 0.0;
};

struct GridEpisode {
  std::vector<std::vector<Cell>> path;  // team cells per step, including start
  std::vector<GridStepRecord> steps;
  std::vector<WeightRecord> weight_trace;
  std::vector<double> terminal_cost;  // per agent, subsystem terminal cost at the end
  bool success = false;
  bool visited_obstacle = false;
  int n_steps = 0;
};

inline GridEpisode run_grid_team(const GridTeamSolution& sol, PolicyChoice choice,
                                 std::uint64_t seed, int step_cap = 200) {
  const auto& g = sol.scenario;
  const std::vector<Cell>& goal = choice.composite ? g.composite : g.components.at(choice.index);
  std::vector<DiscreteJointMDP> task_mdps;
  for (std::size_t i = 0; i < sol.problems.size(); ++i) {
    const auto& p = sol.problems[i];
    task_mdps.push_back(p.structure_mdp.with_terminal_costs(
        [&](std::size_t j) {
          if (!choice.composite) return grid_terminal_cost(g, p, goal, j);
          std::vector<double> h;
          for (const auto& comp : g.components) h.push_back(grid_terminal_cost(g, p, comp, j));
          return composite_terminal_cost(sol.weights[i], h);
        }));
  }

  Rng rng(seed);
  GridEpisode ep;
  std::vector<Cell> team = g.initial;
  ep.path.push_back(team);
  auto at_goal = [&] { return team == goal; };
  for (int step = 0; step < step_cap && !at_goal(); ++step) {
    std::vector<Cell> next = team;
    bool any_moving = false;
    for (std::size_t i = 0; i < sol.problems.size(); ++i) {
      const auto& p = sol.problems[i];
      const AgentId agent = p.subsystem.central;
      const std::size_t j = p.joint_of(team, g);
      GridStepRecord rec{step, agent, team[agent - 1], team[agent - 1], 0.0};
      if (p.structure_mdp.is_boundary(j)) {
        ep.steps.push_back(rec);
        continue;  // absorbed: the central agent holds its cell
      }
      any_moving = true;
      Distribution row;
      if (choice.composite) {
        auto cp = composite_policy_discrete(p.structure_mdp, sol.tables[i], sol.weights[i], j);
        for (std::size_t f = 0; f < cp.mixing.size(); ++f) {
          ep.weight_trace.push_back({static_cast<double>(step), agent, f, cp.mixing[f]});
        }
        row = std::move(cp.row);
      } else {
        row = optimal_joint_policy(p.structure_mdp, sol.tables[i].at(choice.index), j);
      }
      rec.running_cost = running_cost_discrete(p.structure_mdp.state_cost(j), row,
                                               p.structure_mdp.passive_row(j));
      const auto local = marginal_local_policy(row, p.subsystem, p.indexer, agent);
      Distribution local_row;
      for (std::size_t c = 0; c < local.size(); ++c) {
        if (local[c] > 0.0) local_row.push_back({c, local[c]});
      }
      rec.next = g.cell_at(static_cast<int>(sample_from(local_row, rng)));
      next[agent - 1] = rec.next;
      ep.steps.push_back(rec);
    }
    if (!any_moving) break;  // every subsystem absorbed away from the goal
    team = next;
    ep.path.push_back(team);
    ep.n_steps = step + 1;
    for (const auto& c : team) ep.visited_obstacle = ep.visited_obstacle || g.is_obstacle(c);
  }
  ep.success = at_goal();
  for (std::size_t i = 0; i < sol.problems.size(); ++i) {
    const auto& p = sol.problems[i];
    const std::size_t j = p.joint_of(team, g);
    ep.terminal_cost.push_back(p.structure_mdp.is_boundary(j) ? task_mdps[i].terminal_cost(j) : 0.0);
  }
  return ep;
}

// ---------------------------------------------------------------------------
// Unicycle team

enum class ExecutionMode { kReceding, kTape };

struct UavRunParams {
  SamplingParams sampling;
  int episode_steps = 700;
  int control_period = 20;  // integration steps per control query
  ExecutionMode mode = ExecutionMode::kReceding;
  int component_runs = 1;   // independent batches averaged per estimate
};

struct UavStepRecord {
  double time = 0.0;
  AgentId agent = 0;
  std::array<double, 4> state{};
  std::array<double, 2> control{};
  double running_cost = 0.0;  // (q + 1/2 u^T R u) dt over the step
};

struct UavEpisode {
  std::vector<UavStepRecord> steps;
  std::vector<WeightRecord> weight_trace;
  std::vector<std::array<double, 4>> final_state;
  std::vector<double> terminal_cost;  // per agent (subsystem terminal cost)
  std::vector<double> final_distance;
  bool success = false;
};

struct UavTeam {
  UavTeamScenario scenario;
  std::vector<FactorialSubsystem> subsystems;
  std::vector<std::vector<double>> weights;  // [subsystem][component]

  explicit UavTeam(UavTeamScenario sc) : scenario(std::move(sc)) {
    scenario.validate();
    subsystems = factorize(scenario.graph());
    for (const auto& s : subsystems) {
      std::vector<std::vector<double>> targets;
      for (const auto& c : scenario.components) {
        targets.push_back(joint_position_target(s, c.target));
      }
      const auto goal = joint_position_target(s, scenario.composite_target);
      weights.push_back(composition_weights(
          targets, goal, KernelSpec::isotropic(scenario.kernel_width, goal.size())));
    }
  }

  std::vector<double> joint_state(const FactorialSubsystem& s,
                                  const std::vector<std::array<double, 4>>& team) const {
    std::vector<double> x;
    for (AgentId a : s.members) x.insert(x.end(), team[a - 1].begin(), team[a - 1].end());
    return x;
  }

  // Joint control of subsystem i at (team, t); records mixing weights.
  CompositeControl control(std::size_t i, const std::vector<std::array<double, 4>>& team, double t,
                           PolicyChoice choice, const UavRunParams& p, std::uint64_t seed) const {
    const auto& s = subsystems[i];
    const DiffusionModel model =
        unicycle_team_model(static_cast<int>(s.size()), scenario.sigma, scenario.nu, scenario.lambda);
    const ContinuousCost cost = uav_subsystem_cost(scenario, s, scenario.components[0]);
    std::vector<TerminalCostFn> terms;
    std::vector<double> w;
    if (choice.composite) {
      for (const auto& c : scenario.components) terms.push_back(uav_terminal_cost(s, c));
      w = weights[i];
    } else {
      terms.push_back(uav_terminal_cost(s, scenario.components.at(choice.index)));
      w = {1.0};
    }
    const auto x = joint_state(s, team);
    const std::size_t nf = terms.size();
    std::vector<double> mean_z(nf, 0.0);
    std::vector<std::vector<double>> mean_u(nf, std::vector<double>(static_cast<std::size_t>(model.control_dim), 0.0));
    const int runs = std::max(1, p.component_runs);
    std::vector<std::vector<double>> log_z_runs(nf);
    for (int r = 0; r < runs; ++r) {
      const RolloutBatch batch =
          sample_passive_rollouts(model, cost, x, t, p.sampling, stream_seed(seed, i, static_cast<std::uint64_t>(r)));
      for (std::size_t f = 0; f < nf; ++f) {
        const auto sf = batch.path_costs_with(terms[f]);
        log_z_runs[f].push_back(pi_desirability(sf, model.lambda).log_z);
        const auto u = pi_optimal_control(batch, sf, model.noise_scale, model.lambda).control;
        for (std::size_t c = 0; c < u.size(); ++c) mean_u[f][c] += u[c] / runs;
      }
    }
    for (std::size_t f = 0; f < nf; ++f) {
      mean_z[f] = log_sum_exp(log_z_runs[f]) - std::log(static_cast<double>(runs));
    }
    return compose_controls(w, mean_z, mean_u);
  }
};

inline UavEpisode run_uav_team(const UavTeam& team_def, PolicyChoice choice, const UavRunParams& p,
                               std::uint64_t seed) {
  const auto& sc = team_def.scenario;
  if (p.control_period < 1 || p.episode_steps < 0) throw ConfigError("invalid episode parameters");
  const auto goal = choice.composite ? sc.composite_target : sc.components.at(choice.index).target;
  const int n = sc.n_agents;
  const double dt = p.sampling.dt;
  const DiffusionModel single = unicycle_team_model(1, sc.sigma, sc.nu, sc.lambda);
  const auto penalty = cancellation_penalty(single);

  // Controls per agent along the nominal (noise-free) path for tape mode.
  std::vector<std::vector<std::array<double, 2>>> tape;
  auto simulate = [&](bool with_noise, bool record, UavEpisode* ep,
                      std::vector<std::vector<std::array<double, 2>>>* tape_out) {
    std::vector<std::array<double, 4>> team = sc.initial;
    Rng plant(stream_seed(seed, 0x706c616e74ULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    StepWorkspace ws(single);
    std::vector<std::array<double, 2>> u(static_cast<std::size_t>(n), {0.0, 0.0});
    int query = 0;
    for (int step = 0; step < p.episode_steps; ++step) {
      const double t = step * dt;
      if (tape_out || (with_noise && p.mode == ExecutionMode::kReceding)) {
        if (step % p.control_period == 0) {
          for (std::size_t i = 0; i < team_def.subsystems.size(); ++i) {
            const auto& s = team_def.subsystems[i];
            const auto cc = team_def.control(i, team, t, choice, p, stream_seed(seed, static_cast<std::uint64_t>(query) + 1));
            const int ci = s.central_position();
            u[s.central - 1] = {cc.control[2 * ci], cc.control[2 * ci + 1]};
            if (record && ep) {
              for (std::size_t f = 0; f < cc.mixing.size(); ++f) {
                ep->weight_trace.push_back({t, s.central, f, cc.mixing[f]});
              }
            }
          }
          ++query;
        }
        if (tape_out) tape_out->push_back(u);
      } else {
        u = tape.at(static_cast<std::size_t>(step));
      }
      for (int a = 0; a < n; ++a) {
        std::array<double, 2> draws{0.0, 0.0};
        if (with_noise) draws = {normal(plant), normal(plant)};
        if (record && ep) {
          double q = 0.0;
          for (const auto& s : team_def.subsystems) {
            if (s.central == a + 1) q = uav_running_cost(sc, s, team_def.joint_state(s, team));
          }
          const double effort = 0.5 * (penalty[0] * u[a][0] * u[a][0] + penalty[1] * u[a][1] * u[a][1]);
          ep->steps.push_back({t, a + 1, team[a], u[a], (q + effort) * dt});
        }
        std::array<double, 4> nx{};
        euler_maruyama_step(single, team[a], u[a], dt, draws, nx, ws);
        team[a] = nx;
      }
    }
    return team;
  };

  UavEpisode ep;
  if (p.mode == ExecutionMode::kTape) simulate(false, false, nullptr, &tape);
  const auto final_team = simulate(true, true, &ep, nullptr);
  ep.final_state = final_team;
  ep.success = true;
  for (int a = 0; a < n; ++a) {
    const double d = std::hypot(final_team[a][0] - goal[0], final_team[a][1] - goal[1]);
    ep.final_distance.push_back(d);
    ep.success = ep.success && d <= sc.acceptance_radius;
  }
  for (std::size_t i = 0; i < team_def.subsystems.size(); ++i) {
    const auto& s = team_def.subsystems[i];
    const auto x = team_def.joint_state(s, final_team);
    double h;
    if (choice.composite) {
      std::vector<double> hs;
      for (const auto& c : sc.components) hs.push_back(uav_terminal_cost(s, c)(x));
      h = composite_terminal_cost(team_def.weights[i], hs);
    } else {
      h = uav_terminal_cost(s, sc.components[choice.index])(x);
    }
    ep.terminal_cost.push_back(h);
  }
  return ep;
}

}  // namespace lsoc
