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

// Composite-vs-direct check: solve the composite problem directly with the
// composite terminal cost and compare against the weighted sum of component
// desirabilities and the reweighted component policies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lsoc/composer.hpp"
#include "lsoc/discrete.hpp"
#include "lsoc/team.hpp"

namespace lsoc::harness {

struct EquivalenceGap {
  double z_gap = 0.0;       // max |Z_direct - sum_f w_f Z_f| over all states
  double log_z_gap = 0.0;   // same in log space, over states with Z > 0
  double tv_gap = 0.0;      // max total variation over interior states
  double spectral_radius = 0.0;
  int direct_iterations = 0;
};

inline double total_variation(const Distribution& a, const Distribution& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].state < b[j].state)) {
      s += std::abs(a[i++].prob);
    } else if (i == a.size() || b[j].state < a[i].state) {
      s += std::abs(b[j++].prob);
    } else {
      s += std::abs(a[i++].prob - b[j++].prob);
    }
  }
  return 0.5 * s;
}

// `components[f]` are the component terminal costs in boundary order.
inline EquivalenceGap composite_vs_direct(const DiscreteJointMDP& structure,
                                          const std::vector<std::vector<double>>& components,
                                          std::span<const double> weights, const SolverOptions& opt) {
  check_weights(weights);
  const LinearSystem sys(structure);
  std::vector<DesirabilityTable> tables;
  for (const auto& h : components) tables.push_back(solve(structure.with_boundary_costs(h), sys, opt).table);

  std::vector<double> h_comp(structure.boundary().size());
  std::vector<double> hf(components.size());
  for (std::size_t b = 0; b < h_comp.size(); ++b) {
    for (std::size_t f = 0; f < components.size(); ++f) hf[f] = components[f][b];
    h_comp[b] = composite_terminal_cost(weights, hf);
  }
  const DiscreteJointMDP direct_mdp = structure.with_boundary_costs(h_comp);
  const auto direct = solve(direct_mdp, sys, opt);
  const DesirabilityTable composed = composite_desirability(weights, tables);

  EquivalenceGap g;
  g.direct_iterations = direct.iterations;
  g.spectral_radius = sys.spectral_radius();
  for (std::size_t s = 0; s < structure.n_states(); ++s) {
    const double a = direct.table.log_value(s), b = composed.log_value(s);
    g.z_gap = std::max(g.z_gap, std::abs(std::exp(a) - std::exp(b)));
    if (std::isfinite(a) && std::isfinite(b)) g.log_z_gap = std::max(g.log_z_gap, std::abs(a - b));
  }
  for (std::size_t s : structure.interior()) {
    const auto cp = composite_policy_discrete(structure, tables, weights, s);
    const auto opt_row = optimal_joint_policy(direct_mdp, direct.table, s);
    g.tv_gap = std::max(g.tv_gap, total_variation(cp.row, opt_row));
  }
  return g;
}

struct SubsystemGap {
  AgentId subsystem = 0;
  std::size_t n_states = 0;
  EquivalenceGap gap;
};

inline std::vector<SubsystemGap> compare_grid(const GridScenario& g, const SolverOptions& opt) {
  const GridTeamSolution team = build_grid_team(g);
  std::vector<SubsystemGap> out;
  for (std::size_t i = 0; i < team.problems.size(); ++i) {
    const auto& p = team.problems[i];
    std::vector<std::vector<double>> hs;
    for (std::size_t f = 0; f < g.components.size(); ++f) hs.push_back(team.component_mdp(i, f).boundary_costs());
    out.push_back({p.subsystem.central, p.structure_mdp.n_states(),
                   composite_vs_direct(p.structure_mdp, hs, team.weights[i], opt)});
  }
  return out;
}

}  // namespace lsoc::harness
