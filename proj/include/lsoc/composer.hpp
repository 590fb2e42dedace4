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

// Composition of solved component tasks into a controller for a new task.
// Components share dynamics, running cost and interior set and differ only in
// terminal cost. Kernel weights over task targets,
//   w_f ~ exp(-1/2 (x_d - x_d^f)^T P (x_d - x_d^f)),
// define the composite terminal cost h = -log sum_f w_f exp(-h_f); the
// composite desirability is then sum_f w_f Z_f everywhere and the composite
// controller is a state-dependent convex combination of component controllers.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsoc/continuous.hpp"
#include "lsoc/discrete.hpp"
#include "lsoc/errors.hpp"
#include "lsoc/graph.hpp"
#include "lsoc/numeric.hpp"

namespace lsoc {

struct KernelSpec {
  std::vector<double> widths;  // diagonal of P

  static KernelSpec isotropic(double p, std::size_t dim) { return {std::vector<double>(dim, p)}; }

  void validate() const {
    if (widths.empty()) throw ConfigError("kernel needs at least one width");
    for (double w : widths) {
      if (!(w > 0.0)) throw ConfigError("kernel widths must be > 0");
    }
  }
};

// log of the unnormalized kernel weights.
inline std::vector<double> log_kernel_weights(const std::vector<std::vector<double>>& targets,
                                              std::span<const double> new_target,
                                              const KernelSpec& kernel) {
  kernel.validate();
  if (targets.empty()) throw StructureError("at least one component target required");
  if (new_target.size() != kernel.widths.size()) {
    throw StructureError("new target dimension does not match kernel");
  }
  std::vector<double> out;
  out.reserve(targets.size());
  for (const auto& t : targets) {
    if (t.size() != kernel.widths.size()) {
      throw StructureError("component target dimension does not match kernel");
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double d = new_target[i] - t[i];
      quad += kernel.widths[i] * d * d;
    }
    out.push_back(-0.5 * quad);
  }
  return out;
}

inline std::vector<double> normalize_log_weights(std::vector<double> log_w) {
  softmax_inplace(log_w);
  return log_w;
}

inline std::vector<double> composition_weights(const std::vector<std::vector<double>>& targets,
                                               std::span<const double> new_target,
                                               const KernelSpec& kernel) {
  return normalize_log_weights(log_kernel_weights(targets, new_target, kernel));
}

inline void check_weights(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw StructureError("composition weights must be >= 0");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-12) throw StructureError("composition weights must sum to 1");
}

inline double composite_terminal_cost(std::span<const double> weights,
                                      std::span<const double> component_h) {
  if (weights.size() != component_h.size()) throw StructureError("one cost per component required");
  std::vector<double> terms(weights.size());
  for (std::size_t f = 0; f < weights.size(); ++f) terms[f] = std::log(weights[f]) - component_h[f];
  return -log_sum_exp(terms);
}

inline DesirabilityTable composite_desirability(std::span<const double> weights,
                                                std::span<const DesirabilityTable> tables) {
  if (tables.empty() || weights.size() != tables.size()) {
    throw StructureError("one table per weight required");
  }
  const std::size_t n = tables[0].size();
  for (const auto& t : tables) {
    if (t.size() != n) throw StructureError("component tables cover different state sets");
  }
  std::vector<double> out(n), terms(tables.size());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t f = 0; f < tables.size(); ++f) {
      terms[f] = std::log(weights[f]) + tables[f].log_value(s);
    }
    out[s] = log_sum_exp(terms);
  }
  return DesirabilityTable(std::move(out));
}

struct CompositePolicy {
  Distribution row;
  std::vector<double> mixing;  // W_f(x), sums to 1
};

// u(.|x) = sum_f W_f(x) u_f(.|x), W_f = w_f H_f / sum_e w_e H_e,
// H_f(x) = sum_x' p(x'|x) Z_f(x').
inline CompositePolicy composite_policy_discrete(const DiscreteJointMDP& mdp,
                                                 std::span<const DesirabilityTable> tables,
                                                 std::span<const double> weights, std::size_t s) {
  if (tables.empty() || weights.size() != tables.size()) {
    throw StructureError("one table per weight required");
  }
  CompositePolicy out;
  out.mixing.resize(tables.size());
  for (std::size_t f = 0; f < tables.size(); ++f) {
    out.mixing[f] = std::log(weights[f]) + log_backup(mdp, tables[f], s);
  }
  if (softmax_inplace(out.mixing) == kNegInf) {
    throw NumericalError("composite mixing weights underflow at state " + std::to_string(s));
  }
  for (std::size_t f = 0; f < tables.size(); ++f) {
    const Distribution uf = optimal_joint_policy(mdp, tables[f], s);
    if (out.row.empty()) {
      out.row = uf;
      for (auto& e : out.row) e.prob = 0.0;
    }
    for (std::size_t k = 0; k < uf.size(); ++k) out.row[k].prob += out.mixing[f] * uf[k].prob;
  }
  return out;
}

struct CompositeControl {
  std::vector<double> control;
  std::vector<double> mixing;  // W_f(x, t)
  std::vector<std::vector<double>> component_controls;
  std::vector<double> component_log_z;
};

// sum_f W_f u_f with W_f = w_f Z_f / sum_e w_e Z_e, from per-component
// log-desirabilities and controls.
inline CompositeControl compose_controls(std::span<const double> weights,
                                         std::span<const double> component_log_z,
                                         const std::vector<std::vector<double>>& component_controls) {
  const std::size_t nf = weights.size();
  if (nf == 0 || component_log_z.size() != nf || component_controls.size() != nf) {
    throw StructureError("one estimate per component required");
  }
  CompositeControl out;
  out.component_controls = component_controls;
  out.component_log_z.assign(component_log_z.begin(), component_log_z.end());
  out.mixing.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) out.mixing[f] = std::log(weights[f]) + component_log_z[f];
  if (softmax_inplace(out.mixing) == kNegInf) {
    throw NumericalError("all component desirabilities underflow");
  }
  // u_1 + sum_f W_f (u_f - u_1): equal to sum_f W_f u_f since sum W = 1, and
  // exactly u_1 whenever all component controls coincide.
  const auto& base = component_controls[0];
  out.control = base;
  for (std::size_t f = 1; f < nf; ++f) {
    if (component_controls[f].size() != base.size()) {
      throw StructureError("component controls differ in dimension");
    }
    for (std::size_t c = 0; c < base.size(); ++c) {
      out.control[c] += out.mixing[f] * (component_controls[f][c] - base[c]);
    }
  }
  return out;
}

using TerminalCostFn = std::function<double(std::span<const double>)>;

// Path-integral component estimates on one shared passive batch (components
// differ only in terminal cost), composed into the new task's control.
inline CompositeControl composite_control_continuous(const RolloutBatch& batch,
                                                     std::span<const TerminalCostFn> terminal_costs,
                                                     std::span<const double> weights,
                                                     std::span<const double> noise_scale,
                                                     double lambda) {
  if (terminal_costs.size() != weights.size()) throw StructureError("one cost per weight required");
  std::vector<double> log_z(weights.size());
  std::vector<std::vector<double>> controls(weights.size());
  for (std::size_t f = 0; f < weights.size(); ++f) {
    const auto s = batch.path_costs_with(terminal_costs[f]);
    log_z[f] = pi_desirability(s, lambda).log_z;
    controls[f] = pi_optimal_control(batch, s, noise_scale, lambda).control;
  }
  return compose_controls(weights, log_z, controls);
}

// A previously solved task in a family sharing dynamics and running cost.
struct Component {
  std::string name;
  std::vector<double> target;                // joint target for this subsystem
  std::optional<DesirabilityTable> table;    // discrete components
};

struct SubsystemLibrary {
  FactorialSubsystem subsystem;
  std::vector<Component> components;

  std::vector<std::vector<double>> targets() const {
    std::vector<std::vector<double>> t;
    for (const auto& c : components) t.push_back(c.target);
    return t;
  }
  std::vector<DesirabilityTable> tables() const {
    std::vector<DesirabilityTable> t;
    for (const auto& c : components) {
      if (!c.table) throw StructureError("component " + c.name + " has no desirability table");
      t.push_back(*c.table);
    }
    return t;
  }
};

struct ComponentLibrary {
  KernelSpec kernel;
  std::vector<SubsystemLibrary> subsystems;

  void validate() const {
    kernel.validate();
    for (const auto& s : subsystems) {
      if (s.components.empty()) throw StructureError("each subsystem needs >= 1 component");
    }
  }
};

}  // namespace lsoc
