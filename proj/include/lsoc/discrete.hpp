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

// Discrete-time linearly solvable control over a factorial subsystem's joint
// MDP: product passive dynamics, the linear desirability system
// Z_I = M Z_I + N Z_B with M = diag(exp(-q_I)) P_II, N = diag(exp(-q_I)) P_IB,
// its fixed-point solution (linear or log space), and the optimal joint and
// local policies u*(x'|x) = p(x'|x) Z(x') / sum_x' p(x'|x) Z(x').

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lsoc/errors.hpp"
#include "lsoc/graph.hpp"
#include "lsoc/numeric.hpp"

namespace lsoc {

struct SparseEntry {
  std::size_t state = 0;
  double prob = 0.0;
};

// Probability row over states, sorted by state index.
using Distribution = std::vector<SparseEntry>;

inline constexpr double kRowSumTolerance = 1e-12;

inline double total_mass(const Distribution& d) {
  double s = 0.0;
  for (const auto& e : d) s += e.prob;
  return s;
}

// Passive transition kernel of a single agent over its local states.
class AgentKernel {
 public:
  AgentKernel() = default;
  explicit AgentKernel(std::vector<Distribution> rows) : rows_(std::move(rows)) {
    for (std::size_t s = 0; s < rows_.size(); ++s) {
      auto& row = rows_[s];
      std::sort(row.begin(), row.end(),
                [](const SparseEntry& a, const SparseEntry& b) { return a.state < b.state; });
      for (const auto& e : row) {
        if (e.state >= rows_.size() || !(e.prob >= 0.0)) {
          throw StructureError("invalid kernel entry in row " + std::to_string(s));
        }
      }
      if (std::abs(total_mass(row) - 1.0) > kRowSumTolerance) {
        throw StructureError("kernel row " + std::to_string(s) + " not normalized");
      }
    }
  }

  std::size_t n_states() const { return rows_.size(); }
  const Distribution& row(std::size_t s) const { return rows_.at(s); }

 private:
  std::vector<Distribution> rows_;
};

// Product passive dynamics p(x'|x) = prod_j p_j(x'_j|x_j) over the members of
// a subsystem. `kernels` are per member in canonical order. Output is sorted
// by joint index because the last member varies fastest.
inline Distribution passive_joint_transition(std::span<const AgentKernel* const> kernels,
                                             const JointIndexer& indexer,
                                             std::size_t joint_state) {
  if (kernels.size() != indexer.arity()) {
    throw StructureError("one kernel per subsystem member required");
  }
  Distribution out{{0, 1.0}};
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const auto& row = kernels[k]->row(static_cast<std::size_t>(indexer.local(joint_state, k)));
    if (std::abs(total_mass(row) - 1.0) > kRowSumTolerance) {
      throw StructureError("kernel row not normalized");
    }
    const auto card = static_cast<std::size_t>(indexer.cardinalities()[k]);
    Distribution next;
    next.reserve(out.size() * row.size());
    for (const auto& a : out) {
      for (const auto& b : row) {
        if (b.prob == 0.0) continue;
        next.push_back({a.state * card + b.state, a.prob * b.prob});
      }
    }
    out = std::move(next);
  }
  return out;
}

// Shared structure of a family of first-exit problems: passive dynamics,
// state cost and the interior/boundary partition. Terminal costs vary per
// task and live in DiscreteJointMDP.
struct JointStructure {
  std::size_t n_states = 0;
  std::vector<std::uint8_t> is_boundary;
  std::vector<std::size_t> interior;   // joint ids, ascending
  std::vector<std::size_t> boundary;   // joint ids, ascending
  std::vector<std::size_t> position;   // joint id -> index within its set
  // CSR passive rows over all states; boundary rows are self-loops.
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col;
  std::vector<double> prob;
  std::vector<double> q;  // state cost, 0 on boundary

  Distribution row(std::size_t s) const {
    Distribution d;
    for (std::size_t k = row_ptr[s]; k < row_ptr[s + 1]; ++k) d.push_back({col[k], prob[k]});
    return d;
  }
};

class DiscreteJointMDP {
 public:
  // `passive_rows` is consulted for interior states only; boundary states are
  // made absorbing.
  static DiscreteJointMDP from_rows(std::size_t n_states,
                                    const std::function<Distribution(std::size_t)>& passive_rows,
                                    const std::function<double(std::size_t)>& state_cost,
                                    const std::function<bool(std::size_t)>& is_boundary,
                                    const std::function<double(std::size_t)>& terminal_cost) {
    auto st = std::make_shared<JointStructure>();
    st->n_states = n_states;
    st->is_boundary.resize(n_states);
    st->position.resize(n_states);
    st->q.assign(n_states, 0.0);
    for (std::size_t s = 0; s < n_states; ++s) {
      const bool b = is_boundary(s);
      st->is_boundary[s] = b ? 1 : 0;
      auto& set = b ? st->boundary : st->interior;
      st->position[s] = set.size();
      set.push_back(s);
    }
    if (st->interior.empty()) throw StructureError("MDP has an empty interior set");
    if (st->boundary.empty()) throw StructureError("MDP has an empty boundary set");

    st->row_ptr.reserve(n_states + 1);
    st->row_ptr.push_back(0);
    for (std::size_t s = 0; s < n_states; ++s) {
      if (st->is_boundary[s]) {
        st->col.push_back(s);
        st->prob.push_back(1.0);
      } else {
        Distribution row = passive_rows(s);
        std::sort(row.begin(), row.end(),
                  [](const SparseEntry& a, const SparseEntry& b) { return a.state < b.state; });
        double mass = 0.0;
        for (const auto& e : row) {
          if (e.state >= n_states || !(e.prob >= 0.0)) {
            throw StructureError("invalid passive entry in row " + std::to_string(s));
          }
          mass += e.prob;
          if (e.prob > 0.0) {
            st->col.push_back(e.state);
            st->prob.push_back(e.prob);
          }
        }
        if (std::abs(mass - 1.0) > kRowSumTolerance) {
          throw StructureError("passive row " + std::to_string(s) + " sums to " +
                               std::to_string(mass));
        }
        const double qs = state_cost(s);
        if (!(qs >= 0.0) || !std::isfinite(qs)) {
          throw StructureError("state cost must be finite and >= 0 on interior");
        }
        st->q[s] = qs;
      }
      st->row_ptr.push_back(st->col.size());
    }

    DiscreteJointMDP mdp;
    mdp.structure_ = std::move(st);
    mdp.set_terminal_costs(terminal_cost);
    return mdp;
  }

  // Product passive dynamics over a subsystem's members.
  static DiscreteJointMDP from_product(const JointIndexer& indexer,
                                       std::vector<const AgentKernel*> kernels,
                                       const std::function<double(std::size_t)>& state_cost,
                                       const std::function<bool(std::size_t)>& is_boundary,
                                       const std::function<double(std::size_t)>& terminal_cost) {
    return from_rows(
        indexer.size(),
        [&](std::size_t s) {
          return passive_joint_transition(std::span<const AgentKernel* const>(kernels), indexer,
                                          s);
        },
        state_cost, is_boundary, terminal_cost);
  }

  // Same dynamics, cost and partition; different terminal cost.
  DiscreteJointMDP with_terminal_costs(const std::function<double(std::size_t)>& h) const {
    DiscreteJointMDP out;
    out.structure_ = structure_;
    out.set_terminal_costs(h);
    return out;
  }
  DiscreteJointMDP with_boundary_costs(std::vector<double> h_by_boundary) const {
    if (h_by_boundary.size() != structure_->boundary.size()) {
      throw StructureError("terminal cost size mismatch");
    }
    return with_terminal_costs(
        [&](std::size_t s) { return h_by_boundary[structure_->position[s]]; });
  }

  std::size_t n_states() const { return structure_->n_states; }
  bool is_boundary(std::size_t s) const { return structure_->is_boundary[s] != 0; }
  const std::vector<std::size_t>& interior() const { return structure_->interior; }
  const std::vector<std::size_t>& boundary() const { return structure_->boundary; }
  std::size_t position(std::size_t s) const { return structure_->position[s]; }
  double state_cost(std::size_t s) const { return structure_->q[s]; }
  double terminal_cost(std::size_t s) const { return h_[structure_->position[s]]; }
  // Terminal costs indexed by boundary position.
  const std::vector<double>& boundary_costs() const { return h_; }
  Distribution passive_row(std::size_t s) const { return structure_->row(s); }
  const JointStructure& structure() const { return *structure_; }
  bool shares_structure_with(const DiscreteJointMDP& other) const {
    return structure_ == other.structure_;
  }

 private:
  void set_terminal_costs(const std::function<double(std::size_t)>& h) {
    h_.resize(structure_->boundary.size());
    for (std::size_t b = 0; b < h_.size(); ++b) {
      h_[b] = h(structure_->boundary[b]);
      if (!std::isfinite(h_[b])) throw StructureError("terminal cost must be finite");
    }
  }

  std::shared_ptr<const JointStructure> structure_;
  std::vector<double> h_;
};

// Z over all joint states, stored as log Z so that very small desirabilities
// (obstacle costs) stay strictly positive.
class DesirabilityTable {
 public:
  DesirabilityTable() = default;
  explicit DesirabilityTable(std::vector<double> log_z) : log_z_(std::move(log_z)) {}

  static DesirabilityTable from_values(std::span<const double> z) {
    std::vector<double> l(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) l[i] = std::log(z[i]);
    return DesirabilityTable(std::move(l));
  }

  std::size_t size() const { return log_z_.size(); }
  double log_value(std::size_t s) const { return log_z_[s]; }
  double value(std::size_t s) const { return std::exp(log_z_[s]); }
  double cost_to_go(std::size_t s) const { return -log_z_[s]; }
  const std::vector<double>& log_values() const { return log_z_; }

 private:
  std::vector<double> log_z_;
};

// M and N as defined above, over interior rows. Entries are stored as
// passive probabilities plus the per-row scale exp(-q) so that the log-space
// solver can work with q directly.
class LinearSystem {
 public:
  explicit LinearSystem(const DiscreteJointMDP& mdp) {
    const auto& st = mdp.structure();
    n_interior_ = st.interior.size();
    n_boundary_ = st.boundary.size();
    q_.resize(n_interior_);
    ii_ptr_.push_back(0);
    ib_ptr_.push_back(0);
    for (std::size_t i = 0; i < n_interior_; ++i) {
      const std::size_t s = st.interior[i];
      q_[i] = st.q[s];
      for (std::size_t k = st.row_ptr[s]; k < st.row_ptr[s + 1]; ++k) {
        const std::size_t t = st.col[k];
        if (st.is_boundary[t]) {
          ib_col_.push_back(st.position[t]);
          ib_p_.push_back(st.prob[k]);
        } else {
          ii_col_.push_back(st.position[t]);
          ii_p_.push_back(st.prob[k]);
        }
      }
      ii_ptr_.push_back(ii_col_.size());
      ib_ptr_.push_back(ib_col_.size());
    }
  }

  std::size_t n_interior() const { return n_interior_; }
  std::size_t n_boundary() const { return n_boundary_; }
  double row_cost(std::size_t i) const { return q_[i]; }

  // Dense views, for small systems and tests.
  std::vector<std::vector<double>> dense_m() const { return dense(ii_ptr_, ii_col_, ii_p_, n_interior_); }
  std::vector<std::vector<double>> dense_n() const { return dense(ib_ptr_, ib_col_, ib_p_, n_boundary_); }

  // y = M z + N zb
  void apply(std::span<const double> z, std::span<const double> zb, std::span<double> y) const {
    for (std::size_t i = 0; i < n_interior_; ++i) {
      double s = 0.0;
      for (std::size_t k = ii_ptr_[i]; k < ii_ptr_[i + 1]; ++k) s += ii_p_[k] * z[ii_col_[k]];
      for (std::size_t k = ib_ptr_[i]; k < ib_ptr_[i + 1]; ++k) s += ib_p_[k] * zb[ib_col_[k]];
      y[i] = std::exp(-q_[i]) * s;
    }
  }

  // ||z - (M z + N zb)||_inf
  double residual(std::span<const double> z, std::span<const double> zb) const {
    std::vector<double> y(n_interior_);
    apply(z, zb, y);
    double r = 0.0;
    for (std::size_t i = 0; i < n_interior_; ++i) r = std::max(r, std::abs(z[i] - y[i]));
    return r;
  }

  // Power-method estimate of the spectral radius of M (a nonnegative matrix),
  // started from the all-ones vector.
  double spectral_radius(int max_iter = 10000, double tol = 1e-12) const {
    std::vector<double> v(n_interior_, 1.0), w(n_interior_);
    const std::vector<double> zero_b(n_boundary_, 0.0);
    double rho = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      apply(v, zero_b, w);
      double norm = 0.0;
      for (double x : w) norm = std::max(norm, x);
      if (norm == 0.0) return 0.0;  // nilpotent
      for (std::size_t i = 0; i < n_interior_; ++i) v[i] = w[i] / norm;
      if (std::abs(norm - rho) <= tol * std::max(1.0, norm)) return norm;
      rho = norm;
    }
    return rho;
  }

  template <typename Fn>
  void for_each_interior_entry(std::size_t i, Fn&& fn) const {
    for (std::size_t k = ii_ptr_[i]; k < ii_ptr_[i + 1]; ++k) fn(ii_col_[k], ii_p_[k]);
  }
  template <typename Fn>
  void for_each_boundary_entry(std::size_t i, Fn&& fn) const {
    for (std::size_t k = ib_ptr_[i]; k < ib_ptr_[i + 1]; ++k) fn(ib_col_[k], ib_p_[k]);
  }

 private:
  std::vector<std::vector<double>> dense(const std::vector<std::size_t>& ptr,
                                         const std::vector<std::size_t>& col,
                                         const std::vector<double>& p, std::size_t ncols) const {
    std::vector<std::vector<double>> out(n_interior_, std::vector<double>(ncols, 0.0));
    for (std::size_t i = 0; i < n_interior_; ++i) {
      for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) out[i][col[k]] += std::exp(-q_[i]) * p[k];
    }
    return out;
  }

  std::size_t n_interior_ = 0;
  std::size_t n_boundary_ = 0;
  std::vector<double> q_;
  std::vector<std::size_t> ii_ptr_, ii_col_, ib_ptr_, ib_col_;
  std::vector<double> ii_p_, ib_p_;
};

inline LinearSystem build_linear_system(const DiscreteJointMDP& mdp) { return LinearSystem(mdp); }

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 100000;
  double damping = 0.0;  // Z <- (1-d) (M Z + N Zb) + d Z
  bool log_space = true;
};

struct SolveReport {
  std::vector<double> interior;  // Z_I (linear) or log Z_I (log space)
  int iterations = 0;
  double residual = 0.0;  // linear-space residual of the returned solution
};

// Plain fixed-point iteration Z_I <- M Z_I + N Z_B from Z_I = 0. Stops once
// the update (equal to the residual of the previous iterate) is <= tol.
inline SolveReport solve_desirability(const LinearSystem& sys, std::span<const double> boundary_z,
                                      const SolverOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ConfigError("solver tol must be > 0");
  if (boundary_z.size() != sys.n_boundary()) throw StructureError("boundary Z size mismatch");
  for (double z : boundary_z) {
    if (!(z > 0.0)) throw NumericalError("boundary desirability must be > 0");
  }
  std::vector<double> z(sys.n_interior(), 0.0), next(sys.n_interior());
  for (int it = 1; it <= opt.max_iter; ++it) {
    sys.apply(z, boundary_z, next);
    double delta = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double v = (1.0 - opt.damping) * next[i] + opt.damping * z[i];
      delta = std::max(delta, std::abs(v - z[i]));
      z[i] = v;
    }
    if (delta <= opt.tol) {
      SolveReport r;
      r.residual = sys.residual(z, boundary_z);
      r.interior = std::move(z);
      r.iterations = it;
      return r;
    }
  }
  throw ConvergenceError("desirability iteration did not converge in " +
                         std::to_string(opt.max_iter) +
                         " iterations (spectral radius >= 1 or tol too tight)");
}

// Log-space counterpart: log Z_i <- -q_i + logsumexp_j(log p_ij + log Z_j),
// started from log Z_I = -inf. Converges when max |delta log Z| <= tol.
inline SolveReport solve_desirability_log(const LinearSystem& sys,
                                          std::span<const double> boundary_log_z,
                                          const SolverOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ConfigError("solver tol must be > 0");
  if (boundary_log_z.size() != sys.n_boundary()) throw StructureError("boundary Z size mismatch");
  for (double l : boundary_log_z) {
    if (!std::isfinite(l)) throw NumericalError("boundary log desirability must be finite");
  }
  const std::size_t n = sys.n_interior();
  std::vector<double> l(n, kNegInf), next(n);
  std::size_t finite_count = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double m = kNegInf;
      sys.for_each_interior_entry(i, [&](std::size_t j, double) { m = std::max(m, l[j]); });
      sys.for_each_boundary_entry(i, [&](std::size_t b, double) { m = std::max(m, boundary_log_z[b]); });
      if (m == kNegInf) {
        next[i] = kNegInf;
        continue;
      }
      double s = 0.0;
      sys.for_each_interior_entry(i, [&](std::size_t j, double p) { s += p * std::exp(l[j] - m); });
      sys.for_each_boundary_entry(i, [&](std::size_t b, double p) { s += p * std::exp(boundary_log_z[b] - m); });
      next[i] = -sys.row_cost(i) + m + std::log(s);
    }
    double delta = 0.0;
    std::size_t finite_now = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = next[i];
      if (opt.damping > 0.0 && std::isfinite(l[i])) {
        const double a = std::log(1.0 - opt.damping) + v;
        const double b = std::log(opt.damping) + l[i];
        const double mx = std::max(a, b);
        v = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
      }
      if (std::isfinite(v)) {
        ++finite_now;
        delta = std::isfinite(l[i]) ? std::max(delta, std::abs(v - l[i]))
                                    : std::numeric_limits<double>::infinity();
      }
      l[i] = v;
    }
    if (finite_now < n) {
      if (finite_now == finite_count) {
        throw NumericalError("some interior states cannot reach the boundary (Z = 0)");
      }
      finite_count = finite_now;
      continue;
    }
    if (delta <= opt.tol) {
      std::vector<double> z(n), zb(boundary_log_z.size());
      for (std::size_t i = 0; i < n; ++i) z[i] = std::exp(l[i]);
      for (std::size_t b = 0; b < zb.size(); ++b) zb[b] = std::exp(boundary_log_z[b]);
      SolveReport r;
      r.residual = sys.residual(z, zb);
      r.interior = std::move(l);
      r.iterations = it;
      return r;
    }
  }
  throw ConvergenceError("log-space desirability iteration did not converge in " +
                         std::to_string(opt.max_iter) + " iterations");
}

struct SolvedTable {
  DesirabilityTable table;
  int iterations = 0;
  double residual = 0.0;
};

// Solves the MDP with its own terminal cost; boundary Z = exp(-h) exactly.
inline SolvedTable solve(const DiscreteJointMDP& mdp, const LinearSystem& sys,
                         const SolverOptions& opt = {}) {
  const auto& h = mdp.boundary_costs();
  std::vector<double> log_z(mdp.n_states(), 0.0);
  SolveReport rep;
  if (opt.log_space) {
    std::vector<double> lb(h.size());
    for (std::size_t b = 0; b < h.size(); ++b) lb[b] = -h[b];
    rep = solve_desirability_log(sys, lb, opt);
    for (std::size_t i = 0; i < rep.interior.size(); ++i) log_z[mdp.interior()[i]] = rep.interior[i];
  } else {
    std::vector<double> zb(h.size());
    for (std::size_t b = 0; b < h.size(); ++b) zb[b] = std::exp(-h[b]);
    rep = solve_desirability(sys, zb, opt);
    for (std::size_t i = 0; i < rep.interior.size(); ++i) {
      if (!(rep.interior[i] > 0.0)) throw NumericalError("desirability underflow; use log space");
      log_z[mdp.interior()[i]] = std::log(rep.interior[i]);
    }
  }
  for (std::size_t b = 0; b < h.size(); ++b) log_z[mdp.boundary()[b]] = -h[b];
  return {DesirabilityTable(std::move(log_z)), rep.iterations, rep.residual};
}

inline SolvedTable solve(const DiscreteJointMDP& mdp, const SolverOptions& opt = {}) {
  return solve(mdp, LinearSystem(mdp), opt);
}

// log sum_x' p(x'|x) Z(x'), the log of the one-step desirability backup.
inline double log_backup(const DiscreteJointMDP& mdp, const DesirabilityTable& z, std::size_t s) {
  const auto& st = mdp.structure();
  double m = kNegInf;
  for (std::size_t k = st.row_ptr[s]; k < st.row_ptr[s + 1]; ++k) m = std::max(m, z.log_value(st.col[k]));
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t k = st.row_ptr[s]; k < st.row_ptr[s + 1]; ++k) {
    acc += st.prob[k] * std::exp(z.log_value(st.col[k]) - m);
  }
  return m + std::log(acc);
}

inline Distribution optimal_joint_policy(const DiscreteJointMDP& mdp, const DesirabilityTable& z,
                                         std::size_t s) {
  if (mdp.is_boundary(s)) throw StructureError("policy requested at a boundary state");
  const auto& st = mdp.structure();
  const std::size_t b = st.row_ptr[s], e = st.row_ptr[s + 1];
  std::vector<double> logw(e - b);
  for (std::size_t k = b; k < e; ++k) logw[k - b] = std::log(st.prob[k]) + z.log_value(st.col[k]);
  if (log_sum_exp(logw) == kNegInf) {
    throw NumericalError("policy normalizer underflow at state " + std::to_string(s));
  }
  softmax_inplace(logw);
  Distribution out(e - b);
  for (std::size_t k = b; k < e; ++k) out[k - b] = {st.col[k], logw[k - b]};
  return out;
}

// Marginal of a joint policy row on one member agent's next local state.
inline std::vector<double> marginal_local_policy(const Distribution& joint_row,
                                                 const FactorialSubsystem& subsystem,
                                                 const JointIndexer& indexer, AgentId agent) {
  const int pos = subsystem.position_of(agent);
  if (pos < 0) {
    throw StructureError("agent " + std::to_string(agent) + " is not a member of subsystem " +
                         std::to_string(subsystem.central));
  }
  std::vector<double> out(static_cast<std::size_t>(indexer.cardinalities()[pos]), 0.0);
  for (const auto& e : joint_row) {
    out[static_cast<std::size_t>(indexer.local(e.state, static_cast<std::size_t>(pos)))] += e.prob;
  }
  return out;
}

// KL(u || p) with 0 log 0 = 0; +inf when u puts mass outside p's support.
inline double kl_divergence(const Distribution& u, const Distribution& p) {
  double kl = 0.0;
  std::size_t j = 0;
  for (const auto& e : u) {
    if (e.prob <= 0.0) continue;
    while (j < p.size() && p[j].state < e.state) ++j;
    if (j == p.size() || p[j].state != e.state || p[j].prob <= 0.0) {
      return std::numeric_limits<double>::infinity();
    }
    kl += e.prob * std::log(e.prob / p[j].prob);
  }
  return kl;
}

inline double running_cost_discrete(double q, const Distribution& u, const Distribution& p) {
  return q + kl_divergence(u, p);
}

// Per-agent form: q + sum_j KL(u_j || p_j).
inline double running_cost_discrete(double q,
                                    std::span<const std::pair<Distribution, Distribution>> rows) {
  double c = q;
  for (const auto& [u, p] : rows) c += kl_divergence(u, p);
  return c;
}

// Inverse-CDF draw over a distribution in its stored (canonical) order.
inline std::size_t sample_from(const Distribution& d, Rng& rng) {
  const double r = uniform01(rng);
  double acc = 0.0;
  for (const auto& e : d) {
    acc += e.prob;
    if (r < acc) return e.state;
  }
  for (auto it = d.rbegin(); it != d.rend(); ++it) {
    if (it->prob > 0.0) return it->state;
  }
  throw NumericalError("cannot sample from an empty distribution");
}

struct DiscreteTrajectory {
  std::vector<std::size_t> states;  // includes the initial state
  std::vector<double> step_costs;   // q + KL per transition
  double terminal_cost = 0.0;
  double total_cost = 0.0;
  bool terminated = false;
};

// Samples successors from `policy(state)` until a boundary state or step_cap.
template <typename PolicyProvider>
DiscreteTrajectory rollout_discrete(const DiscreteJointMDP& mdp, PolicyProvider&& policy,
                                    std::size_t x0, std::uint64_t seed, int step_cap) {
  if (mdp.is_boundary(x0)) throw StructureError("rollout must start in the interior");
  Rng rng(seed);
  DiscreteTrajectory t;
  t.states.push_back(x0);
  std::size_t x = x0;
  for (int step = 0; step < step_cap; ++step) {
    const Distribution u = policy(x);
    t.step_costs.push_back(running_cost_discrete(mdp.state_cost(x), u, mdp.passive_row(x)));
    x = sample_from(u, rng);
    t.states.push_back(x);
    if (mdp.is_boundary(x)) {
      t.terminated = true;
      t.terminal_cost = mdp.terminal_cost(x);
      break;
    }
  }
  t.total_cost = t.terminal_cost;
  for (double c : t.step_costs) t.total_cost += c;
  return t;
}

}  // namespace lsoc
