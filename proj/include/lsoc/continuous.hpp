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

// Continuous-time linearly solvable control for subsystem joint diffusions
//   dx = f(x) dt + B(x) [u dt + sigma dw]
// with path-integral (Feynman-Kac) estimates of the desirability
// Z = E[exp(-S / lambda)] over passive rollouts and of the optimal control
// u* = sigma sigma^T B^T grad Z / Z via the first-interval noise estimator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lsoc/errors.hpp"
#include "lsoc/numeric.hpp"

namespace lsoc {

using StateFn = std::function<void(std::span<const double> x, std::span<double> out)>;

struct DiffusionModel {
  int state_dim = 0;
  int control_dim = 0;
  StateFn drift;           // out: state_dim
  StateFn control_matrix;  // out: state_dim x control_dim, row-major
  std::vector<double> noise_scale;  // diagonal sigma, one per control channel
  double lambda = 1.0;

  void validate() const {
    if (state_dim < 1 || control_dim < 1) throw StructureError("diffusion dims must be >= 1");
    if (!drift || !control_matrix) throw StructureError("diffusion model functions missing");
    if (noise_scale.size() != static_cast<std::size_t>(control_dim)) {
      throw StructureError("one noise scale per control channel required");
    }
    for (double s : noise_scale) {
      if (!(s >= 0.0)) throw StructureError("noise scale must be >= 0");
    }
    if (!(lambda > 0.0)) throw StructureError("lambda must be > 0");
  }
};

struct ContinuousCost {
  std::function<double(std::span<const double> x, double t)> state_cost;
  std::function<double(std::span<const double> x)> terminal_cost;
  std::vector<double> control_penalty;  // diagonal R
};

// R = lambda (sigma sigma^T)^-1, the relation that makes the HJB linear.
inline std::vector<double> cancellation_penalty(const DiffusionModel& m) {
  std::vector<double> r(m.noise_scale.size());
  for (std::size_t c = 0; c < r.size(); ++c) {
    const double s2 = m.noise_scale[c] * m.noise_scale[c];
    r[c] = s2 > 0.0 ? m.lambda / s2 : std::numeric_limits<double>::infinity();
  }
  return r;
}

// Unicycle (x, y, v, phi): position driven by heading, (v, phi) actuated.
inline std::array<double, 4> unicycle_drift(std::span<const double> s) {
  return {s[2] * std::cos(s[3]), s[2] * std::sin(s[3]), 0.0, 0.0};
}

// Block-diagonal team of `n_agents` unicycles; control channels per agent are
// (forward acceleration, angular velocity) with noise (sigma, nu).
inline DiffusionModel unicycle_team_model(int n_agents, double sigma, double nu,
                                          double lambda = 1.0) {
  DiffusionModel m;
  m.state_dim = 4 * n_agents;
  m.control_dim = 2 * n_agents;
  m.lambda = lambda;
  m.drift = [n_agents](std::span<const double> x, std::span<double> out) {
    for (int a = 0; a < n_agents; ++a) {
      const auto d = unicycle_drift(x.subspan(4 * a, 4));
      std::copy(d.begin(), d.end(), out.begin() + 4 * a);
    }
  };
  m.control_matrix = [n_agents](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const int cols = 2 * n_agents;
    for (int a = 0; a < n_agents; ++a) {
      out[(4 * a + 2) * cols + 2 * a] = 1.0;
      out[(4 * a + 3) * cols + 2 * a + 1] = 1.0;
    }
  };
  for (int a = 0; a < n_agents; ++a) {
    m.noise_scale.push_back(sigma);
    m.noise_scale.push_back(nu);
  }
  return m;
}

// Scratch buffers for repeated stepping without allocation.
struct StepWorkspace {
  std::vector<double> drift, b, channel;
  explicit StepWorkspace(const DiffusionModel& m)
      : drift(static_cast<std::size_t>(m.state_dim)),
        b(static_cast<std::size_t>(m.state_dim * m.control_dim)),
        channel(static_cast<std::size_t>(m.control_dim)) {}
};

// x' = x + f dt + B (u dt + sigma sqrt(dt) draws), written into `out`.
inline void euler_maruyama_step(const DiffusionModel& m, std::span<const double> x,
                                std::span<const double> u, double dt,
                                std::span<const double> draws, std::span<double> out,
                                StepWorkspace& ws) {
  m.drift(x, ws.drift);
  m.control_matrix(x, ws.b);
  const double sq = std::sqrt(dt);
  for (int c = 0; c < m.control_dim; ++c) {
    ws.channel[c] = (u.empty() ? 0.0 : u[c]) * dt + m.noise_scale[c] * sq * draws[c];
  }
  for (int i = 0; i < m.state_dim; ++i) {
    double v = x[i] + ws.drift[i] * dt;
    const double* row = ws.b.data() + static_cast<std::size_t>(i) * m.control_dim;
    for (int c = 0; c < m.control_dim; ++c) v += row[c] * ws.channel[c];
    if (!std::isfinite(v)) throw NumericalError("Euler-Maruyama produced a non-finite state");
    out[i] = v;
  }
}

inline std::vector<double> euler_maruyama_step(const DiffusionModel& m,
                                               std::span<const double> x,
                                               std::span<const double> u, double dt,
                                               std::span<const double> draws) {
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  StepWorkspace ws(m);
  std::vector<double> out(static_cast<std::size_t>(m.state_dim));
  euler_maruyama_step(m, x, u, dt, draws, out, ws);
  return out;
}

struct SamplingParams {
  int n_rollouts = 1000;
  double dt = 0.05;
  int horizon_steps = 100;
  int threads = 1;
  bool keep_paths = false;
};

struct RolloutBatch {
  int n_rollouts = 0;
  int horizon_steps = 0;
  int state_dim = 0;
  int control_dim = 0;
  double dt = 0.0;
  double t0 = 0.0;
  std::vector<double> initial_state;
  std::vector<double> first_noise;     // n x control_dim, increments dw over [t0, t0+dt)
  std::vector<double> running_cost;    // n, left-endpoint sum of q dt
  std::vector<double> terminal_state;  // n x state_dim
  std::vector<double> path_cost;       // n, running + terminal of the sampling cost
  std::vector<double> paths;           // n x (H+1) x state_dim when kept

  std::span<const double> noise0(int k) const {
    return {first_noise.data() + static_cast<std::size_t>(k) * control_dim,
            static_cast<std::size_t>(control_dim)};
  }
  std::span<const double> terminal(int k) const {
    return {terminal_state.data() + static_cast<std::size_t>(k) * state_dim,
            static_cast<std::size_t>(state_dim)};
  }
  std::span<const double> path(int k) const {
    const std::size_t len = static_cast<std::size_t>(horizon_steps + 1) * state_dim;
    return {paths.data() + static_cast<std::size_t>(k) * len, len};
  }

  // S_k for an alternative terminal cost sharing this batch's running cost.
  std::vector<double> path_costs_with(const std::function<double(std::span<const double>)>& h) const {
    std::vector<double> s(static_cast<std::size_t>(n_rollouts));
    for (int k = 0; k < n_rollouts; ++k) s[k] = running_cost[k] + h(terminal(k));
    return s;
  }
};

namespace detail {

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        const int lo = static_cast<int>(static_cast<long long>(n) * w / threads);
        const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / threads);
        for (int k = lo; k < hi; ++k) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

// Passive (u = 0) rollouts from (x, t). Rollout k draws its noise from its own
// stream stream_seed(seed, k), so the batch is a pure function of the inputs
// regardless of `threads`.
inline RolloutBatch sample_passive_rollouts(const DiffusionModel& model, const ContinuousCost& cost,
                                            std::span<const double> x, double t,
                                            const SamplingParams& p, std::uint64_t seed) {
  model.validate();
  if (p.n_rollouts < 1) throw ConfigError("n_rollouts must be >= 1");
  if (!(p.dt > 0.0)) throw ConfigError("dt must be > 0");
  if (p.horizon_steps < 0) throw ConfigError("horizon_steps must be >= 0");
  if (x.size() != static_cast<std::size_t>(model.state_dim)) {
    throw StructureError("initial state dimension mismatch");
  }
  RolloutBatch b;
  b.n_rollouts = p.n_rollouts;
  b.horizon_steps = p.horizon_steps;
  b.state_dim = model.state_dim;
  b.control_dim = model.control_dim;
  b.dt = p.dt;
  b.t0 = t;
  b.initial_state.assign(x.begin(), x.end());
  const auto n = static_cast<std::size_t>(p.n_rollouts);
  const auto sd = static_cast<std::size_t>(model.state_dim);
  const auto cd = static_cast<std::size_t>(model.control_dim);
  b.first_noise.assign(n * cd, 0.0);
  b.running_cost.assign(n, 0.0);
  b.terminal_state.assign(n * sd, 0.0);
  b.path_cost.assign(n, 0.0);
  if (p.keep_paths) b.paths.assign(n * (static_cast<std::size_t>(p.horizon_steps) + 1) * sd, 0.0);
  const double sq = std::sqrt(p.dt);

  detail::parallel_for(p.n_rollouts, p.threads, [&](int k) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(k)));
    std::normal_distribution<double> normal(0.0, 1.0);
    StepWorkspace ws(model);
    std::vector<double> cur(x.begin(), x.end()), next(sd), draws(cd);
    double running = 0.0;
    double* path = p.keep_paths ? b.paths.data() + k * (p.horizon_steps + 1) * sd : nullptr;
    if (path) std::copy(cur.begin(), cur.end(), path);
    for (int step = 0; step < p.horizon_steps; ++step) {
      running += cost.state_cost(cur, t + step * p.dt) * p.dt;
      for (std::size_t c = 0; c < cd; ++c) draws[c] = normal(rng);
      if (step == 0) {
        for (std::size_t c = 0; c < cd; ++c) b.first_noise[k * cd + c] = sq * draws[c];
      }
      euler_maruyama_step(model, cur, {}, p.dt, draws, next, ws);
      cur.swap(next);
      if (path) std::copy(cur.begin(), cur.end(), path + (step + 1) * sd);
    }
    const double s = running + cost.terminal_cost(cur);
    if (!std::isfinite(s)) throw NumericalError("non-finite path cost");
    b.running_cost[k] = running;
    b.path_cost[k] = s;
    std::copy(cur.begin(), cur.end(), b.terminal_state.begin() + k * sd);
  });
  return b;
}

struct DesirabilityEstimate {
  double z = 0.0;
  double log_z = 0.0;
  double std_error = 0.0;      // of z
  double log_std_error = 0.0;  // of log z (delta method)
};

// Z = (1/n) sum exp(-S_k / lambda), accumulated with a max-shift.
inline DesirabilityEstimate pi_desirability(std::span<const double> path_costs, double lambda) {
  if (path_costs.empty()) throw ConfigError("empty rollout batch");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  const double n = static_cast<double>(path_costs.size());
  double m = kNegInf;
  for (double s : path_costs) {
    if (std::isfinite(s)) m = std::max(m, -s / lambda);
  }
  if (m == kNegInf) throw NumericalError("all path weights underflow; check lambda / cost scale");
  double sum = 0.0, sum2 = 0.0;
  for (double s : path_costs) {
    const double w = std::isfinite(s) ? std::exp(-s / lambda - m) : 0.0;
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / n;
  const double var = path_costs.size() > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)) : 0.0;
  DesirabilityEstimate e;
  e.log_z = m + std::log(mean);
  e.z = std::exp(e.log_z);
  e.log_std_error = std::sqrt(var / n) / mean;
  e.std_error = e.z * e.log_std_error;
  return e;
}

inline DesirabilityEstimate pi_desirability(const RolloutBatch& b, double lambda) {
  return pi_desirability(b.path_cost, lambda);
}

struct ControlEstimate {
  std::vector<double> control;    // per control channel
  std::vector<double> std_error;  // self-normalized importance-sampling SE
  std::vector<double> weights;    // normalized rollout weights
};

// u_c = sum_k w_k sigma_c dw0_{k,c} / dt with w = softmax(-S / lambda).
inline ControlEstimate pi_optimal_control(const RolloutBatch& b, std::span<const double> path_costs,
                                          std::span<const double> noise_scale, double lambda) {
  if (path_costs.size() != static_cast<std::size_t>(b.n_rollouts)) {
    throw StructureError("one path cost per rollout required");
  }
  ControlEstimate e;
  e.weights.resize(path_costs.size());
  for (std::size_t k = 0; k < path_costs.size(); ++k) {
    e.weights[k] = std::isfinite(path_costs[k]) ? -path_costs[k] / lambda : kNegInf;
  }
  if (softmax_inplace(e.weights) == kNegInf) {
    throw NumericalError("all path weights underflow; check lambda / cost scale");
  }
  const auto cd = static_cast<std::size_t>(b.control_dim);
  e.control.assign(cd, 0.0);
  e.std_error.assign(cd, 0.0);
  for (int k = 0; k < b.n_rollouts; ++k) {
    const auto dw = b.noise0(k);
    for (std::size_t c = 0; c < cd; ++c) e.control[c] += e.weights[k] * noise_scale[c] * dw[c] / b.dt;
  }
  for (int k = 0; k < b.n_rollouts; ++k) {
    const auto dw = b.noise0(k);
    for (std::size_t c = 0; c < cd; ++c) {
      const double d = noise_scale[c] * dw[c] / b.dt - e.control[c];
      e.std_error[c] += e.weights[k] * e.weights[k] * d * d;
    }
  }
  for (double& s : e.std_error) s = std::sqrt(s);
  return e;
}

inline ControlEstimate pi_optimal_control(const DiffusionModel& model, const RolloutBatch& b) {
  return pi_optimal_control(b, b.path_cost, model.noise_scale, model.lambda);
}

inline ControlEstimate pi_optimal_control(const DiffusionModel& model, const ContinuousCost& cost,
                                          std::span<const double> x, double t,
                                          const SamplingParams& p, std::uint64_t seed) {
  const RolloutBatch b = sample_passive_rollouts(model, cost, x, t, p, seed);
  return pi_optimal_control(model, b);
}

}  // namespace lsoc
