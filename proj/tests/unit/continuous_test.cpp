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

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "lsoc/continuous.hpp"
#include "test_util.hpp"

namespace lsoc {
namespace {

using testing::GaussianOracle;

TEST(Unicycle, Drift) {
  const std::vector<double> still{3.0, 4.0, 0.0, 1.2};
  EXPECT_EQ(unicycle_drift(still), (std::array<double, 4>{0.0, 0.0, 0.0, 0.0}));
  const std::vector<double> east{0.0, 0.0, 1.0, 0.0};
  EXPECT_EQ(unicycle_drift(east), (std::array<double, 4>{1.0, 0.0, 0.0, 0.0}));
  const std::vector<double> north{0.0, 0.0, 0.3, std::numbers::pi / 2};
  const auto d = unicycle_drift(north);
  EXPECT_NEAR(d[0], 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(d[1], 0.3);
}

TEST(EulerMaruyama, ControlOnly) {
  const auto m = unicycle_team_model(1, 0.05, 0.025);
  const std::vector<double> x{1.0, 2.0, 0.5, 0.3};
  const auto y = euler_maruyama_step(m, x, std::vector<double>{1.0, 0.0}, 0.1, std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(y[2], 0.6);
  EXPECT_DOUBLE_EQ(y[0], 1.0 + 0.1 * 0.5 * std::cos(0.3));
  EXPECT_DOUBLE_EQ(y[1], 2.0 + 0.1 * 0.5 * std::sin(0.3));
  EXPECT_DOUBLE_EQ(y[3], 0.3);
}

TEST(EulerMaruyama, PureDrift) {
  const auto m = unicycle_team_model(2, 0.05, 0.025);
  const std::vector<double> x{0, 0, 1, 0.2, 5, 5, 0.4, -1};
  const auto y = euler_maruyama_step(m, x, {}, 0.05, std::vector<double>(4, 0.0));
  for (int a = 0; a < 2; ++a) {
    const auto d = unicycle_drift(std::span<const double>(x).subspan(4 * a, 4));
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y[4 * a + i], x[4 * a + i] + 0.05 * d[i]);
  }
}

TEST(EulerMaruyama, NoiseEntersThroughControlChannels) {
  const auto m = unicycle_team_model(1, 0.05, 0.025);
  const std::vector<double> x{0, 0, 0, 0};
  const auto y = euler_maruyama_step(m, x, {}, 0.04, std::vector<double>{1.0, -2.0});
  const double sq = std::sqrt(0.04);
  EXPECT_EQ(y[2], 0.05 * sq * 1.0);
  EXPECT_EQ(y[3], 0.025 * sq * -2.0);
  EXPECT_EQ(y[0], 0.0);
}

// Two zero-noise half steps agree with one full step to O(dt^2).
TEST(EulerMaruyama, StepHalving) {
  const auto m = unicycle_team_model(1, 0.05, 0.025);
  const std::vector<double> x{0.0, 0.0, 1.0, 0.4};
  const std::vector<double> u{0.3, 0.5}, zero{0.0, 0.0};
  double prev = 0.0;
  for (double dt : {0.2, 0.1, 0.05, 0.025}) {
    const auto full = euler_maruyama_step(m, x, u, dt, zero);
    const auto half = euler_maruyama_step(m, euler_maruyama_step(m, x, u, dt / 2, zero), u, dt / 2, zero);
    double err = 0.0;
    for (int i = 0; i < 4; ++i) err = std::max(err, std::abs(full[i] - half[i]));
    EXPECT_LE(err, 0.5 * dt * dt);
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.5);
    prev = err;
  }
}

TEST(Model, CancellationPenalty) {
  const auto m = unicycle_team_model(1, 0.05, 0.025, 2.0);
  const auto r = cancellation_penalty(m);
  EXPECT_DOUBLE_EQ(r[0], 2.0 / 0.0025);
  EXPECT_DOUBLE_EQ(r[1], 2.0 / 0.000625);
}

TEST(Rollouts, ZeroHorizonCostsTerminalOnly) {
  GaussianOracle g;
  SamplingParams p;
  p.n_rollouts = 10;
  p.horizon_steps = 0;
  const std::vector<double> x{0.7};
  const auto b = sample_passive_rollouts(g.model(), g.cost(), x, 0.0, p, 1);
  for (double s : b.path_cost) EXPECT_EQ(s, 0.5 * 0.7 * 0.7);
}

TEST(Rollouts, NoDiffusionGivesIdenticalPaths) {
  auto m = unicycle_team_model(1, 0.0, 0.0);
  ContinuousCost c;
  c.state_cost = [](std::span<const double> x, double) { return x[0] * x[0]; };
  c.terminal_cost = [](std::span<const double> x) { return x[1]; };
  SamplingParams p;
  p.n_rollouts = 5;
  p.horizon_steps = 30;
  p.keep_paths = true;
  const std::vector<double> x{0.0, 0.0, 1.0, 0.5};
  const auto b = sample_passive_rollouts(m, c, x, 0.0, p, 3);
  for (int k = 1; k < 5; ++k) {
    EXPECT_EQ(b.path_cost[k], b.path_cost[0]);
    const auto a = b.path(0), bk = b.path(k);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), bk.begin()));
  }
  // With q = 0 the estimate is exp(-h(endpoint)) exactly.
  c.state_cost = [](std::span<const double>, double) { return 0.0; };
  const auto b0 = sample_passive_rollouts(m, c, x, 0.0, p, 3);
  const auto e = pi_desirability(b0, 1.0);
  EXPECT_EQ(e.log_z, -b0.terminal(0)[1]);
}

TEST(Rollouts, DeterministicAcrossThreadCounts) {
  auto m = unicycle_team_model(2, 0.05, 0.025);
  ContinuousCost c;
  c.state_cost = [](std::span<const double> x, double t) { return x[0] + 0.1 * t; };
  c.terminal_cost = [](std::span<const double> x) { return x[1] * x[1]; };
  SamplingParams p;
  p.n_rollouts = 257;
  p.horizon_steps = 40;
  p.keep_paths = true;
  const std::vector<double> x{0, 0, 0.3, 0, 1, 1, 0.3, 0.1};
  const auto a = sample_passive_rollouts(m, c, x, 0.5, p, 42);
  for (int threads : {2, 3, 8}) {
    p.threads = threads;
    const auto b = sample_passive_rollouts(m, c, x, 0.5, p, 42);
    EXPECT_EQ(a.path_cost, b.path_cost);
    EXPECT_EQ(a.first_noise, b.first_noise);
    EXPECT_EQ(a.paths, b.paths);
  }
  p.threads = 1;
  const auto other = sample_passive_rollouts(m, c, x, 0.5, p, 43);
  EXPECT_NE(a.path_cost, other.path_cost);
}

TEST(Desirability, ZeroCostsGiveOne) {
  GaussianOracle g;
  auto cost = g.cost();
  cost.terminal_cost = [](std::span<const double>) { return 0.0; };
  SamplingParams p;
  p.n_rollouts = 100;
  p.horizon_steps = 20;
  const std::vector<double> x{0.3};
  const auto e = pi_desirability(sample_passive_rollouts(g.model(), cost, x, 0.0, p, 1), 1.0);
  EXPECT_EQ(e.z, 1.0);
  EXPECT_EQ(e.log_z, 0.0);
}

TEST(Desirability, GaussianOracle) {
  GaussianOracle g;
  SamplingParams p;
  p.n_rollouts = 4000;
  p.dt = 0.05;
  p.horizon_steps = 20;
  const std::vector<double> x{0.7};
  int pass = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto b = sample_passive_rollouts(g.model(), g.cost(), x, 0.0, p, seed);
    const auto e = pi_desirability(b, 1.0);
    EXPECT_GT(e.z, 0.0);
    pass += std::abs(e.log_z - g.log_z(0.7)) <= 3.0 * e.log_std_error;
  }
  EXPECT_GE(pass, 9);
}

TEST(Control, GaussianOracle) {
  GaussianOracle g;
  SamplingParams p;
  p.n_rollouts = 4000;
  p.dt = 0.05;
  p.horizon_steps = 20;
  const std::vector<double> x{0.7};
  int pass = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto e = pi_optimal_control(g.model(), g.cost(), x, 0.0, p, seed);
    pass += std::abs(e.control[0] - g.control(0.7)) <= 3.0 * e.std_error[0];
  }
  EXPECT_GE(pass, 9);
}

TEST(Control, EqualCostsAverageTheNoise) {
  GaussianOracle g;
  auto cost = g.cost();
  cost.terminal_cost = [](std::span<const double>) { return 1.0; };
  SamplingParams p;
  p.n_rollouts = 500;
  p.horizon_steps = 10;
  const std::vector<double> x{0.0};
  const auto b = sample_passive_rollouts(g.model(), cost, x, 0.0, p, 9);
  const auto e = pi_optimal_control(g.model(), b);
  for (double w : e.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 500);
  EXPECT_LE(std::abs(e.control[0]), 4.0 * e.std_error[0]);
}

TEST(Control, SingleRollout) {
  const auto m = unicycle_team_model(1, 0.05, 0.025);
  ContinuousCost c;
  c.state_cost = [](std::span<const double>, double) { return 0.0; };
  c.terminal_cost = [](std::span<const double> x) { return x[0]; };
  SamplingParams p;
  p.n_rollouts = 1;
  p.horizon_steps = 15;
  const std::vector<double> x{0, 0, 0.3, 0};
  const auto b = sample_passive_rollouts(m, c, x, 0.0, p, 5);
  const auto e = pi_optimal_control(m, b);
  EXPECT_EQ(e.control[0], 0.05 * b.noise0(0)[0] / p.dt);
  EXPECT_EQ(e.control[1], 0.025 * b.noise0(0)[1] / p.dt);
}

// Mean absolute log-Z error over seeds shrinks as n grows.
TEST(Desirability, ErrorShrinksWithSamples) {
  GaussianOracle g;
  SamplingParams p;
  p.dt = 0.05;
  p.horizon_steps = 20;
  const std::vector<double> x{0.7};
  double prev = 1e9;
  for (int n : {100, 1000, 10000}) {
    p.n_rollouts = n;
    double err = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      err += std::abs(pi_desirability(sample_passive_rollouts(g.model(), g.cost(), x, 0.0, p, seed), 1.0).log_z -
                      g.log_z(0.7));
    }
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Desirability, StandardErrorScalesWithRootN) {
  GaussianOracle g;
  SamplingParams p;
  p.horizon_steps = 20;
  const std::vector<double> x{0.7};
  auto mean_se = [&](int n) {
    p.n_rollouts = n;
    double s = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      s += pi_desirability(sample_passive_rollouts(g.model(), g.cost(), x, 0.0, p, seed), 1.0).std_error;
    }
    return s / 10;
  };
  EXPECT_NEAR(mean_se(2000) / mean_se(1000), 1.0 / std::sqrt(2.0), 0.05);
}

TEST(Desirability, RejectsEmptyOrUnderflow) {
  EXPECT_THROW(pi_desirability(std::vector<double>{}, 1.0), ConfigError);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(pi_desirability(std::vector<double>{inf, inf}, 1.0), NumericalError);
}

}  // namespace
}  // namespace lsoc
