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
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lsoc/discrete.hpp"
#include "test_util.hpp"

namespace lsoc {
namespace {

// 1 interior state (0), 1 boundary state (1): stay 0.5, exit 0.5, q = 1.
DiscreteJointMDP scalar_mdp(double h = 0.0) {
  return DiscreteJointMDP::from_rows(
      2, [](std::size_t) { return Distribution{{0, 0.5}, {1, 0.5}}; }, [](std::size_t) { return 1.0; },
      [](std::size_t s) { return s == 1; }, [h](std::size_t) { return h; });
}

TEST(PassiveJoint, ProductOfPointMasses) {
  const AgentKernel stay({{{0, 1.0}}, {{1, 1.0}}});
  const JointIndexer idx({2, 2});
  const AgentKernel* k[] = {&stay, &stay};
  const auto row = passive_joint_transition(k, idx, idx.flatten({1, 0}));
  ASSERT_EQ(row.size(), 1u);
  EXPECT_EQ(row[0].state, idx.flatten({1, 0}));
  EXPECT_EQ(row[0].prob, 1.0);
}

TEST(PassiveJoint, ProductOfUniforms) {
  const AgentKernel uni({{{0, 0.5}, {1, 0.5}}, {{0, 0.5}, {1, 0.5}}});
  const JointIndexer idx({2, 2});
  const AgentKernel* k[] = {&uni, &uni};
  const auto row = passive_joint_transition(k, idx, 0);
  ASSERT_EQ(row.size(), 4u);
  for (std::size_t s = 0; s < 4; ++s) {
    EXPECT_EQ(row[s].state, s);
    EXPECT_DOUBLE_EQ(row[s].prob, 0.25);
  }
}

TEST(AgentKernel, RejectsUnnormalizedRow) {
  EXPECT_THROW(AgentKernel({{{0, 0.5}, {1, 0.4}}}), StructureError);
}

TEST(DiscreteJointMDP, BoundaryIsAbsorbingAndValidated) {
  const auto mdp = scalar_mdp();
  const auto b = mdp.passive_row(1);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].state, 1u);
  EXPECT_THROW(DiscreteJointMDP::from_rows(
                   2, [](std::size_t) { return Distribution{{0, 0.5}, {1, 0.5}}; },
                   [](std::size_t) { return -1.0; }, [](std::size_t s) { return s == 1; },
                   [](std::size_t) { return 0.0; }),
               StructureError);
  EXPECT_THROW(DiscreteJointMDP::from_rows(
                   2, [](std::size_t) { return Distribution{{0, 1.0}}; }, [](std::size_t) { return 0.0; },
                   [](std::size_t) { return false; }, [](std::size_t) { return 0.0; }),
               StructureError);
}

TEST(LinearSystem, ScalarExample) {
  const LinearSystem sys(scalar_mdp());
  const auto m = sys.dense_m();
  const auto n = sys.dense_n();
  EXPECT_DOUBLE_EQ(m[0][0], 0.5 * std::exp(-1.0));
  EXPECT_DOUBLE_EQ(n[0][0], 0.5 * std::exp(-1.0));
}

TEST(LinearSystem, ZeroCostGivesPassiveBlock) {
  std::mt19937_64 rng(5);
  const auto mdp = testing::random_mdp(rng, 12, 3, 4, 0.0, 0.0);
  const LinearSystem sys(mdp);
  const auto m = sys.dense_m();
  for (std::size_t i = 0; i < mdp.interior().size(); ++i) {
    const auto row = mdp.passive_row(mdp.interior()[i]);
    for (const auto& e : row) {
      if (!mdp.is_boundary(e.state)) EXPECT_DOUBLE_EQ(m[i][mdp.position(e.state)], e.prob);
    }
  }
}

TEST(Solve, ZeroCostsGiveUnitDesirability) {
  std::mt19937_64 rng(6);
  const auto base = testing::random_mdp(rng, 15, 3, 3, 0.0, 0.0);
  const auto mdp = base.with_terminal_costs([](std::size_t) { return 0.0; });
  for (bool log_space : {true, false}) {
    SolverOptions opt;
    opt.log_space = log_space;
    const auto z = solve(mdp, opt).table;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) EXPECT_NEAR(z.value(s), 1.0, 1e-9);
  }
}

TEST(Solve, ScalarFixedPoint) {
  const double a = 0.5 * std::exp(-1.0);
  const double expected = a / (1.0 - a);
  EXPECT_NEAR(expected, 0.2254, 1e-4);
  for (bool log_space : {true, false}) {
    SolverOptions opt;
    opt.log_space = log_space;
    const auto solved = solve(scalar_mdp(), opt);
    EXPECT_NEAR(solved.table.value(0), expected, 1e-12);
    EXPECT_EQ(solved.table.value(1), 1.0);
    EXPECT_LE(solved.residual, 1e-12);
  }
}

TEST(Solve, NonConvergenceIsReported) {
  SolverOptions opt;
  opt.max_iter = 2;
  opt.log_space = false;
  EXPECT_THROW(solve(scalar_mdp(), opt), ConvergenceError);
  opt.log_space = true;
  EXPECT_THROW(solve(scalar_mdp(), opt), ConvergenceError);
}

// exp(q) Z = sum p Z on every interior state; boundary V = h exactly.
TEST(Solve, BellmanLinearityOnRandomMdps) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mdp = testing::random_mdp(rng, 20 + trial, 4, 4, 0.0, 2.0);
    const auto solved = solve(mdp);
    const auto& z = solved.table;
    for (std::size_t s : mdp.interior()) {
      double backup = 0.0;
      for (const auto& e : mdp.passive_row(s)) backup += e.prob * z.value(e.state);
      EXPECT_NEAR(std::exp(mdp.state_cost(s)) * z.value(s), backup, 1e-10);
      EXPECT_TRUE(std::isfinite(z.cost_to_go(s)));
      EXPECT_GT(z.value(s), 0.0);
    }
    for (std::size_t s : mdp.boundary()) EXPECT_EQ(z.cost_to_go(s), mdp.terminal_cost(s));
    EXPECT_LT(LinearSystem(mdp).spectral_radius(), 1.0);
  }
}

TEST(Solve, LogAndLinearPathsAgree) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto mdp = testing::random_mdp(rng, 30, 5, 3, 0.0, 1.0);
    SolverOptions lin, lg;
    lin.log_space = false;
    lin.tol = lg.tol = 1e-15;
    const auto a = solve(mdp, lg).table;
    const auto b = solve(mdp, lin).table;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) EXPECT_NEAR(a.log_value(s), b.log_value(s), 1e-9);
  }
}

TEST(Solve, DampedIterationReachesSameFixedPoint) {
  std::mt19937_64 rng(9);
  const auto mdp = testing::random_mdp(rng, 25, 4, 3, 0.1, 1.0);
  SolverOptions damped;
  damped.damping = 0.5;
  const auto a = solve(mdp).table;
  const auto b = solve(mdp, damped).table;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) EXPECT_NEAR(a.log_value(s), b.log_value(s), 1e-10);
}

TEST(Policy, Examples) {
  // Interior state 0 with successors 1, 2 (both boundary), p = (0.5, 0.5).
  const auto mdp = DiscreteJointMDP::from_rows(
      3, [](std::size_t) { return Distribution{{1, 0.5}, {2, 0.5}}; }, [](std::size_t) { return 0.0; },
      [](std::size_t s) { return s > 0; }, [](std::size_t) { return 0.0; });
  const auto z = DesirabilityTable::from_values(std::vector<double>{1.0, 1.0, 3.0});
  const auto u = optimal_joint_policy(mdp, z, 0);
  ASSERT_EQ(u.size(), 2u);
  EXPECT_NEAR(u[0].prob, 0.25, 1e-15);
  EXPECT_NEAR(u[1].prob, 0.75, 1e-15);

  const auto flat = DesirabilityTable::from_values(std::vector<double>{2.0, 2.0, 2.0});
  const auto up = optimal_joint_policy(mdp, flat, 0);
  EXPECT_NEAR(up[0].prob, 0.5, 1e-15);
  EXPECT_NEAR(up[1].prob, 0.5, 1e-15);

  const auto det = DiscreteJointMDP::from_rows(
      2, [](std::size_t) { return Distribution{{1, 1.0}}; }, [](std::size_t) { return 0.0; },
      [](std::size_t s) { return s == 1; }, [](std::size_t) { return 0.0; });
  const auto ud = optimal_joint_policy(det, DesirabilityTable::from_values(std::vector<double>{1.0, 0.3}), 0);
  ASSERT_EQ(ud.size(), 1u);
  EXPECT_EQ(ud[0].state, 1u);
  EXPECT_EQ(ud[0].prob, 1.0);
}

TEST(Marginal, Examples) {
  FactorialSubsystem s{1, {2}, {1, 2}};
  const JointIndexer idx({2, 2});
  const Distribution joint{{0, 0.1}, {1, 0.2}, {2, 0.3}, {3, 0.4}};
  const auto m1 = marginal_local_policy(joint, s, idx, 1);
  EXPECT_NEAR(m1[0], 0.3, 1e-15);
  EXPECT_NEAR(m1[1], 0.7, 1e-15);
  const auto m2 = marginal_local_policy(joint, s, idx, 2);
  EXPECT_NEAR(m2[0], 0.4, 1e-15);
  EXPECT_NEAR(m2[1], 0.6, 1e-15);

  const auto point = marginal_local_policy(Distribution{{idx.flatten({1, 0}), 1.0}}, s, idx, 2);
  EXPECT_EQ(point[0], 1.0);
  EXPECT_EQ(point[1], 0.0);

  // Product (0.2, 0.8) x (0.6, 0.4).
  const Distribution product{{0, 0.12}, {1, 0.08}, {2, 0.48}, {3, 0.32}};
  const auto a = marginal_local_policy(product, s, idx, 1);
  const auto b = marginal_local_policy(product, s, idx, 2);
  EXPECT_NEAR(a[0], 0.2, 1e-15);
  EXPECT_NEAR(b[0], 0.6, 1e-15);
}

TEST(RunningCost, KlExamples) {
  const Distribution p{{0, 0.5}, {1, 0.5}};
  EXPECT_EQ(running_cost_discrete(1.5, p, p), 1.5);
  EXPECT_EQ(running_cost_discrete(0.0, p, p), 0.0);
  const Distribution point{{1, 1.0}};
  EXPECT_NEAR(kl_divergence(point, p), std::log(2.0), 1e-15);
  EXPECT_NEAR(running_cost_discrete(2.0, point, p), 2.0 + 0.6931471805599453, 1e-12);
  EXPECT_EQ(kl_divergence(Distribution{{2, 1.0}}, p), std::numeric_limits<double>::infinity());
}

TEST(Rollout, AdjacentBoundaryTerminatesInOneStep) {
  const auto mdp = DiscreteJointMDP::from_rows(
      2, [](std::size_t) { return Distribution{{0, 0.5}, {1, 0.5}}; }, [](std::size_t) { return 1.0; },
      [](std::size_t s) { return s == 1; }, [](std::size_t) { return 4.0; });
  const auto t = rollout_discrete(mdp, [](std::size_t) { return Distribution{{1, 1.0}}; }, 0, 1, 10);
  EXPECT_TRUE(t.terminated);
  EXPECT_EQ(t.states, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(t.total_cost, 1.0 + std::log(2.0) + 4.0, 1e-12);
}

TEST(Rollout, Deterministic) {
  std::mt19937_64 rng(10);
  const auto mdp = testing::random_mdp(rng, 40, 4, 4, 0.0, 1.0);
  const auto z = solve(mdp).table;
  auto policy = [&](std::size_t s) { return optimal_joint_policy(mdp, z, s); };
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const auto a = rollout_discrete(mdp, policy, 0, seed, 500);
    const auto b = rollout_discrete(mdp, policy, 0, seed, 500);
    EXPECT_EQ(a.states, b.states);
    EXPECT_EQ(a.total_cost, b.total_cost);
  }
}

// ---------------------------------------------------------------------------
// Brute-force oracle: value iteration on V(x) = min_u q + KL(u||p) + E_u V with
// the inner minimization done numerically by pairwise mass exchange.

double inner_objective_grad(double u, double p, double v) { return std::log(u / p) + 1.0 + v; }

double minimize_over_simplex(const Distribution& p, const std::vector<double>& v_succ) {
  const std::size_t k = p.size();
  std::vector<double> u(k);
  for (std::size_t i = 0; i < k; ++i) u[i] = p[i].prob;
  for (int sweep = 0; sweep < 500; ++sweep) {
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        // Move mass d from j to i; the directional derivative is monotone in d.
        const double total = u[i] + u[j];
        auto slope = [&](double d) {
          return inner_objective_grad(u[i] + d, p[i].prob, v_succ[i]) -
                 inner_objective_grad(u[j] - d, p[j].prob, v_succ[j]);
        };
        worst = std::max(worst, std::abs(slope(0.0)));
        double lo = -u[i] + 1e-300, hi = u[j] - 1e-300;
        for (int it = 0; it < 200 && hi - lo > 1e-18 * total; ++it) {
          const double mid = 0.5 * (lo + hi);
          (slope(mid) > 0.0 ? hi : lo) = mid;
        }
        const double d = 0.5 * (lo + hi);
        u[i] += d;
        u[j] = total - u[i];
      }
    }
    if (worst < 1e-13) break;
  }
  double f = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (u[i] > 0.0) f += u[i] * std::log(u[i] / p[i].prob);
    f += u[i] * v_succ[i];
  }
  return f;
}

std::vector<double> value_iteration(const DiscreteJointMDP& mdp) {
  std::vector<double> v(mdp.n_states(), 0.0);
  for (std::size_t s : mdp.boundary()) v[s] = mdp.terminal_cost(s);
  for (int it = 0; it < 10000; ++it) {
    double change = 0.0;
    for (std::size_t s : mdp.interior()) {
      const auto p = mdp.passive_row(s);
      std::vector<double> vs;
      for (const auto& e : p) vs.push_back(v[e.state]);
      const double next = mdp.state_cost(s) + minimize_over_simplex(p, vs);
      change = std::max(change, std::abs(next - v[s]));
      v[s] = next;
    }
    if (change < 1e-12) break;
  }
  return v;
}

// Cost-to-go of a fixed policy by iterating V = c + E_u V.
std::vector<double> evaluate_policy(const DiscreteJointMDP& mdp, const DesirabilityTable& z) {
  std::vector<double> v(mdp.n_states(), 0.0);
  for (std::size_t s : mdp.boundary()) v[s] = mdp.terminal_cost(s);
  std::vector<Distribution> rows(mdp.n_states());
  std::vector<double> cost(mdp.n_states(), 0.0);
  for (std::size_t s : mdp.interior()) {
    rows[s] = optimal_joint_policy(mdp, z, s);
    cost[s] = running_cost_discrete(mdp.state_cost(s), rows[s], mdp.passive_row(s));
  }
  for (int it = 0; it < 100000; ++it) {
    double change = 0.0;
    for (std::size_t s : mdp.interior()) {
      double next = cost[s];
      for (const auto& e : rows[s]) next += e.prob * v[e.state];
      change = std::max(change, std::abs(next - v[s]));
      v[s] = next;
    }
    if (change < 1e-13) break;
  }
  return v;
}

TEST(Oracle, PolicyMatchesValueIteration) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 20 + 20 * static_cast<std::size_t>(trial % 4);
    const auto mdp = testing::random_mdp(rng, n, 3 + trial % 3, 4, 0.1, 1.5);
    const auto z = solve(mdp).table;
    const auto v_star = value_iteration(mdp);
    const auto v_pi = evaluate_policy(mdp, z);
    for (std::size_t s = 0; s < n; ++s) {
      EXPECT_NEAR(v_pi[s], v_star[s], 1e-6) << "state " << s;
      EXPECT_NEAR(z.cost_to_go(s), v_star[s], 1e-6) << "state " << s;
    }
  }
}

}  // namespace
}  // namespace lsoc
