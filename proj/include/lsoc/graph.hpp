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

// Agent communication graph and its factorization into per-agent
// subsystems (central agent plus neighbors). Agent ids are 1-based.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lsoc/errors.hpp"

namespace lsoc {

using AgentId = int;

class AgentGraph {
 public:
  AgentGraph(int n_agents, std::vector<std::pair<AgentId, AgentId>> edges)
      : n_agents_(n_agents) {
    if (n_agents < 1) throw StructureError("graph needs at least one agent");
    adjacency_.assign(static_cast<std::size_t>(n_agents) + 1, {});
    for (auto [a, b] : edges) {
      if (a < 1 || a > n_agents || b < 1 || b > n_agents) {
        throw StructureError("edge (" + std::to_string(a) + "," +
                             std::to_string(b) + ") out of range");
      }
      if (a == b) {
        throw StructureError("self-loop on agent " + std::to_string(a));
      }
      edges_.insert({std::min(a, b), std::max(a, b)});
      adjacency_[a].insert(b);
      adjacency_[b].insert(a);
    }
    if (!connected()) throw StructureError("agent graph is not connected");
  }

  int n_agents() const { return n_agents_; }
  const std::set<std::pair<AgentId, AgentId>>& edges() const { return edges_; }
  const std::set<AgentId>& neighbors(AgentId a) const { return adjacency_.at(a); }

 private:
  bool connected() const {
    std::vector<bool> seen(adjacency_.size(), false);
    std::vector<AgentId> stack{1};
    seen[1] = true;
    int count = 0;
    while (!stack.empty()) {
      AgentId a = stack.back();
      stack.pop_back();
      ++count;
      for (AgentId b : adjacency_[a]) {
        if (!seen[b]) {
          seen[b] = true;
          stack.push_back(b);
        }
      }
    }
    return count == n_agents_;
  }

  int n_agents_;
  std::set<std::pair<AgentId, AgentId>> edges_;
  std::vector<std::set<AgentId>> adjacency_;
};

struct FactorialSubsystem {
  AgentId central = 1;
  std::vector<AgentId> neighbors;  // sorted, excludes central
  std::vector<AgentId> members;    // sorted union {central} + neighbors

  // Position of an agent within `members`, or -1.
  int position_of(AgentId a) const {
    auto it = std::lower_bound(members.begin(), members.end(), a);
    if (it == members.end() || *it != a) return -1;
    return static_cast<int>(it - members.begin());
  }
  int central_position() const { return position_of(central); }
  std::size_t size() const { return members.size(); }
};

inline std::vector<FactorialSubsystem> factorize(const AgentGraph& graph) {
  std::vector<FactorialSubsystem> out;
  out.reserve(static_cast<std::size_t>(graph.n_agents()));
  for (AgentId j = 1; j <= graph.n_agents(); ++j) {
    FactorialSubsystem s;
    s.central = j;
    const auto& nb = graph.neighbors(j);
    s.neighbors.assign(nb.begin(), nb.end());
    s.members = s.neighbors;
    s.members.insert(std::lower_bound(s.members.begin(), s.members.end(), j), j);
    out.push_back(std::move(s));
  }
  return out;
}

// Row-major flattening of per-member local states, members in canonical
// (ascending) order. The last member varies fastest.
class JointIndexer {
 public:
  explicit JointIndexer(std::vector<int> cardinalities)
      : card_(std::move(cardinalities)) {
    if (card_.empty()) throw StructureError("joint indexer needs >= 1 factor");
    size_ = 1;
    for (int c : card_) {
      if (c < 1) throw StructureError("cardinality must be positive");
      size_ *= static_cast<std::size_t>(c);
    }
  }

  std::size_t size() const { return size_; }
  std::size_t arity() const { return card_.size(); }
  const std::vector<int>& cardinalities() const { return card_; }

  std::size_t flatten(const std::vector<int>& locals) const {
    if (locals.size() != card_.size()) {
      throw StructureError("joint index arity mismatch: got " +
                           std::to_string(locals.size()) + ", expected " +
                           std::to_string(card_.size()));
    }
    std::size_t idx = 0;
    for (std::size_t k = 0; k < card_.size(); ++k) {
      if (locals[k] < 0 || locals[k] >= card_[k]) {
        throw StructureError("local state " + std::to_string(locals[k]) +
                             " out of range for factor " + std::to_string(k));
      }
      idx = idx * static_cast<std::size_t>(card_[k]) +
            static_cast<std::size_t>(locals[k]);
    }
    return idx;
  }

  std::vector<int> unflatten(std::size_t idx) const {
    if (idx >= size_) throw StructureError("joint index out of range");
    std::vector<int> locals(card_.size());
    for (std::size_t k = card_.size(); k-- > 0;) {
      locals[k] = static_cast<int>(idx % static_cast<std::size_t>(card_[k]));
      idx /= static_cast<std::size_t>(card_[k]);
    }
    return locals;
  }

  // Local state of factor k without allocating.
  int local(std::size_t idx, std::size_t k) const {
    std::size_t stride = 1;
    for (std::size_t j = k + 1; j < card_.size(); ++j) {
      stride *= static_cast<std::size_t>(card_[j]);
    }
    return static_cast<int>((idx / stride) % static_cast<std::size_t>(card_[k]));
  }

 private:
  std::vector<int> card_;
  std::size_t size_ = 1;
};

inline JointIndexer make_indexer(const FactorialSubsystem& s,
                                 const std::vector<int>& per_agent_cardinality) {
  std::vector<int> card;
  card.reserve(s.members.size());
  for (AgentId a : s.members) {
    card.push_back(per_agent_cardinality.at(static_cast<std::size_t>(a - 1)));
  }
  return JointIndexer(std::move(card));
}

}  // namespace lsoc
