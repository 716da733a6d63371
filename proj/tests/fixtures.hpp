// Copyright 2026 The osp-cmon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared test fixtures and test-only oracles.

#ifndef OSP_TESTS_FIXTURES_HPP_
#define OSP_TESTS_FIXTURES_HPP_

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "osp/core.hpp"
#include "osp/imptree.hpp"

namespace osp::testing {

// Three links: 0 = (s,t), 1 = (s,u), 2 = (u,t), each with cost L or H.
// The auction asks (s,t) first; on H it asks (s,u), then (u,t).
inline imptree::ImplementationTree path_auction_tree(const Rational& low,
                                                     const Rational& high) {
  auto d = DomainProfile::homogeneous(3, {low, high});
  imptree::ImplementationTree t(d);
  Allocation direct{1, 0, 0}, detour{0, 1, 1};
  auto ut_low = t.add_leaf(detour, "(s,u,t)");
  auto ut_high = t.add_leaf(direct, "(s,t)");
  auto ut = t.add_node(2, {{{low}, ut_low}, {{high}, ut_high}});
  auto su_high = t.add_leaf(direct, "(s,t)");
  auto su = t.add_node(1, {{{low}, ut}, {{high}, su_high}});
  auto st_low = t.add_leaf(direct, "(s,t)");
  auto root = t.add_node(0, {{{low}, st_low}, {{high}, su}});
  t.finish(root);
  return t;
}

using PaymentFn = std::function<std::vector<Rational>(const TypeProfile&)>;

struct Deviation {
  imptree::NodeId node;
  std::size_t agent;
  Rational truth, lie;
  Rational worst_truthful, best_deviating;
};

// Every profile whose coordinates range over `doms`.
inline std::vector<TypeProfile> product(const std::vector<TypeSet>& doms) {
  std::vector<TypeProfile> out{{}};
  for (const auto& d : doms) {
    std::vector<TypeProfile> next;
    for (const auto& partial : out) {
      for (const auto& v : d) {
        auto b = partial;
        b.push_back(v);
        next.push_back(std::move(b));
      }
    }
    out = std::move(next);
  }
  return out;
}

// Simulates unilateral deviations at every node: an agent of type a acting
// as type b (routed to another child) must not do better in its best case
// than truth-telling does in its worst case. Utility is payment minus cost.
inline std::optional<Deviation> find_profitable_deviation(
    const imptree::ImplementationTree& tree, const AllocationFunction& f,
    const PaymentFn& pay) {
  for (imptree::NodeId u = 0; u < tree.size(); ++u) {
    const auto& node = tree.node(u);
    if (node.is_leaf()) continue;
    std::size_t i = *node.agent;
    auto doms = tree.current_domains(u);
    for (std::size_t c1 = 0; c1 < node.children.size(); ++c1) {
      for (std::size_t c2 = 0; c2 < node.children.size(); ++c2) {
        if (c1 == c2) continue;
        for (const auto& a : node.children[c1].types) {
          for (const auto& b : node.children[c2].types) {
            auto others = doms;
            others[i] = {Rational(0)};
            std::optional<Rational> worst, best;
            for (auto prof : product(others)) {
              prof[i] = a;
              Rational truthful = pay(prof)[i] - a * f(prof)[i];
              prof[i] = b;
              Rational deviating = pay(prof)[i] - a * f(prof)[i];
              if (!worst || truthful < *worst) worst = truthful;
              if (!best || deviating > *best) best = deviating;
            }
            if (*best > *worst) return Deviation{u, i, a, b, *worst, *best};
          }
        }
      }
    }
  }
  return std::nullopt;
}

// Random tree over `d`: each node becomes a leaf with probability
// leaf_prob (always when nothing can split), otherwise splits a random
// agent's current domain into random blocks. Leaves get random loads in
// [0, max_load].
inline imptree::ImplementationTree random_tree(const DomainProfile& d,
                                               std::mt19937_64& rng,
                                               double leaf_prob, Load max_load) {
  imptree::ImplementationTree t(d);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<Load> load(0, max_load);
  std::function<imptree::NodeId(const std::vector<TypeSet>&)> grow =
      [&](const std::vector<TypeSet>& cur) -> imptree::NodeId {
    std::vector<std::size_t> splittable;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (cur[i].size() >= 2) splittable.push_back(i);
    }
    if (splittable.empty() || coin(rng) < leaf_prob) {
      Allocation x(d.agents());
      for (auto& v : x) v = load(rng);
      return t.add_leaf(x);
    }
    std::size_t i = splittable[std::uniform_int_distribution<std::size_t>(
        0, splittable.size() - 1)(rng)];
    std::size_t k = std::uniform_int_distribution<std::size_t>(2, cur[i].size())(rng);
    std::vector<TypeSet> blocks;
    do {
      blocks.assign(k, {});
      for (const auto& v : cur[i]) {
        blocks[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)].push_back(v);
      }
    } while (std::any_of(blocks.begin(), blocks.end(),
                         [](const TypeSet& s) { return s.empty(); }));
    std::vector<imptree::Branch> children;
    for (const auto& blk : blocks) {
      auto next = cur;
      next[i] = blk;
      children.push_back({blk, grow(next)});
    }
    return t.add_node(i, std::move(children));
  };
  t.finish(grow(d.per_agent()));
  return t;
}

}  // namespace osp::testing

#endif  // OSP_TESTS_FIXTURES_HPP_
