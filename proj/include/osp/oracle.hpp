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

// Deliberately naive baselines. Nothing here calls the optimized code paths
// it is meant to check.

#ifndef OSP_ORACLE_HPP_
#define OSP_ORACLE_HPP_

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "osp/cmon.hpp"
#include "osp/core.hpp"
#include "osp/imptree.hpp"
#include "osp/setsystem.hpp"

namespace osp::oracle {

struct OracleBudget {
  std::size_t max_profiles = 1u << 20;
  std::size_t max_cycle_length = 8;
  std::size_t max_trees = 100000;
  std::size_t max_cycles = 1u << 20;
  std::size_t max_nodes = 1u << 24;
};

// Calls visit on every load vector with n non-negative parts summing to m.
inline void for_each_composition(std::size_t n, Load m,
                                 const std::function<void(const Allocation&)>& visit) {
  if (n == 0) {
    if (m == 0) visit({});
    return;
  }
  Allocation x(n, 0);
  std::function<void(std::size_t, Load)> go = [&](std::size_t i, Load left) {
    if (i + 1 == n) {
      x[i] = left;
      visit(x);
      return;
    }
    for (Load v = left; v >= 0; --v) {
      x[i] = v;
      go(i + 1, left - v);
    }
  };
  go(0, m);
}

inline std::size_t composition_count(std::size_t n, Load m) {
  // C(m + n - 1, n - 1), saturating.
  if (n == 0) return m == 0 ? 1 : 0;
  long double c = 1;
  for (std::size_t k = 1; k < n; ++k) {
    c = c * static_cast<long double>(m + static_cast<Load>(k)) /
        static_cast<long double>(k);
  }
  return c > 1e18L ? static_cast<std::size_t>(-1)
                   : static_cast<std::size_t>(c + 0.5L);
}

// b_i (x_i + 1) > b_j x_j and b_j (x_j + 1) >= b_i x_i for every pair where i
// is better (faster, or equally fast with lower index).
inline bool satisfies_balance(const Allocation& x, const TypeProfile& b) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (i == j) continue;
      bool better = b[i] < b[j] || (b[i] == b[j] && i < j);
      if (!better) continue;
      if (!(b[i] * (x[i] + 1) > b[j] * x[j])) return false;
      if (!(b[j] * (x[j] + 1) >= b[i] * x[i])) return false;
    }
  }
  return true;
}

// Every minimum-makespan load vector.
inline std::vector<Allocation> all_makespan_optima(
    const TypeProfile& b, Load m, const OracleBudget& budget = {}) {
  if (composition_count(b.size(), m) > budget.max_profiles) {
    throw BudgetExceeded("too many load vectors to enumerate");
  }
  std::optional<Rational> best;
  std::vector<Allocation> out;
  for_each_composition(b.size(), m, [&](const Allocation& x) {
    Rational ms = makespan(x, b);
    if (!best || ms < *best) {
      best = ms;
      out.clear();
    }
    if (ms == *best) out.push_back(x);
  });
  return out;
}

// The minimum-makespan load vector that satisfies the pairwise balance
// inequalities. With positive costs that vector is unique; if none
// qualifies (zero costs) the lexicographically largest optimum is returned.
inline std::pair<Allocation, Rational> brute_makespan_opt(
    const TypeProfile& b, Load m, const OracleBudget& budget = {}) {
  if (b.empty()) throw InputError("no machines");
  auto optima = all_makespan_optima(b, m, budget);
  Rational ms = makespan(optima.front(), b);
  for (const auto& x : optima) {
    if (satisfies_balance(x, b)) return {x, ms};
  }
  return {*std::max_element(optima.begin(), optima.end()), ms};
}

inline std::pair<std::size_t, Rational> brute_social_cost_opt(
    const setsys::SetSystemInstance& inst, const TypeProfile& b) {
  if (b.size() != inst.elements()) {
    throw InputError("profile length differs from element count");
  }
  std::optional<std::size_t> best;
  Rational best_cost;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    Rational c = 0;
    for (auto e : inst.set(k)) c += b[e];
    if (!best || c < best_cost || (c == best_cost && inst.precedes(k, *best))) {
      best = k;
      best_cost = c;
    }
  }
  return {*best, best_cost};
}

struct Cycle {
  std::vector<ProfileIndex> nodes;
  Rational weight;
};

// Every simple cycle of at most max_cycle_length edges, each reported once
// starting from its smallest node.
inline std::vector<Cycle> enumerate_cycles(const cmon::OspGraph& g,
                                           const OracleBudget& budget = {}) {
  std::size_t v = g.node_count();
  std::vector<std::vector<std::pair<ProfileIndex, Rational>>> adj(v);
  for (const auto& e : g.edges) adj[e.from].emplace_back(e.to, e.weight);
  std::vector<Cycle> out;
  std::vector<char> on_path(v, 0);
  std::vector<ProfileIndex> path;
  std::function<void(ProfileIndex, ProfileIndex, const Rational&)> dfs =
      [&](ProfileIndex start, ProfileIndex x, const Rational& w) {
        for (const auto& [y, ew] : adj[x]) {
          if (y == start) {
            if (out.size() >= budget.max_cycles) {
              throw BudgetExceeded("cycle enumeration exceeded its budget");
            }
            out.push_back({path, w + ew});
            continue;
          }
          if (y < start || on_path[y] || path.size() >= budget.max_cycle_length) {
            continue;
          }
          on_path[y] = 1;
          path.push_back(y);
          dfs(start, y, w + ew);
          path.pop_back();
          on_path[y] = 0;
        }
      };
  for (ProfileIndex s = 0; s < v; ++s) {
    if (adj[s].empty()) continue;
    on_path[s] = 1;
    path = {s};
    dfs(s, s, Rational(0));
    on_path[s] = 0;
  }
  return out;
}

// Allowed allocations for the profile with the given index.
using OptimalSets = std::function<std::vector<Allocation>(ProfileIndex)>;

struct ExhaustVerdict {
  bool feasible = false;
  std::optional<imptree::ImplementationTree> tree;
  std::optional<PaymentTable> payments;
  std::size_t trees_checked = 0;
  std::size_t assignments_checked = 0;
};

// Searches every canonical tree and every leaf labelling drawn from the
// allowed allocations for one that passes the full OSP check.
inline ExhaustVerdict exhaust_trees_for_optimality(
    const DomainProfile& domains, const OptimalSets& allowed,
    const OracleBudget& budget = {},
    const CostModel& cost = single_parameter_cost) {
  if (domains.profile_count() > budget.max_profiles) {
    throw BudgetExceeded("domain too large for tree exhaustion");
  }
  std::vector<std::vector<Allocation>> allowed_at(domains.profile_count());
  for (ProfileIndex p = 0; p < allowed_at.size(); ++p) {
    allowed_at[p] = allowed(p);
    std::sort(allowed_at[p].begin(), allowed_at[p].end());
  }
  ExhaustVerdict verdict;
  imptree::enumerate_trees(domains, budget.max_nodes, [&](const imptree::ImplementationTree& tree) {
    if (++verdict.trees_checked > budget.max_trees) {
      throw BudgetExceeded("tree exhaustion exceeded its budget");
    }
    auto leaves = tree.leaves();
    std::vector<std::size_t> position(tree.size(), 0);
    for (std::size_t k = 0; k < leaves.size(); ++k) position[leaves[k]] = k;
    // Candidate outcomes per leaf: allocations allowed at every compatible
    // profile.
    std::vector<std::vector<Allocation>> choices(leaves.size());
    std::vector<bool> started(leaves.size(), false);
    for (ProfileIndex p = 0; p < domains.profile_count(); ++p) {
      auto k = position[tree.leaf_for_index(p)];
      if (!started[k]) {
        choices[k] = allowed_at[p];
        started[k] = true;
      } else {
        std::vector<Allocation> keep;
        std::set_intersection(choices[k].begin(), choices[k].end(),
                              allowed_at[p].begin(), allowed_at[p].end(),
                              std::back_inserter(keep));
        choices[k] = std::move(keep);
      }
      if (choices[k].empty()) return true;
    }
    // Two-cycles grouped by the later of their two leaves.
    struct Pair {
      std::size_t agent;
      ProfileIndex x, y;
      std::size_t lx, ly;
    };
    std::vector<std::vector<Pair>> checks(leaves.size());
    for (const auto& e : imptree::separating_events(tree)) {
      auto ka = domains.type_index(e.agent, e.left_type);
      auto kb = domains.type_index(e.agent, e.right_type);
      auto others = cmon::detail::others_indices(domains, e.domains_at_node, e.agent);
      for (auto pa : others) {
        for (auto pb : others) {
          ProfileIndex x = domains.with_digit(pa, e.agent, ka);
          ProfileIndex y = domains.with_digit(pb, e.agent, kb);
          std::size_t lx = position[tree.leaf_for_index(x)];
          std::size_t ly = position[tree.leaf_for_index(y)];
          if (lx == ly) continue;
          checks[std::max(lx, ly)].push_back({e.agent, x, y, lx, ly});
        }
      }
    }
    std::vector<const Allocation*> pick(leaves.size(), nullptr);
    auto two_cycle_ok = [&](std::size_t k) {
      for (const auto& c : checks[k]) {
        const Allocation& fx = *pick[c.lx];
        const Allocation& fy = *pick[c.ly];
        const Rational& xi = domains.type_at(c.x, c.agent);
        const Rational& yi = domains.type_at(c.y, c.agent);
        Rational w = cost(c.agent, xi, fy) - cost(c.agent, xi, fx) +
                     cost(c.agent, yi, fx) - cost(c.agent, yi, fy);
        if (w < 0) return false;
      }
      return true;
    };
    std::function<bool(std::size_t)> assign = [&](std::size_t k) -> bool {
      if (k == leaves.size()) {
        ++verdict.assignments_checked;
        std::vector<Allocation> table(domains.profile_count());
        for (ProfileIndex p = 0; p < table.size(); ++p) {
          table[p] = *pick[position[tree.leaf_for_index(p)]];
        }
        auto v = cmon::check_osp_events(table, domains,
                                        imptree::separating_events(tree), cost);
        if (!v.is_osp) return false;
        imptree::ImplementationTree witness = tree;
        for (std::size_t j = 0; j < leaves.size(); ++j) {
          witness.set_leaf(leaves[j], *pick[j]);
        }
        verdict.feasible = true;
        verdict.tree = std::move(witness);
        verdict.payments = std::move(v.payments);
        return true;
      }
      for (const auto& a : choices[k]) {
        pick[k] = &a;
        if (two_cycle_ok(k) && assign(k + 1)) return true;
      }
      pick[k] = nullptr;
      return false;
    };
    return !assign(0);
  });
  return verdict;
}

// Allowed sets: every makespan optimum of each profile.
inline OptimalSets makespan_optima(const DomainProfile& domains, Load m) {
  return [domains, m](ProfileIndex p) {
    return all_makespan_optima(domains.profile_at(p), m);
  };
}

// Allowed sets: the tie-broken social-cost optimum of each profile.
inline OptimalSets social_cost_optimum(const setsys::SetSystemInstance& inst) {
  return [inst](ProfileIndex p) {
    auto best = brute_social_cost_opt(inst, inst.domains().profile_at(p)).first;
    return std::vector<Allocation>{inst.indicator(best)};
  };
}

}  // namespace osp::oracle

#endif  // OSP_ORACLE_HPP_
