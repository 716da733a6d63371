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

#ifndef OSP_CMON_HPP_
#define OSP_CMON_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "osp/core.hpp"
#include "osp/imptree.hpp"

namespace osp::cmon {

using imptree::ImplementationTree;
using imptree::SeparatingEvent;

struct Edge {
  ProfileIndex from = 0;
  ProfileIndex to = 0;
  Rational weight;
  std::size_t event = 0;  // index into OspGraph::events
};

// Per-agent graph on the full domain. Edge A -> B weighs
// cost(A_i, f(B)) - cost(A_i, f(A)).
struct OspGraph {
  std::size_t agent = 0;
  DomainProfile domain;
  std::vector<SeparatingEvent> events;
  std::vector<Edge> edges;

  std::size_t node_count() const { return domain.profile_count(); }
};

struct NegativeCycle {
  std::size_t agent = 0;
  std::vector<ProfileIndex> nodes;   // closed: edge k goes nodes[k] -> nodes[k+1 mod len]
  std::vector<std::size_t> edges;    // indices into OspGraph::edges
  Rational weight;
};

struct OspVerdict {
  bool is_osp = true;
  std::optional<PaymentTable> payments;
  std::optional<NegativeCycle> cycle;
  // Set by check_two_cycles when some |D_i| >= 4: a pass is then only a
  // necessary condition.
  bool two_cycle_insufficient = false;
};

// Evaluates f once per profile of `domain`.
inline std::vector<Allocation> tabulate(const AllocationFunction& f,
                                        const DomainProfile& domain) {
  std::vector<Allocation> out(domain.profile_count());
  for (ProfileIndex p = 0; p < out.size(); ++p) {
    out[p] = f(domain.profile_at(p));
    if (out[p].size() != domain.agents()) {
      throw InputError("allocation function returned " +
                       std::to_string(out[p].size()) + " loads for " +
                       std::to_string(domain.agents()) + " agents");
    }
  }
  return out;
}

// Events of a direct-revelation mechanism: every agent separates every pair
// of its types at a virtual root where the others still have full domains.
inline std::vector<SeparatingEvent> direct_events(const DomainProfile& domain) {
  std::vector<SeparatingEvent> out;
  for (std::size_t i = 0; i < domain.agents(); ++i) {
    const auto& d = domain.domain(i);
    for (std::size_t a = 0; a < d.size(); ++a) {
      for (std::size_t b = a + 1; b < d.size(); ++b) {
        SeparatingEvent e;
        e.node = imptree::kNoNode;
        e.agent = i;
        e.left_type = d[a];
        e.right_type = d[b];
        e.domains_at_node = domain.per_agent();
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

namespace detail {

class EdgeSet {
 public:
  explicit EdgeSet(std::size_t v) : v_(v) {
    if (v <= (std::size_t{1} << 13)) bits_.assign(v * v, false);
  }
  // True if the edge was not present before.
  bool insert(ProfileIndex a, ProfileIndex b) {
    if (!bits_.empty()) {
      auto k = a * v_ + b;
      if (bits_[k]) return false;
      bits_[k] = true;
      return true;
    }
    return hashed_.insert(static_cast<std::uint64_t>(a) * v_ + b).second;
  }

 private:
  std::size_t v_;
  std::vector<bool> bits_;
  std::unordered_set<std::uint64_t> hashed_;
};

// Global indices of profiles whose agent-`skip` digit is 0 and whose other
// coordinates range over `doms`.
inline std::vector<ProfileIndex> others_indices(const DomainProfile& domain,
                                                const std::vector<TypeSet>& doms,
                                                std::size_t skip) {
  std::vector<ProfileIndex> out{0};
  for (std::size_t j = 0; j < domain.agents(); ++j) {
    if (j == skip) continue;
    std::vector<ProfileIndex> next;
    for (const auto& t : doms[j]) {
      auto k = domain.type_index(j, t);
      if (k == DomainProfile::npos) {
        throw InvariantError("current domain escapes the full domain");
      }
      for (auto base : out) next.push_back(base + k * domain.stride(j));
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

inline OspGraph build_osp_graph_from_events(
    const std::vector<Allocation>& table, const DomainProfile& domain,
    const std::vector<SeparatingEvent>& events, std::size_t agent,
    const CostModel& cost = single_parameter_cost) {
  OspGraph g;
  g.agent = agent;
  g.domain = domain;
  detail::EdgeSet seen(domain.profile_count());
  for (const auto& e : events) {
    if (e.agent != agent) continue;
    g.events.push_back(e);
    std::size_t ev = g.events.size() - 1;
    auto ka = domain.type_index(agent, e.left_type);
    auto kb = domain.type_index(agent, e.right_type);
    auto others = detail::others_indices(domain, e.domains_at_node, agent);
    for (auto pa : others) {
      ProfileIndex x = domain.with_digit(pa, agent, ka);
      for (auto pb : others) {
        ProfileIndex y = domain.with_digit(pb, agent, kb);
        const Rational& xi = domain.type_at(x, agent);
        const Rational& yi = domain.type_at(y, agent);
        if (seen.insert(x, y)) {
          g.edges.push_back(
              {x, y, cost(agent, xi, table[y]) - cost(agent, xi, table[x]), ev});
        }
        if (seen.insert(y, x)) {
          g.edges.push_back(
              {y, x, cost(agent, yi, table[x]) - cost(agent, yi, table[y]), ev});
        }
      }
    }
  }
  return g;
}

inline OspGraph build_osp_graph(const AllocationFunction& f,
                                const ImplementationTree& tree,
                                std::size_t agent,
                                const CostModel& cost = single_parameter_cost) {
  auto table = tabulate(f, tree.domains());
  return build_osp_graph_from_events(table, tree.domains(),
                                     imptree::separating_events(tree), agent,
                                     cost);
}

// Bellman-Ford from a virtual source joined to every node by a zero edge.
// Returns the distances, or nullopt when a negative cycle exists.
inline std::optional<std::vector<Rational>> omega_distances(const OspGraph& g) {
  std::size_t v = g.node_count();
  std::vector<Rational> dist(v, Rational(0));
  for (std::size_t round = 0; round <= v; ++round) {
    bool changed = false;
    for (const auto& e : g.edges) {
      Rational cand = dist[e.from] + e.weight;
      if (cand < dist[e.to]) {
        dist[e.to] = cand;
        changed = true;
      }
    }
    if (!changed) return dist;
  }
  return std::nullopt;
}

namespace detail {

// Negative cycle read off Bellman-Ford predecessors. Used only when the
// graph is too large for the length-minimal search.
inline NegativeCycle predecessor_cycle(const OspGraph& g) {
  std::size_t v = g.node_count();
  std::vector<Rational> dist(v, Rational(0));
  std::vector<std::size_t> pred(v, static_cast<std::size_t>(-1));
  std::size_t last = static_cast<std::size_t>(-1);
  for (std::size_t round = 0; round <= v; ++round) {
    last = static_cast<std::size_t>(-1);
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      const auto& e = g.edges[k];
      Rational cand = dist[e.from] + e.weight;
      if (cand < dist[e.to]) {
        dist[e.to] = cand;
        pred[e.to] = k;
        last = e.to;
      }
    }
    if (last == static_cast<std::size_t>(-1)) break;
  }
  if (last == static_cast<std::size_t>(-1)) {
    throw InvariantError("no negative cycle to extract");
  }
  ProfileIndex x = last;
  for (std::size_t k = 0; k < v; ++k) x = g.edges[pred[x]].from;
  NegativeCycle c;
  c.agent = g.agent;
  ProfileIndex y = x;
  do {
    c.edges.push_back(pred[y]);
    y = g.edges[pred[y]].from;
  } while (y != x);
  std::reverse(c.edges.begin(), c.edges.end());
  c.weight = 0;
  for (auto k : c.edges) {
    c.nodes.push_back(g.edges[k].from);
    c.weight += g.edges[k].weight;
  }
  return c;
}

}  // namespace detail

// A negative cycle with the fewest edges, or nullopt. Among shortest ones the
// lightest is returned; remaining ties go to the smallest start node. The
// cycle starts at its smallest node. Graphs with more than 256 active nodes,
// or whose shortest negative cycle is longer than 32, fall back to the
// Bellman-Ford predecessor cycle.
inline std::optional<NegativeCycle> negative_cycle(const OspGraph& g) {
  if (omega_distances(g)) return std::nullopt;
  std::size_t v = g.node_count();
  // Compact the vertices that carry edges.
  std::vector<std::size_t> local(v, static_cast<std::size_t>(-1));
  std::vector<ProfileIndex> global;
  for (const auto& e : g.edges) {
    for (auto x : {e.from, e.to}) {
      if (local[x] == static_cast<std::size_t>(-1)) {
        local[x] = global.size();
        global.push_back(x);
      }
    }
  }
  std::size_t n = global.size();
  if (n > 256) return detail::predecessor_cycle(g);

  // walk[s][x]: lightest walk s -> x with exactly k edges; pred[k][s][x] is
  // the last edge of that walk.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::vector<std::optional<Rational>>> walk(
      n, std::vector<std::optional<Rational>>(n));
  for (std::size_t s = 0; s < n; ++s) walk[s][s] = Rational(0);
  std::vector<std::vector<std::vector<std::size_t>>> pred;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k > 32) return detail::predecessor_cycle(g);
    std::vector<std::vector<std::optional<Rational>>> next(
        n, std::vector<std::optional<Rational>>(n));
    std::vector<std::vector<std::size_t>> pk(n, std::vector<std::size_t>(n, kNone));
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
        const auto& e = g.edges[ei];
        const auto& base = walk[s][local[e.from]];
        if (!base) continue;
        Rational cand = *base + e.weight;
        auto& slot = next[s][local[e.to]];
        if (!slot || cand < *slot) {
          slot = cand;
          pk[s][local[e.to]] = ei;
        }
      }
    }
    pred.push_back(std::move(pk));
    walk = std::move(next);
    std::optional<std::size_t> best;
    for (std::size_t s = 0; s < n; ++s) {
      if (walk[s][s] && *walk[s][s] < 0) {
        if (!best || *walk[s][s] < *walk[*best][*best] ||
            (*walk[s][s] == *walk[*best][*best] && global[s] < global[*best])) {
          best = s;
        }
      }
    }
    if (!best) continue;
    NegativeCycle c;
    c.agent = g.agent;
    c.weight = *walk[*best][*best];
    std::size_t x = *best;
    for (std::size_t step = k; step-- > 0;) {
      std::size_t ei = pred[step][*best][x];
      c.edges.push_back(ei);
      x = local[g.edges[ei].from];
    }
    std::reverse(c.edges.begin(), c.edges.end());
    for (auto ei : c.edges) c.nodes.push_back(g.edges[ei].from);
    auto rot = std::min_element(c.nodes.begin(), c.nodes.end()) - c.nodes.begin();
    std::rotate(c.nodes.begin(), c.nodes.begin() + rot, c.nodes.end());
    std::rotate(c.edges.begin(), c.edges.begin() + rot, c.edges.end());
    return c;
  }
  throw InvariantError("Bellman-Ford reported a negative cycle that the "
                       "walk search could not find");
}

// p(b) = shortest distance from the virtual source to b.
inline std::vector<Rational> synthesize_payments(const OspGraph& g) {
  auto dist = omega_distances(g);
  if (!dist) throw InputError("graph has a negative cycle; no payments exist");
  return *dist;
}

// First edge violating p(to) - p(from) <= weight, if any.
inline std::optional<std::size_t> payment_violation(
    const OspGraph& g, const std::vector<Rational>& p) {
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto& e = g.edges[k];
    if (p[e.to] - p[e.from] > e.weight) return k;
  }
  return std::nullopt;
}

inline OspVerdict check_osp_events(const std::vector<Allocation>& table,
                                   const DomainProfile& domain,
                                   const std::vector<SeparatingEvent>& events,
                                   const CostModel& cost = single_parameter_cost) {
  std::size_t n = domain.agents();
  std::vector<std::optional<NegativeCycle>> cycles(n);
  std::vector<std::vector<Rational>> pay(n);
  parallel_for(n, [&](std::size_t i) {
    auto g = build_osp_graph_from_events(table, domain, events, i, cost);
    cycles[i] = negative_cycle(g);
    if (!cycles[i]) {
      pay[i] = synthesize_payments(g);
      if (payment_violation(g, pay[i])) {
        throw InvariantError("synthesized payments violate an edge");
      }
    }
  });
  OspVerdict v;
  for (std::size_t i = 0; i < n; ++i) {
    if (cycles[i]) {
      v.is_osp = false;
      v.cycle = cycles[i];
      return v;
    }
  }
  PaymentTable t;
  t.domain = domain;
  t.by_profile.assign(domain.profile_count(), std::vector<Rational>(n));
  for (ProfileIndex p = 0; p < domain.profile_count(); ++p) {
    for (std::size_t i = 0; i < n; ++i) t.by_profile[p][i] = pay[i][p];
  }
  v.payments = std::move(t);
  return v;
}

inline OspVerdict check_osp(const AllocationFunction& f,
                            const ImplementationTree& tree,
                            const CostModel& cost = single_parameter_cost) {
  return check_osp_events(tabulate(f, tree.domains()), tree.domains(),
                          imptree::separating_events(tree), cost);
}

// Direct-revelation mechanism with allocation f.
inline OspVerdict check_osp_direct(const AllocationFunction& f,
                                   const DomainProfile& domain,
                                   const CostModel& cost = single_parameter_cost) {
  return check_osp_events(tabulate(f, domain), domain, direct_events(domain),
                          cost);
}

inline OspVerdict check_two_cycles_events(
    const std::vector<Allocation>& table, const DomainProfile& domain,
    const std::vector<SeparatingEvent>& events,
    const CostModel& cost = single_parameter_cost) {
  OspVerdict v;
  v.two_cycle_insufficient = domain.max_domain_size() >= 4;
  for (std::size_t i = 0; i < domain.agents() && v.is_osp; ++i) {
    for (const auto& e : events) {
      if (e.agent != i) continue;
      auto ka = domain.type_index(i, e.left_type);
      auto kb = domain.type_index(i, e.right_type);
      auto others = detail::others_indices(domain, e.domains_at_node, i);
      for (auto pa : others) {
        ProfileIndex x = domain.with_digit(pa, i, ka);
        for (auto pb : others) {
          ProfileIndex y = domain.with_digit(pb, i, kb);
          const Rational& xi = e.left_type;
          const Rational& yi = e.right_type;
          Rational w_xy = cost(i, xi, table[y]) - cost(i, xi, table[x]);
          Rational w_yx = cost(i, yi, table[x]) - cost(i, yi, table[y]);
          if (w_xy + w_yx < 0) {
            NegativeCycle c;
            c.agent = i;
            c.nodes = {std::min(x, y), std::max(x, y)};
            c.weight = w_xy + w_yx;
            v.is_osp = false;
            v.cycle = std::move(c);
            return v;
          }
        }
      }
    }
  }
  return v;
}

inline OspVerdict check_two_cycles(const AllocationFunction& f,
                                   const ImplementationTree& tree,
                                   const CostModel& cost = single_parameter_cost) {
  return check_two_cycles_events(tabulate(f, tree.domains()), tree.domains(),
                                 imptree::separating_events(tree), cost);
}

inline Rational cycle_weight(const OspGraph& g, const NegativeCycle& c) {
  Rational w = 0;
  for (auto k : c.edges) w += g.edges.at(k).weight;
  return w;
}

struct PaymentViolation {
  std::size_t agent = 0;
  Edge edge;
  // p(to) - p(from) - weight, positive when violated.
  Rational excess;
};

// Checks a given payment table against every OSP constraint of the events.
inline std::optional<PaymentViolation> verify_payments(
    const std::vector<Allocation>& table, const DomainProfile& domain,
    const std::vector<SeparatingEvent>& events, const PaymentTable& payments,
    const CostModel& cost = single_parameter_cost) {
  if (!(payments.domain == domain) ||
      payments.by_profile.size() != domain.profile_count()) {
    throw InputError("payment table does not cover the domain");
  }
  for (std::size_t i = 0; i < domain.agents(); ++i) {
    auto g = build_osp_graph_from_events(table, domain, events, i, cost);
    std::vector<Rational> p(domain.profile_count());
    for (ProfileIndex x = 0; x < p.size(); ++x) p[x] = payments.by_profile[x].at(i);
    if (auto k = payment_violation(g, p)) {
      const auto& e = g.edges[*k];
      return PaymentViolation{i, e, p[e.to] - p[e.from] - e.weight};
    }
  }
  return std::nullopt;
}

// Single-item procurement: the winner gets load 1. A descending phase walks
// the union of the domains from the top, asking agents in index order
// whether their type equals the price; a yes drops the agent. Once `keep`
// candidates remain, an ascending phase asks them from the bottom and the
// first yes wins.
inline ImplementationTree single_item_descending_ascending(
    const DomainProfile& domains, std::size_t keep = 2) {
  std::size_t n = domains.agents();
  if (keep == 0 || keep > n) throw InputError("keep must be in [1, n]");
  TypeSet all;
  for (const auto& d : domains.per_agent()) all.insert(all.end(), d.begin(), d.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return imptree::build_adaptive(
      domains, [&, n, keep](imptree::Interrogator& ask, std::string& label) {
        std::vector<std::size_t> cand(n);
        for (std::size_t i = 0; i < n; ++i) cand[i] = i;
        for (auto t = all.rbegin(); t != all.rend() && cand.size() > keep; ++t) {
          for (std::size_t k = 0; k < cand.size() && cand.size() > keep;) {
            std::size_t i = cand[k];
            if (ask.forced(i, *t) == std::optional<bool>(false)) {
              ++k;
              continue;
            }
            if (ask.is(i, *t)) {
              cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(k));
            } else {
              ++k;
            }
          }
        }
        for (const auto& t : all) {
          for (auto i : cand) {
            if (ask.forced(i, t) == std::optional<bool>(false)) continue;
            if (ask.is(i, t)) {
              Allocation x(n, 0);
              x[i] = 1;
              label = "agent " + std::to_string(i);
              return x;
            }
          }
        }
        throw InvariantError("ascending phase found no winner");
      });
}

}  // namespace osp::cmon

#endif  // OSP_CMON_HPP_
