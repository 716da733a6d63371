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

#ifndef OSP_IMPTREE_HPP_
#define OSP_IMPTREE_HPP_

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "osp/core.hpp"

namespace osp::imptree {

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct Branch {
  TypeSet types;  // subset of the queried agent's current domain
  NodeId child = kNoNode;
};

struct Node {
  std::optional<std::size_t> agent;  // empty at leaves
  std::vector<Branch> children;
  // Leaf payload. An empty allocation is a deferred outcome.
  std::optional<Allocation> allocation;
  std::string label;
  NodeId parent = kNoNode;

  bool is_leaf() const { return !agent.has_value(); }
};

// Extensive-form querying protocol. Nodes live in an arena; build bottom-up
// with add_leaf/add_node, then call finish(root). After finish() the tree is
// validated and read-only.
class ImplementationTree {
 public:
  ImplementationTree() = default;
  explicit ImplementationTree(DomainProfile domains)
      : domains_(std::move(domains)) {}

  // Single-leaf tree.
  static ImplementationTree trivial(DomainProfile domains,
                                    std::optional<Allocation> allocation = {},
                                    std::string label = {}) {
    ImplementationTree t(std::move(domains));
    t.finish(t.add_leaf(std::move(allocation), std::move(label)));
    return t;
  }

  NodeId add_leaf(std::optional<Allocation> allocation = {},
                  std::string label = {}) {
    require_open();
    Node n;
    n.allocation = std::move(allocation);
    n.label = std::move(label);
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  NodeId add_node(std::size_t agent, std::vector<Branch> children) {
    require_open();
    if (agent >= domains_.agents()) {
      throw InputError("node queries agent " + std::to_string(agent) +
                       " but there are " + std::to_string(domains_.agents()) +
                       " agents");
    }
    for (auto& b : children) {
      if (b.child >= nodes_.size()) {
        throw InputError("branch points at an unknown node");
      }
      std::sort(b.types.begin(), b.types.end());
    }
    Node n;
    n.agent = agent;
    n.children = std::move(children);
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  // Yes/no query "is your type v?". The first branch is the yes branch.
  NodeId add_query(std::size_t agent, const Rational& v, NodeId yes,
                   const TypeSet& rest, NodeId no) {
    return add_node(agent, {Branch{{v}, yes}, Branch{rest, no}});
  }

  void finish(NodeId root) {
    require_open();
    if (root >= nodes_.size()) throw InputError("root is not a node");
    root_ = root;
    for (auto& n : nodes_) n.parent = kNoNode;
    current_.assign(nodes_.size(), {});
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{root};
    seen[root] = 1;
    current_[root] = domains_.per_agent();
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      const Node& n = nodes_[u];
      if (n.is_leaf()) continue;
      std::size_t i = *n.agent;
      const TypeSet& here = current_[u][i];
      if (here.size() < 2) {
        throw InputError("node " + std::to_string(u) + " queries agent " +
                         std::to_string(i) + " whose current domain is a "
                         "singleton");
      }
      if (n.children.size() < 2) {
        throw InputError("node " + std::to_string(u) + " has fewer than two "
                         "branches");
      }
      TypeSet covered;
      for (const auto& b : n.children) {
        if (b.types.empty()) {
          throw InputError("node " + std::to_string(u) + " has an empty "
                           "branch label");
        }
        for (const auto& v : b.types) {
          if (!std::binary_search(here.begin(), here.end(), v)) {
            throw InputError("branch label at node " + std::to_string(u) +
                             " contains " + to_string(v) +
                             " outside the current domain");
          }
          covered.push_back(v);
        }
        if (seen[b.child]) {
          throw InputError("node " + std::to_string(b.child) +
                           " has more than one parent");
        }
        seen[b.child] = 1;
        nodes_[b.child].parent = u;
        current_[b.child] = current_[u];
        current_[b.child][i] = b.types;
        stack.push_back(b.child);
      }
      std::sort(covered.begin(), covered.end());
      if (covered != here) {
        throw InputError("branch labels at node " + std::to_string(u) +
                         " do not partition the current domain");
      }
    }
    for (NodeId u = 0; u < nodes_.size(); ++u) {
      if (!seen[u]) {
        throw InputError("node " + std::to_string(u) +
                         " is unreachable from the root");
      }
    }
    leaf_of_.assign(domains_.profile_count(), kNoNode);
    for (ProfileIndex p = 0; p < leaf_of_.size(); ++p) {
      NodeId u = root_;
      while (!nodes_[u].is_leaf()) u = step(u, domains_.type_at(p, *nodes_[u].agent));
      leaf_of_[p] = u;
    }
    finished_ = true;
  }

  bool finished() const { return finished_; }
  const DomainProfile& domains() const { return domains_; }
  NodeId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId u) const { return nodes_.at(u); }
  const std::vector<Node>& nodes() const { return nodes_; }

  std::vector<NodeId> leaves() const {
    std::vector<NodeId> out;
    for (NodeId u = 0; u < nodes_.size(); ++u) {
      if (nodes_[u].is_leaf()) out.push_back(u);
    }
    return out;
  }

  // D_1(u), ..., D_n(u).
  const std::vector<TypeSet>& current_domains(NodeId u) const {
    require_finished();
    return current_.at(u);
  }

  NodeId leaf_for_index(ProfileIndex p) const {
    require_finished();
    return leaf_of_.at(p);
  }

  NodeId leaf_for(const TypeProfile& b) const {
    return leaf_for_index(domains_.index_of(b));
  }

  // Child of internal node u reached when the queried agent has type v.
  NodeId step(NodeId u, const Rational& v) const {
    for (const auto& b : nodes_[u].children) {
      if (std::binary_search(b.types.begin(), b.types.end(), v)) return b.child;
    }
    throw InputError("type " + to_string(v) + " matches no branch at node " +
                     std::to_string(u));
  }

  // Root-to-u node sequence.
  std::vector<NodeId> path_to(NodeId u) const {
    std::vector<NodeId> out;
    for (NodeId v = u; v != kNoNode; v = nodes_.at(v).parent) out.push_back(v);
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    for (NodeId u : leaves()) best = std::max(best, path_to(u).size() - 1);
    return best;
  }

  // Replaces leaf payloads; structure is untouched.
  void set_leaf(NodeId u, std::optional<Allocation> allocation,
                std::string label = {}) {
    if (!nodes_.at(u).is_leaf()) throw InputError("set_leaf on internal node");
    nodes_[u].allocation = std::move(allocation);
    if (!label.empty()) nodes_[u].label = std::move(label);
  }

 private:
  void require_open() const {
    if (finished_) throw InvariantError("tree is already finished");
  }
  void require_finished() const {
    if (!finished_) throw InvariantError("tree is not finished");
  }

  DomainProfile domains_;
  std::vector<Node> nodes_;
  NodeId root_ = kNoNode;
  bool finished_ = false;
  std::vector<std::vector<TypeSet>> current_;
  std::vector<NodeId> leaf_of_;
};

inline TypeSet current_domain(const ImplementationTree& tree, NodeId u,
                              std::size_t agent) {
  if (u >= tree.size()) throw InputError("unknown node");
  return tree.current_domains(u).at(agent);
}

inline NodeId leaf_for(const ImplementationTree& tree, const TypeProfile& b) {
  return tree.leaf_for(b);
}

// Node u separates types a < b of agent i. domains_at_node holds D(u) for
// every agent; slot i is D_i(u) and the others form D_{-i}(u).
struct SeparatingEvent {
  NodeId node = kNoNode;
  std::size_t agent = 0;
  Rational left_type;
  Rational right_type;
  std::vector<TypeSet> domains_at_node;
};

inline std::vector<SeparatingEvent> separating_events(
    const ImplementationTree& tree) {
  std::vector<SeparatingEvent> out;
  for (NodeId u = 0; u < tree.size(); ++u) {
    const Node& n = tree.node(u);
    if (n.is_leaf()) continue;
    const auto& dom = tree.current_domains(u);
    for (std::size_t c1 = 0; c1 < n.children.size(); ++c1) {
      for (std::size_t c2 = c1 + 1; c2 < n.children.size(); ++c2) {
        for (const auto& a : n.children[c1].types) {
          for (const auto& b : n.children[c2].types) {
            SeparatingEvent e;
            e.node = u;
            e.agent = *n.agent;
            e.left_type = a < b ? a : b;
            e.right_type = a < b ? b : a;
            e.domains_at_node = dom;
            out.push_back(std::move(e));
          }
        }
      }
    }
  }
  return out;
}

// f(b) = allocation at leaf_for(b). Throws on deferred leaves. The function
// keeps its own copy of the tree.
inline AllocationFunction leaf_allocation(const ImplementationTree& tree) {
  auto held = std::make_shared<const ImplementationTree>(tree);
  return [held](const TypeProfile& b) -> Allocation {
    const Node& leaf = held->node(held->leaf_for(b));
    if (!leaf.allocation) {
      throw InputError("leaf '" + leaf.label + "' has no allocation");
    }
    return *leaf.allocation;
  };
}

// Audit trail of one run: the branch taken at every internal node on the
// path of a profile. For yes/no nodes `value` is the asked type.
struct Query {
  std::size_t agent = 0;
  std::optional<Rational> value;
  bool yes = false;
  std::size_t branch = 0;
};

struct Transcript {
  std::vector<Query> queries;
  std::vector<NodeId> path;
  std::optional<Allocation> allocation;
  std::string label;
};

inline bool is_yes_no(const Node& n) {
  return !n.is_leaf() && n.children.size() == 2 &&
         n.children[0].types.size() == 1;
}

inline Transcript transcript_for(const ImplementationTree& tree,
                                 const TypeProfile& b) {
  tree.domains().index_of(b);
  Transcript t;
  NodeId u = tree.root();
  t.path.push_back(u);
  while (!tree.node(u).is_leaf()) {
    const Node& n = tree.node(u);
    Query q;
    q.agent = *n.agent;
    const Rational& v = b[q.agent];
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      const auto& ts = n.children[k].types;
      if (std::binary_search(ts.begin(), ts.end(), v)) q.branch = k;
    }
    if (is_yes_no(n)) {
      q.value = n.children[0].types[0];
      q.yes = q.branch == 0;
    }
    u = n.children[q.branch].child;
    t.queries.push_back(std::move(q));
    t.path.push_back(u);
  }
  t.allocation = tree.node(u).allocation;
  t.label = tree.node(u).label;
  return t;
}

// Leaf reached by following the recorded branches.
inline NodeId replay(const ImplementationTree& tree, const Transcript& t) {
  NodeId u = tree.root();
  for (const auto& q : t.queries) {
    const Node& n = tree.node(u);
    if (n.is_leaf() || *n.agent != q.agent || q.branch >= n.children.size()) {
      throw InputError("transcript does not match the tree");
    }
    if (q.value && (!is_yes_no(n) || n.children[0].types[0] != *q.value ||
                    q.yes != (q.branch == 0))) {
      throw InputError("transcript query does not match the tree");
    }
    u = n.children[q.branch].child;
  }
  if (!tree.node(u).is_leaf()) {
    throw InputError("transcript ends at an internal node");
  }
  return u;
}

// Answers "is your type v?" questions for an adaptive algorithm while
// tracking current domains. A question whose answer is already determined
// by the current domain is answered without a query. Otherwise the answer
// comes from the truthful profile, or from a scripted answer list when
// building a tree.
class Interrogator {
 public:
  struct Suspend {
    std::size_t agent;
    Rational value;
  };

  Interrogator(const DomainProfile& domains, TypeProfile truth)
      : domains_(domains), current_(domains.per_agent()), truth_(std::move(truth)) {
    domains.index_of(*truth_);
  }

  Interrogator(const DomainProfile& domains, const std::vector<bool>& script)
      : domains_(domains), current_(domains.per_agent()), script_(&script) {}

  const DomainProfile& domains() const { return domains_; }
  const TypeSet& current(std::size_t agent) const { return current_.at(agent); }
  const std::vector<Query>& queries() const { return queries_; }

  // True if v is the only type left; false if v is no longer possible.
  std::optional<bool> forced(std::size_t agent, const Rational& v) const {
    const auto& d = current_.at(agent);
    if (!std::binary_search(d.begin(), d.end(), v)) return false;
    if (d.size() == 1) return true;
    return std::nullopt;
  }

  bool is(std::size_t agent, const Rational& v) {
    if (auto f = forced(agent, v)) return *f;
    bool yes;
    if (truth_) {
      yes = (*truth_)[agent] == v;
    } else {
      if (used_ == script_->size()) throw Suspend{agent, v};
      yes = (*script_)[used_++];
    }
    auto& d = current_[agent];
    if (yes) {
      d = {v};
    } else {
      d.erase(std::lower_bound(d.begin(), d.end(), v));
    }
    queries_.push_back({agent, v, yes, yes ? 0u : 1u});
    return yes;
  }

 private:
  const DomainProfile& domains_;
  std::vector<TypeSet> current_;
  std::optional<TypeProfile> truth_;
  const std::vector<bool>* script_ = nullptr;
  std::size_t used_ = 0;
  std::vector<Query> queries_;
};

// Algorithm driven by yes/no questions; returns the outcome and may set a
// leaf label.
using AdaptiveProgram = std::function<Allocation(Interrogator&, std::string& label)>;

// Tree whose internal nodes are the questions `program` asks and whose
// leaves carry its outcomes.
inline ImplementationTree build_adaptive(const DomainProfile& domains,
                                         const AdaptiveProgram& program,
                                         std::size_t max_nodes = 1u << 20) {
  ImplementationTree tree(domains);
  std::vector<bool> script;
  std::function<NodeId()> grow = [&]() -> NodeId {
    if (tree.size() >= max_nodes) {
      throw BudgetExceeded("adaptive tree exceeded " +
                           std::to_string(max_nodes) + " nodes");
    }
    Interrogator ask(domains, script);
    std::string label;
    try {
      Allocation x = program(ask, label);
      return tree.add_leaf(std::move(x), std::move(label));
    } catch (const Interrogator::Suspend& s) {
      TypeSet rest = ask.current(s.agent);
      rest.erase(std::lower_bound(rest.begin(), rest.end(), s.value));
      script.push_back(true);
      NodeId yes = grow();
      script.back() = false;
      NodeId no = grow();
      script.pop_back();
      return tree.add_query(s.agent, s.value, yes, rest, no);
    }
  };
  tree.finish(grow());
  return tree;
}

// Runs `program` against the truthful profile b.
inline Transcript run_adaptive(const DomainProfile& domains,
                               const AdaptiveProgram& program,
                               const TypeProfile& b) {
  Interrogator ask(domains, b);
  Transcript t;
  t.allocation = program(ask, t.label);
  t.queries = ask.queries();
  return t;
}

namespace detail {

// Tree shape used during enumeration. Block masks index into the full D_i.
struct Shape {
  int agent = -1;
  std::vector<std::pair<std::uint32_t, std::shared_ptr<const Shape>>> blocks;
};
using ShapePtr = std::shared_ptr<const Shape>;

// All partitions of `mask` into at least two blocks, blocks ordered by their
// lowest bit.
inline std::vector<std::vector<std::uint32_t>> partitions(std::uint32_t mask) {
  std::vector<int> bits;
  for (int k = 0; k < 32; ++k) {
    if (mask >> k & 1u) bits.push_back(k);
  }
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> blocks;
  std::function<void(std::size_t)> go = [&](std::size_t idx) {
    if (idx == bits.size()) {
      if (blocks.size() >= 2) out.push_back(blocks);
      return;
    }
    std::uint32_t bit = 1u << bits[idx];
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      blocks[k] |= bit;
      go(idx + 1);
      blocks[k] &= ~bit;
    }
    blocks.push_back(bit);
    go(idx + 1);
    blocks.pop_back();
  };
  go(0);
  return out;
}

class ShapeEnumerator {
 public:
  using Sink = std::function<bool(const ShapePtr&)>;

  explicit ShapeEnumerator(std::size_t agents) : agents_(agents) {}

  // Calls sink on every shape rooted at `state`; stops when sink returns
  // false. Returns false if stopped.
  bool run(const std::vector<std::uint32_t>& state, const Sink& sink) {
    static const ShapePtr leaf = std::make_shared<Shape>();
    if (!sink(leaf)) return false;
    for (std::size_t i = 0; i < agents_; ++i) {
      if (std::popcount(state[i]) < 2) continue;
      for (const auto& part : partitions(state[i])) {
        std::vector<std::pair<std::uint32_t, ShapePtr>> chosen;
        if (!product(state, static_cast<int>(i), part, 0, chosen, sink)) {
          return false;
        }
      }
    }
    return true;
  }

 private:
  bool product(const std::vector<std::uint32_t>& state, int agent,
               const std::vector<std::uint32_t>& part, std::size_t k,
               std::vector<std::pair<std::uint32_t, ShapePtr>>& chosen,
               const Sink& sink) {
    if (k == part.size()) {
      auto s = std::make_shared<Shape>();
      s->agent = agent;
      s->blocks = chosen;
      return sink(s);
    }
    auto child_state = state;
    child_state[static_cast<std::size_t>(agent)] = part[k];
    return run(child_state, [&](const ShapePtr& sub) {
      chosen.emplace_back(part[k], sub);
      bool go_on = product(state, agent, part, k + 1, chosen, sink);
      chosen.pop_back();
      return go_on;
    });
  }

  std::size_t agents_;
};

inline NodeId materialize(ImplementationTree& tree, const Shape& s) {
  if (s.agent < 0) return tree.add_leaf();
  auto i = static_cast<std::size_t>(s.agent);
  std::vector<Branch> children;
  for (const auto& [mask, sub] : s.blocks) {
    Branch b;
    for (std::size_t k = 0; k < tree.domains().domain(i).size(); ++k) {
      if (mask >> k & 1u) b.types.push_back(tree.domains().domain(i)[k]);
    }
    b.child = materialize(tree, *sub);
    children.push_back(std::move(b));
  }
  return tree.add_node(i, std::move(children));
}

inline std::size_t shape_size(const Shape& s) {
  std::size_t total = 1;
  for (const auto& [mask, sub] : s.blocks) total += shape_size(*sub);
  return total;
}

}  // namespace detail

// Calls visit on every canonical tree over `domains` (deferred leaves). The
// visitor returns false to stop early. max_nodes caps the total number of
// nodes materialized over the whole enumeration; exceeding it throws
// BudgetExceeded. Returns the number of trees visited.
inline std::size_t enumerate_trees(
    const DomainProfile& domains, std::size_t max_nodes,
    const std::function<bool(const ImplementationTree&)>& visit) {
  for (std::size_t i = 0; i < domains.agents(); ++i) {
    if (domains.domain(i).size() > 31) {
      throw InputError("tree enumeration supports at most 31 types per agent");
    }
  }
  std::vector<std::uint32_t> state;
  for (const auto& d : domains.per_agent()) {
    state.push_back(static_cast<std::uint32_t>((std::uint64_t{1} << d.size()) - 1));
  }
  std::size_t used = 0;
  std::size_t count = 0;
  detail::ShapeEnumerator gen(domains.agents());
  gen.run(state, [&](const detail::ShapePtr& s) {
    used += detail::shape_size(*s);
    if (used > max_nodes) {
      throw BudgetExceeded("tree enumeration exceeded " +
                           std::to_string(max_nodes) + " nodes");
    }
    ImplementationTree tree(domains);
    NodeId root = detail::materialize(tree, *s);
    tree.finish(root);
    ++count;
    return visit(tree);
  });
  return count;
}

}  // namespace osp::imptree

#endif  // OSP_IMPTREE_HPP_
