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

#ifndef OSP_SETSYSTEM_HPP_
#define OSP_SETSYSTEM_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "osp/core.hpp"
#include "osp/imptree.hpp"

namespace osp::setsys {

using ElementSet = std::vector<std::size_t>;  // sorted element indices
using Mask = std::uint64_t;
using Subdomain = std::vector<TypeSet>;       // one non-empty subset per element

inline Mask to_mask(const ElementSet& s) {
  Mask m = 0;
  for (auto e : s) m |= Mask{1} << e;
  return m;
}

inline bool has(Mask m, std::size_t e) { return (m >> e & 1u) != 0; }

// (cardinality, sorted indices) order used when an instance gives none.
inline std::vector<std::size_t> default_tie_order(
    const std::vector<ElementSet>& feasible) {
  std::vector<std::size_t> order(feasible.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (feasible[a].size() != feasible[b].size()) {
      return feasible[a].size() < feasible[b].size();
    }
    return feasible[a] < feasible[b];
  });
  return order;
}

class SetSystemInstance {
 public:
  SetSystemInstance() = default;

  // An empty tie_order selects default_tie_order.
  SetSystemInstance(std::size_t elements, std::vector<ElementSet> feasible,
                    std::vector<std::size_t> tie_order, DomainProfile domains)
      : elements_(elements),
        feasible_(std::move(feasible)),
        tie_order_(std::move(tie_order)),
        domains_(std::move(domains)) {
    if (elements_ == 0) throw InputError("set system has no elements");
    if (elements_ > 64) throw InputError("set systems support at most 64 elements");
    if (feasible_.empty()) throw InputError("feasible family is empty");
    if (domains_.agents() != elements_) {
      throw InputError("domain count differs from element count");
    }
    for (std::size_t e = 0; e < elements_; ++e) {
      if (domains_.domain(e).size() > 3) {
        throw InputError("element " + std::to_string(e) +
                         " has more than three types");
      }
    }
    std::set<Mask> seen;
    for (auto& s : feasible_) {
      std::sort(s.begin(), s.end());
      if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
        throw InputError("feasible set lists an element twice");
      }
      for (auto e : s) {
        if (e >= elements_) {
          throw InputError("feasible set mentions element " +
                           std::to_string(e) + " outside E");
        }
      }
      Mask m = to_mask(s);
      if (!seen.insert(m).second) throw InputError("duplicate feasible set");
      masks_.push_back(m);
    }
    if (tie_order_.empty()) tie_order_ = default_tie_order(feasible_);
    if (tie_order_.size() != feasible_.size()) {
      throw InputError("tie order must rank every feasible set once");
    }
    rank_.assign(feasible_.size(), feasible_.size());
    for (std::size_t pos = 0; pos < tie_order_.size(); ++pos) {
      auto k = tie_order_[pos];
      if (k >= feasible_.size() || rank_[k] != feasible_.size()) {
        throw InputError("tie order is not a permutation of the feasible sets");
      }
      rank_[k] = pos;
    }
  }

  std::size_t elements() const { return elements_; }
  std::size_t size() const { return feasible_.size(); }
  const std::vector<ElementSet>& feasible() const { return feasible_; }
  const ElementSet& set(std::size_t k) const { return feasible_.at(k); }
  Mask mask(std::size_t k) const { return masks_.at(k); }
  const std::vector<std::size_t>& tie_order() const { return tie_order_; }
  const DomainProfile& domains() const { return domains_; }
  // P_a precedes P_b in the tie order.
  bool precedes(std::size_t a, std::size_t b) const { return rank_[a] < rank_[b]; }

  Allocation indicator(std::size_t k) const {
    Allocation x(elements_, 0);
    for (auto e : feasible_.at(k)) x[e] = 1;
    return x;
  }

 private:
  std::size_t elements_ = 0;
  std::vector<ElementSet> feasible_;
  std::vector<Mask> masks_;
  std::vector<std::size_t> tie_order_;
  std::vector<std::size_t> rank_;
  DomainProfile domains_;
};

inline Subdomain full_subdomain(const SetSystemInstance& inst) {
  return inst.domains().per_agent();
}

inline Subdomain pinned(Subdomain d, std::size_t e, const Rational& v) {
  d.at(e) = TypeSet{v};
  return d;
}

inline std::pair<Rational, Rational> lo_hi(Mask p, const Subdomain& d) {
  Rational lo = 0;
  Rational hi = 0;
  for (std::size_t e = 0; e < d.size(); ++e) {
    if (!has(p, e)) continue;
    lo += d[e].front();
    hi += d[e].back();
  }
  return {lo, hi};
}

inline std::pair<Rational, Rational> lo_hi(const ElementSet& p,
                                           const Subdomain& d) {
  for (auto e : p) {
    if (e >= d.size()) throw InputError("element outside the subdomain");
  }
  return lo_hi(to_mask(p), d);
}

inline bool selectable(std::size_t k, const Subdomain& d,
                       const SetSystemInstance& inst) {
  Mask p = inst.mask(k);
  for (std::size_t j = 0; j < inst.size(); ++j) {
    if (j == k) continue;
    Mask q = inst.mask(j);
    Rational lo = lo_hi(p & ~q, d).first;
    Rational hi = lo_hi(q & ~p, d).second;
    if (lo < hi) continue;
    if (lo == hi && inst.precedes(k, j)) continue;
    return false;
  }
  return true;
}

inline std::vector<std::size_t> selectable_set(const Subdomain& d,
                                               const SetSystemInstance& inst) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    if (selectable(k, d, inst)) out.push_back(k);
  }
  return out;
}

inline bool strongly_selectable(std::size_t k, const Subdomain& d,
                                const SetSystemInstance& inst) {
  if (!selectable(k, d, inst)) return false;
  for (auto e : inst.set(k)) {
    if (!selectable(k, pinned(d, e, d[e].back()), inst)) return false;
  }
  return true;
}

// First element (by index) whose high pin makes P unselectable.
inline std::size_t witness(std::size_t k, const Subdomain& d,
                           const SetSystemInstance& inst) {
  if (!selectable(k, d, inst) || strongly_selectable(k, d, inst)) {
    throw InputError("witness needs a selectable, not strongly selectable set");
  }
  Mask p = inst.mask(k);
  for (auto w : inst.set(k)) {
    if (selectable(k, pinned(d, w, d[w].back()), inst)) continue;
    if (d[w].size() < 2) throw InvariantError("witness with a singleton domain");
    bool found = false;
    for (std::size_t j = 0; j < inst.size() && !found; ++j) {
      Mask q = inst.mask(j);
      if (j == k || !has(p & ~q, w)) continue;
      Rational left = d[w].back() + lo_hi(p & ~(q | Mask{1} << w), d).first;
      Rational right = lo_hi(q & ~p, d).second;
      found = left > right || (left == right && inst.precedes(j, k));
    }
    if (!found) throw InvariantError("witness without a blocking solution");
    return w;
  }
  throw InvariantError("no witness found");
}

struct MisalignmentEvidence {
  enum class Kind { strong, weak };
  Kind kind = Kind::strong;
  // strong: a strongly selectable P holding f with |D_f| > 1.
  // weak: a selectable P that is not strongly selectable.
  std::size_t solution = 0;
  std::optional<std::size_t> element;
  // (f, P) pairs: P avoids f and survives f pinned low.
  std::vector<std::pair<std::size_t, std::size_t>> low_pinned;
  // (f, P) pairs: P holds f and survives f pinned high (weak only).
  std::vector<std::pair<std::size_t, std::size_t>> high_pinned;
};

inline std::optional<MisalignmentEvidence> strong_misalignment(
    const Subdomain& d, const SetSystemInstance& inst) {
  std::vector<std::size_t> strong;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    if (strongly_selectable(k, d, inst)) strong.push_back(k);
  }
  MisalignmentEvidence ev;
  ev.kind = MisalignmentEvidence::Kind::strong;
  bool condition_i = false;
  std::map<std::size_t, std::size_t> low;
  for (auto k : strong) {
    for (auto f : inst.set(k)) {
      if (d[f].size() < 2) continue;
      if (!condition_i) {
        condition_i = true;
        ev.solution = k;
        ev.element = f;
      }
      if (low.count(f)) continue;
      auto low_d = pinned(d, f, d[f].front());
      bool ok = false;
      for (auto j : strong) {
        if (has(inst.mask(j), f)) continue;
        if (selectable(j, low_d, inst)) {
          low[f] = j;
          ok = true;
          break;
        }
      }
      if (!ok) return std::nullopt;
    }
  }
  if (!condition_i) return std::nullopt;
  ev.low_pinned.assign(low.begin(), low.end());
  return ev;
}

// Elements in some selectable set and missing from another.
inline std::vector<std::size_t> distinguishing_elements(
    const std::vector<std::size_t>& live, const SetSystemInstance& inst) {
  Mask any = 0;
  Mask all = ~Mask{0};
  for (auto k : live) {
    any |= inst.mask(k);
    all &= inst.mask(k);
  }
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < inst.elements(); ++e) {
    if (has(any, e) && !has(all, e)) out.push_back(e);
  }
  return out;
}

inline std::optional<MisalignmentEvidence> weak_misalignment(
    const Subdomain& d, const SetSystemInstance& inst) {
  auto sel = selectable_set(d, inst);
  if (sel.size() < 2) return std::nullopt;
  MisalignmentEvidence ev;
  ev.kind = MisalignmentEvidence::Kind::weak;
  bool weak = false;
  for (auto k : sel) {
    if (!strongly_selectable(k, d, inst)) {
      ev.solution = k;
      weak = true;
      break;
    }
  }
  if (!weak) return std::nullopt;
  for (auto f : distinguishing_elements(sel, inst)) {
    auto low_d = pinned(d, f, d[f].front());
    auto high_d = pinned(d, f, d[f].back());
    std::optional<std::size_t> low, high;
    for (auto j : sel) {
      bool in = has(inst.mask(j), f);
      if (!in && !low && selectable(j, low_d, inst)) low = j;
      if (in && !high && selectable(j, high_d, inst)) high = j;
    }
    if (!low || !high) return std::nullopt;
    ev.low_pinned.emplace_back(f, *low);
    ev.high_pinned.emplace_back(f, *high);
  }
  return ev;
}

struct FeasibilityVerdict {
  bool feasible = true;
  std::optional<Subdomain> subdomain;
  std::optional<MisalignmentEvidence> evidence;
  std::size_t subdomains_checked = 0;
};

inline std::size_t subdomain_count(const SetSystemInstance& inst) {
  std::size_t total = 1;
  for (const auto& dom : inst.domains().per_agent()) {
    std::size_t r = (std::size_t{1} << dom.size()) - 1;
    if (total > (std::size_t{1} << 40) / r) return static_cast<std::size_t>(-1);
    total *= r;
  }
  return total;
}

// Subdomain number `idx` in mixed radix over per-element subset masks (the
// last element varies fastest).
inline Subdomain subdomain_at(const SetSystemInstance& inst, std::size_t idx) {
  const auto& per = inst.domains().per_agent();
  Subdomain d(per.size());
  for (std::size_t e = per.size(); e-- > 0;) {
    std::size_t r = (std::size_t{1} << per[e].size()) - 1;
    std::size_t mask = idx % r + 1;
    idx /= r;
    for (std::size_t k = 0; k < per[e].size(); ++k) {
      if (mask >> k & 1u) d[e].push_back(per[e][k]);
    }
  }
  return d;
}

inline FeasibilityVerdict optimal_osp_feasible(
    const SetSystemInstance& inst, std::size_t max_subdomains = 1u << 22) {
  std::size_t total = subdomain_count(inst);
  if (total > max_subdomains) {
    throw BudgetExceeded(std::to_string(total) + " subdomains exceed the budget of " +
                         std::to_string(max_subdomains));
  }
  std::atomic<std::size_t> first{total};
  parallel_for(total, [&](std::size_t idx) {
    if (idx >= first.load()) return;
    auto d = subdomain_at(inst, idx);
    if (selectable_set(d, inst).empty()) {
      throw InvariantError("subdomain without a selectable solution");
    }
    if (strong_misalignment(d, inst) || weak_misalignment(d, inst)) {
      std::size_t cur = first.load();
      while (idx < cur && !first.compare_exchange_weak(cur, idx)) {
      }
    }
  });
  FeasibilityVerdict v;
  v.subdomains_checked = total;
  if (first.load() < total) {
    auto d = subdomain_at(inst, first.load());
    v.feasible = false;
    v.evidence = strong_misalignment(d, inst);
    if (!v.evidence) v.evidence = weak_misalignment(d, inst);
    v.subdomain = std::move(d);
  }
  return v;
}

// Tree of the optimal set-system mechanism. Every internal node asks one
// element whether its type is the current low (or high) end of its domain;
// "no" drops that value. Leaves carry the 0/1 indicator of the unique
// selectable set.
inline imptree::ImplementationTree build_sm_tree(const SetSystemInstance& inst) {
  imptree::ImplementationTree tree(inst.domains());
  std::function<imptree::NodeId(const Subdomain&)> grow =
      [&](const Subdomain& d) -> imptree::NodeId {
    auto live = selectable_set(d, inst);
    if (live.empty()) throw InvariantError("no selectable solution");
    if (live.size() == 1) {
      return tree.add_leaf(inst.indicator(live[0]), "P" + std::to_string(live[0]));
    }
    bool all_strong = std::all_of(live.begin(), live.end(), [&](std::size_t k) {
      return strongly_selectable(k, d, inst);
    });
    auto cands = distinguishing_elements(live, inst);
    auto low_ok = [&](std::size_t f) {
      auto low_d = pinned(d, f, d[f].front());
      for (auto k : live) {
        if (!has(inst.mask(k), f) && selectable(k, low_d, inst)) return false;
      }
      return true;
    };
    auto high_ok = [&](std::size_t f) {
      auto high_d = pinned(d, f, d[f].back());
      for (auto k : live) {
        if (has(inst.mask(k), f) && selectable(k, high_d, inst)) return false;
      }
      return true;
    };
    std::optional<std::size_t> ask;
    bool ask_low = true;
    for (auto f : cands) {
      if (d[f].size() >= 2 && low_ok(f)) {
        ask = f;
        break;
      }
    }
    if (!ask && !all_strong) {
      for (auto f : cands) {
        if (d[f].size() >= 2 && high_ok(f)) {
          ask = f;
          ask_low = false;
          break;
        }
      }
    }
    if (!ask) {
      throw InvariantError("no element satisfies the query condition; the "
                           "instance admits no optimal OSP mechanism");
    }
    std::size_t f = *ask;
    Rational v = ask_low ? d[f].front() : d[f].back();
    TypeSet rest;
    for (const auto& t : d[f]) {
      if (t != v) rest.push_back(t);
    }
    auto yes = grow(pinned(d, f, v));
    Subdomain no_d = d;
    no_d[f] = rest;
    auto no = grow(no_d);
    return tree.add_query(f, v, yes, rest, no);
  };
  tree.finish(grow(full_subdomain(inst)));
  return tree;
}

struct SmRun {
  imptree::ImplementationTree tree;
  std::size_t chosen = 0;
  imptree::Transcript transcript;
};

inline SmRun run_sm(const SetSystemInstance& inst, const TypeProfile& truth) {
  SmRun r{build_sm_tree(inst), 0, {}};
  r.transcript = imptree::transcript_for(r.tree, truth);
  const auto& label = r.transcript.label;
  r.chosen = static_cast<std::size_t>(std::stoul(label.substr(1)));
  return r;
}

// Bottom path: elements 0..b-1. Top path: elements b..b+t-1. All domains
// {L, H}; default tie order.
inline SetSystemInstance parallel_paths_instance(std::size_t t, std::size_t b,
                                                 const Rational& low,
                                                 const Rational& high) {
  if (b < 1 || t < b) throw InputError("parallel paths need t >= b >= 1");
  if (!(low < high)) throw InputError("parallel paths need L < H");
  ElementSet bottom, top;
  for (std::size_t e = 0; e < b; ++e) bottom.push_back(e);
  for (std::size_t e = b; e < b + t; ++e) top.push_back(e);
  return SetSystemInstance(t + b, {bottom, top}, {},
                           DomainProfile::homogeneous(t + b, {low, high}));
}

inline bool parallel_paths_feasible(std::size_t t, std::size_t b,
                                    const Rational& low, const Rational& high) {
  if (b < 1 || t < b) throw InputError("parallel paths need t >= b >= 1");
  if (low < 0 || !(low < high)) throw InputError("parallel paths need 0 <= L < H");
  if (b == 1) return true;
  if (t == b) return false;
  // H / L <= (t - 1) / (b - 1)
  return high * Rational(static_cast<long long>(b - 1)) <=
         low * Rational(static_cast<long long>(t - 1));
}

}  // namespace osp::setsys

#endif  // OSP_SETSYSTEM_HPP_
