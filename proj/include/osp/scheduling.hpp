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

// Related-machine scheduling with identical jobs: greedy optimum, two-value
// mechanisms, the descending/ascending mechanisms for three-value domains,
// the two-agent two-job characterization and the measurement harnesses.

#ifndef OSP_SCHEDULING_HPP_
#define OSP_SCHEDULING_HPP_

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "osp/cmon.hpp"
#include "osp/core.hpp"
#include "osp/imptree.hpp"
#include "osp/oracle.hpp"

namespace osp::sched {

struct SchedulingInstance {
  std::size_t n = 0;
  Load m = 0;
  DomainProfile domains;

  SchedulingInstance() = default;
  SchedulingInstance(DomainProfile d, Load jobs)
      : n(d.agents()), m(jobs), domains(std::move(d)) {
    if (n == 0) throw InputError("scheduling instance needs at least one agent");
    if (m < 0) throw InputError("job count must be non-negative");
  }
};

// A mechanism over a full domain. Without a tree it is direct revelation.
struct Mechanism {
  DomainProfile domains;
  std::optional<imptree::ImplementationTree> tree;
  std::vector<Allocation> table;  // allocation per profile index
  std::optional<PaymentTable> payments;

  Allocation allocate(const TypeProfile& b) const {
    return table.at(domains.index_of(b));
  }
  AllocationFunction function() const {
    auto t = std::make_shared<const std::vector<Allocation>>(table);
    auto d = domains;
    return [t, d](const TypeProfile& b) { return t->at(d.index_of(b)); };
  }
  std::vector<imptree::SeparatingEvent> events() const {
    return tree ? imptree::separating_events(*tree) : cmon::direct_events(domains);
  }
};

inline Mechanism from_tree(imptree::ImplementationTree tree) {
  Mechanism mech;
  mech.domains = tree.domains();
  mech.table = cmon::tabulate(imptree::leaf_allocation(tree), mech.domains);
  mech.tree = std::move(tree);
  return mech;
}

inline cmon::OspVerdict check_mechanism(const Mechanism& mech,
                                        bool two_cycles_only = false) {
  auto events = mech.events();
  return two_cycles_only
             ? cmon::check_two_cycles_events(mech.table, mech.domains, events)
             : cmon::check_osp_events(mech.table, mech.domains, events);
}

namespace detail {

// Greedy assignment; zero costs are allowed and attract every job they can.
inline Allocation greedy(const TypeProfile& b, Load m) {
  Allocation x(b.size(), 0);
  for (Load job = 0; job < m; ++job) {
    std::size_t best = 0;
    Rational best_c = b[0] * (x[0] + 1);
    for (std::size_t k = 1; k < b.size(); ++k) {
      Rational c = b[k] * (x[k] + 1);
      if (c < best_c || (c == best_c && b[k] < b[best])) {
        best = k;
        best_c = c;
      }
    }
    ++x[best];
  }
  return x;
}

}  // namespace detail

// Jobs one by one to the machine with the smallest resulting completion
// time; ties go to the faster machine, then to the lower index.
inline Allocation greedy_optimal(const TypeProfile& b, Load m) {
  if (b.empty()) throw InputError("no machines");
  if (m < 0) throw InputError("job count must be non-negative");
  for (const auto& v : b) {
    if (v <= 0) throw InputError("greedy needs positive costs, got " + to_string(v));
  }
  return detail::greedy(b, m);
}

// The two balance inequalities for every ordered pair (i better than j).
inline bool is_balanced(const Allocation& x, const TypeProfile& b) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (i == j || !(b[i] < b[j] || (b[i] == b[j] && i < j))) continue;
      if (b[i] * (x[i] + 1) <= b[j] * x[j]) return false;
      if (b[j] * (x[j] + 1) < b[i] * x[i]) return false;
    }
  }
  return true;
}

namespace detail {

inline Mechanism trivial_mechanism(const SchedulingInstance& inst) {
  Allocation x(inst.n, 0);
  if (inst.m > 0) x[0] = inst.m;
  return from_tree(imptree::ImplementationTree::trivial(inst.domains, x));
}

inline Mechanism adaptive(const SchedulingInstance& inst,
                          const imptree::AdaptiveProgram& program) {
  return from_tree(imptree::build_adaptive(inst.domains, program));
}

}  // namespace detail

// Two-value domains {L_i, H_i}: repeatedly query the lowest-index agent i
// outside S with GR_i(b_S, L_-S) >= GR_i(b_S, H_-S), then return GR(b).
inline imptree::AdaptiveProgram mgr_program(const SchedulingInstance& inst) {
  for (std::size_t i = 0; i < inst.n; ++i) {
    const auto& d = inst.domains.domain(i);
    if (d.size() > 2) throw InputError("M_GR needs domains of at most two values");
    if (d[0] <= 0) throw InputError("M_GR needs positive costs");
  }
  return [inst](imptree::Interrogator& ask, std::string&) {
    std::size_t n = inst.n;
    std::vector<bool> in_s(n, false);
    TypeProfile b(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (inst.domains.domain(i).size() == 1) {
        in_s[i] = true;
        b[i] = inst.domains.domain(i)[0];
      }
    }
    while (std::find(in_s.begin(), in_s.end(), false) != in_s.end()) {
      TypeProfile low = b, high = b;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_s[j]) continue;
        low[j] = inst.domains.domain(j).front();
        high[j] = inst.domains.domain(j).back();
      }
      Allocation gl = greedy_optimal(low, inst.m);
      Allocation gh = greedy_optimal(high, inst.m);
      std::optional<std::size_t> pick;
      for (std::size_t j = 0; j < n && !pick; ++j) {
        if (!in_s[j] && gl[j] >= gh[j]) pick = j;
      }
      if (!pick) throw InvariantError("no agent satisfies the pending condition");
      const auto& d = inst.domains.domain(*pick);
      b[*pick] = ask.is(*pick, d.front()) ? d.front() : d.back();
      in_s[*pick] = true;
    }
    return greedy_optimal(b, inst.m);
  };
}

inline Mechanism mech_mgr(const SchedulingInstance& inst) {
  return detail::adaptive(inst, mgr_program(inst));
}

// f_i(L, b_-i) >= f_i(H, b'_-i) for all i and all b_-i, b'_-i.
inline bool strongly_monotone_check(const AllocationFunction& f,
                                    const DomainProfile& domains) {
  for (std::size_t i = 0; i < domains.agents(); ++i) {
    if (domains.domain(i).size() != 2) {
      throw InputError("strong monotonicity needs two-value domains");
    }
  }
  auto table = cmon::tabulate(f, domains);
  for (std::size_t i = 0; i < domains.agents(); ++i) {
    std::optional<Load> min_low, max_high;
    for (ProfileIndex p = 0; p < table.size(); ++p) {
      Load v = table[p][i];
      if (domains.digit(p, i) == 0) {
        min_low = min_low ? std::min(*min_low, v) : v;
      } else {
        max_high = max_high ? std::max(*max_high, v) : v;
      }
    }
    if (*min_low < *max_high) return false;
  }
  return true;
}

// Optimal allocation for homogeneous {L, H} built from the vectors w^(l):
// start from the balanced all-equal loads and move jobs from the most loaded
// H position to the least loaded L position until the makespan is optimal.
// The k-th L agent gets w_k, the j-th H agent gets w_{l+j}.
inline AllocationFunction balanced_optimum(std::size_t n, Load m,
                                           const Rational& low,
                                           const Rational& high) {
  if (n == 0) throw InputError("no agents");
  if (!(low < high) || low < 0) throw InputError("need 0 <= L < H");
  std::vector<Allocation> w(n + 1);
  Allocation base(n, m / static_cast<Load>(n));
  for (std::size_t k = 0; k < static_cast<std::size_t>(m % static_cast<Load>(n)); ++k) {
    ++base[k];
  }
  for (std::size_t l = 0; l <= n; ++l) {
    TypeProfile b(n, high);
    for (std::size_t k = 0; k < l; ++k) b[k] = low;
    Rational target = makespan(detail::greedy(b, m), b);
    Allocation x = base;
    while (makespan(x, b) > target) {
      if (l == 0 || l == n) throw InvariantError("balanced loads are not optimal");
      std::size_t from = l;
      for (std::size_t k = l; k < n; ++k) {
        if (x[k] == x[l]) from = k;
      }
      std::size_t to = l - 1;
      for (std::size_t k = l; k-- > 0;) {
        if (x[k] == x[l - 1]) to = k;
      }
      if (x[from] == 0) throw InvariantError("no job left on H machines");
      --x[from];
      ++x[to];
    }
    w[l] = x;
  }
  return [w, n, low, high](const TypeProfile& b) {
    if (b.size() != n) throw InputError("profile length differs from n");
    std::size_t l = 0;
    for (const auto& v : b) {
      if (v != low && v != high) throw InputError("type outside {L, H}");
      l += v == low ? 1 : 0;
    }
    Allocation out(n);
    std::size_t lk = 0, hk = l;
    for (std::size_t i = 0; i < n; ++i) out[i] = b[i] == low ? w[l][lk++] : w[l][hk++];
    return out;
  };
}

// Direct revelation with payments p * f_i(b).
inline Mechanism proportional_payment_mechanism(const AllocationFunction& f,
                                                const DomainProfile& domains,
                                                const Rational& p) {
  for (std::size_t i = 0; i < domains.agents(); ++i) {
    const auto& d = domains.domain(i);
    if (d.size() != 2) throw InputError("proportional payments need {L, H}");
    if (!(d[0] < p && p < d[1])) {
      throw InputError("payment rate " + to_string(p) + " is not inside (L, H)");
    }
  }
  Mechanism mech;
  mech.domains = domains;
  mech.table = cmon::tabulate(f, domains);
  PaymentTable pay;
  pay.domain = domains;
  for (const auto& x : mech.table) {
    std::vector<Rational> row;
    for (auto v : x) row.push_back(p * v);
    pay.by_profile.push_back(std::move(row));
  }
  mech.payments = std::move(pay);
  return mech;
}

enum class ZHat {
  kMinRemoved,  // z_j = min over removed agents of t_k
  kMaxActive,   // z_j = max over surviving agents of t_k
};

namespace detail {

struct Descent {
  std::vector<std::size_t> active;  // increasing index order
  std::vector<Rational> t;
  std::optional<Rational> last_price;
  bool removed_any = false;
};

// Asks the highest remaining price until `keep` agents survive.
inline Descent descend(const SchedulingInstance& inst, std::size_t keep,
                       imptree::Interrogator& ask) {
  Descent s;
  for (std::size_t i = 0; i < inst.n; ++i) {
    s.active.push_back(i);
    s.t.push_back(inst.domains.domain(i).back());
  }
  while (s.active.size() > keep) {
    Rational p = s.t[s.active[0]];
    for (auto a : s.active) p = std::max(p, s.t[a]);
    std::size_t pos = 0;
    while (s.t[s.active[pos]] != p) ++pos;
    std::size_t i = s.active[pos];
    s.last_price = p;
    if (ask.is(i, p)) {
      s.active.erase(s.active.begin() + static_cast<std::ptrdiff_t>(pos));
      s.removed_any = true;
    } else {
      const auto& d = inst.domains.domain(i);
      s.t[i] = *(std::lower_bound(d.begin(), d.end(), p) - 1);
    }
  }
  return s;
}

inline Rational next_above(const TypeSet& d, const Rational& v) {
  auto it = std::upper_bound(d.begin(), d.end(), v);
  if (it == d.end()) throw InvariantError("no type above " + to_string(v));
  return *it;
}

}  // namespace detail

// Descending phase down to `keep` survivors, then the ascending phase that
// stops at the first yes and schedules all jobs on the survivors.
inline imptree::AdaptiveProgram descending_ascending_program(
    const SchedulingInstance& inst, std::size_t keep,
    ZHat variant = ZHat::kMinRemoved) {
  if (keep == 0 || keep > inst.n) throw InputError("survivor count must be in [1, n]");
  return [inst, keep, variant](imptree::Interrogator& ask, std::string&) {
    auto s = detail::descend(inst, keep, ask);
    std::vector<Rational> low;
    for (auto a : s.active) low.push_back(inst.domains.domain(a).front());
    while (true) {
      std::size_t pos = 0;
      for (std::size_t k = 1; k < low.size(); ++k) {
        if (low[k] < low[pos]) pos = k;
      }
      std::size_t i = s.active[pos];
      Rational p = low[pos];
      if (ask.is(i, p)) {
        std::optional<Rational> z;
        if (variant == ZHat::kMinRemoved && s.removed_any) {
          for (std::size_t k = 0; k < inst.n; ++k) {
            if (std::find(s.active.begin(), s.active.end(), k) != s.active.end()) continue;
            z = z ? std::min(*z, s.t[k]) : s.t[k];
          }
        } else {
          for (auto a : s.active) z = z ? std::max(*z, s.t[a]) : s.t[a];
        }
        TypeProfile zhat(s.active.size(), *z);
        zhat[pos] = p;
        Allocation f = detail::greedy(zhat, inst.m);
        Allocation x(inst.n, 0);
        for (std::size_t k = 0; k < s.active.size(); ++k) x[s.active[k]] = f[k];
        return x;
      }
      low[pos] = detail::next_above(inst.domains.domain(i), p);
    }
  };
}

namespace detail {

inline bool degenerate(const SchedulingInstance& inst) {
  return inst.n == 1 || inst.m == 0;
}

}  // namespace detail

inline Mechanism mech_many(const SchedulingInstance& inst,
                           ZHat variant = ZHat::kMinRemoved) {
  if (detail::degenerate(inst)) return detail::trivial_mechanism(inst);
  auto k = static_cast<std::size_t>(ceil_sqrt(static_cast<std::int64_t>(inst.n)));
  return detail::adaptive(inst, descending_ascending_program(inst, k, variant));
}

// Generic ascending auction: no descending phase.
inline Mechanism ascending_auction(const SchedulingInstance& inst) {
  if (detail::degenerate(inst)) return detail::trivial_mechanism(inst);
  return detail::adaptive(inst, descending_ascending_program(inst, inst.n));
}

// Generic descending auction: eliminate all but one agent.
inline Mechanism descending_auction(const SchedulingInstance& inst) {
  if (detail::degenerate(inst)) return detail::trivial_mechanism(inst);
  return detail::adaptive(inst, descending_ascending_program(inst, 1));
}

// Descending phase, then an ascending phase that grants each accepting
// agent z jobs, z the largest integer in [ceil(C/|A|), C] with
// z * q <= ceil(sqrt n) * p.
inline imptree::AdaptiveProgram few_program(const SchedulingInstance& inst) {
  auto k = ceil_sqrt(static_cast<std::int64_t>(inst.n));
  if (inst.m > k * k) {
    throw InputError("M_few needs m <= ceil(sqrt n)^2 = " + std::to_string(k * k));
  }
  return [inst, k](imptree::Interrogator& ask, std::string&) {
    auto s = detail::descend(inst, static_cast<std::size_t>(k), ask);
    Rational p = s.last_price ? *s.last_price : Rational(0);
    if (!s.last_price) {
      for (std::size_t i = 0; i < inst.n; ++i) p = std::max(p, inst.domains.domain(i).back());
    }
    Rational cap = Rational(k) * p;
    std::vector<std::size_t> active = s.active;
    std::vector<Rational> t;
    for (auto a : active) t.push_back(inst.domains.domain(a).front());
    Load c = inst.m;
    Allocation x(inst.n, 0);
    while (!active.empty()) {
      std::size_t pos = 0;
      for (std::size_t j = 1; j < t.size(); ++j) {
        if (t[j] < t[pos]) pos = j;
      }
      std::size_t i = active[pos];
      Rational q = t[pos];
      if (ask.is(i, q)) {
        auto size = static_cast<Load>(active.size());
        Load zeta = (c + size - 1) / size;
        if (Rational(zeta) * q > cap) {
          throw InvariantError("no admissible grant: zeta * q exceeds the cap");
        }
        Load z = c;
        if (q > 0) {
          Rational ratio = cap / q;
          BigInt most = boost::multiprecision::numerator(ratio) /
                        boost::multiprecision::denominator(ratio);
          if (most < z) z = static_cast<Load>(most);
        }
        x[i] = z;
        c -= z;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(pos));
        t.erase(t.begin() + static_cast<std::ptrdiff_t>(pos));
      } else {
        t[pos] = detail::next_above(inst.domains.domain(i), q);
      }
    }
    if (c != 0) throw InvariantError("ascending phase left jobs unassigned");
    return x;
  };
}

inline Mechanism mech_few(const SchedulingInstance& inst) {
  if (detail::degenerate(inst)) return detail::trivial_mechanism(inst);
  return detail::adaptive(inst, few_program(inst));
}

// Two agents, two jobs, D_i = {L, M, H}. Builds the tree for the regime
// and pays per leaf as drawn: agent 0 by leaf, agent 1 per job.
inline Mechanism mech_2x2x3(const Rational& low, const Rational& mid,
                            const Rational& high,
                            std::optional<Rational> p_minus = std::nullopt,
                            std::optional<Rational> p_plus = std::nullopt) {
  if (!(0 < low && low < mid && mid < high)) {
    throw InputError("need 0 < L < M < H");
  }
  bool near_low = mid <= 2 * low;
  bool near_high = high <= 2 * mid;
  if (!near_low && !near_high) {
    throw InputError(
        "M > 2L and H > 2M: no optimal OSP mechanism exists; any OSP "
        "mechanism is at best 2-approximate");
  }
  Rational delta = std::min((mid - low) / 4, (high - mid) / 2);
  Rational pm = p_minus ? *p_minus : mid - delta;
  Rational pp = p_plus ? *p_plus : mid + delta;
  if (!(low < pm && pm < mid && mid < pp && pp < high)) {
    throw InputError("payments must satisfy L < p- < M < p+ < H");
  }
  if (2 * pm < low + pp) throw InputError("payments must satisfy 2 p- >= L + p+");

  auto domains = DomainProfile::homogeneous(2, {low, mid, high});
  imptree::ImplementationTree tree(domains);
  // Rate paid to agent 1 per job, keyed by leaf.
  std::map<imptree::NodeId, Rational> rate;
  std::map<imptree::NodeId, Rational> pay0;
  auto leaf = [&](Load a, Load b, const Rational& p0, const Rational& r1,
                  const std::string& label) {
    auto u = tree.add_leaf(Allocation{a, b}, label);
    pay0[u] = p0;
    rate[u] = r1;
    return u;
  };
  // Subtree where agent 1 splits `left` from `right` on agent 0's side.
  // `even` is agent 0's payment for one job each, `both` for taking two.
  auto split = [&](bool agent0_low, const TypeSet& left, const TypeSet& right,
                   const Rational& r1, const Rational& even, const Rational& both) {
    imptree::NodeId a, b;
    if (agent0_low) {
      a = leaf(1, 1, even, r1, "LL");
      b = leaf(2, 0, both, r1, "LH");
    } else {
      a = leaf(0, 2, 0, r1, "HL");
      b = leaf(1, 1, even, r1, "HH");
    }
    return tree.add_node(1, {{left, a}, {right, b}});
  };
  TypeSet lm{low, mid}, mh{mid, high}, l{low}, h{high};
  imptree::NodeId root;
  // With {L, M} on one side, type M taking both jobs must be paid at least
  // p+ + M, so that leaf pays 2p+. With {M, H} on one side, type M must not
  // gain from claiming L, so the one-each leaves pay p-.
  if (near_low && !near_high) {
    root = tree.add_node(0, {{lm, split(true, lm, h, pp, pp, 2 * pp)},
                             {h, split(false, lm, h, pp, pp, 2 * pp)}});
  } else if (!near_low && near_high) {
    root = tree.add_node(0, {{l, split(true, l, mh, pm, pm, 2 * pm)},
                             {mh, split(false, l, mh, pm, pm, 2 * pm)}});
  } else if (high <= 2 * low) {
    root = leaf(1, 1, pp, pp, "one each");
  } else {
    auto left = split(true, lm, h, pp, pp, 2 * pm);
    auto middle = leaf(1, 1, pp, pp, "M");
    auto right = split(false, l, mh, pm, pp, 2 * pm);
    root = tree.add_node(0, {{l, left}, {{mid}, middle}, {h, right}});
  }
  tree.finish(root);
  Mechanism mech = from_tree(tree);
  PaymentTable pay;
  pay.domain = domains;
  for (ProfileIndex p = 0; p < domains.profile_count(); ++p) {
    auto u = mech.tree->leaf_for_index(p);
    pay.by_profile.push_back({pay0.at(u), rate.at(u) * mech.table[p][1]});
  }
  mech.payments = std::move(pay);
  return mech;
}

struct SweepResult {
  Rational worst_ratio = 1;
  TypeProfile witness;
  bool unbounded = false;  // some profile has OPT = 0 but positive makespan
  std::size_t profiles = 0;
};

// Worst makespan ratio of `mech` against the brute-force optimum over every
// profile. Ties keep the lowest profile index.
inline SweepResult approx_sweep(const Mechanism& mech, Load m,
                                const oracle::OracleBudget& budget = {}) {
  const auto& d = mech.domains;
  if (d.profile_count() > budget.max_profiles) {
    throw BudgetExceeded("too many profiles to sweep");
  }
  std::vector<Rational> ratio(d.profile_count());
  std::vector<char> infinite(d.profile_count(), 0);
  parallel_for(d.profile_count(), [&](std::size_t p) {
    auto b = d.profile_at(p);
    const auto& x = mech.table[p];
    if (total_load(x) != m) throw InvariantError("mechanism does not place m jobs");
    Rational got = makespan(x, b);
    Rational opt = oracle::brute_makespan_opt(b, m, budget).second;
    if (opt == 0) {
      ratio[p] = 1;
      infinite[p] = got > 0;
    } else {
      ratio[p] = got / opt;
    }
  });
  SweepResult r;
  r.profiles = d.profile_count();
  std::optional<ProfileIndex> worst;
  for (ProfileIndex p = 0; p < ratio.size(); ++p) {
    if (infinite[p]) {
      if (!r.unbounded) {
        r.unbounded = true;
        worst = p;
      }
      continue;
    }
    if (r.unbounded) continue;
    if (!worst || ratio[p] > ratio[*worst]) worst = p;
  }
  if (worst) {
    r.worst_ratio = ratio[*worst];
    r.witness = d.profile_at(*worst);
  }
  return r;
}

// Split of {L, M, H} at an agent's first divergence on the all-H path.
enum class Split { kThreeWay, kLvsMH, kLHvsM, kLMvsH, kNone };

inline std::string split_name(Split s) {
  switch (s) {
    case Split::kThreeWay: return "L|M|H";
    case Split::kLvsMH: return "L|MH";
    case Split::kLHvsM: return "LH|M";
    case Split::kLMvsH: return "LM|H";
    case Split::kNone: return "none";
  }
  return "?";
}

struct LowerBoundBranch {
  std::vector<std::size_t> order;  // agents in order of first divergence
  std::vector<Split> splits;
  std::string closure;
  TypeProfile x, y;
  // Largest two-cycle weight over the admissible outcomes; negative means
  // every admissible choice violates OSP.
  std::optional<Rational> weight;
  bool closed = false;
};

struct LowerBoundReport {
  std::size_t n = 0;
  Load m = 0;
  Rational low, mid, high;
  std::int64_t root = 0;
  bool premise_holds = false;
  bool vacuous = false;
  std::vector<LowerBoundBranch> branches;
  bool all_closed = false;
  std::string conclusion;
};

// Replays the case analysis showing that no OSP mechanism is better than
// sqrt(n)-approximate for n = m = c^2 with L = 1, M = m, H = m sqrt(n) M.
// An allocation is admissible for a profile when its makespan is below
// sqrt(n) times the optimum.
inline LowerBoundReport lower_bound_witnesses(std::size_t n) {
  LowerBoundReport r;
  r.n = n;
  if (n == 0) throw InputError("n must be positive");
  auto c = ceil_sqrt(static_cast<std::int64_t>(n));
  if (static_cast<std::size_t>(c * c) != n) throw InputError("n must be a perfect square");
  r.root = c;
  r.m = static_cast<Load>(n);
  r.low = 1;
  r.mid = Rational(r.m) * r.low;
  r.high = Rational(r.m) * Rational(c) * r.mid;
  r.premise_holds = r.mid >= Rational(r.m) * r.low && r.high >= Rational(r.m * c) * r.mid;
  if (n == 1) {
    r.vacuous = true;
    r.all_closed = true;
    r.conclusion = "vacuous: with one machine every mechanism is optimal";
    return r;
  }
  const Rational& L = r.low;
  const Rational& M = r.mid;
  const Rational& H = r.high;
  Load m = r.m;

  std::map<TypeProfile, std::vector<Allocation>> cache;
  auto admissible = [&](const TypeProfile& b) -> const std::vector<Allocation>& {
    auto it = cache.find(b);
    if (it != cache.end()) return it->second;
    Rational opt = oracle::brute_makespan_opt(b, m).second;
    std::vector<Allocation> ok;
    oracle::for_each_composition(b.size(), m, [&](const Allocation& x) {
      if (makespan(x, b) < Rational(c) * opt) ok.push_back(x);
    });
    return cache.emplace(b, std::move(ok)).first->second;
  };
  // y with agent i at `type`, earlier agents H and later agents L.
  auto staircase = [&](const std::vector<std::size_t>& order, std::size_t i,
                       const Rational& type) {
    TypeProfile y(n, L);
    for (auto a : order) y[a] = H;
    y[i] = type;
    return y;
  };

  std::size_t depth = n - static_cast<std::size_t>(c);
  std::vector<std::size_t> order;
  std::vector<Split> splits;
  std::vector<bool> used(n, false);
  std::function<void()> go = [&]() {
    if (order.size() == depth) {
      LowerBoundBranch br;
      br.order = order;
      br.splits = splits;
      br.x = TypeProfile(n, H);
      const auto& adm = admissible(br.x);
      br.closed = std::none_of(adm.begin(), adm.end(), [&](const Allocation& a) {
        return std::all_of(order.begin(), order.end(), [&](std::size_t i) { return a[i] == 0; });
      });
      br.closure = "all-H profile has no admissible allocation idling the first " +
                   std::to_string(depth) + " agents";
      r.branches.push_back(std::move(br));
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      std::vector<std::size_t> before = order;
      for (Split s : {Split::kThreeWay, Split::kLvsMH, Split::kLHvsM, Split::kLMvsH,
                      Split::kNone}) {
        if (s == Split::kLMvsH) {
          // Agent i must get nothing whenever it acts as H: y_i = M forces
          // zero jobs, and any job on the H side closes a negative two-cycle.
          LowerBoundBranch br;
          br.order = before;
          br.order.push_back(i);
          br.splits = splits;
          br.splits.push_back(s);
          br.y = staircase(before, i, M);
          const auto& adm = admissible(br.y);
          bool forced_zero = std::all_of(adm.begin(), adm.end(),
                                         [&](const Allocation& a) { return a[i] == 0; });
          if (!forced_zero) {
            br.closure = "y_i = M does not force zero jobs";
            r.branches.push_back(std::move(br));
            continue;
          }
          order.push_back(i);
          splits.push_back(s);
          used[i] = true;
          go();
          used[i] = false;
          splits.pop_back();
          order.pop_back();
          continue;
        }
        LowerBoundBranch br;
        br.order = before;
        br.order.push_back(i);
        br.splits = splits;
        br.splits.push_back(s);
        if (s == Split::kNone) {
          // i never diverges on the all-H path, so (L, H_-i) and all-H share
          // a leaf, but their admissible sets are disjoint.
          br.x = TypeProfile(n, H);
          br.x[i] = L;
          br.y = TypeProfile(n, H);
          const auto& ax = admissible(br.x);
          const auto& ay = admissible(br.y);
          bool disjoint = std::none_of(ax.begin(), ax.end(), [&](const Allocation& a) {
            return std::find(ay.begin(), ay.end(), a) != ay.end();
          });
          br.closed = disjoint && !ax.empty();
          br.closure = "no divergence: one leaf serves two profiles with disjoint admissible sets";
        } else {
          // L and M are separated: x_i = M with the others H forces all m
          // jobs onto i, y_i = L on the staircase forces fewer.
          br.x = TypeProfile(n, H);
          br.x[i] = M;
          br.y = staircase(before, i, L);
          const auto& ax = admissible(br.x);
          const auto& ay = admissible(br.y);
          bool all_on_i = !ax.empty() && std::all_of(ax.begin(), ax.end(), [&](const Allocation& a) {
                            return a[i] == m;
                          });
          bool fewer = !ay.empty() && std::all_of(ay.begin(), ay.end(), [&](const Allocation& a) {
                         return a[i] < m;
                       });
          Load best = 0;
          for (const auto& a : ay) best = std::max(best, a[i]);
          // Two-cycle x -> y -> x: M (f_i(y) - m) + L (m - f_i(y)).
          br.weight = (M - L) * Rational(best - m);
          br.closed = all_on_i && fewer && *br.weight < 0;
          br.closure = "L separated from M: negative two-cycle between x and y";
        }
        r.branches.push_back(std::move(br));
      }
    }
  };
  go();
  r.all_closed = std::all_of(r.branches.begin(), r.branches.end(),
                             [](const LowerBoundBranch& b) { return b.closed; });
  r.conclusion = r.all_closed
                     ? "every branch closes: no OSP mechanism is better than " +
                           std::to_string(c) + "-approximate"
                     : "some branch stays open";
  return r;
}

}  // namespace osp::sched

#endif  // OSP_SCHEDULING_HPP_
