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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// if any criterion fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "osp/cmon.hpp"
#include "osp/imptree.hpp"
#include "osp/oracle.hpp"
#include "osp/scheduling.hpp"
#include "osp/setsystem.hpp"

namespace {

using namespace osp;
using sched::SchedulingInstance;

struct Result {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) note << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

Rational R(long long p, long long q = 1) { return Rational(p, q); }

// 1. Path auction: OSP, payments, deviation simulation.
Result criterion1() {
  Result r;
  auto tree = testing::path_auction_tree(R(1), R(3));
  auto f = imptree::leaf_allocation(tree);
  auto v = cmon::check_osp(f, tree);
  r.require(v.is_osp && v.payments.has_value(), "check_osp rejects the path auction");
  if (!v.payments) return r;
  auto table = cmon::tabulate(f, tree.domains());
  auto events = imptree::separating_events(tree);
  r.require(!cmon::verify_payments(table, tree.domains(), events, *v.payments),
            "synthesized payments violate a constraint");
  PaymentTable hand;
  hand.domain = tree.domains();
  for (const auto& x : table) {
    hand.by_profile.push_back({R(3) * x[0], R(3) * x[1], R(3) * x[2]});
  }
  r.require(!cmon::verify_payments(table, tree.domains(), events, hand),
            "pay-H-to-selected violates a constraint");
  auto synth = *v.payments;
  auto dev1 = testing::find_profitable_deviation(
      tree, f, [&](const TypeProfile& b) { return synth.at(b); });
  auto dev2 = testing::find_profitable_deviation(
      tree, f, [&](const TypeProfile& b) { return hand.at(b); });
  r.require(!dev1, "profitable deviation under synthesized payments");
  r.require(!dev2, "profitable deviation under pay-H payments");
  r.note << events.size() << " separating events, 0 profitable deviations";
  return r;
}

// 2. Two-cycle verdict equals full verdict on random small instances.
Result criterion2() {
  Result r;
  std::mt19937_64 rng(20260214);
  std::size_t trials = 1500, osp_count = 0;
  std::vector<TypeSet> pool{{R(1)}, {R(1), R(2)}, {R(1), R(3)}, {R(1), R(2), R(4)},
                            {R(0), R(1), R(5)}, {R(1, 2), R(2), R(3)}};
  for (std::size_t k = 0; k < trials; ++k) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    std::vector<TypeSet> doms;
    for (std::size_t i = 0; i < n; ++i) {
      doms.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
    }
    DomainProfile d(doms);
    double leaf = std::uniform_real_distribution<double>(0.15, 0.6)(rng);
    auto tree = testing::random_tree(d, rng, leaf, 2);
    auto f = imptree::leaf_allocation(tree);
    bool full = cmon::check_osp(f, tree).is_osp;
    bool two = cmon::check_two_cycles(f, tree).is_osp;
    osp_count += full ? 1 : 0;
    r.require(full == two, "verdicts differ on trial " + std::to_string(k));
  }
  r.note << trials << " pairs, " << osp_count << " OSP, " << trials - osp_count
         << " not OSP";
  r.require(osp_count > 0 && osp_count < trials, "sample did not cover both verdicts");
  return r;
}

// 3. Four-value domain: two-cycles pass, a negative four-cycle exists.
Result criterion3() {
  Result r;
  DomainProfile d({{R(1), R(2), R(3), R(4)}, {R(1), R(3), R(4)}, {R(1), R(3), R(4)}});
  auto tree = cmon::single_item_descending_ascending(d, 2);
  auto f = imptree::leaf_allocation(tree);
  auto two = cmon::check_two_cycles(f, tree);
  r.require(two.is_osp, "two-cycle check fails");
  r.require(two.two_cycle_insufficient, "no insufficiency warning");
  auto full = cmon::check_osp(f, tree);
  r.require(!full.is_osp && full.cycle, "check_osp accepts");
  if (full.cycle) {
    r.require(full.cycle->agent == 0, "cycle is not for the four-value agent");
    r.require(full.cycle->weight == R(-1), "cycle weight is " + to_string(full.cycle->weight));
    r.note << "emitted " << full.cycle->nodes.size() << "-cycle of weight "
           << to_string(full.cycle->weight) << "; ";
  }
  // Edge weights among x, y, z, w with L=1, B=2, M=3, H=4.
  TypeProfile x{R(4), R(1), R(1)}, y{R(2), R(4), R(1)}, z{R(1), R(4), R(3)},
      w{R(3), R(4), R(4)};
  auto g = cmon::build_osp_graph(f, tree, 0);
  std::map<std::pair<ProfileIndex, ProfileIndex>, Rational> edge;
  for (const auto& e : g.edges) edge[{e.from, e.to}] = e.weight;
  auto id = [&](const TypeProfile& b) { return d.index_of(b); };
  std::vector<std::tuple<TypeProfile, TypeProfile, Rational, std::string>> expect{
      {x, w, R(4), "x->w = H"},  {w, x, R(-3), "w->x = -M"}, {x, z, R(4), "x->z = H"},
      {z, x, R(-1), "z->x = -L"}, {x, y, R(0), "x->y = 0"},  {y, x, R(0), "y->x = 0"},
      {z, w, R(0), "z->w = 0"},  {w, z, R(0), "w->z = 0"},  {z, y, R(-1), "z->y = -L"},
      {y, z, R(2), "y->z = B"}};
  for (const auto& [a, b, wt, name] : expect) {
    auto it = edge.find({id(a), id(b)});
    r.require(it != edge.end() && it->second == wt, "edge " + name);
  }
  std::size_t among = 0;
  std::vector<ProfileIndex> four{id(x), id(y), id(z), id(w)};
  for (auto a : four) {
    for (auto b : four) among += edge.count({a, b});
  }
  r.require(among == 10, "expected exactly 10 edges among x, y, z, w, found " +
                             std::to_string(among));
  Rational cyc = edge[{id(x), id(y)}] + edge[{id(y), id(z)}] + edge[{id(z), id(w)}] +
                 edge[{id(w), id(x)}];
  r.require(cyc == R(-1), "cycle x,y,z,w does not weigh B - M");
  r.note << "cycle (x,y,z,w) weighs " << to_string(cyc) << ", 10 edges match";
  return r;
}

// 4. Upper bounds for the two descending/ascending mechanisms at n = 4.
Result criterion4() {
  Result r;
  std::vector<TypeSet> domains{{R(1), R(2), R(4)}, {R(1), R(5), R(100)}, {R(1), R(4), R(32)},
                               {R(2), R(3), R(7)}};
  Rational worst_many_ratio_to_bound = 0, worst_few = 0, worst_cor = 0;
  for (const auto& ts : domains) {
    auto d = DomainProfile::homogeneous(4, ts);
    for (Load m = 1; m <= 8; ++m) {
      SchedulingInstance inst(d, m);
      for (auto variant : {sched::ZHat::kMinRemoved, sched::ZHat::kMaxActive}) {
        auto mech = sched::mech_many(inst, variant);
        r.require(sched::check_mechanism(mech, true).is_osp,
                  "M_many fails two-cycles at m=" + std::to_string(m));
        auto s = sched::approx_sweep(mech, m);
        Rational bound = Rational(m + 1, m) * 2;
        r.require(!s.unbounded && s.worst_ratio <= bound,
                  "M_many ratio " + to_string(s.worst_ratio) + " at m=" + std::to_string(m));
        worst_many_ratio_to_bound = std::max(worst_many_ratio_to_bound, Rational(s.worst_ratio / bound));
        if (m == 5) {
          r.require(s.worst_ratio <= 3, "M_many above 3 at m=5");
          worst_cor = std::max(worst_cor, s.worst_ratio);
        }
      }
      if (m <= 4) {
        auto mech = sched::mech_few(inst);
        r.require(sched::check_mechanism(mech, true).is_osp,
                  "M_few fails two-cycles at m=" + std::to_string(m));
        auto s = sched::approx_sweep(mech, m);
        r.require(!s.unbounded && s.worst_ratio <= 2,
                  "M_few ratio " + to_string(s.worst_ratio));
        worst_few = std::max(worst_few, s.worst_ratio);
      }
    }
  }
  r.note << "M_many worst ratio/bound " << to_string(worst_many_ratio_to_bound)
         << ", M_many at m=5 " << to_string(worst_cor) << ", M_few " << to_string(worst_few);
  return r;
}

// 5. Lower-bound case analysis and exhaustive tree search.
Result criterion5() {
  Result r;
  auto rep = sched::lower_bound_witnesses(4);
  r.require(rep.premise_holds, "domain premise fails");
  r.require(rep.low == 1 && rep.mid == 4 && rep.high == 32, "unexpected L, M, H");
  r.require(rep.all_closed && !rep.branches.empty(), "an open branch remains");
  auto d = DomainProfile::homogeneous(2, {R(1), R(3), R(7)});
  oracle::OracleBudget budget;
  auto none = oracle::exhaust_trees_for_optimality(d, oracle::makespan_optima(d, 2), budget);
  r.require(!none.feasible, "found an optimal OSP mechanism with M > 2L, H > 2M");
  auto d2 = DomainProfile::homogeneous(2, {R(1), R(2), R(7)});
  auto some = oracle::exhaust_trees_for_optimality(d2, oracle::makespan_optima(d2, 2), budget);
  r.require(some.feasible, "control instance M <= 2L found infeasible");
  r.note << rep.branches.size() << " branches closed; " << none.trees_checked
         << " trees exhausted for {1,3,7}";
  return r;
}

// 6. Two-value domains: M_GR, balance and monotonicity.
Result criterion6() {
  Result r;
  std::vector<Rational> vals{R(1), R(2), R(3), R(5)};
  std::vector<TypeSet> pairs;
  for (std::size_t a = 0; a < vals.size(); ++a) {
    for (std::size_t b = a + 1; b < vals.size(); ++b) pairs.push_back({vals[a], vals[b]});
  }
  std::size_t instances = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<std::size_t> pick(n, 0);
    while (true) {
      // Canonical only: non-decreasing pair indices cover every multiset;
      // agent order matters for ties, so permuted variants run for n <= 3.
      bool canonical = std::is_sorted(pick.begin(), pick.end()) || n <= 3;
      if (canonical) {
        std::vector<TypeSet> doms;
        for (auto k : pick) doms.push_back(pairs[k]);
        DomainProfile d(doms);
        for (Load m = 1; m <= 6; ++m) {
          SchedulingInstance inst(d, m);
          auto mech = sched::mech_mgr(inst);
          ++instances;
          for (ProfileIndex p = 0; p < d.profile_count(); ++p) {
            auto b = d.profile_at(p);
            if (mech.table[p] != oracle::brute_makespan_opt(b, m).first) {
              r.require(false, "M_GR is not the greedy optimum");
            }
          }
          r.require(sched::check_mechanism(mech).is_osp, "M_GR fails check_osp");
        }
      }
      std::size_t k = 0;
      while (k < n && ++pick[k] == pairs.size()) pick[k++] = 0;
      if (k == n) break;
    }
  }
  std::size_t profiles = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto d = DomainProfile::homogeneous(n, vals);
    for (Load m = 0; m <= 6; ++m) {
      for (ProfileIndex p = 0; p < d.profile_count(); ++p) {
        auto b = d.profile_at(p);
        auto x = sched::greedy_optimal(b, m);
        ++profiles;
        r.require(sched::is_balanced(x, b), "balance inequalities fail");
        r.require(makespan(x, b) == oracle::brute_makespan_opt(b, m).second,
                  "greedy is not optimal");
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t lo = 0; lo < vals.size(); ++lo) {
            for (std::size_t hi = lo + 1; hi < vals.size(); ++hi) {
              auto bl = b, bh = b;
              bl[j] = vals[lo];
              bh[j] = vals[hi];
              auto yl = sched::greedy_optimal(bl, m), yh = sched::greedy_optimal(bh, m);
              for (std::size_t i = 0; i < n; ++i) {
                if (i != j && yl[i] > yh[i]) r.require(false, "monotonicity fails");
              }
            }
          }
        }
      }
    }
  }
  r.note << instances << " M_GR instances, " << profiles << " greedy profiles";
  return r;
}

// 7. The two-agent two-job three-value grid.
Result criterion7() {
  Result r;
  std::size_t ok = 0, refused = 0;
  for (long long l = 1; l <= 4; ++l) {
    for (long long mm = l + 1; mm <= 12; ++mm) {
      for (long long h = mm + 1; h <= 26; ++h) {
        bool possible = mm <= 2 * l || h <= 2 * mm;
        try {
          auto mech = sched::mech_2x2x3(R(l), R(mm), R(h));
          r.require(possible, "built a mechanism in the impossible regime");
          auto v = sched::check_mechanism(mech);
          r.require(v.is_osp, "not OSP at " + std::to_string(l) + "," + std::to_string(mm) +
                                  "," + std::to_string(h));
          r.require(!cmon::verify_payments(mech.table, mech.domains, mech.events(),
                                           *mech.payments),
                    "drawn payments violate OSP");
          for (ProfileIndex p = 0; p < mech.domains.profile_count(); ++p) {
            auto b = mech.domains.profile_at(p);
            r.require(makespan(mech.table[p], b) == oracle::brute_makespan_opt(b, 2).second,
                      "not optimal");
          }
          ++ok;
        } catch (const InputError&) {
          r.require(!possible, "refused a feasible cell");
          ++refused;
        }
      }
    }
  }
  r.note << ok << " cells built OSP + optimal, " << refused << " cells refused";
  return r;
}

// 8. Set systems on two parallel paths.
Result criterion8() {
  Result r;
  std::size_t cells = 0, feasible = 0;
  std::vector<Rational> ratios{R(3, 2), R(2), R(5, 2), R(3)};
  for (std::size_t b = 1; b <= 3; ++b) {
    for (std::size_t t = b; t + b <= 7; ++t) {
      for (const auto& ratio : ratios) {
        Rational low = 2, high = 2 * ratio;
        auto inst = setsys::parallel_paths_instance(t, b, low, high);
        bool closed = setsys::parallel_paths_feasible(t, b, low, high);
        auto v = setsys::optimal_osp_feasible(inst);
        ++cells;
        r.require(v.feasible == closed, "characterization disagrees at t=" + std::to_string(t) +
                                            " b=" + std::to_string(b));
        if (!v.feasible) continue;
        ++feasible;
        auto tree = setsys::build_sm_tree(inst);
        auto f = imptree::leaf_allocation(tree);
        r.require(cmon::check_osp(f, tree).is_osp, "SM tree fails check_osp");
        const auto& d = inst.domains();
        for (ProfileIndex p = 0; p < d.profile_count(); ++p) {
          auto prof = d.profile_at(p);
          auto run = setsys::run_sm(inst, prof);
          if (run.chosen != oracle::brute_social_cost_opt(inst, prof).first) {
            r.require(false, "run_sm differs from the brute-force optimum");
          }
        }
      }
    }
  }
  r.note << cells << " cells, " << feasible << " feasible and verified";
  return r;
}

// 9. Generic ascending and descending auctions versus M_few.
Result criterion9() {
  Result r;
  std::size_t n = 3;
  auto d = DomainProfile::homogeneous(n, {R(1), R(9), R(81)});
  SchedulingInstance inst(d, 3);
  auto asc = sched::approx_sweep(sched::ascending_auction(inst), 3);
  auto desc = sched::approx_sweep(sched::descending_auction(inst), 3);
  r.require(asc.worst_ratio >= 3, "ascending auction ratio below 3");
  r.require(desc.worst_ratio >= 3, "descending auction ratio below 3");
  Rational few_worst = 0;
  for (Load m = 1; m <= 4; ++m) {
    auto d4 = DomainProfile::homogeneous(4, {R(1), R(16), R(256)});
    auto s = sched::approx_sweep(sched::mech_few(SchedulingInstance(d4, m)), m);
    r.require(s.worst_ratio <= 2, "M_few above 2");
    few_worst = std::max(few_worst, s.worst_ratio);
  }
  r.note << "ascending " << to_string(asc.worst_ratio) << ", descending "
         << to_string(desc.worst_ratio) << ", M_few " << to_string(few_worst);
  return r;
}

}  // namespace

int main() {
  std::vector<std::function<Result()>> criteria{criterion1, criterion2, criterion3,
                                                criterion4, criterion5, criterion6,
                                                criterion7, criterion8, criterion9};
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    auto start = std::chrono::steady_clock::now();
    Result res;
    try {
      res = criteria[k]();
    } catch (const std::exception& e) {
      res.pass = false;
      res.note << "exception: " << e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && res.pass;
    std::cout << "criterion " << k + 1 << ": " << (res.pass ? "PASS" : "FAIL") << " ("
              << res.note.str() << "; " << secs << " s)" << std::endl;
  }
  return all ? 0 : 1;
}
