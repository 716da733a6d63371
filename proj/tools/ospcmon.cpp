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

// ospcmon: build, run and verify OSP mechanisms from the command line.
//
// Exit codes: 0 claim verified, 1 claim refuted, 2 input error,
// 3 budget exceeded.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "osp/cmon.hpp"
#include "osp/io.hpp"
#include "osp/oracle.hpp"
#include "osp/scheduling.hpp"
#include "osp/setsystem.hpp"

namespace {

using osp::io::Json;

enum Exit { kVerified = 0, kRefuted = 1, kInputError = 2, kBudget = 3 };

struct Options {
  bool json = false;
  std::uint64_t seed = 0;
  std::size_t max_nodes = 1u << 20;
  std::string mechanism_file;
  std::string instance_file;
  std::string profile;
  std::string mech = "many";
  std::string zhat = "min-removed";
  std::string p_minus, p_plus;
  bool two_cycles = false;
  std::size_t sample = 0;
  std::size_t n = 4;
  std::size_t t = 1, b = 1;
  std::string low = "1", high = "2";
};

struct Outcome {
  int code = kVerified;
  Json verdict;
  Json instance;  // echoed inputs, digested
  std::string summary;
};

// Accepts a JSON array or a bare comma-separated list such as 1,7/2,3.
osp::TypeProfile parse_profile(const std::string& text) {
  if (!text.empty() && text.front() == '[') {
    return osp::io::profile_from(osp::io::parse_text(text));
  }
  osp::io::Json arr = osp::io::Json::array();
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    arr.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return osp::io::profile_from(arr);
}

osp::sched::Mechanism build_sched(const Options& o, const osp::sched::SchedulingInstance& inst) {
  using namespace osp::sched;
  if (o.mech == "many") {
    ZHat v = o.zhat == "max-active" ? ZHat::kMaxActive : ZHat::kMinRemoved;
    if (o.zhat != "max-active" && o.zhat != "min-removed") {
      throw osp::InputError("--zhat must be min-removed or max-active");
    }
    return mech_many(inst, v);
  }
  if (o.mech == "few") return mech_few(inst);
  if (o.mech == "gr") return mech_mgr(inst);
  if (o.mech == "asc") return ascending_auction(inst);
  if (o.mech == "desc") return descending_auction(inst);
  if (o.mech == "2x2x3") {
    const auto& d = inst.domains;
    if (inst.n != 2 || inst.m != 2 || d.domain(0).size() != 3 || !(d.domain(0) == d.domain(1))) {
      throw osp::InputError("2x2x3 needs n = m = 2 and one shared three-value domain");
    }
    std::optional<osp::Rational> pm, pp;
    if (!o.p_minus.empty()) pm = osp::parse_rational(o.p_minus);
    if (!o.p_plus.empty()) pp = osp::parse_rational(o.p_plus);
    return mech_2x2x3(d.domain(0)[0], d.domain(0)[1], d.domain(0)[2], pm, pp);
  }
  throw osp::InputError("unknown mechanism '" + o.mech + "'");
}

// A mechanism file holds {domains, tree}, {setsystem: instance} for the
// set-system mechanism, or {sched: instance, mech: name}.
osp::sched::Mechanism load_mechanism(const Options& o, Json& echo) {
  Json j = osp::io::read_file(o.mechanism_file);
  echo = j;
  if (j.contains("setsystem")) {
    auto inst = osp::io::setsys_instance_from(j.at("setsystem"));
    return osp::sched::from_tree(osp::setsys::build_sm_tree(inst));
  }
  if (j.contains("sched")) {
    Options sub = o;
    if (j.contains("mech")) sub.mech = j.at("mech").get<std::string>();
    return build_sched(sub, osp::io::sched_instance_from(j.at("sched")));
  }
  if (!j.contains("domains") || !j.contains("tree")) {
    throw osp::InputError("mechanism file needs domains and tree");
  }
  auto d = osp::io::domains_from(j.at("domains"));
  return osp::sched::from_tree(osp::io::tree_from(j.at("tree"), d));
}

Outcome cmd_check(const Options& o) {
  Outcome out;
  auto mech = load_mechanism(o, out.instance);
  auto v = osp::sched::check_mechanism(mech, o.two_cycles);
  out.verdict = osp::io::verdict_json(v, mech.domains);
  out.verdict["mode"] = o.two_cycles ? "two-cycles" : "full";
  out.code = v.is_osp ? kVerified : kRefuted;
  if (v.is_osp) {
    out.summary = o.two_cycles ? "passes 2-cycles" : "OSP";
    if (v.two_cycle_insufficient) {
      out.summary += " (warning: some domain has 4 or more values; two-cycles are not sufficient)";
    }
  } else {
    out.summary = "not OSP: negative " + std::to_string(v.cycle->nodes.size()) +
                  "-cycle of weight " + osp::to_string(v.cycle->weight) + " for agent " +
                  std::to_string(v.cycle->agent);
  }
  return out;
}

Outcome cmd_payments(const Options& o) {
  Outcome out;
  auto mech = load_mechanism(o, out.instance);
  auto v = osp::sched::check_mechanism(mech);
  out.verdict = osp::io::verdict_json(v, mech.domains);
  if (!v.is_osp) {
    out.code = kRefuted;
    out.summary = "no payments: negative cycle";
    return out;
  }
  out.summary = "payments for " + std::to_string(mech.domains.profile_count()) + " profiles";
  return out;
}

Outcome cmd_sched_run(const Options& o) {
  Outcome out;
  out.instance = osp::io::read_file(o.instance_file);
  auto inst = osp::io::sched_instance_from(out.instance);
  auto mech = build_sched(o, inst);
  auto b = parse_profile(o.profile);
  auto t = osp::imptree::transcript_for(*mech.tree, b);
  out.verdict["transcript"] = osp::io::transcript_json(t);
  out.verdict["makespan"] = osp::io::rational_json(osp::makespan(*t.allocation, b));
  if (mech.payments) {
    Json row = Json::array();
    for (const auto& p : mech.payments->at(b)) row.push_back(osp::io::rational_json(p));
    out.verdict["payments"] = row;
  }
  std::string alloc;
  for (auto x : *t.allocation) alloc += (alloc.empty() ? "" : ",") + std::to_string(x);
  out.summary = "allocation (" + alloc + ") after " + std::to_string(t.queries.size()) + " queries";
  return out;
}

Outcome cmd_sched_sweep(const Options& o) {
  Outcome out;
  out.instance = osp::io::read_file(o.instance_file);
  auto inst = osp::io::sched_instance_from(out.instance);
  auto mech = build_sched(o, inst);
  osp::sched::SweepResult r;
  if (o.sample == 0 || o.sample >= mech.domains.profile_count()) {
    r = osp::sched::approx_sweep(mech, inst.m);
  } else {
    std::mt19937_64 rng(o.seed);
    std::vector<osp::ProfileIndex> idx(mech.domains.profile_count());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(o.sample);
    std::sort(idx.begin(), idx.end());
    r.profiles = idx.size();
    std::optional<osp::Rational> worst;
    for (auto p : idx) {
      auto b = mech.domains.profile_at(p);
      auto opt = osp::oracle::brute_makespan_opt(b, inst.m).second;
      auto got = osp::makespan(mech.table[p], b);
      if (opt == 0) {
        if (got > 0) throw osp::InvariantError("unbounded ratio in sample");
        continue;
      }
      if (!worst || got / opt > *worst) {
        worst = got / opt;
        r.witness = b;
      }
    }
    if (worst) r.worst_ratio = *worst;
    out.verdict["sampled"] = true;
    out.verdict["seed"] = o.seed;
  }
  out.verdict["worst_ratio"] = osp::io::rational_json(r.worst_ratio);
  out.verdict["witness"] = osp::io::profile_json(r.witness);
  out.verdict["profiles"] = r.profiles;
  out.verdict["unbounded"] = r.unbounded;
  out.summary = "worst ratio " + osp::to_string(r.worst_ratio) + " over " +
                std::to_string(r.profiles) + " profiles";
  return out;
}

Outcome cmd_lowerbound(const Options& o) {
  Outcome out;
  out.instance = {{"n", o.n}};
  auto r = osp::sched::lower_bound_witnesses(o.n);
  Json branches = Json::array();
  for (const auto& br : r.branches) {
    Json splits = Json::array();
    for (auto s : br.splits) splits.push_back(osp::sched::split_name(s));
    Json e{{"order", br.order}, {"splits", splits}, {"closure", br.closure}, {"closed", br.closed}};
    if (!br.x.empty()) e["x"] = osp::io::profile_json(br.x);
    if (!br.y.empty()) e["y"] = osp::io::profile_json(br.y);
    if (br.weight) e["weight"] = osp::io::rational_json(*br.weight);
    branches.push_back(e);
  }
  out.verdict = {{"m", r.m},
                 {"L", osp::io::rational_json(r.low)},
                 {"M", osp::io::rational_json(r.mid)},
                 {"H", osp::io::rational_json(r.high)},
                 {"premise_holds", r.premise_holds},
                 {"vacuous", r.vacuous},
                 {"all_closed", r.all_closed},
                 {"branches", branches},
                 {"conclusion", r.conclusion}};
  out.code = r.all_closed ? kVerified : kRefuted;
  out.summary = std::to_string(r.branches.size()) + " branches; " + r.conclusion;
  return out;
}

Json subdomain_json(const osp::setsys::Subdomain& d) {
  Json out = Json::array();
  for (const auto& ts : d) out.push_back(osp::io::types_json(ts));
  return out;
}

Json feasibility_json(const osp::setsys::FeasibilityVerdict& v) {
  Json out{{"feasible", v.feasible}, {"subdomains_checked", v.subdomains_checked}};
  if (v.subdomain) out["subdomain"] = subdomain_json(*v.subdomain);
  if (v.evidence) {
    const auto& e = *v.evidence;
    Json ev{{"kind", e.kind == osp::setsys::MisalignmentEvidence::Kind::strong ? "strong" : "weak"}, {"solution", e.solution},
            {"low_pinned", e.low_pinned}, {"high_pinned", e.high_pinned}};
    if (e.element) ev["element"] = *e.element;
    out["evidence"] = ev;
  }
  return out;
}

Outcome cmd_setsys_feasible(const Options& o) {
  Outcome out;
  out.instance = osp::io::read_file(o.instance_file);
  auto inst = osp::io::setsys_instance_from(out.instance);
  auto v = osp::setsys::optimal_osp_feasible(inst);
  out.verdict = feasibility_json(v);
  out.code = v.feasible ? kVerified : kRefuted;
  out.summary = v.feasible ? "optimal OSP mechanism exists"
                           : "infeasible: misaligned subdomain found";
  return out;
}

Outcome cmd_setsys_run(const Options& o) {
  Outcome out;
  out.instance = osp::io::read_file(o.instance_file);
  auto inst = osp::io::setsys_instance_from(out.instance);
  auto b = parse_profile(o.profile);
  auto r = osp::setsys::run_sm(inst, b);
  out.verdict = {{"chosen", r.chosen},
                 {"set", inst.set(r.chosen)},
                 {"transcript", osp::io::transcript_json(r.transcript)}};
  out.summary = "selected P" + std::to_string(r.chosen);
  return out;
}

Outcome cmd_paths(const Options& o) {
  Outcome out;
  auto low = osp::parse_rational(o.low);
  auto high = osp::parse_rational(o.high);
  out.instance = {{"t", o.t}, {"b", o.b}, {"L", o.low}, {"H", o.high}};
  bool closed = osp::setsys::parallel_paths_feasible(o.t, o.b, low, high);
  auto inst = osp::setsys::parallel_paths_instance(o.t, o.b, low, high);
  auto v = osp::setsys::optimal_osp_feasible(inst);
  out.verdict = {{"closed_form", closed}, {"characterization", feasibility_json(v)}};
  if (closed != v.feasible) throw osp::InvariantError("closed form and characterization disagree");
  out.code = closed ? kVerified : kRefuted;
  out.summary = closed ? "feasible" : "infeasible";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build, run and verify obviously strategyproof mechanisms"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("--json", o.json, "Print the JSON report");
  app.add_option("--seed", o.seed, "Seed for sampled sweeps");
  app.add_option("--max-nodes", o.max_nodes, "Node budget for tree construction");

  auto* check = app.add_subcommand("check", "Verify OSP of a mechanism file");
  check->add_option("--mechanism", o.mechanism_file)->required();
  check->add_flag("--two-cycles", o.two_cycles, "Check only cycles of length two");

  auto* pay = app.add_subcommand("payments", "Synthesize OSP payments");
  pay->add_option("--mechanism", o.mechanism_file)->required();

  auto* sched = app.add_subcommand("sched", "Scheduling mechanisms");
  sched->require_subcommand(1);
  auto add_mech = [&](CLI::App* c) {
    c->add_option("--mech", o.mech, "many, few, gr, 2x2x3, asc or desc");
    c->add_option("--instance", o.instance_file)->required();
    c->add_option("--zhat", o.zhat, "min-removed or max-active");
    c->add_option("--p-minus", o.p_minus);
    c->add_option("--p-plus", o.p_plus);
  };
  auto* run = sched->add_subcommand("run", "Run a mechanism on one profile");
  add_mech(run);
  run->add_option("--profile", o.profile)->required();
  auto* sweep = sched->add_subcommand("sweep", "Worst approximation ratio");
  add_mech(sweep);
  sweep->add_option("--sample", o.sample, "Sample this many profiles instead of all");
  auto* lb = sched->add_subcommand("lowerbound", "Lower-bound case analysis");
  lb->add_option("--n", o.n)->required();

  auto* ss = app.add_subcommand("setsys", "Set-system mechanisms");
  ss->require_subcommand(1);
  auto* feas = ss->add_subcommand("feasible", "Decide if an optimal OSP mechanism exists");
  feas->add_option("--instance", o.instance_file)->required();
  auto* ssrun = ss->add_subcommand("run", "Run the optimal mechanism on one profile");
  ssrun->add_option("--instance", o.instance_file)->required();
  ssrun->add_option("--profile", o.profile)->required();

  auto* paths = app.add_subcommand("paths", "Two parallel paths");
  paths->require_subcommand(1);
  auto* pcheck = paths->add_subcommand("check", "Feasibility of an optimal OSP mechanism");
  pcheck->add_option("--t", o.t)->required();
  pcheck->add_option("--b", o.b)->required();
  pcheck->add_option("--low", o.low);
  pcheck->add_option("--high", o.high);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  std::vector<std::string> echo(argv + 1, argv + argc);
  auto start = std::chrono::steady_clock::now();
  Outcome out;
  std::string error;
  try {
    if (*check) out = cmd_check(o);
    else if (*pay) out = cmd_payments(o);
    else if (*run) out = cmd_sched_run(o);
    else if (*sweep) out = cmd_sched_sweep(o);
    else if (*lb) out = cmd_lowerbound(o);
    else if (*feas) out = cmd_setsys_feasible(o);
    else if (*ssrun) out = cmd_setsys_run(o);
    else if (*pcheck) out = cmd_paths(o);
  } catch (const osp::BudgetExceeded& e) {
    out.code = kBudget;
    error = e.what();
  } catch (const osp::InputError& e) {
    out.code = kInputError;
    error = e.what();
  } catch (const osp::InvariantError& e) {
    out.code = kRefuted;
    error = std::string("invariant violated: ") + e.what();
  }
  auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  if (o.json) {
    Json report{{"command", echo},
                {"version", std::string(osp::kVersion)},
                {"digest", osp::io::digest(out.instance)},
                {"exit_code", out.code},
                {"elapsed_ms", ms}};
    if (!error.empty()) report["error"] = error;
    if (!out.verdict.is_null()) report["verdict"] = out.verdict;
    std::cout << report.dump(2) << "\n";
  } else if (!error.empty()) {
    std::cerr << "error: " << error << "\n";
  } else {
    std::cout << out.summary << "\n";
  }
  return out.code;
}
