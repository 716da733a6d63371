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

// JSON encodings. Rationals are strings "p" or "p/q"; plain JSON integers
// are accepted on input.

#ifndef OSP_IO_HPP_
#define OSP_IO_HPP_

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "osp/cmon.hpp"
#include "osp/core.hpp"
#include "osp/imptree.hpp"
#include "osp/scheduling.hpp"
#include "osp/setsystem.hpp"

namespace osp::io {

using Json = nlohmann::json;

inline Json rational_json(const Rational& r) { return to_string(r); }

inline Rational rational_from(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  throw InputError("expected a rational, got " + j.dump());
}

inline Json types_json(const TypeSet& ts) {
  Json out = Json::array();
  for (const auto& t : ts) out.push_back(rational_json(t));
  return out;
}

inline TypeSet types_from(const Json& j) {
  if (!j.is_array()) throw InputError("expected an array of rationals");
  TypeSet out;
  for (const auto& v : j) out.push_back(rational_from(v));
  return out;
}

inline Json allocation_json(const Allocation& x) { return Json(x); }

inline Allocation allocation_from(const Json& j) {
  if (!j.is_array()) throw InputError("expected an allocation array");
  Allocation x;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw InputError("allocation entries must be non-negative integers");
    }
    x.push_back(v.get<Load>());
  }
  return x;
}

inline Json domains_json(const DomainProfile& d) {
  Json out = Json::array();
  for (const auto& ts : d.per_agent()) out.push_back(types_json(ts));
  return out;
}

inline DomainProfile domains_from(const Json& j) {
  if (!j.is_array()) throw InputError("domains must be an array of arrays");
  std::vector<TypeSet> per_agent;
  for (const auto& d : j) per_agent.push_back(types_from(d));
  return DomainProfile(std::move(per_agent));
}

namespace detail {

inline Json subtree_json(const imptree::ImplementationTree& t, imptree::NodeId u) {
  const auto& n = t.node(u);
  if (n.is_leaf()) {
    Json leaf;
    leaf["allocation"] = n.allocation ? allocation_json(*n.allocation) : Json(nullptr);
    leaf["label"] = n.label;
    return Json{{"leaf", leaf}};
  }
  Json children = Json::array();
  for (const auto& b : n.children) {
    children.push_back({{"types", types_json(b.types)}, {"subtree", subtree_json(t, b.child)}});
  }
  return Json{{"agent", *n.agent}, {"children", children}};
}

inline imptree::NodeId subtree_from(imptree::ImplementationTree& t, const Json& j,
                                    std::size_t depth) {
  if (depth > 10000) throw InputError("tree is nested too deeply");
  if (!j.is_object()) throw InputError("tree node must be an object");
  if (j.contains("leaf")) {
    const auto& leaf = j.at("leaf");
    std::optional<Allocation> x;
    std::string label;
    if (leaf.is_object()) {
      if (leaf.contains("allocation") && !leaf.at("allocation").is_null()) {
        x = allocation_from(leaf.at("allocation"));
      }
      if (leaf.contains("label")) label = leaf.at("label").get<std::string>();
    } else if (!leaf.is_null()) {
      throw InputError("leaf must be an object or null");
    }
    return t.add_leaf(std::move(x), std::move(label));
  }
  if (!j.contains("agent") || !j.contains("children")) {
    throw InputError("internal node needs agent and children");
  }
  std::vector<imptree::Branch> branches;
  for (const auto& c : j.at("children")) {
    imptree::Branch b;
    b.types = types_from(c.at("types"));
    b.child = subtree_from(t, c.at("subtree"), depth + 1);
    branches.push_back(std::move(b));
  }
  return t.add_node(j.at("agent").get<std::size_t>(), std::move(branches));
}

}  // namespace detail

inline Json tree_json(const imptree::ImplementationTree& t) {
  return detail::subtree_json(t, t.root());
}

inline imptree::ImplementationTree tree_from(const Json& j, const DomainProfile& d) {
  imptree::ImplementationTree t(d);
  try {
    t.finish(detail::subtree_from(t, j, 0));
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed tree: ") + e.what());
  }
  return t;
}

inline Json sched_instance_json(const sched::SchedulingInstance& inst) {
  return {{"n", inst.n}, {"m", inst.m}, {"domains", domains_json(inst.domains)}};
}

inline sched::SchedulingInstance sched_instance_from(const Json& j) {
  try {
    auto d = domains_from(j.at("domains"));
    auto m = j.at("m").get<Load>();
    if (j.contains("n") && j.at("n").get<std::size_t>() != d.agents()) {
      throw InputError("n does not match the number of domains");
    }
    return sched::SchedulingInstance(std::move(d), m);
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed scheduling instance: ") + e.what());
  }
}

inline Json setsys_instance_json(const setsys::SetSystemInstance& inst) {
  return {{"elements", inst.elements()},
          {"feasible", inst.feasible()},
          {"tie_order", inst.tie_order()},
          {"domains", domains_json(inst.domains())}};
}

inline setsys::SetSystemInstance setsys_instance_from(const Json& j) {
  try {
    auto elements = j.at("elements").get<std::size_t>();
    auto feasible = j.at("feasible").get<std::vector<setsys::ElementSet>>();
    std::vector<std::size_t> order;
    if (j.contains("tie_order")) order = j.at("tie_order").get<std::vector<std::size_t>>();
    return setsys::SetSystemInstance(elements, std::move(feasible), std::move(order),
                                     domains_from(j.at("domains")));
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed set-system instance: ") + e.what());
  }
}

inline Json profile_json(const TypeProfile& b) { return types_json(b); }

inline TypeProfile profile_from(const Json& j) { return types_from(j); }

inline Json payments_json(const PaymentTable& p) {
  Json out = Json::array();
  for (ProfileIndex k = 0; k < p.by_profile.size(); ++k) {
    Json row = Json::array();
    for (const auto& v : p.by_profile[k]) row.push_back(rational_json(v));
    out.push_back({{"profile", profile_json(p.domain.profile_at(k))}, {"payments", row}});
  }
  return out;
}

inline Json cycle_json(const cmon::NegativeCycle& c, const DomainProfile& d) {
  Json nodes = Json::array();
  for (auto p : c.nodes) nodes.push_back(profile_json(d.profile_at(p)));
  return {{"agent", c.agent}, {"profiles", nodes}, {"weight", rational_json(c.weight)}};
}

inline Json verdict_json(const cmon::OspVerdict& v, const DomainProfile& d) {
  Json out{{"is_osp", v.is_osp}, {"two_cycle_insufficient", v.two_cycle_insufficient}};
  if (v.cycle) out["cycle"] = cycle_json(*v.cycle, d);
  if (v.payments) out["payments"] = payments_json(*v.payments);
  return out;
}

inline Json transcript_json(const imptree::Transcript& t) {
  Json qs = Json::array();
  for (const auto& q : t.queries) {
    Json e{{"agent", q.agent}, {"branch", q.branch}};
    if (q.value) {
      e["value"] = rational_json(*q.value);
      e["answer"] = q.yes ? "yes" : "no";
    }
    qs.push_back(e);
  }
  Json out{{"queries", qs}, {"path", t.path}, {"label", t.label}};
  out["allocation"] = t.allocation ? allocation_json(*t.allocation) : Json(nullptr);
  return out;
}

inline Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline Json parse_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

// 64-bit FNV-1a over the canonical dump, as 16 hex digits.
inline std::string digest(const Json& j) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

}  // namespace osp::io

#endif  // OSP_IO_HPP_
