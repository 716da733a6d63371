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

#ifndef OSP_CORE_HPP_
#define OSP_CORE_HPP_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace osp {

inline constexpr std::string_view kVersion = "0.3.0";

// Exact signed rational, always in lowest terms with a positive denominator.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Error hierarchy. The CLI maps InputError to exit code 2 and
// BudgetExceeded to exit code 3; InvariantError signals a library bug or a
// violated mathematical precondition.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

inline std::strong_ordering rational_cmp(const Rational& a, const Rational& b) {
  if (a < b) return std::strong_ordering::less;
  if (b < a) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

// Accepts "p", "-p", "p/q". Whitespace around the token is ignored.
inline Rational parse_rational(std::string_view text) {
  auto first = text.find_first_not_of(" \t\n");
  auto last = text.find_last_not_of(" \t\n");
  if (first == std::string_view::npos) {
    throw InputError("empty rational literal");
  }
  std::string token(text.substr(first, last - first + 1));
  auto slash = token.find('/');
  auto digits_ok = [](std::string_view s, bool allow_sign) {
    if (s.empty()) return false;
    std::size_t k = 0;
    if (allow_sign && (s[0] == '-' || s[0] == '+')) k = 1;
    if (k == s.size()) return false;
    return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(k), s.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
  };
  std::string num = token.substr(0, slash);
  std::string den = slash == std::string::npos ? "1" : token.substr(slash + 1);
  if (!digits_ok(num, true) || !digits_ok(den, false)) {
    throw InputError("malformed rational literal '" + token + "'");
  }
  BigInt n(num[0] == '+' ? num.substr(1) : num);
  BigInt d(den);
  if (d == 0) throw InputError("zero denominator in '" + token + "'");
  return Rational(n, d);
}

inline std::string to_string(const Rational& r) { return r.str(); }

inline Rational ceil_div(const Rational& a, const Rational& b) {
  Rational q = a / b;
  BigInt n = boost::multiprecision::numerator(q);
  BigInt d = boost::multiprecision::denominator(q);
  BigInt fl = n / d;
  if (n % d != 0 && n > 0) fl += 1;
  return Rational(fl);
}

// Integer ceil(sqrt(n)) without floating point.
inline std::int64_t ceil_sqrt(std::int64_t n) {
  if (n < 0) throw InputError("ceil_sqrt of a negative number");
  std::int64_t r = 0;
  while (r * r < n) ++r;
  return r;
}

using TypeSet = std::vector<Rational>;
using TypeProfile = std::vector<Rational>;
using Load = std::int64_t;
using Allocation = std::vector<Load>;
using ProfileIndex = std::size_t;

// Product domain D = D_1 x ... x D_n. Each D_i is strictly increasing,
// non-empty and non-negative. Profiles are numbered in mixed radix with
// agent 0 as the most significant digit.
class DomainProfile {
 public:
  DomainProfile() = default;

  explicit DomainProfile(std::vector<TypeSet> per_agent)
      : per_agent_(std::move(per_agent)) {
    for (std::size_t i = 0; i < per_agent_.size(); ++i) {
      const auto& d = per_agent_[i];
      if (d.empty()) {
        throw InputError("domain of agent " + std::to_string(i) + " is empty");
      }
      for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[k] < 0) {
          throw InputError("domain of agent " + std::to_string(i) +
                           " contains a negative type");
        }
        if (k > 0 && !(d[k - 1] < d[k])) {
          throw InputError("domain of agent " + std::to_string(i) +
                           " is not strictly increasing");
        }
      }
    }
    strides_.assign(per_agent_.size(), 1);
    size_ = 1;
    for (std::size_t i = per_agent_.size(); i-- > 0;) {
      strides_[i] = size_;
      size_ *= per_agent_[i].size();
    }
  }

  static DomainProfile homogeneous(std::size_t agents, const TypeSet& types) {
    return DomainProfile(std::vector<TypeSet>(agents, types));
  }

  std::size_t agents() const { return per_agent_.size(); }
  const TypeSet& domain(std::size_t agent) const { return per_agent_.at(agent); }
  const std::vector<TypeSet>& per_agent() const { return per_agent_; }
  std::size_t profile_count() const { return size_; }
  std::size_t max_domain_size() const {
    std::size_t best = 0;
    for (const auto& d : per_agent_) best = std::max(best, d.size());
    return best;
  }

  // Position of `type` inside D_agent, or npos.
  std::size_t type_index(std::size_t agent, const Rational& type) const {
    const auto& d = per_agent_.at(agent);
    auto it = std::lower_bound(d.begin(), d.end(), type);
    if (it == d.end() || *it != type) return npos;
    return static_cast<std::size_t>(it - d.begin());
  }

  bool contains(const TypeProfile& b) const {
    if (b.size() != agents()) return false;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (type_index(i, b[i]) == npos) return false;
    }
    return true;
  }

  ProfileIndex index_of(const TypeProfile& b) const {
    if (b.size() != agents()) {
      throw InputError("profile has " + std::to_string(b.size()) +
                       " entries, domain has " + std::to_string(agents()) +
                       " agents");
    }
    ProfileIndex idx = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      auto k = type_index(i, b[i]);
      if (k == npos) {
        throw InputError("type " + to_string(b[i]) + " of agent " +
                         std::to_string(i) + " is outside its domain");
      }
      idx += k * strides_[i];
    }
    return idx;
  }

  std::size_t digit(ProfileIndex idx, std::size_t agent) const {
    return (idx / strides_[agent]) % per_agent_[agent].size();
  }

  const Rational& type_at(ProfileIndex idx, std::size_t agent) const {
    return per_agent_[agent][digit(idx, agent)];
  }

  TypeProfile profile_at(ProfileIndex idx) const {
    TypeProfile b;
    b.reserve(agents());
    for (std::size_t i = 0; i < agents(); ++i) b.push_back(type_at(idx, i));
    return b;
  }

  // Index of the profile equal to `idx` except that agent takes type number k.
  ProfileIndex with_digit(ProfileIndex idx, std::size_t agent,
                          std::size_t k) const {
    return idx - digit(idx, agent) * strides_[agent] + k * strides_[agent];
  }

  std::size_t stride(std::size_t agent) const { return strides_[agent]; }

  bool operator==(const DomainProfile& o) const {
    return per_agent_ == o.per_agent_;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<TypeSet> per_agent_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

// Per-profile, per-agent payments from the mechanism to the agents.
struct PaymentTable {
  DomainProfile domain;
  std::vector<std::vector<Rational>> by_profile;  // [profile][agent]

  const std::vector<Rational>& at(const TypeProfile& b) const {
    return by_profile.at(domain.index_of(b));
  }
};

using AllocationFunction = std::function<Allocation(const TypeProfile&)>;

// Cost of agent `agent` with type `type` for outcome `x`. The default is the
// single-parameter model type * x[agent].
using CostModel =
    std::function<Rational(std::size_t agent, const Rational& type,
                           const Allocation& x)>;

inline Rational single_parameter_cost(std::size_t agent, const Rational& type,
                                      const Allocation& x) {
  return type * x.at(agent);
}

inline Rational makespan(const Allocation& x, const TypeProfile& b) {
  if (x.size() != b.size()) {
    throw InputError("allocation and profile lengths differ");
  }
  Rational best = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Rational c = b[i] * x[i];
    if (best < c) best = c;
  }
  return best;
}

inline Rational social_cost(const Allocation& x, const TypeProfile& b) {
  if (x.size() != b.size()) {
    throw InputError("allocation and profile lengths differ");
  }
  Rational total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0 && x[i] != 1) {
      throw InputError("set-system allocation must be 0/1");
    }
    if (x[i] == 1) total += b[i];
  }
  return total;
}

inline Load total_load(const Allocation& x) {
  Load s = 0;
  for (auto v : x) s += v;
  return s;
}

// Worker count: OSP_WORKERS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("OSP_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

// Runs body(k) for k in [0, count) on a fixed pool, one contiguous chunk per
// worker. Exceptions from workers are rethrown on the caller thread.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(count, lo + chunk);
        for (std::size_t k = lo; k < hi; ++k) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace osp

#endif  // OSP_CORE_HPP_
