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

#include <gtest/gtest.h>

#include <atomic>
#include <random>

#include "osp/core.hpp"

namespace osp {
namespace {

Rational R(long long p, long long q = 1) { return Rational(p, q); }

TEST(Rational, CompareExamples) {
  EXPECT_EQ(rational_cmp(R(1, 3), R(2, 6)), std::strong_ordering::equal);
  EXPECT_EQ(rational_cmp(R(7, 2), R(3)), std::strong_ordering::greater);
  EXPECT_EQ(rational_cmp(R(-1, 4), R(0)), std::strong_ordering::less);
}

TEST(Rational, ParseAndPrint) {
  EXPECT_EQ(parse_rational("6/4"), R(3, 2));
  EXPECT_EQ(parse_rational(" -5 "), R(-5));
  EXPECT_EQ(parse_rational("+2/1"), R(2));
  EXPECT_EQ(to_string(parse_rational("6/4")), "3/2");
  EXPECT_EQ(to_string(R(4)), "4");
  for (const char* bad : {"", "1/0", "a", "1/-2", "1.5", "/3", "-"}) {
    EXPECT_THROW(parse_rational(bad), InputError) << bad;
  }
}

TEST(Rational, LowestTermsPositiveDenominator) {
  Rational r = parse_rational("-10/4");
  Rational n = boost::multiprecision::numerator(r);
  Rational d = boost::multiprecision::denominator(r);
  EXPECT_EQ(n, -5);
  EXPECT_EQ(d, 2);
}

TEST(Rational, CeilHelpers) {
  EXPECT_EQ(ceil_div(R(7), R(2)), 4);
  EXPECT_EQ(ceil_div(R(6), R(2)), 3);
  EXPECT_EQ(ceil_div(R(-7), R(2)), -3);
  EXPECT_EQ(ceil_sqrt(0), 0);
  EXPECT_EQ(ceil_sqrt(4), 2);
  EXPECT_EQ(ceil_sqrt(5), 3);
  for (std::int64_t n = 1; n < 500; ++n) {
    auto r = ceil_sqrt(n);
    EXPECT_GE(r * r, n);
    EXPECT_LT((r - 1) * (r - 1), n);
  }
}

TEST(DomainProfile, RejectsBadDomains) {
  EXPECT_THROW(DomainProfile(std::vector<TypeSet>{TypeSet{}}), InputError);
  EXPECT_THROW(DomainProfile(std::vector<TypeSet>{{R(2), R(1)}}), InputError);
  EXPECT_THROW(DomainProfile(std::vector<TypeSet>{{R(1), R(1)}}), InputError);
  EXPECT_THROW(DomainProfile(std::vector<TypeSet>{{R(-1), R(1)}}), InputError);
}

TEST(DomainProfile, IndexRoundTrip) {
  DomainProfile d(std::vector<TypeSet>{{R(1), R(2)}, {R(1), R(3), R(5)}, {R(7)}});
  EXPECT_EQ(d.profile_count(), 6u);
  EXPECT_EQ(d.max_domain_size(), 3u);
  for (ProfileIndex p = 0; p < d.profile_count(); ++p) {
    auto b = d.profile_at(p);
    EXPECT_TRUE(d.contains(b));
    EXPECT_EQ(d.index_of(b), p);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(d.type_at(p, i), b[i]);
      EXPECT_EQ(d.domain(i)[d.digit(p, i)], b[i]);
    }
  }
  // Agent 0 is the most significant digit.
  EXPECT_EQ(d.profile_at(0), (TypeProfile{R(1), R(1), R(7)}));
  EXPECT_EQ(d.profile_at(3), (TypeProfile{R(2), R(1), R(7)}));
  EXPECT_THROW(d.index_of({R(1), R(2), R(7)}), InputError);
  EXPECT_THROW(d.index_of({R(1), R(1)}), InputError);
}

TEST(Makespan, Examples) {
  EXPECT_EQ(makespan({2, 1}, {R(1), R(2)}), 2);
  EXPECT_EQ(makespan({0, 0, 0}, {R(1), R(2), R(3)}), 0);
  EXPECT_EQ(makespan({3, 0}, {R(1), R(2)}), 3);
  EXPECT_THROW(makespan({1}, {R(1), R(2)}), InputError);
}

TEST(Makespan, TwoOneIsBestSplitForThreeJobs) {
  // Independent enumeration of the four splits of three jobs.
  TypeProfile b{R(1), R(2)};
  Rational best = -1;
  Allocation arg;
  for (Load a = 0; a <= 3; ++a) {
    Allocation x{a, 3 - a};
    Rational v = std::max(Rational(b[0] * a), Rational(b[1] * (3 - a)));
    if (best < 0 || v < best) {
      best = v;
      arg = x;
    }
  }
  EXPECT_EQ(arg, (Allocation{2, 1}));
  EXPECT_EQ(makespan(arg, b), best);
}

TEST(SocialCost, Examples) {
  EXPECT_EQ(social_cost({1, 1, 0}, {R(1), R(1), R(3)}), 2);
  EXPECT_EQ(social_cost({0, 0}, {R(4), R(5)}), 0);
  EXPECT_EQ(social_cost({1, 0}, {R(5, 2), R(7)}), R(5, 2));
  EXPECT_THROW(social_cost({2, 0}, {R(1), R(1)}), InputError);
}

TEST(Parallel, CoversEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t k) { hits[k]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  parallel_for(0, [&](std::size_t) { FAIL(); });
}

TEST(Parallel, RethrowsWorkerExceptions) {
  EXPECT_THROW(parallel_for(100,
                            [&](std::size_t k) {
                              if (k == 57) throw InputError("boom");
                            }),
               InputError);
}

TEST(Makespan, PropertyMaxOfLoads) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> small(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + small(rng) % 4;
    Allocation x(n);
    TypeProfile b(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = small(rng);
      b[i] = R(1 + small(rng), 1 + small(rng) % 3);
    }
    Rational v = makespan(x, b);
    bool attained = false;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LE(b[i] * x[i], v);
      attained = attained || b[i] * x[i] == v;
    }
    EXPECT_TRUE(attained);
  }
}

}  // namespace
}  // namespace osp
