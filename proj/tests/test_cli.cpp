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
#include <sys/wait.h>

#include <cstdio>
#include <string>

#include "osp/io.hpp"

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  std::string cmd = std::string(OSPCMON_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, got);
  int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string sample(const std::string& name) {
  return std::string(OSP_SAMPLES_DIR) + "/" + name;
}

TEST(Cli, CheckPathAuctionIsOsp) {
  auto r = run("check --mechanism " + sample("path_auction.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("OSP"), std::string::npos);
}

TEST(Cli, FourValueMechanismPassesTwoCyclesOnlyWithWarning) {
  auto two = run("check --two-cycles --mechanism " + sample("four_value_auction.json"));
  EXPECT_EQ(two.code, 0) << two.out;
  EXPECT_NE(two.out.find("warning"), std::string::npos);
  auto full = run("check --mechanism " + sample("four_value_auction.json"));
  EXPECT_EQ(full.code, 1) << full.out;
  EXPECT_NE(full.out.find("4-cycle"), std::string::npos);
}

TEST(Cli, JsonVerdictCarriesCycle) {
  auto r = run("--json check --mechanism " + sample("four_value_auction.json"));
  EXPECT_EQ(r.code, 1);
  auto j = osp::io::Json::parse(r.out);
  EXPECT_EQ(j.at("exit_code"), 1);
  EXPECT_FALSE(j.at("verdict").at("is_osp").get<bool>());
  EXPECT_EQ(j.at("verdict").at("cycle").at("weight"), osp::io::Json("-1"));
  EXPECT_EQ(j.at("verdict").at("cycle").at("profiles").size(), 4u);
}

TEST(Cli, PaymentsForPathAuction) {
  auto r = run("--json payments --mechanism " + sample("path_auction.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(osp::io::Json::parse(r.out).at("verdict").at("payments").size(), 8u);
}

TEST(Cli, SchedulingMechanismFileIsOsp) {
  EXPECT_EQ(run("check --mechanism " + sample("mech_many.json")).code, 0);
}

TEST(Cli, FewSweepStaysWithinTwo) {
  auto r = run("--json sched sweep --mech few --instance " + sample("sched_n4m4.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto ratio = osp::io::rational_from(
      osp::io::Json::parse(r.out).at("verdict").at("worst_ratio"));
  EXPECT_LE(ratio, 2);
  EXPECT_EQ(run("sched sweep --mech few --instance " + sample("sched_n4m5.json")).code, 2);
}

TEST(Cli, SchedRunAcceptsCommaAndJsonProfiles) {
  auto r = run("sched run --mech 2x2x3 --instance " + sample("sched_2x2x3.json") +
               " --profile 2,5");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("(2,0)"), std::string::npos);
  auto g = run("sched run --mech gr --instance " + sample("sched_two_value.json") +
               " --profile '[\"2\",5,1]'");
  EXPECT_EQ(g.code, 0) << g.out;
  EXPECT_NE(g.out.find("(1,0,4)"), std::string::npos);
}

TEST(Cli, WideGapTwoByTwoByThreeIsRefused) {
  auto r = run("sched run --mech 2x2x3 --instance " + sample("sched_2x2x3_wide.json") +
               " --profile 1,7");
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, LowerBoundCloses) {
  EXPECT_EQ(run("sched lowerbound --n 4").code, 0);
}

TEST(Cli, SetSystems) {
  auto bad = run("--json setsys feasible --instance " + sample("setsys_two_by_two.json"));
  EXPECT_EQ(bad.code, 1) << bad.out;
  EXPECT_TRUE(osp::io::Json::parse(bad.out).at("verdict").contains("subdomain"));
  EXPECT_EQ(run("setsys feasible --instance " + sample("setsys_triangle.json")).code, 0);
  auto pick = run("setsys run --instance " + sample("setsys_triangle.json") + " --profile 3,1,1");
  EXPECT_EQ(pick.code, 0);
  EXPECT_NE(pick.out.find("P1"), std::string::npos);
}

TEST(Cli, EmptyFamilyIsInputError) {
  EXPECT_EQ(run("setsys feasible --instance " + sample("setsys_empty.json")).code, 2);
  EXPECT_EQ(run("check --mechanism " + sample("mech_setsys_empty.json")).code, 2);
}

TEST(Cli, ParallelPaths) {
  EXPECT_EQ(run("paths check --t 1 --b 1").code, 0);
  EXPECT_EQ(run("paths check --t 2 --b 2").code, 1);
}

TEST(Cli, BadArgumentsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("check").code, 2);
  EXPECT_EQ(run("check --mechanism /nonexistent.json").code, 2);
  EXPECT_EQ(run("setsys run --instance " + sample("setsys_triangle.json") + " --profile 3,,1")
                .code,
            2);
}

}  // namespace
