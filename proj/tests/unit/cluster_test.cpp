// Copyright 2026 The vcm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "vcm/check/check.hpp"
#include "vcm/cluster/runner.hpp"
#include "vcm/sim/trace.hpp"

namespace vcm {
namespace {

/// Every "key=value" token of `needle` is a field of `rec`; a value ending in
/// '*' is a prefix.
bool matches(const sim::TraceRecord& rec, std::string_view needle) {
  std::size_t pos = 0;
  while (pos < needle.size()) {
    auto end = needle.find(' ', pos);
    if (end == std::string_view::npos) end = needle.size();
    auto tok = needle.substr(pos, end - pos);
    pos = end + 1;
    auto eq = tok.find('=');
    auto v = rec.get(tok.substr(0, eq));
    if (!v) return false;
    auto want = tok.substr(eq + 1);
    if (want.back() == '*' ? v->substr(0, want.size() - 1) != want.substr(0, want.size() - 1) : *v != want)
      return false;
  }
  return true;
}

struct Run {
  cluster::RunOutput out;
  sim::ParsedTrace trace;
  check::CheckReport report;

  std::vector<const sim::TraceRecord*> all(std::string_view kind, std::string_view needle = {}) const {
    std::vector<const sim::TraceRecord*> r;
    for (const auto& rec : trace.records)
      if (rec.kind == kind && matches(rec, needle)) r.push_back(&rec);
    return r;
  }
  std::string field(std::string_view kind, std::string_view needle, std::string_view key) const {
    auto r = all(kind, needle);
    if (r.empty()) return "<missing>";
    return std::string(r.front()->get(key).value_or("<none>"));
  }
};

std::string scenario(std::string_view topology, std::string_view schedule, std::string_view config = "") {
  std::string s = "[topology]\n";
  s += topology;
  s += "\n[config]\nheartbeat_interval = 1\nheartbeat_timeout = 5\n";
  s += config;
  s += "\n[schedule]\n";
  s += schedule;
  return s;
}

Run run(const std::string& text) {
  Run r;
  r.out = cluster::run_scenario(sim::parse_scenario(text));
  r.trace = sim::parse_trace(r.out.trace);
  r.report = check::check_trace(r.trace);
  return r;
}

void expect_clean(const Run& r) {
  EXPECT_TRUE(r.out.quiescent) << r.out.error;
  for (const auto& p : r.report.results)
    EXPECT_TRUE(p.pass) << p.name << " line " << p.line.value_or(0) << ": " << p.detail;
}

const char* kSmall = "partitions = 3\nnodes_per_partition = 2\nvms_per_node = 2";

TEST(Cluster, EmptyScheduleBootstrapsOneGroup) {
  auto r = run(scenario("partitions = 2\nnodes_per_partition = 1\nvms_per_node = 1", ""));
  expect_clean(r);
  auto finals = r.all("final");
  ASSERT_EQ(finals.size(), 2u);
  for (auto* f : finals) {
    EXPECT_EQ(f->get("view"), "1");
    EXPECT_EQ(f->get("members"), "1:g1,2:g2");
    EXPECT_EQ(f->get("leader"), "1");
  }
}

TEST(Cluster, CreateBatchCommitsAllVids) {
  auto r = run(scenario(kSmall, "5 create_vms 1 3\n"));
  expect_clean(r);
  EXPECT_EQ(r.field("wal", "phase=committed", "vids"), "3,4,5");
  EXPECT_EQ(r.field("result", "kind=client", "detail"), "3,4,5");
}

TEST(Cluster, EmptyBatchesAreNoOps) {
  auto r = run(scenario(kSmall, "5 create_vms 2 0\n6 destroy_vms\n"));
  expect_clean(r);
  for (auto* res : r.all("result", "kind=client")) {
    EXPECT_EQ(res->get("ok"), "1");
    EXPECT_EQ(res->get("detail"), "-");
  }
  EXPECT_EQ(r.all("result", "kind=client").size(), 2u);
}

TEST(Cluster, GsdKilledMidBatchRollsBack) {
  auto r = run(scenario(kSmall, "10 create_vms 3 2\n11 crash_process gsd:3\n"));
  expect_clean(r);
  EXPECT_EQ(r.all("wal", "phase=committed").size(), 0u);
  EXPECT_EQ(r.field("rollback", "partition=3", "vids"), "8195,8196");
  EXPECT_EQ(r.all("partition", "vms=8195*").size(), 0u);
}

TEST(Cluster, DestroyRemovesVmsIncludingSuspended) {
  auto r = run(scenario(kSmall, "5 create_vms 1 2\n20 vm_op 3 suspend\n40 destroy_vms 3 4\n"));
  expect_clean(r);
  EXPECT_EQ(r.field("result", "detail=suspend*", "ok"), "1");
  EXPECT_EQ(r.field("wal", "op=destroy phase=committed", "vids"), "3,4");
  for (auto* p : r.all("partition", "part=1")) {
    const std::string vms(p->get("vms").value_or(""));
    EXPECT_EQ(vms.find("3:"), std::string::npos) << vms;
    EXPECT_EQ(vms.find("4:"), std::string::npos) << vms;
  }
}

TEST(Cluster, VmOpsFollowTheLifecycle) {
  auto r = run(scenario(kSmall,
                        "5 create_vms 1 1\n20 vm_op 3 shutdown\n40 vm_op 3 resume\n41 vm_op 3 start\n"
                        "60 vm_op 3 resize\n61 vm_op 3 reboot\n"));
  expect_clean(r);
  std::vector<std::string> details;
  for (auto* res : r.all("result", "kind=client"))
    details.push_back(std::string(res->get("ok").value_or("")) + " " + std::string(res->get("detail").value_or("")));
  EXPECT_EQ(details, (std::vector<std::string>{"1 3", "1 shutdown:halted", "0 invalid-transition",
                                               "1 start:running", "1 resize:running", "1 reboot:running"}));
}

TEST(Cluster, PauseShorterThanTimeoutRaisesNoSuspicion) {
  // Pauses stay below N - h.
  auto r = run(scenario(kSmall, "10 pause_process nd:1\n13 resume_process nd:1\n20 pause_process gsd:2\n23.5 resume_process gsd:2\n"));
  expect_clean(r);
  EXPECT_TRUE(r.all("suspect").empty());
}

TEST(Cluster, GsdProcessCrashRestartsInPlace) {
  auto r = run(scenario(kSmall, "10 crash_process gsd:2\n"));
  expect_clean(r);
  EXPECT_EQ(r.field("diagnose", "kind=gsd", "result"), "process-failed");
  EXPECT_EQ(r.all("recovered", "kind=gsd id=2").size(), 1u);
  for (auto* f : r.all("final")) EXPECT_EQ(f->get("members"), "1:g1,2:g2,3:g3");
}

TEST(Cluster, GsdNodeCrashRestartsOnSpare) {
  auto r = run(scenario(kSmall, "10 crash_node node:3\n"));
  expect_clean(r);
  EXPECT_EQ(r.field("diagnose", "kind=gsd", "result"), "node-failed");
  EXPECT_EQ(r.field("diagnose", "kind=gsd", "action"), "restart");
  EXPECT_EQ(r.all("recovered", "kind=gsd id=2").size(), 1u);
}

TEST(Cluster, FailedRestartFallsBackToTakeover) {
  auto r = run(scenario(kSmall, "5 fail_restart gsd:2\n10 crash_process gsd:2\n"));
  expect_clean(r);
  EXPECT_EQ(r.all("takeover", "partition=2").size() > 0, true);
  for (auto* f : r.all("final", "alive=1")) EXPECT_EQ(f->get("members"), "1:g1,3:g3");
}

TEST(Cluster, LeaderCrashConverges) {
  auto r = run(scenario(kSmall, "10 fail_restart gsd:1\n10 crash_process gsd:1\n"));
  expect_clean(r);
  for (auto* f : r.all("final", "alive=1")) {
    EXPECT_EQ(f->get("members"), "2:g2,3:g3");
    EXPECT_EQ(f->get("leader"), "3");  // the former Prince
  }
}

TEST(Cluster, SameSeedSameTrace) {
  const auto text = scenario(kSmall, "5 create_vms 1 2\n10 crash_process gsd:2\n20 crash_node node:5\n");
  auto sc = sim::parse_scenario(text);
  EXPECT_EQ(cluster::run_scenario(sc, 11).trace, cluster::run_scenario(sc, 11).trace);
}

}  // namespace
}  // namespace vcm
