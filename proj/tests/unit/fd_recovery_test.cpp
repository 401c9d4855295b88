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

#include "vcm/fd/failure_detector.hpp"
#include "vcm/recovery/recovery.hpp"

namespace vcm {
namespace {

using sim::SimTime;

gm::ViewG ring(std::initializer_list<std::uint32_t> gids) {
  gm::ViewG v;
  v.view_id = 1;
  for (auto g : gids) v.add(gm::GMember{gm::Gid{g}, ""});
  return v;
}

SimTime s(double x) { return SimTime::from_seconds(x); }

TEST(RingMonitor, Examples) {
  EXPECT_EQ(fd::recompute_ring_monitor(ring({1, 2, 3}), gm::Gid{3}), gm::Gid{1});
  EXPECT_EQ(fd::recompute_ring_monitor(ring({1, 2, 3}), gm::Gid{1}), gm::Gid{2});
  EXPECT_EQ(fd::recompute_ring_monitor(ring({1}), gm::Gid{1}), std::nullopt);
}

TEST(RingMonitor, EveryMemberWatchedExactlyOnce) {
  for (unsigned mask = 1; mask < 256; ++mask) {
    gm::ViewG v;
    for (std::uint32_t g = 1; g <= 8; ++g)
      if (mask & (1u << (g - 1))) v.add(gm::GMember{gm::Gid{g}, ""});
    if (v.members.size() < 2) continue;
    std::map<std::uint32_t, int> watched;
    for (auto g : v.gids()) ++watched[fd::recompute_ring_monitor(v, g)->value];
    ASSERT_EQ(watched.size(), v.members.size()) << "mask " << mask;
    for (auto g : v.gids()) {
      // Heartbeats flow to the member that monitors the sender.
      auto target = fd::heartbeat_target(v, g);
      ASSERT_TRUE(target);
      EXPECT_EQ(fd::recompute_ring_monitor(v, *target), g);
    }
  }
}

TEST(MonitorTable, SuspectsExactlyAtDeadline) {
  fd::MonitorTable<int> t(s(5));
  t.watch(7, s(0));
  t.heartbeat(7, s(10));
  EXPECT_TRUE(t.on_tick(s(14.999999)).empty());
  EXPECT_EQ(t.on_tick(s(15)), std::vector<int>{7});
  // Suspected once until re-armed or a heartbeat arrives.
  EXPECT_TRUE(t.on_tick(s(16)).empty());
}

TEST(MonitorTable, HeartbeatResetsDeadline) {
  fd::MonitorTable<int> t(s(5));
  t.watch(7, s(10));
  t.heartbeat(7, s(14));
  EXPECT_TRUE(t.on_tick(s(15)).empty());
  EXPECT_EQ(t.next_deadline(), s(19));
}

TEST(MonitorTable, WorstCaseDetectionWithinTimeoutPlusInterval) {
  // Beat and tick every h, crash just after the last beat.
  const SimTime n = s(1), h = s(0.25);
  for (int phase = 0; phase < 25; ++phase) {
    fd::MonitorTable<int> t(n);
    t.watch(1, SimTime{});
    const SimTime offset = SimTime::micros(phase * 10000);
    SimTime last;
    for (SimTime b = offset; b <= s(10); b += h) {
      t.heartbeat(1, b);
      last = b;
    }
    const SimTime crash = last + SimTime::micros(1);
    std::optional<SimTime> seen;
    for (SimTime tick = SimTime{}; tick <= s(20) && !seen; tick += h)
      if (tick > crash && !t.on_tick(tick).empty()) seen = tick;
    ASSERT_TRUE(seen);
    EXPECT_LE(*seen - crash, n + h);
  }
}

TEST(ProbeTracker, ReplyAndExpiry) {
  fd::ProbeTracker p(s(0.5));
  auto alive = p.start(gm::Gid{2}, s(1));
  auto dead = p.start(gm::Gid{3}, s(1));
  EXPECT_EQ(p.outstanding(), 2u);
  auto r = p.on_reply(alive);
  ASSERT_TRUE(r);
  EXPECT_TRUE(r->alive);
  auto e = p.on_expiry(dead);
  ASSERT_TRUE(e);
  EXPECT_FALSE(e->alive);
  EXPECT_EQ(e->member, gm::Gid{3});
  // A late reply after expiry is not a second result.
  EXPECT_FALSE(p.on_reply(dead));
  EXPECT_FALSE(p.on_expiry(alive));
}

TEST(HeartbeatConfig, RequiresIntervalBelowTimeout) {
  EXPECT_NO_THROW((fd::HeartbeatConfig{s(1), s(5)}.validate()));
  EXPECT_THROW((fd::HeartbeatConfig{s(1), s(1)}.validate()), std::invalid_argument);
  EXPECT_THROW((fd::HeartbeatConfig{SimTime{}, s(1)}.validate()), std::invalid_argument);
  EXPECT_EQ((fd::HeartbeatConfig{s(1), s(5)}.detection_bound()), s(6));
}

TEST(Recovery, ChildPlans) {
  using recovery::ChildAction;
  using recovery::ChildKind;
  EXPECT_EQ(recovery::plan_child(ChildKind::Vmd, true), ChildAction::Restart);
  EXPECT_EQ(recovery::plan_child(ChildKind::Nd, true), ChildAction::Restart);
  EXPECT_EQ(recovery::plan_child(ChildKind::Vmd, false), ChildAction::Suppress);
  EXPECT_EQ(recovery::plan_child(ChildKind::Nd, false), ChildAction::Suppress);
}

TEST(Recovery, GsdPlans) {
  using K = recovery::GsdPlan::Kind;
  using recovery::Diagnosis;
  std::vector<std::pair<recovery::NodeId, bool>> nodes{{4, false}, {6, true}, {5, true}};
  EXPECT_EQ(recovery::plan_gsd(Diagnosis::ProcessAlive, 4, nodes).kind, K::Nothing);
  EXPECT_EQ(recovery::plan_gsd(Diagnosis::ProcessFailed, 4, nodes).kind, K::RestartInPlace);
  auto spare = recovery::plan_gsd(Diagnosis::NodeFailed, 4, nodes);
  EXPECT_EQ(spare.kind, K::RestartOnSpare);
  EXPECT_EQ(spare.node, 5u);  // lowest live nid
  std::vector<std::pair<recovery::NodeId, bool>> none{{4, false}, {5, false}};
  EXPECT_EQ(recovery::plan_gsd(Diagnosis::NodeFailed, 4, none).kind, K::Takeover);
}

TEST(Recovery, RestartTrackerCapsAttempts) {
  recovery::RestartTracker<int> t(2);
  EXPECT_TRUE(t.try_attempt(1));
  EXPECT_TRUE(t.try_attempt(1));
  EXPECT_FALSE(t.try_attempt(1));
  EXPECT_EQ(t.attempts(1), 2u);
  t.reset(1);
  EXPECT_TRUE(t.try_attempt(1));
}

TEST(Recovery, PolicyDefaults) {
  recovery::RecoveryPolicy p;
  EXPECT_EQ(p.restart_delay, s(1));
  EXPECT_EQ(p.max_restart_attempts, 2u);
  EXPECT_NO_THROW(p.validate());
}

}  // namespace
}  // namespace vcm
