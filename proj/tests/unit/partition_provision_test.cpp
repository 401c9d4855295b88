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

#include <set>

#include "vcm/partition/partition_view.hpp"
#include "vcm/provision/provisioning.hpp"

namespace vcm {
namespace {

using partition::NodeDelta;
using partition::NodeState;
using partition::VmDelta;
using partition::VmState;
using provision::PlacementConfig;
using provision::VmSlot;

// 23 slots per node puts node index 3, slots 0 and 1 at vids 70 and 71.
const PlacementConfig kCfg{16, 23};

partition::PartitionView seven() {
  partition::PartitionView v(gm::Gid{1}, {4, 5, 6, 7}, kCfg);
  v.on_node_register(7, {{70, VmState::Running}, {71, VmState::Running}});
  v.on_node_register(6, {});
  return v;
}

TEST(Vid, KnownValues) {
  EXPECT_EQ(provision::encode_vid({gm::Gid{1}, 0, 0}, PlacementConfig{}), 1u);
  EXPECT_EQ(provision::encode_vid({gm::Gid{1}, 3, 0}, kCfg), 70u);
  EXPECT_EQ(provision::encode_vid({gm::Gid{1}, 3, 1}, kCfg), 71u);
  EXPECT_EQ(provision::encode_vid({gm::Gid{2}, 0, 0}, PlacementConfig{}), 256u * 16u + 1u);
}

TEST(Vid, FirstHundredInjectiveByBruteForce) {
  const PlacementConfig cfg{};
  std::set<provision::Vid> seen;
  std::uint32_t made = 0;
  for (std::uint32_t n = 0; n < cfg.max_nodes_per_partition && made < 100; ++n)
    for (std::uint32_t s = 0; s < cfg.max_vms_per_node && made < 100; ++s, ++made)
      EXPECT_TRUE(seen.insert(provision::encode_vid({gm::Gid{1}, n, s}, cfg)).second);
  EXPECT_EQ(*seen.begin(), 1u);
  EXPECT_EQ(*seen.rbegin(), 100u);
}

TEST(Vid, ExhaustiveRoundTripSmallConfig) {
  const PlacementConfig cfg{16, 8};
  std::set<provision::Vid> seen;
  for (std::uint32_t g = 1; g <= 64; ++g)
    for (std::uint32_t n = 0; n < cfg.max_nodes_per_partition; ++n)
      for (std::uint32_t s = 0; s < cfg.max_vms_per_node; ++s) {
        VmSlot slot{gm::Gid{g}, n, s};
        auto vid = provision::encode_vid(slot, cfg);
        ASSERT_EQ(provision::decode_vid(vid, cfg), slot);
        ASSERT_TRUE(seen.insert(vid).second);
      }
  EXPECT_EQ(seen.size(), 64u * 16u * 8u);
  EXPECT_EQ(*seen.rbegin(), seen.size());  // dense, no gaps
  EXPECT_THROW(provision::decode_vid(0, cfg), std::domain_error);
}

TEST(Vid, RoutingByDecodedGid) {
  auto vid = provision::encode_vid({gm::Gid{5}, 2, 3}, PlacementConfig{});
  EXPECT_EQ(provision::decode_vid(vid, PlacementConfig{}).gid, gm::Gid{5});
}

TEST(Lifecycle, TransitionTable) {
  using provision::transition;
  using S = provision::VmLifecycleState;
  using O = provision::VmOp;
  EXPECT_EQ(transition(S::Running, O::Suspend), S::Suspended);
  EXPECT_EQ(transition(S::Suspended, O::Resume), S::Running);
  EXPECT_EQ(transition(S::Running, O::Shutdown), S::Halted);
  EXPECT_EQ(transition(S::Halted, O::Start), S::Running);
  EXPECT_EQ(transition(S::Running, O::Reboot), S::Running);
  EXPECT_EQ(transition(S::Running, O::Resize), S::Running);
  EXPECT_EQ(transition(S::Halted, O::Resume), std::nullopt);
  EXPECT_EQ(transition(S::Running, O::Resume), std::nullopt);
  EXPECT_EQ(transition(S::Crashed, O::Start), std::nullopt);
  int allowed = 0;
  for (auto s : {S::Halted, S::Running, S::Suspended, S::Crashed, S::Destroyed})
    for (auto o : {O::Start, O::Shutdown, O::Reboot, O::Resize, O::Suspend, O::Resume})
      if (transition(s, o)) ++allowed;
  EXPECT_EQ(allowed, 6);
}

TEST(IntentLog, UnfinishedAndSerialization) {
  provision::IntentLog log;
  using P = provision::TxnPhase;
  using K = provision::TxnKind;
  log.append({1, K::Create, {10, 11}, P::Begun});
  log.append({1, K::Create, {10, 11}, P::Committed});
  log.append({2, K::Create, {12, 13, 14}, P::Begun});
  log.append({3, K::Destroy, {10}, P::Begun});
  auto open = log.unfinished();
  ASSERT_EQ(open.size(), 2u);
  EXPECT_EQ(open[0].txn, 2u);
  EXPECT_EQ(open[1].op, K::Destroy);
  auto back = provision::IntentLog::parse(log.serialize());
  EXPECT_EQ(back.records(), log.records());
  EXPECT_GT(log.next_txn_id(), 3u);
}

TEST(Placement, PinnedFirstThenLowestFreeSlot) {
  const PlacementConfig cfg{4, 2};
  std::vector<provision::NodeCapacity> nodes{{0, true, {0}}, {1, true, {}}, {2, false, {}}};
  auto r = provision::place(gm::Gid{3}, nodes, {std::nullopt, 1u, std::nullopt}, cfg);
  ASSERT_TRUE(r) << r.error;
  EXPECT_EQ(r.slots[0], (VmSlot{gm::Gid{3}, 0, 1}));
  EXPECT_EQ(r.slots[1], (VmSlot{gm::Gid{3}, 1, 0}));
  EXPECT_EQ(r.slots[2], (VmSlot{gm::Gid{3}, 1, 1}));
}

TEST(Placement, RejectsWhenFullOrDown) {
  const PlacementConfig cfg{4, 1};
  std::vector<provision::NodeCapacity> nodes{{0, true, {0}}, {1, false, {}}};
  EXPECT_FALSE(provision::place(gm::Gid{1}, nodes, {std::nullopt}, cfg));
  EXPECT_FALSE(provision::place(gm::Gid{1}, nodes, {1u}, cfg));
  EXPECT_TRUE(provision::place(gm::Gid{1}, nodes, {}, cfg));
}

TEST(PartitionView, NodeTimeoutCascades) {
  auto v = seven();
  auto n = v.on_nd_timeout(7);
  EXPECT_EQ(v.nodes().at(7), NodeState::Crashed);
  EXPECT_EQ(v.vms().at(70), VmState::Crashed);
  EXPECT_EQ(v.vms().at(71), VmState::Crashed);
  EXPECT_EQ(n.deltas.size(), 3u);
  EXPECT_TRUE(v.cascade_holds());
  // Idempotent: a second timeout produces nothing.
  EXPECT_TRUE(v.on_nd_timeout(7).empty());
}

TEST(PartitionView, EmptyNodeTimeoutTouchesOnlyViewN) {
  auto v = seven();
  auto n = v.on_nd_timeout(6);
  ASSERT_EQ(n.deltas.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<NodeDelta>(n.deltas[0]));
  EXPECT_EQ(v.vms().size(), 2u);
}

TEST(PartitionView, NodeLeaveRemovesItsVms) {
  auto v = seven();
  v.on_node_leave(7);
  EXPECT_FALSE(v.has_vm(70));
  EXPECT_FALSE(v.has_vm(71));
  EXPECT_FALSE(v.has_node(7));
  auto before = v.vms();
  v.on_node_leave(6);
  EXPECT_EQ(v.vms(), before);
  // Rejoin: fresh Running entry with no VMs.
  v.on_node_register(7, {});
  EXPECT_EQ(v.nodes().at(7), NodeState::Running);
  EXPECT_TRUE(v.vms_on(7).empty());
  EXPECT_TRUE(v.references_hold());
}

TEST(PartitionView, VmReports) {
  auto v = seven();
  auto n = v.on_vm_report(70, VmState::Crashed);
  EXPECT_EQ(n.deltas, (std::vector<partition::Delta>{VmDelta{70, VmState::Crashed}}));
  v.on_vm_report(71, VmState::Suspended);
  EXPECT_EQ(v.vms().at(71), VmState::Suspended);
  EXPECT_TRUE(v.on_vm_report(71, VmState::Suspended).empty());
}

TEST(PartitionView, ForeignVidsIgnored) {
  partition::PartitionView v(gm::Gid{2}, {9}, kCfg);
  v.on_node_register(9, {{70, VmState::Running}});
  EXPECT_TRUE(v.vms().empty());
  EXPECT_TRUE(v.add_vm(70, VmState::Running).empty());
}

TEST(Subscriptions, FilteredRouting) {
  partition::SubscriptionTable t;
  t.subscribe({"vms", partition::Filter::Vms, "ep-vms"});
  t.subscribe({"nodes", partition::Filter::Nodes, "ep-nodes"});
  partition::Notification crash{{VmDelta{70, VmState::Crashed}}};
  auto routed = t.route(crash);
  ASSERT_EQ(routed.size(), 1u);
  EXPECT_EQ(routed[0].first, "ep-vms");
  EXPECT_EQ(routed[0].second.deltas.size(), 1u);
  EXPECT_TRUE(t.unsubscribe("vms"));
  EXPECT_TRUE(t.route(crash).empty());
}

TEST(Subscriptions, BatchKeepsOrder) {
  partition::SubscriptionTable t;
  t.subscribe({"c", partition::Filter::Both, "ep"});
  partition::Notification batch;
  for (provision::Vid vid : {5u, 3u, 9u, 1u}) batch.deltas.push_back(VmDelta{vid, VmState::Running});
  auto routed = t.route(batch);
  ASSERT_EQ(routed.size(), 1u);
  EXPECT_EQ(routed[0].second.deltas, batch.deltas);
}

gm::ViewG members(std::uint32_t k) {
  gm::ViewG v;
  v.view_id = 4;
  for (std::uint32_t g = 1; g <= k; ++g) v.add(gm::GMember{gm::Gid{g}, "g" + std::to_string(g)});
  return v;
}

partition::PartitionSnapshot snap(std::uint32_t g) {
  partition::PartitionSnapshot s;
  s.partition = s.managed_by = gm::Gid{g};
  s.nodes[g] = NodeState::Running;
  return s;
}

TEST(ClusterFetch, RemoteMessagesAreTwiceKMinusOne) {
  for (std::uint32_t k = 1; k <= 12; ++k) {
    partition::ClusterFetch f(1, 2);
    auto targets = f.begin_round(members(k), gm::Gid{1}, {snap(1)});
    ASSERT_EQ(targets.size(), k - 1);
    EXPECT_EQ(f.complete(), k == 1);
    for (const auto& t : targets) f.on_reply(4, t.gid, {snap(t.gid.value)});
    EXPECT_TRUE(f.complete());
    EXPECT_EQ(f.remote_messages(), 2u * (k - 1)) << "k=" << k;
    EXPECT_EQ(f.result().partitions.size(), k);
  }
}

TEST(ClusterFetch, EightPartitionsFromAnyEntryAgree) {
  std::optional<std::uint64_t> digest;
  for (std::uint32_t entry = 1; entry <= 8; ++entry) {
    partition::ClusterFetch f(entry, 2);
    for (const auto& t : f.begin_round(members(8), gm::Gid{entry}, {snap(entry)}))
      f.on_reply(4, t.gid, {snap(t.gid.value)});
    EXPECT_EQ(f.remote_messages(), 14u);
    if (!digest) digest = f.result().digest();
    EXPECT_EQ(f.result().digest(), *digest);
  }
}

TEST(ClusterFetch, StaleStampRepliesDoNotComplete) {
  partition::ClusterFetch f(1, 1);
  auto targets = f.begin_round(members(3), gm::Gid{1}, {snap(1)});
  f.on_reply(3, gm::Gid{2}, {snap(2)});
  EXPECT_FALSE(f.complete());
  EXPECT_EQ(f.missing().size(), 2u);
  EXPECT_TRUE(f.can_retry());
}

TEST(Snapshot, TextRoundTrip) {
  auto v = seven();
  v.on_vm_report(71, VmState::Suspended);
  auto s = v.snapshot(gm::Gid{3});
  EXPECT_EQ(partition::parse_snapshot(partition::format_snapshot(s)), s);
}

}  // namespace
}  // namespace vcm
