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

#include <algorithm>

#include "vcm/gm/group_member.hpp"

namespace vcm::gm {
namespace {

GMember M(std::uint32_t g) { return GMember{Gid{g}, "gsd" + std::to_string(g)}; }

ViewG V(ViewId id, std::initializer_list<std::uint32_t> gids) {
  ViewG v;
  v.view_id = id;
  for (auto g : gids) v.add(M(g));
  return v;
}

std::vector<std::uint32_t> ids(const ViewG& v) {
  std::vector<std::uint32_t> out;
  for (auto g : v.gids()) out.push_back(g.value);
  return out;
}

GroupMember member(std::uint32_t self, const ViewG& view, std::uint32_t leader) {
  GmState st;
  st.self = M(self);
  st.view = view;
  st.leader = Gid{leader};
  st.gid_high_water = view.max_gid();
  if (self == leader)
    st.rank = Role::Leader;
  else if (front(view, Gid{self}) == Gid{leader})
    st.rank = Role::Prince;
  return GroupMember{st};
}

template <class T>
std::vector<T> all(const Outputs& out) {
  std::vector<T> r;
  for (const auto& o : out)
    if (auto* p = std::get_if<T>(&o)) r.push_back(*p);
  return r;
}

template <class T>
T one(const Outputs& out) {
  auto r = all<T>(out);
  EXPECT_EQ(r.size(), 1u);
  return r.empty() ? T{} : r.front();
}

bool changed(const Outputs& out) { return !all<out::Installed>(out).empty(); }

// Brute force: smallest member above g, else the smallest member.
Gid front_oracle(const std::vector<Gid>& set, Gid g) {
  std::optional<Gid> above;
  for (auto m : set)
    if (m > g && (!above || m < *above)) above = m;
  return above.value_or(*std::min_element(set.begin(), set.end()));
}

TEST(Front, Examples) {
  std::vector<Gid> s{Gid{1}, Gid{2}, Gid{3}, Gid{4}};
  EXPECT_EQ(front(s, Gid{2}), Gid{3});
  EXPECT_EQ(front(s, Gid{4}), Gid{1});
  std::vector<Gid> one_member{Gid{5}};
  EXPECT_EQ(front(one_member, Gid{5}), Gid{5});
  std::vector<Gid> sparse{Gid{2}, Gid{4}, Gid{7}};
  EXPECT_EQ(front(sparse, Gid{7}), Gid{2});
}

TEST(Front, ExhaustiveOverSubsetsOfOneToSix) {
  for (unsigned mask = 1; mask < 64; ++mask) {
    std::vector<Gid> set;
    for (std::uint32_t g = 1; g <= 6; ++g)
      if (mask & (1u << (g - 1))) set.push_back(Gid{g});
    for (auto g : set) {
      ASSERT_EQ(front(set, g), front_oracle(set, g)) << "mask " << mask << " g " << g.value;
      ViewG v;
      for (auto m : set) v.add(GMember{m, ""});
      // behind is the inverse of front on the ring.
      EXPECT_EQ(front(v, behind(v, g)), g);
    }
  }
}

TEST(Bootstrap, ThreeMembersPrepareThenCommit) {
  std::vector<GMember> statics{M(1), M(2), M(3)};
  auto [leader, out] = GroupMember::bootstrap(statics, M(1));
  auto prep = one<out::SendPrepare>(out);
  ASSERT_EQ(prep.recipients.size(), 2u);

  auto [m2, o2] = GroupMember::bootstrap(statics, M(2));
  auto [m3, o3] = GroupMember::bootstrap(statics, M(3));
  EXPECT_TRUE(o2.empty());
  EXPECT_EQ(one<out::SendPrepareAck>(m2.on_recv_prepare(M(1))).to, M(1));
  m3.on_recv_prepare(M(1));
  leader.on_recv_prepare_ack(M(2));
  leader.on_recv_prepare_ack(M(3));
  auto commit = one<out::SendCommit>(leader.on_prepare_timeout());
  EXPECT_EQ(commit.view, V(1, {1, 2, 3}));
  m2.on_recv_commit(commit.view, Gid{1});
  m3.on_recv_commit(commit.view, Gid{1});
  for (const auto* g : {&leader, &m2, &m3}) EXPECT_EQ(g->state().view, V(1, {1, 2, 3}));
  EXPECT_EQ(leader.state().rank, Role::Leader);
  EXPECT_EQ(m3.state().rank, Role::Prince);
  EXPECT_EQ(m2.state().rank, Role::Member);
}

TEST(Bootstrap, SingleMemberInstallsAlone) {
  auto [g, out] = GroupMember::bootstrap({M(1)}, M(1));
  EXPECT_EQ(one<out::Installed>(out).view, V(1, {1}));
  EXPECT_EQ(g.state().rank, Role::Leader);
}

TEST(Bootstrap, MissingPrepareAckExcludesMember) {
  auto [leader, out] = GroupMember::bootstrap({M(1), M(2), M(3)}, M(1));
  leader.on_recv_prepare_ack(M(3));
  auto commit = one<out::SendCommit>(leader.on_prepare_timeout());
  EXPECT_EQ(commit.view, V(1, {1, 3}));
}

TEST(SucceedingFailure, LeaderRemovesAndBroadcasts) {
  auto g = member(1, V(7, {1, 2, 3}), 1);
  auto out = g.on_succeeding_failure(Gid{2});
  EXPECT_EQ(g.state().view, V(8, {1, 3}));
  auto nv = one<out::SendNewViewG>(out);
  EXPECT_EQ(nv.view.view_id, 8u);
  ASSERT_EQ(nv.recipients.size(), 1u);
  EXPECT_EQ(nv.recipients[0].gid, Gid{3});
  auto ch = one<out::ViewChange>(out);
  EXPECT_EQ(ch.cause, ChangeCause::Crash);
  EXPECT_EQ(ch.from, 7u);
  EXPECT_EQ(ch.to, 8u);
}

TEST(SucceedingFailure, PrinceTakesOverFromLeader) {
  auto g = member(3, V(7, {1, 2, 3}), 1);
  ASSERT_EQ(g.state().rank, Role::Prince);
  auto out = g.on_succeeding_failure(Gid{1});
  EXPECT_EQ(g.state().view, V(8, {2, 3}));
  EXPECT_EQ(g.state().rank, Role::Leader);
  EXPECT_EQ(one<out::SendNewViewG>(out).recipients.size(), 1u);
}

TEST(SucceedingFailure, MemberReportsToLeader) {
  auto g = member(2, V(7, {1, 2, 3}), 1);
  auto out = g.on_succeeding_failure(Gid{3});
  auto rep = one<out::SendCrashReport>(out);
  EXPECT_EQ(rep.view_id, 7u);
  EXPECT_EQ(rep.sender.gid, Gid{2});
  EXPECT_EQ(rep.crasher.gid, Gid{3});
  EXPECT_EQ(rep.to.gid, Gid{1});
  EXPECT_FALSE(changed(out));
  EXPECT_EQ(g.state().view.view_id, 7u);
}

TEST(SucceedingFailure, NonNeighbourSuspicionIgnored) {
  auto g = member(1, V(7, {1, 2, 3}), 1);
  EXPECT_FALSE(changed(g.on_succeeding_failure(Gid{3})));
}

TEST(NewView, NewerViewInstalledAndAcked) {
  auto g = member(2, V(5, {1, 2}), 1);
  auto out = g.on_recv_new_view(V(6, {1, 2, 3}), Gid{1});
  EXPECT_EQ(g.state().view.view_id, 6u);
  auto ack = one<out::SendAck>(out);
  EXPECT_EQ(ack.to.gid, Gid{1});
  EXPECT_EQ(ack.view_id, 6u);
}

TEST(NewView, StaleViewIgnored) {
  auto g = member(2, V(7, {1, 2, 3}), 1);
  auto out = g.on_recv_new_view(V(4, {1, 2}), Gid{1});
  EXPECT_FALSE(changed(out));
  EXPECT_EQ(g.state().view, V(7, {1, 2, 3}));
}

TEST(NewView, MaxGidBecomesPrinceUnderMinGidLeader) {
  auto g = member(4, V(1, {1, 4}), 1);
  g.on_recv_new_view(V(2, {1, 2, 4}), Gid{1});
  EXPECT_EQ(g.state().rank, Role::Prince);
}

TEST(Acks, SilentMemberCompensated) {
  auto g = member(1, V(8, {1, 2}), 1);
  auto out = g.on_recv_joining("gsd3");
  ASSERT_EQ(g.state().view, V(9, {1, 2, 3}));
  auto round = one<out::StartAckTimer>(out).round;
  g.on_recv_ack(Gid{2}, 9);
  auto comp = g.on_ack_timeout(round);
  EXPECT_EQ(g.state().view, V(10, {1, 2}));
  EXPECT_EQ(one<out::ViewChange>(comp).cause, ChangeCause::Compensate);
  EXPECT_EQ(one<out::SendNewViewG>(comp).view.view_id, 10u);
}

TEST(Acks, AllAckedNoFurtherView) {
  auto g = member(1, V(8, {1, 2, 3}), 1);
  auto out = g.on_recv_rejoining(M(4));
  auto round = one<out::StartAckTimer>(out).round;
  for (std::uint32_t s : {2u, 3u, 4u}) g.on_recv_ack(Gid{s}, round);
  EXPECT_FALSE(changed(g.on_ack_timeout(round)));
  EXPECT_EQ(g.state().view.view_id, 9u);
}

TEST(Acks, SecondFailureDuringCompensationIteratesAgain) {
  auto g = member(1, V(9, {1, 2, 3}), 1);
  // 3 fails, then 2 never acknowledges the view that removed 3.
  auto out = g.on_recv_crash_report(9, M(2), M(3));
  one<out::ProbeRequest>(out);
  auto removed = g.on_probe_result(Gid{3}, false);
  ASSERT_EQ(g.state().view, V(10, {1, 2}));
  auto comp = g.on_ack_timeout(one<out::StartAckTimer>(removed).round);
  EXPECT_EQ(g.state().view, V(11, {1}));
  EXPECT_TRUE(all<out::SendNewViewG>(comp).empty());
}

TEST(CrashReport, ProbeTimeoutRemovesMember) {
  auto g = member(1, V(7, {1, 2, 3}), 1);
  one<out::ProbeRequest>(g.on_recv_crash_report(7, M(2), M(3)));
  auto out = g.on_probe_result(Gid{3}, false);
  EXPECT_EQ(g.state().view, V(8, {1, 2}));
  EXPECT_EQ(one<out::ViewChange>(out).cause, ChangeCause::Report);
}

TEST(CrashReport, StaleReportGetsCurrentVersion) {
  auto g = member(1, V(7, {1, 2, 3}), 1);
  auto out = g.on_recv_crash_report(4, M(2), M(3));
  auto cv = one<out::SendCurrentVersion>(out);
  EXPECT_EQ(cv.view_id, 7u);
  EXPECT_EQ(cv.to.gid, Gid{2});
  EXPECT_FALSE(changed(out));
}

TEST(CrashReport, ProbeAnsweredKeepsMember) {
  auto g = member(1, V(7, {1, 2, 3}), 1);
  g.on_recv_crash_report(7, M(2), M(3));
  EXPECT_FALSE(changed(g.on_probe_result(Gid{3}, true)));
  EXPECT_EQ(g.state().view, V(7, {1, 2, 3}));
}

TEST(Joining, LeaderAddsFreshGid) {
  auto g = member(1, V(5, {1, 2, 3}), 1);
  g.on_recv_joining("gsd-new");
  EXPECT_EQ(ids(g.state().view), (std::vector<std::uint32_t>{1, 2, 3, 4}));
  EXPECT_EQ(g.state().view.view_id, 6u);
}

TEST(Joining, MemberIgnores) {
  auto g = member(2, V(5, {1, 2, 3}), 1);
  EXPECT_FALSE(changed(g.on_recv_joining("gsd-new")));
}

TEST(Joining, SingletonLeader) {
  auto g = member(1, V(1, {1}), 1);
  g.on_recv_joining("x");
  EXPECT_EQ(g.state().view, (ViewG{2, {M(1), GMember{Gid{2}, "x"}}}));
}

TEST(Joining, GidsAreNeverReused) {
  auto g = member(1, V(5, {1, 2, 3}), 1);
  g.on_succeeding_failure(Gid{2});
  g.on_recv_leaving_propose(6, M(3));
  g.on_recv_joining("fresh");
  EXPECT_EQ(ids(g.state().view), (std::vector<std::uint32_t>{1, 4}));
}

TEST(Rejoining, AbsentMemberReadmittedWithItsGid) {
  auto g = member(1, V(8, {1, 2}), 1);
  g.on_recv_rejoining(M(3));
  EXPECT_EQ(g.state().view, V(9, {1, 2, 3}));
}

TEST(Rejoining, PresentMemberNoChange) {
  auto g = member(1, V(8, {1, 2}), 1);
  EXPECT_FALSE(changed(g.on_recv_rejoining(M(2))));
}

TEST(Rejoining, NonLeaderIgnores) {
  auto g = member(2, V(8, {1, 2}), 1);
  EXPECT_FALSE(changed(g.on_recv_rejoining(M(3))));
}

TEST(Leaving, LeaderRemovesProposer) {
  auto g = member(1, V(6, {1, 2, 3}), 1);
  auto out = g.on_recv_leaving_propose(6, M(3));
  EXPECT_EQ(g.state().view, V(7, {1, 2}));
  // The departing member is told so it can acknowledge and halt.
  auto nv = one<out::SendNewViewG>(out);
  EXPECT_TRUE(std::any_of(nv.recipients.begin(), nv.recipients.end(), [](const GMember& m) { return m.gid == Gid{3}; }));
}

TEST(Leaving, StaleProposalGetsCurrentVersion) {
  auto g = member(1, V(6, {1, 2, 3}), 1);
  auto out = g.on_recv_leaving_propose(2, M(3));
  EXPECT_EQ(one<out::SendCurrentVersion>(out).view_id, 6u);
  EXPECT_FALSE(changed(out));
}

TEST(Leaving, UnknownGidNoChange) {
  auto g = member(1, V(6, {1, 2, 3}), 1);
  EXPECT_FALSE(changed(g.on_recv_leaving_propose(6, M(9))));
}

TEST(CurrentVersion, BehindMemberHaltsAndRejoins) {
  auto g = member(2, V(3, {1, 2}), 1);
  auto out = g.on_recv_current_version(7);
  EXPECT_TRUE(one<out::Halt>(out).rejoin);
  EXPECT_TRUE(g.state().halted);
}

TEST(CurrentVersion, EqualVersionNoChange) {
  auto g = member(2, V(7, {1, 2}), 1);
  EXPECT_TRUE(all<out::Halt>(g.on_recv_current_version(7)).empty());
  EXPECT_FALSE(g.state().halted);
}

TEST(CurrentVersion, RejoinPreservesGid) {
  auto g = member(2, V(3, {1, 2}), 1);
  g.on_recv_current_version(7);
  auto out = g.rejoin();
  EXPECT_EQ(one<out::SendRejoining>(out).self.gid, Gid{2});
  auto leader = member(1, V(7, {1}), 1);
  leader.on_recv_rejoining(M(2));
  g.on_recv_new_view(leader.state().view, Gid{1});
  EXPECT_EQ(g.state().view, V(8, {1, 2}));
  EXPECT_EQ(g.state().self.gid, Gid{2});
  EXPECT_FALSE(g.state().halted);
}

TEST(SelfLeave, MemberLeavesAndHalts) {
  auto leader = member(1, V(4, {1, 2, 3}), 1);
  auto leaver = member(3, V(4, {1, 2, 3}), 1);
  auto prop = one<out::SendLeavingPropose>(leaver.self_leave());
  EXPECT_EQ(prop.to.gid, Gid{1});
  auto out = leader.on_recv_leaving_propose(prop.view_id, prop.self);
  auto nv = one<out::SendNewViewG>(out);
  auto halt = leaver.on_recv_new_view(nv.view, Gid{1});
  EXPECT_FALSE(one<out::Halt>(halt).rejoin);
  EXPECT_EQ(one<out::SendAck>(halt).view_id, 5u);
  EXPECT_TRUE(leaver.state().halted);
  EXPECT_EQ(leader.state().view, V(5, {1, 2}));
}

TEST(SelfLeave, LeaderHandsOverToPrince) {
  auto leader = member(1, V(4, {1, 2, 3}), 1);
  auto prince = member(3, V(4, {1, 2, 3}), 1);
  auto prop = one<out::SendLeavingPropose>(leader.self_leave());
  EXPECT_EQ(prop.to.gid, Gid{3});
  auto out = prince.on_recv_leaving_propose(prop.view_id, prop.self);
  EXPECT_EQ(prince.state().rank, Role::Leader);
  EXPECT_EQ(prince.state().view, V(5, {2, 3}));
  leader.on_recv_new_view(prince.state().view, Gid{3});
  EXPECT_TRUE(leader.state().halted);
}

TEST(SelfLeave, HaltedMemberNoOp) {
  auto g = member(2, V(3, {1, 2}), 1);
  g.on_recv_current_version(7);
  EXPECT_TRUE(all<out::SendLeavingPropose>(g.self_leave()).empty());
}

TEST(ViewText, MembersRoundTrip) {
  auto v = V(3, {1, 4, 9});
  auto parsed = parse_members(format_members(v));
  EXPECT_EQ(parsed, v.members);
}

}  // namespace
}  // namespace vcm::gm
