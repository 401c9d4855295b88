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

#include "vcm/gm/group_member.hpp"

#include <algorithm>

namespace vcm::gm {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void ignore(Outputs& out, std::string reason) { out.push_back(out::Ignored{std::move(reason)}); }
}  // namespace

std::string_view to_string(ChangeCause c) {
  switch (c) {
    case ChangeCause::Join:
      return "join";
    case ChangeCause::Rejoin:
      return "rejoin";
    case ChangeCause::Leave:
      return "leave";
    case ChangeCause::Crash:
      return "crash";
    case ChangeCause::Report:
      return "report";
    case ChangeCause::Compensate:
      return "compensate";
  }
  return "?";
}

std::pair<GroupMember, Outputs> GroupMember::bootstrap(const std::vector<GMember>& static_members,
                                                       const GMember& self) {
  GmState st;
  st.self = self;
  st.static_members = static_members;
  std::sort(st.static_members.begin(), st.static_members.end(),
            [](const GMember& a, const GMember& b) { return a.gid < b.gid; });
  GroupMember gm{std::move(st)};
  Outputs out;
  const auto& members = gm.state_.static_members;
  if (members.empty() || members.front().gid != self.gid) return {std::move(gm), std::move(out)};

  if (members.size() == 1) {
    ViewG first{1, {self}};
    gm.install(first, self.gid, out);
    return {std::move(gm), std::move(out)};
  }
  gm.state_.preparing = true;
  std::vector<GMember> others(members.begin() + 1, members.end());
  out.push_back(out::SendPrepare{std::move(others)});
  out.push_back(out::StartPrepareTimer{});
  return {std::move(gm), std::move(out)};
}

GroupMember GroupMember::blank(const GMember& self) {
  GmState st;
  st.self = self;
  return GroupMember{std::move(st)};
}

Outputs GroupMember::handle(const GmEvent& event) {
  return std::visit(
      overloaded{
          [&](const in::SucceedingFailure& e) { return on_succeeding_failure(e.suspect); },
          [&](const in::RecvAck& e) { return on_recv_ack(e.sender, e.view_id); },
          [&](const in::RecvCrashReport& e) { return on_recv_crash_report(e.view_id, e.sender, e.crasher); },
          [&](const in::RecvNewViewG& e) { return on_recv_new_view(e.view, e.from); },
          [&](const in::RecvRejoining& e) { return on_recv_rejoining(e.member); },
          [&](const in::RecvJoining& e) { return on_recv_joining(e.address); },
          [&](const in::RecvLeavingPropose& e) { return on_recv_leaving_propose(e.view_id, e.leaving); },
          [&](const in::RecvCurrentVersion& e) { return on_recv_current_version(e.view_id); },
          [&](const in::AckTimeout& e) { return on_ack_timeout(e.round); },
          [&](const in::ProbeResult& e) { return on_probe_result(e.member, e.alive); },
          [&](const in::SelfLeave&) { return self_leave(); },
          [&](const in::Stale&) { return stale(); },
          [&](const in::Rejoin&) { return rejoin(); },
          [&](const in::Join&) { return join(); },
          [&](const in::RecvPrepare& e) { return on_recv_prepare(e.from); },
          [&](const in::RecvPrepareAck& e) { return on_recv_prepare_ack(e.from); },
          [&](const in::PrepareTimeout&) { return on_prepare_timeout(); },
          [&](const in::RecvCommit& e) { return on_recv_commit(e.view, e.from); },
      },
      event);
}

// --- internal helpers ------------------------------------------------------

Role GroupMember::rank_for(const ViewG& view, Gid leader) const {
  if (leader == state_.self.gid) return Role::Leader;
  if (view.members.size() > 1 && front(view, state_.self.gid) == leader) return Role::Prince;
  return Role::Member;
}

void GroupMember::drop_leader_state() {
  state_.ack_pending.clear();
  state_.ack_round = 0;
  state_.probing.clear();
  state_.deferred_rejoins.clear();
}

void GroupMember::install(const ViewG& view, Gid leader, Outputs& out) {
  state_.view = view;
  state_.leader = leader;
  state_.rank = rank_for(view, leader);
  state_.gid_high_water = std::max(state_.gid_high_water, view.max_gid());
  state_.halted = false;
  state_.rejoining = false;
  state_.joining = false;
  state_.preparing = false;
  if (state_.rank != Role::Leader) drop_leader_state();
  out.push_back(out::Installed{view, state_.rank});
}

void GroupMember::publish(ViewG next, ChangeCause cause, std::vector<Gid> subjects,
                          const std::vector<GMember>& departing, Outputs& out) {
  const ViewId from = state_.view.view_id;
  next.view_id = from + 1;

  std::vector<GMember> recipients;
  for (const auto& m : next.members)
    if (m.gid != state_.self.gid) recipients.push_back(m);
  for (const auto& m : departing)
    if (m.gid != state_.self.gid && !next.contains(m.gid)) recipients.push_back(m);

  out.push_back(out::ViewChange{cause, std::move(subjects), from, next.view_id});
  install(next, state_.self.gid, out);

  state_.ack_pending.clear();
  for (const auto& r : recipients) state_.ack_pending[r.gid] = false;
  state_.ack_round = next.view_id;
  if (!recipients.empty()) {
    out.push_back(out::SendNewViewG{next, std::move(recipients)});
    out.push_back(out::StartAckTimer{next.view_id});
  }
}

bool GroupMember::removal_in_progress(Gid gid) const {
  if (state_.probing.count(gid)) return true;
  auto it = state_.ack_pending.find(gid);
  return it != state_.ack_pending.end() && !it->second;
}

void GroupMember::release_deferred(Gid gid, Outputs& out) {
  auto it = state_.deferred_rejoins.find(gid);
  if (it == state_.deferred_rejoins.end()) return;
  GMember member = it->second;
  state_.deferred_rejoins.erase(it);
  if (state_.view.contains(gid)) return;
  ViewG next = state_.view;
  next.add(member);
  publish(std::move(next), ChangeCause::Rejoin, {gid}, {}, out);
}

GMember GroupMember::leader_member() const {
  if (state_.leader) {
    if (const auto* m = state_.view.find(*state_.leader)) return *m;
    return GMember{*state_.leader, {}};
  }
  return GMember{};
}

// --- handlers ----------------------------------------------------------------

Outputs GroupMember::on_succeeding_failure(Gid suspect) {
  Outputs out;
  if (!state_.active()) {
    ignore(out, "succeeding failure while inactive");
    return out;
  }
  if (state_.view.members.size() < 2 || front(state_.view, state_.self.gid) != suspect) {
    ignore(out, "suspect is not the succeeding member");
    return out;
  }
  const GMember crasher = *state_.view.find(suspect);
  switch (state_.rank) {
    case Role::Leader: {
      if (state_.leaving) {
        ignore(out, "leader is leaving");
        return out;
      }
      ViewG next = state_.view;
      next.remove(suspect);
      state_.probing.erase(suspect);
      publish(std::move(next), ChangeCause::Crash, {suspect}, {}, out);
      release_deferred(suspect, out);
      break;
    }
    case Role::Prince: {
      ViewG next = state_.view;
      next.remove(suspect);
      state_.rank = Role::Leader;
      state_.leader = state_.self.gid;
      state_.leaving = false;
      publish(std::move(next), ChangeCause::Crash, {suspect}, {}, out);
      break;
    }
    case Role::Member:
      out.push_back(out::SendCrashReport{leader_member(), state_.view.view_id, state_.self, crasher});
      break;
  }
  return out;
}

Outputs GroupMember::on_recv_ack(Gid sender, ViewId view_id) {
  Outputs out;
  if (!state_.acting_leader()) {
    ignore(out, "ack at non-leader");
    return out;
  }
  if (view_id != state_.ack_round) {
    ignore(out, "ack for stale round");
    return out;
  }
  auto it = state_.ack_pending.find(sender);
  if (it == state_.ack_pending.end()) {
    ignore(out, "ack from gid outside the round");
    return out;
  }
  it->second = true;
  state_.deferred_rejoins.erase(sender);
  if (std::all_of(state_.ack_pending.begin(), state_.ack_pending.end(), [](const auto& kv) { return kv.second; }))
    state_.ack_pending.clear();
  return out;
}

Outputs GroupMember::on_ack_timeout(ViewId round) {
  Outputs out;
  if (!state_.acting_leader() || round != state_.ack_round || state_.ack_pending.empty()) {
    ignore(out, "ack timeout for closed round");
    return out;
  }
  std::vector<Gid> silent;
  for (const auto& [gid, acked] : state_.ack_pending)
    if (!acked && state_.view.contains(gid)) silent.push_back(gid);
  state_.ack_pending.clear();
  if (silent.empty()) return out;

  ViewG next = state_.view;
  for (Gid g : silent) {
    next.remove(g);
    state_.probing.erase(g);
  }
  publish(std::move(next), ChangeCause::Compensate, silent, {}, out);
  for (Gid g : silent) release_deferred(g, out);
  return out;
}

Outputs GroupMember::on_recv_crash_report(ViewId view_id, const GMember& sender, const GMember& crasher) {
  Outputs out;
  if (!state_.acting_leader()) {
    ignore(out, "crash report at non-leader");
    return out;
  }
  if (view_id < state_.view.view_id) {
    out.push_back(out::SendCurrentVersion{sender, state_.view.view_id});
    return out;
  }
  const GMember* target = state_.view.find(crasher.gid);
  if (!target) {
    ignore(out, "crasher already removed");
    return out;
  }
  if (!state_.probing.insert(crasher.gid).second) {
    ignore(out, "probe already outstanding");
    return out;
  }
  out.push_back(out::ProbeRequest{*target});
  return out;
}

Outputs GroupMember::on_probe_result(Gid member, bool alive) {
  Outputs out;
  if (!state_.acting_leader() || state_.probing.erase(member) == 0) {
    ignore(out, "unexpected probe result");
    return out;
  }
  if (alive) {
    state_.deferred_rejoins.erase(member);
    ignore(out, "probe answered, member alive");
    return out;
  }
  if (!state_.view.contains(member)) return out;
  ViewG next = state_.view;
  next.remove(member);
  publish(std::move(next), ChangeCause::Report, {member}, {}, out);
  release_deferred(member, out);
  return out;
}

Outputs GroupMember::on_recv_new_view(const ViewG& view, Gid from) {
  Outputs out;
  if (state_.halted && !state_.rejoining) {
    ignore(out, "halted");
    return out;
  }
  if (view.view_id <= state_.view.view_id) {
    ignore(out, "stale view");
    return out;
  }
  if (state_.joining && !state_.installed()) {
    if (const auto* me = view.find_address(state_.self.address)) state_.self.gid = me->gid;
  }
  if (!view.contains(state_.self.gid) || state_.self.gid.value == 0) {
    if (state_.leaving) {
      if (const auto* l = view.find(from)) out.push_back(out::SendAck{*l, view.view_id});
      state_.halted = true;
      state_.leaving = false;
      drop_leader_state();
      out.push_back(out::Halt{false});
    } else if (state_.rejoining || state_.joining || !state_.installed()) {
      ignore(out, "view does not admit this process yet");
    } else {
      // Evicted: never install a view that lacks self; start over.
      state_.halted = true;
      drop_leader_state();
      out.push_back(out::Halt{true});
    }
    return out;
  }
  install(view, from, out);
  out.push_back(out::SendAck{leader_member(), view.view_id});
  return out;
}

Outputs GroupMember::on_recv_joining(const std::string& address) {
  Outputs out;
  if (!state_.acting_leader()) {
    ignore(out, "joining at non-leader");
    return out;
  }
  if (state_.view.find_address(address)) {
    ignore(out, "address already a member");
    return out;
  }
  Gid fresh{std::max(state_.gid_high_water, state_.view.max_gid()).value + 1};
  ViewG next = state_.view;
  next.add(GMember{fresh, address});
  publish(std::move(next), ChangeCause::Join, {fresh}, {}, out);
  return out;
}

Outputs GroupMember::on_recv_rejoining(const GMember& member) {
  Outputs out;
  if (!state_.acting_leader()) {
    ignore(out, "rejoining at non-leader");
    return out;
  }
  if (member.gid == state_.self.gid) {
    ignore(out, "rejoining names the leader");
    return out;
  }
  if (state_.view.contains(member.gid)) {
    if (removal_in_progress(member.gid)) {
      state_.deferred_rejoins[member.gid] = member;
      ignore(out, "rejoin deferred until removal completes");
    } else {
      ignore(out, "already a member");
    }
    return out;
  }
  ViewG next = state_.view;
  next.add(member);
  publish(std::move(next), ChangeCause::Rejoin, {member.gid}, {}, out);
  return out;
}

Outputs GroupMember::on_recv_leaving_propose(ViewId view_id, const GMember& leaving) {
  Outputs out;
  if (state_.active() && state_.rank == Role::Prince && state_.leader && *state_.leader == leaving.gid) {
    // Leader hands the group over before departing.
    state_.rank = Role::Leader;
    state_.leader = state_.self.gid;
  }
  if (!state_.acting_leader()) {
    ignore(out, "leaving propose at non-leader");
    return out;
  }
  if (view_id < state_.view.view_id) {
    out.push_back(out::SendCurrentVersion{leaving, state_.view.view_id});
    return out;
  }
  const GMember* m = state_.view.find(leaving.gid);
  if (!m || leaving.gid == state_.self.gid) {
    ignore(out, "leaving member not in view");
    return out;
  }
  GMember departing = *m;
  ViewG next = state_.view;
  next.remove(leaving.gid);
  state_.probing.erase(leaving.gid);
  state_.deferred_rejoins.erase(leaving.gid);
  publish(std::move(next), ChangeCause::Leave, {leaving.gid}, {departing}, out);
  return out;
}

Outputs GroupMember::on_recv_current_version(ViewId view_id) {
  Outputs out;
  if (!state_.active()) {
    ignore(out, "current version while inactive");
    return out;
  }
  if (state_.view.view_id < view_id) {
    state_.halted = true;
    state_.leaving = false;
    drop_leader_state();
    out.push_back(out::Halt{true});
  }
  return out;
}

Outputs GroupMember::self_leave() {
  Outputs out;
  if (!state_.active() || state_.leaving) {
    ignore(out, "leave while inactive");
    return out;
  }
  state_.leaving = true;
  if (state_.view.members.size() == 1) {
    state_.halted = true;
    state_.leaving = false;
    drop_leader_state();
    out.push_back(out::Halt{false});
    return out;
  }
  GMember target;
  if (state_.rank == Role::Leader) {
    target = *state_.view.find(behind(state_.view, state_.self.gid));
    drop_leader_state();
  } else {
    target = leader_member();
  }
  out.push_back(out::SendLeavingPropose{target, state_.view.view_id, state_.self});
  return out;
}

Outputs GroupMember::stale() {
  Outputs out;
  if (!state_.active()) {
    ignore(out, "stale while inactive");
    return out;
  }
  state_.halted = true;
  state_.leaving = false;
  drop_leader_state();
  out.push_back(out::Halt{true});
  return out;
}

Outputs GroupMember::rejoin() {
  Outputs out;
  if (state_.active()) {
    ignore(out, "rejoin while active");
    return out;
  }
  state_.halted = true;
  state_.rejoining = true;
  state_.leaving = false;
  out.push_back(out::SendRejoining{state_.self});
  return out;
}

Outputs GroupMember::join() {
  Outputs out;
  if (state_.installed()) {
    ignore(out, "join while installed");
    return out;
  }
  state_.joining = true;
  out.push_back(out::SendJoining{state_.self.address});
  return out;
}

Outputs GroupMember::on_recv_prepare(const GMember& from) {
  Outputs out;
  if (state_.installed() || state_.halted) {
    ignore(out, "prepare after install");
    return out;
  }
  out.push_back(out::SendPrepareAck{from});
  return out;
}

Outputs GroupMember::on_recv_prepare_ack(const GMember& from) {
  Outputs out;
  if (!state_.preparing) {
    ignore(out, "prepare ack outside bootstrap");
    return out;
  }
  state_.prepare_acks.insert(from.gid);
  return out;
}

Outputs GroupMember::on_prepare_timeout() {
  Outputs out;
  if (!state_.preparing) return out;
  state_.preparing = false;
  ViewG first;
  first.view_id = 1;
  first.add(state_.self);
  std::vector<GMember> recipients;
  for (const auto& m : state_.static_members) {
    if (m.gid != state_.self.gid && state_.prepare_acks.count(m.gid)) {
      first.add(m);
      recipients.push_back(m);
    }
  }
  install(first, state_.self.gid, out);
  if (!recipients.empty()) out.push_back(out::SendCommit{first, std::move(recipients)});
  return out;
}

Outputs GroupMember::on_recv_commit(const ViewG& view, Gid from) {
  Outputs out;
  if (state_.installed() || !view.contains(state_.self.gid)) {
    ignore(out, "commit not applicable");
    return out;
  }
  install(view, from, out);
  return out;
}

}  // namespace vcm::gm
