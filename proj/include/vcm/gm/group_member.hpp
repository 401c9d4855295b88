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

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "vcm/gm/types.hpp"

namespace vcm::gm {

// ---------------------------------------------------------------------------
// Inputs. The embedding actor translates network messages, timers and
// failure-detector suspicions into these.
// ---------------------------------------------------------------------------
namespace in {
struct SucceedingFailure {
  Gid suspect;
};
struct RecvAck {
  Gid sender;
  ViewId view_id;
};
struct RecvCrashReport {
  ViewId view_id;
  GMember sender;
  GMember crasher;
};
struct RecvNewViewG {
  ViewG view;
  Gid from;
};
struct RecvRejoining {
  GMember member;
};
struct RecvJoining {
  std::string address;
};
struct RecvLeavingPropose {
  ViewId view_id;
  GMember leaving;
};
struct RecvCurrentVersion {
  ViewId view_id;
};
struct AckTimeout {
  ViewId round;
};
struct ProbeResult {
  Gid member;
  bool alive;
};
struct SelfLeave {};
/// The embedding process lost contact for too long (e.g. it was paused);
/// it stops acting on its view and asks to be readmitted.
struct Stale {};
/// Restart after halt; also used by a fresh process that lost its state.
struct Rejoin {};
/// A brand new process asking to be admitted.
struct Join {};
struct RecvPrepare {
  GMember from;
};
struct RecvPrepareAck {
  GMember from;
};
struct PrepareTimeout {};
struct RecvCommit {
  ViewG view;
  Gid from;
};
}  // namespace in

using GmEvent = std::variant<in::SucceedingFailure, in::RecvAck, in::RecvCrashReport, in::RecvNewViewG,
                             in::RecvRejoining, in::RecvJoining, in::RecvLeavingPropose, in::RecvCurrentVersion,
                             in::AckTimeout, in::ProbeResult, in::SelfLeave, in::Stale, in::Rejoin, in::Join, in::RecvPrepare,
                             in::RecvPrepareAck, in::PrepareTimeout, in::RecvCommit>;

// ---------------------------------------------------------------------------
// Outputs.
// ---------------------------------------------------------------------------
enum class ChangeCause { Join, Rejoin, Leave, Crash, Report, Compensate };
std::string_view to_string(ChangeCause c);

namespace out {
struct SendNewViewG {
  ViewG view;
  std::vector<GMember> recipients;
};
struct SendAck {
  GMember to;
  ViewId view_id;
};
struct SendCrashReport {
  GMember to;
  ViewId view_id;
  GMember sender;
  GMember crasher;
};
struct SendCurrentVersion {
  GMember to;
  ViewId view_id;
};
/// Sent to every known group endpoint; only the Leader acts on it.
struct SendRejoining {
  GMember self;
};
struct SendJoining {
  std::string address;
};
struct SendLeavingPropose {
  GMember to;
  ViewId view_id;
  GMember self;
};
struct SendPrepare {
  std::vector<GMember> recipients;
};
struct SendPrepareAck {
  GMember to;
};
struct SendCommit {
  ViewG view;
  std::vector<GMember> recipients;
};
struct StartAckTimer {
  ViewId round;
};
struct StartPrepareTimer {};
struct ProbeRequest {
  GMember member;
};
struct Installed {
  ViewG view;
  Role rank;
};
struct ViewChange {
  ChangeCause cause;
  std::vector<Gid> subjects;
  ViewId from;
  ViewId to;
};
struct Halt {
  bool rejoin;
};
struct Ignored {
  std::string reason;
};
}  // namespace out

using GmOutput = std::variant<out::SendNewViewG, out::SendAck, out::SendCrashReport, out::SendCurrentVersion,
                              out::SendRejoining, out::SendJoining, out::SendLeavingPropose, out::SendPrepare,
                              out::SendPrepareAck, out::SendCommit, out::StartAckTimer, out::StartPrepareTimer,
                              out::ProbeRequest, out::Installed, out::ViewChange, out::Halt, out::Ignored>;

using Outputs = std::vector<GmOutput>;

/// Full membership state of one group service daemon. Plain value type:
/// copying it and replaying the same event yields identical results.
struct GmState {
  GMember self;
  Role rank{Role::Member};
  ViewG view;
  std::optional<Gid> leader;

  /// ACK bookkeeping for the most recent NewViewG this process broadcast.
  /// Keys are the broadcast recipients (current members plus any member
  /// that is leaving in that round).
  std::map<Gid, bool> ack_pending;
  ViewId ack_round{0};

  /// Crash reports awaiting the failure-detector probe.
  std::set<Gid> probing;
  /// Rejoin requests from a gid still present in the view whose removal
  /// is in progress (probe outstanding or ACK missing).
  std::map<Gid, GMember> deferred_rejoins;

  /// Largest gid seen in any installed view; joins are numbered above it.
  Gid gid_high_water{0};

  bool halted{false};
  bool rejoining{false};
  bool joining{false};
  bool leaving{false};

  // Bootstrap (two-phase commit driven by the initial Leader).
  std::vector<GMember> static_members;
  std::set<Gid> prepare_acks;
  bool preparing{false};

  bool installed() const { return view.view_id > 0; }
  bool active() const { return installed() && !halted; }
  bool acting_leader() const { return active() && rank == Role::Leader && !leaving; }

  friend bool operator==(const GmState&, const GmState&) = default;
};

/// Deterministic group-membership handler for one daemon. All operations
/// mutate the held state and return the outputs the embedding actor must
/// perform, in order.
class GroupMember {
 public:
  explicit GroupMember(GmState state) : state_(std::move(state)) {}

  /// Initial state for a statically configured member. The member with the
  /// smallest gid leads the two-phase bootstrap.
  static std::pair<GroupMember, Outputs> bootstrap(const std::vector<GMember>& static_members,
                                                   const GMember& self);
  /// State for a process with no membership knowledge (new joiner or a
  /// restarted daemon that is about to rejoin).
  static GroupMember blank(const GMember& self);

  const GmState& state() const { return state_; }

  Outputs handle(const GmEvent& event);

  Outputs on_succeeding_failure(Gid suspect);
  Outputs on_recv_ack(Gid sender, ViewId view_id);
  Outputs on_ack_timeout(ViewId round);
  Outputs on_recv_crash_report(ViewId view_id, const GMember& sender, const GMember& crasher);
  Outputs on_probe_result(Gid member, bool alive);
  Outputs on_recv_new_view(const ViewG& view, Gid from);
  Outputs on_recv_joining(const std::string& address);
  Outputs on_recv_rejoining(const GMember& member);
  Outputs on_recv_leaving_propose(ViewId view_id, const GMember& leaving);
  Outputs on_recv_current_version(ViewId view_id);
  Outputs self_leave();
  Outputs stale();
  Outputs rejoin();
  Outputs join();
  Outputs on_recv_prepare(const GMember& from);
  Outputs on_recv_prepare_ack(const GMember& from);
  Outputs on_prepare_timeout();
  Outputs on_recv_commit(const ViewG& view, Gid from);

 private:
  // Installs `next` as the Leader's own view and broadcasts it.
  void publish(ViewG next, ChangeCause cause, std::vector<Gid> subjects, const std::vector<GMember>& departing,
               Outputs& out);
  void install(const ViewG& view, Gid leader, Outputs& out);
  Role rank_for(const ViewG& view, Gid leader) const;
  void drop_leader_state();
  void release_deferred(Gid gid, Outputs& out);
  bool removal_in_progress(Gid gid) const;
  GMember leader_member() const;

  GmState state_;
};

}  // namespace vcm::gm
