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

// Every message exchanged between simulated daemons and clients.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vcm/gm/types.hpp"
#include "vcm/partition/partition_view.hpp"
#include "vcm/provision/provisioning.hpp"

namespace vcm::wire {

using partition::Nid;
using partition::Vid;
using partition::VmState;
using provision::TxnId;

// Group membership between group service daemons.
struct Prepare {
  gm::GMember from;
};
struct PrepareAck {
  gm::GMember from;
};
struct Commit {
  gm::ViewG view;
  gm::Gid from;
};
struct NewViewG {
  gm::ViewG view;
  gm::Gid leader;
};
struct Ack {
  gm::Gid sender;
  gm::ViewId view_id;
};
struct CrashReport {
  gm::ViewId view_id;
  gm::GMember sender;
  gm::GMember crasher;
};
struct Joining {
  std::string address;
};
struct Rejoining {
  gm::GMember member;
};
struct LeavingPropose {
  gm::ViewId view_id;
  gm::GMember leaving;
};
struct CurrentVersion {
  gm::ViewId view_id;
};
struct Probe {
  std::uint64_t nonce;
};
struct ProbeReply {
  std::uint64_t nonce;
};
struct RingHeartbeat {
  gm::Gid gid;
  gm::ViewId view_id;
};

// Partition hierarchy: group daemon <-> node daemon <-> VM daemon.
struct NdHeartbeat {
  Nid nid;
};
struct VmdHeartbeat {
  Vid vid;
};
struct VmRecord {
  Vid vid;
  VmState state;
  TxnId pending_txn{0};  // 0: committed or pre-provisioned
};
struct NdRegister {
  Nid nid;
  std::vector<VmRecord> vms;
};
struct StateQuery {};
struct NdLeave {
  Nid nid;
};
struct VmReport {
  Vid vid;
  VmState state;
};
enum class CommandKind { Create, Destroy, Op };
std::string_view to_string(CommandKind k);
struct VmCommand {
  CommandKind kind;
  Vid vid;
  TxnId txn{0};
  provision::VmOp op{provision::VmOp::Start};
};
struct VmCommandDone {
  CommandKind kind;
  Vid vid;
  TxnId txn{0};
  provision::VmOp op{provision::VmOp::Start};
  bool ok{true};
  VmState state{VmState::Running};
};
struct TxnCommit {
  TxnId txn;
};
struct Adopt {
  std::string manager;
};

// Cluster-wide view fan-out between group daemons.
struct ClusterQuery {
  std::uint64_t request;
  gm::ViewId stamp;
};
struct ClusterReply {
  std::uint64_t request;
  gm::ViewId stamp;
  gm::Gid from;
  std::vector<partition::PartitionSnapshot> parts;
};

// Client interface.
struct GetClusterState {
  std::uint64_t request;
};
struct ClusterStateResult {
  std::uint64_t request;
  partition::ClusterView view;
  std::uint64_t remote_messages;
  std::uint32_t retries;
  bool complete;
};
struct GetVmsState {
  std::uint64_t request;
  std::vector<Vid> vids;
};
struct VmsStateResult {
  std::uint64_t request;
  std::vector<std::pair<Vid, std::optional<VmState>>> states;
};
struct Subscribe {
  gm::Gid partition;
  std::string client;
  partition::Filter filter;
};
struct Inform {
  gm::Gid partition;
  std::vector<partition::Delta> deltas;
};
struct CreateVms {
  std::uint64_t request;
  gm::Gid partition;
  std::vector<std::optional<std::uint32_t>> placements;
};
struct DestroyVms {
  std::uint64_t request;
  std::vector<Vid> vids;
};
struct ManageVm {
  std::uint64_t request;
  Vid vid;
  provision::VmOp op;
};
struct ClientResult {
  std::uint64_t request;
  bool ok;
  std::string detail;
};

using Message =
    std::variant<Prepare, PrepareAck, Commit, NewViewG, Ack, CrashReport, Joining, Rejoining, LeavingPropose,
                 CurrentVersion, Probe, ProbeReply, RingHeartbeat, NdHeartbeat, VmdHeartbeat, NdRegister, StateQuery,
                 NdLeave, VmReport, VmCommand, VmCommandDone, TxnCommit, Adopt, ClusterQuery, ClusterReply,
                 GetClusterState, ClusterStateResult, GetVmsState, VmsStateResult, Subscribe, Inform, CreateVms,
                 DestroyVms, ManageVm, ClientResult>;

std::string_view type_name(const Message& m);
/// "type=<Name> key=value ..." with a stable field order.
std::string describe(const Message& m);
/// Periodic liveness traffic, excluded from quiescence accounting.
bool is_heartbeat(const Message& m);

std::string format_deltas(const std::vector<partition::Delta>& deltas);

}  // namespace vcm::wire
