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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vcm/gm/types.hpp"
#include "vcm/provision/provisioning.hpp"

namespace vcm::partition {

using provision::Nid;
using provision::Vid;

enum class NodeState { Running, Crashed };
/// Halted is reachable through shutdown; the rest mirror the VM view.
enum class VmState { Running, Crashed, Suspended, Halted };

std::string_view to_string(NodeState s);
std::string_view to_string(VmState s);
std::optional<NodeState> parse_node_state(std::string_view s);
std::optional<VmState> parse_vm_state(std::string_view s);
/// One-letter codes used in compact snapshots: R/C for nodes, R/C/S/H for VMs.
char code(NodeState s);
char code(VmState s);

using ViewN = std::map<Nid, NodeState>;
using ViewV = std::map<Vid, VmState>;

struct NodeDelta {
  Nid nid;
  std::optional<NodeState> state;  // nullopt: removed
  friend bool operator==(const NodeDelta&, const NodeDelta&) = default;
};
struct VmDelta {
  Vid vid;
  std::optional<VmState> state;  // nullopt: removed
  friend bool operator==(const VmDelta&, const VmDelta&) = default;
};
using Delta = std::variant<NodeDelta, VmDelta>;

/// All view deltas caused by one input event.
struct Notification {
  std::vector<Delta> deltas;
  bool empty() const { return deltas.empty(); }
};

struct PartitionSnapshot {
  gm::Gid partition;
  gm::Gid managed_by;
  ViewN nodes;
  ViewV vms;
  friend bool operator==(const PartitionSnapshot&, const PartitionSnapshot&) = default;
};

std::string format_snapshot(const PartitionSnapshot& s);
PartitionSnapshot parse_snapshot(std::string_view text);

/// ViewN and ViewV of one partition with the node-crash cascade applied.
class PartitionView {
 public:
  PartitionView(gm::Gid partition, std::vector<Nid> node_by_index, provision::PlacementConfig cfg);

  gm::Gid partition() const { return partition_; }
  const ViewN& nodes() const { return nodes_; }
  const ViewV& vms() const { return vms_; }
  const std::vector<Nid>& node_by_index() const { return node_by_index_; }
  const provision::PlacementConfig& placement() const { return cfg_; }

  bool has_node(Nid nid) const { return nodes_.count(nid) != 0; }
  bool has_vm(Vid vid) const { return vms_.count(vid) != 0; }
  std::optional<Nid> host_of(Vid vid) const;
  std::optional<std::uint32_t> index_of(Nid nid) const;
  std::vector<Vid> vms_on(Nid nid) const;

  /// Node stopped heartbeating: node and every VM on it become Crashed.
  /// Idempotent; unknown nids yield an empty notification.
  Notification on_nd_timeout(Nid nid);
  /// Graceful departure: node and its VMs disappear from the views.
  Notification on_node_leave(Nid nid);
  /// A node daemon (re)registered with the VMs it actually hosts. The node
  /// becomes Running and its VM entries are replaced by the report.
  Notification on_node_register(Nid nid, const std::vector<std::pair<Vid, VmState>>& hosted);
  /// Unknown vids and unchanged states yield an empty notification.
  Notification on_vm_report(Vid vid, VmState state);
  Notification add_vm(Vid vid, VmState state);
  Notification remove_vm(Vid vid);
  /// Marks a node as Crashed without cascading (used for nodes that never
  /// answered a state query).
  Notification on_node_unreachable(Nid nid);

  /// Running VM implies Running host.
  bool cascade_holds() const;
  /// Every vid decodes to a node of this partition that is in ViewN.
  bool references_hold() const;

  PartitionSnapshot snapshot(gm::Gid managed_by) const;

 private:
  gm::Gid partition_;
  std::vector<Nid> node_by_index_;
  provision::PlacementConfig cfg_;
  ViewN nodes_;
  ViewV vms_;
};

// --- subscriptions -------------------------------------------------------------

enum class Filter { Nodes, Vms, Both };
std::optional<Filter> parse_filter(std::string_view s);
std::string_view to_string(Filter f);

struct Subscription {
  std::string client;
  Filter filter{Filter::Both};
  std::string endpoint;
};

class SubscriptionTable {
 public:
  /// Re-subscribing with the same client id replaces the filter.
  void subscribe(Subscription s);
  bool unsubscribe(const std::string& client);
  std::size_t size() const { return subs_.size(); }

  /// One delivery per subscriber with at least one matching delta; deltas
  /// keep their order.
  std::vector<std::pair<std::string, Notification>> route(const Notification& n) const;

 private:
  std::map<std::string, Subscription> subs_;
};

// --- cluster view --------------------------------------------------------------

struct ClusterView {
  gm::ViewId stamp{0};
  std::vector<PartitionSnapshot> partitions;  // sorted by partition gid

  static ClusterView merge(gm::ViewId stamp, std::vector<PartitionSnapshot> parts);
  std::string canonical() const;
  /// FNV-1a over canonical().
  std::uint64_t digest() const;
};

/// Entry-side bookkeeping for one get_cluster_state request.
class ClusterFetch {
 public:
  ClusterFetch(std::uint64_t request, std::uint32_t max_retries) : request_(request), max_retries_(max_retries) {}

  /// Starts a fan-out round against `view`; returns the members to query.
  /// Calling again starts a retry round.
  std::vector<gm::GMember> begin_round(const gm::ViewG& view, gm::Gid self, std::vector<PartitionSnapshot> local);
  /// Returns true once every queried member of the current round answered.
  bool on_reply(gm::ViewId stamp, gm::Gid from, std::vector<PartitionSnapshot> parts);
  bool can_retry() const { return rounds_ <= max_retries_; }
  bool complete() const;
  std::vector<gm::Gid> missing() const;
  ClusterView result() const;

  std::uint64_t request() const { return request_; }
  gm::ViewId stamp() const { return stamp_; }
  std::uint32_t retries_used() const { return rounds_ == 0 ? 0 : rounds_ - 1; }
  /// Queries sent plus replies received across all rounds.
  std::uint64_t remote_messages() const { return remote_messages_; }

 private:
  std::uint64_t request_;
  std::uint32_t max_retries_;
  std::uint32_t rounds_{0};
  gm::ViewId stamp_{0};
  std::vector<PartitionSnapshot> local_;
  std::set<gm::Gid> awaiting_;
  std::map<gm::Gid, std::vector<PartitionSnapshot>> replies_;
  std::uint64_t remote_messages_{0};
};

}  // namespace vcm::partition
