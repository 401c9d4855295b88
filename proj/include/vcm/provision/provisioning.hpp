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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vcm/gm/types.hpp"

namespace vcm::provision {

using Vid = std::uint32_t;
using Nid = std::uint32_t;
using TxnId = std::uint64_t;

struct PlacementConfig {
  std::uint32_t max_nodes_per_partition{256};
  std::uint32_t max_vms_per_node{16};

  void validate() const;
};

/// Position of a VM in the cluster: partition (gid), node index inside the
/// partition, and slot on that node.
struct VmSlot {
  gm::Gid gid;
  std::uint32_t node_index{0};
  std::uint32_t slot{0};

  friend bool operator==(const VmSlot&, const VmSlot&) = default;
};

/// vid = ((gid-1) * max_nodes + node_index) * max_vms + slot + 1.
/// Throws std::domain_error for out-of-range components.
Vid encode_vid(const VmSlot& s, const PlacementConfig& cfg);
/// Exact inverse of encode_vid. Throws std::domain_error for vid 0.
VmSlot decode_vid(Vid vid, const PlacementConfig& cfg);

enum class VmLifecycleState { Halted, Running, Suspended, Crashed, Destroyed };
enum class VmOp { Start, Shutdown, Reboot, Resize, Suspend, Resume };

std::string_view to_string(VmLifecycleState s);
std::string_view to_string(VmOp op);
std::optional<VmOp> parse_vm_op(std::string_view text);
std::optional<VmLifecycleState> parse_lifecycle_state(std::string_view text);

/// Target state of `op` applied in `from`, or nullopt if the edge does not
/// exist.
std::optional<VmLifecycleState> transition(VmLifecycleState from, VmOp op);

// --- intent log --------------------------------------------------------------

enum class TxnKind { Create, Destroy };
enum class TxnPhase { Begun, Applied, Committed, Aborted };

std::string_view to_string(TxnKind k);
std::string_view to_string(TxnPhase p);

struct IntentLogRecord {
  TxnId txn{0};
  TxnKind op{TxnKind::Create};
  std::vector<Vid> vids;
  TxnPhase phase{TxnPhase::Begun};

  friend bool operator==(const IntentLogRecord&, const IntentLogRecord&) = default;
};

/// Append-only transaction log. Serializes to a line-oriented text blob so
/// it can live in a process's durable cell.
class IntentLog {
 public:
  void append(IntentLogRecord r);
  const std::vector<IntentLogRecord>& records() const { return records_; }
  /// Begun records with no later Committed/Aborted record for the same txn.
  std::vector<IntentLogRecord> unfinished() const;
  TxnId next_txn_id() const;

  std::string serialize() const;
  /// Throws std::invalid_argument on a malformed blob.
  static IntentLog parse(std::string_view blob);

 private:
  std::vector<IntentLogRecord> records_;
};

// --- placement ---------------------------------------------------------------

struct NodeCapacity {
  std::uint32_t node_index{0};
  bool running{false};
  std::set<std::uint32_t> used_slots;
};

struct PlacementResult {
  std::vector<VmSlot> slots;
  std::string error;

  explicit operator bool() const { return error.empty(); }
};

/// Chooses a slot for each request. A request naming a node index must land
/// there; an unnamed one goes to the lowest-index Running node with a free
/// slot. Slots are taken lowest-first. The whole batch fails if any VM does
/// not fit.
PlacementResult place(gm::Gid gid, std::vector<NodeCapacity> nodes,
                      const std::vector<std::optional<std::uint32_t>>& requests, const PlacementConfig& cfg);

}  // namespace vcm::provision
