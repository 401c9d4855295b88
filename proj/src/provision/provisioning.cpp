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

#include "vcm/provision/provisioning.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vcm::provision {

void PlacementConfig::validate() const {
  if (max_nodes_per_partition == 0 || max_vms_per_node == 0)
    throw std::invalid_argument("placement limits must be positive");
}

Vid encode_vid(const VmSlot& s, const PlacementConfig& cfg) {
  if (s.gid.value < 1) throw std::domain_error("encode_vid: gid must be >= 1");
  if (s.node_index >= cfg.max_nodes_per_partition) throw std::domain_error("encode_vid: node index out of range");
  if (s.slot >= cfg.max_vms_per_node) throw std::domain_error("encode_vid: slot out of range");
  std::uint64_t v = (static_cast<std::uint64_t>(s.gid.value - 1) * cfg.max_nodes_per_partition + s.node_index) *
                        cfg.max_vms_per_node +
                    s.slot + 1;
  if (v > UINT32_MAX) throw std::domain_error("encode_vid: vid overflows");
  return static_cast<Vid>(v);
}

VmSlot decode_vid(Vid vid, const PlacementConfig& cfg) {
  if (vid == 0) throw std::domain_error("decode_vid: vid must be >= 1");
  std::uint64_t rest = vid - 1;
  VmSlot s;
  s.slot = static_cast<std::uint32_t>(rest % cfg.max_vms_per_node);
  rest /= cfg.max_vms_per_node;
  s.node_index = static_cast<std::uint32_t>(rest % cfg.max_nodes_per_partition);
  rest /= cfg.max_nodes_per_partition;
  s.gid = gm::Gid{static_cast<std::uint32_t>(rest + 1)};
  return s;
}

std::string_view to_string(VmLifecycleState s) {
  switch (s) {
    case VmLifecycleState::Halted:
      return "halted";
    case VmLifecycleState::Running:
      return "running";
    case VmLifecycleState::Suspended:
      return "suspended";
    case VmLifecycleState::Crashed:
      return "crashed";
    case VmLifecycleState::Destroyed:
      return "destroyed";
  }
  return "?";
}

std::string_view to_string(VmOp op) {
  switch (op) {
    case VmOp::Start:
      return "start";
    case VmOp::Shutdown:
      return "shutdown";
    case VmOp::Reboot:
      return "reboot";
    case VmOp::Resize:
      return "resize";
    case VmOp::Suspend:
      return "suspend";
    case VmOp::Resume:
      return "resume";
  }
  return "?";
}

std::optional<VmOp> parse_vm_op(std::string_view text) {
  for (VmOp op : {VmOp::Start, VmOp::Shutdown, VmOp::Reboot, VmOp::Resize, VmOp::Suspend, VmOp::Resume})
    if (to_string(op) == text) return op;
  // The management interface calls suspend "hung".
  if (text == "hung") return VmOp::Suspend;
  return std::nullopt;
}

std::optional<VmLifecycleState> parse_lifecycle_state(std::string_view text) {
  for (auto s : {VmLifecycleState::Halted, VmLifecycleState::Running, VmLifecycleState::Suspended,
                 VmLifecycleState::Crashed, VmLifecycleState::Destroyed})
    if (to_string(s) == text) return s;
  return std::nullopt;
}

std::optional<VmLifecycleState> transition(VmLifecycleState from, VmOp op) {
  using S = VmLifecycleState;
  switch (op) {
    case VmOp::Start:
      if (from == S::Halted) return S::Running;
      break;
    case VmOp::Shutdown:
      if (from == S::Running) return S::Halted;
      break;
    case VmOp::Reboot:
    case VmOp::Resize:
      if (from == S::Running) return S::Running;
      break;
    case VmOp::Suspend:
      if (from == S::Running) return S::Suspended;
      break;
    case VmOp::Resume:
      if (from == S::Suspended) return S::Running;
      break;
  }
  return std::nullopt;
}

std::string_view to_string(TxnKind k) { return k == TxnKind::Create ? "create" : "destroy"; }

std::string_view to_string(TxnPhase p) {
  switch (p) {
    case TxnPhase::Begun:
      return "begun";
    case TxnPhase::Applied:
      return "applied";
    case TxnPhase::Committed:
      return "committed";
    case TxnPhase::Aborted:
      return "aborted";
  }
  return "?";
}

void IntentLog::append(IntentLogRecord r) { records_.push_back(std::move(r)); }

std::vector<IntentLogRecord> IntentLog::unfinished() const {
  std::map<TxnId, const IntentLogRecord*> begun;
  for (const auto& r : records_) {
    if (r.phase == TxnPhase::Begun) begun[r.txn] = &r;
    if (r.phase == TxnPhase::Committed || r.phase == TxnPhase::Aborted) begun.erase(r.txn);
  }
  std::vector<IntentLogRecord> out;
  for (const auto& [id, r] : begun) out.push_back(*r);
  return out;
}

TxnId IntentLog::next_txn_id() const {
  TxnId hi = 0;
  for (const auto& r : records_) hi = std::max(hi, r.txn);
  return hi + 1;
}

std::string IntentLog::serialize() const {
  std::string out;
  for (const auto& r : records_) {
    out += std::to_string(r.txn);
    out += ' ';
    out += to_string(r.op);
    out += ' ';
    out += to_string(r.phase);
    out += ' ';
    if (r.vids.empty()) out += '-';
    for (std::size_t i = 0; i < r.vids.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(r.vids[i]);
    }
    out += '\n';
  }
  return out;
}

IntentLog IntentLog::parse(std::string_view blob) {
  IntentLog log;
  std::istringstream in{std::string(blob)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string txn, op, phase, vids;
    if (!(ls >> txn >> op >> phase >> vids)) throw std::invalid_argument("intent log: malformed line: " + line);
    IntentLogRecord r;
    r.txn = std::stoull(txn);
    if (op == "create")
      r.op = TxnKind::Create;
    else if (op == "destroy")
      r.op = TxnKind::Destroy;
    else
      throw std::invalid_argument("intent log: unknown op: " + op);
    bool found = false;
    for (auto p : {TxnPhase::Begun, TxnPhase::Applied, TxnPhase::Committed, TxnPhase::Aborted}) {
      if (to_string(p) == phase) {
        r.phase = p;
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("intent log: unknown phase: " + phase);
    if (vids != "-") {
      std::istringstream vs(vids);
      std::string item;
      while (std::getline(vs, item, ',')) r.vids.push_back(static_cast<Vid>(std::stoul(item)));
    }
    log.append(std::move(r));
  }
  return log;
}

PlacementResult place(gm::Gid gid, std::vector<NodeCapacity> nodes,
                      const std::vector<std::optional<std::uint32_t>>& requests, const PlacementConfig& cfg) {
  PlacementResult result;
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeCapacity& a, const NodeCapacity& b) { return a.node_index < b.node_index; });

  auto take_slot = [&](NodeCapacity& n) -> std::optional<std::uint32_t> {
    if (!n.running) return std::nullopt;
    for (std::uint32_t s = 0; s < cfg.max_vms_per_node; ++s) {
      if (!n.used_slots.count(s)) {
        n.used_slots.insert(s);
        return s;
      }
    }
    return std::nullopt;
  };

  // Pinned requests first so auto-placed VMs cannot steal their slots.
  std::vector<std::optional<VmSlot>> chosen(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!requests[i]) continue;
    auto it = std::find_if(nodes.begin(), nodes.end(),
                           [&](const NodeCapacity& n) { return n.node_index == *requests[i]; });
    if (it == nodes.end()) {
      result.error = "no node with index " + std::to_string(*requests[i]);
      return result;
    }
    auto s = take_slot(*it);
    if (!s) {
      result.error = "node index " + std::to_string(*requests[i]) + " has no free slot";
      return result;
    }
    chosen[i] = VmSlot{gid, it->node_index, *s};
  }
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (requests[i]) continue;
    for (auto& n : nodes) {
      if (auto s = take_slot(n)) {
        chosen[i] = VmSlot{gid, n.node_index, *s};
        break;
      }
    }
    if (!chosen[i]) {
      result.error = "insufficient free slots";
      return result;
    }
  }
  for (auto& c : chosen) {
    encode_vid(*c, cfg);  // range check
    result.slots.push_back(*c);
  }
  return result;
}

}  // namespace vcm::provision
