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

#include "vcm/partition/partition_view.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace vcm::partition {

std::string_view to_string(NodeState s) { return s == NodeState::Running ? "running" : "crashed"; }

std::string_view to_string(VmState s) {
  switch (s) {
    case VmState::Running:
      return "running";
    case VmState::Crashed:
      return "crashed";
    case VmState::Suspended:
      return "suspended";
    case VmState::Halted:
      return "halted";
  }
  return "?";
}

std::optional<NodeState> parse_node_state(std::string_view s) {
  if (s == "running" || s == "R") return NodeState::Running;
  if (s == "crashed" || s == "C") return NodeState::Crashed;
  return std::nullopt;
}

std::optional<VmState> parse_vm_state(std::string_view s) {
  if (s == "running" || s == "R") return VmState::Running;
  if (s == "crashed" || s == "C") return VmState::Crashed;
  if (s == "suspended" || s == "S") return VmState::Suspended;
  if (s == "halted" || s == "H") return VmState::Halted;
  return std::nullopt;
}

char code(NodeState s) { return s == NodeState::Running ? 'R' : 'C'; }

char code(VmState s) {
  switch (s) {
    case VmState::Running:
      return 'R';
    case VmState::Crashed:
      return 'C';
    case VmState::Suspended:
      return 'S';
    case VmState::Halted:
      return 'H';
  }
  return '?';
}

namespace {

template <class Map>
std::string format_map(const Map& m) {
  if (m.empty()) return "-";
  std::string out;
  for (const auto& [id, st] : m) {
    if (!out.empty()) out += '|';
    out += std::to_string(id);
    out += ':';
    out += code(st);
  }
  return out;
}

template <class Map, class Parse>
Map parse_map(std::string_view text, Parse parse) {
  Map m;
  if (text == "-" || text.empty()) return m;
  std::size_t pos = 0;
  while (true) {
    auto bar = text.find('|', pos);
    auto item = text.substr(pos, bar == std::string_view::npos ? std::string_view::npos : bar - pos);
    auto colon = item.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("bad view entry: " + std::string(item));
    auto st = parse(item.substr(colon + 1));
    if (!st) throw std::invalid_argument("bad state in view entry: " + std::string(item));
    m[static_cast<std::uint32_t>(std::stoul(std::string(item.substr(0, colon))))] = *st;
    if (bar == std::string_view::npos) break;
    pos = bar + 1;
  }
  return m;
}

}  // namespace

std::string format_snapshot(const PartitionSnapshot& s) {
  return "part=" + std::to_string(s.partition.value) + " by=" + std::to_string(s.managed_by.value) +
         " nodes=" + format_map(s.nodes) + " vms=" + format_map(s.vms);
}

PartitionSnapshot parse_snapshot(std::string_view text) {
  PartitionSnapshot s;
  std::istringstream in{std::string(text)};
  std::string tok;
  int seen = 0;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    auto key = tok.substr(0, eq);
    auto val = tok.substr(eq + 1);
    if (key == "part") {
      s.partition = gm::Gid{static_cast<std::uint32_t>(std::stoul(val))};
      ++seen;
    } else if (key == "by") {
      s.managed_by = gm::Gid{static_cast<std::uint32_t>(std::stoul(val))};
      ++seen;
    } else if (key == "nodes") {
      s.nodes = parse_map<ViewN>(val, parse_node_state);
      ++seen;
    } else if (key == "vms") {
      s.vms = parse_map<ViewV>(val, parse_vm_state);
      ++seen;
    }
  }
  if (seen != 4) throw std::invalid_argument("incomplete partition snapshot: " + std::string(text));
  return s;
}

PartitionView::PartitionView(gm::Gid partition, std::vector<Nid> node_by_index, provision::PlacementConfig cfg)
    : partition_(partition), node_by_index_(std::move(node_by_index)), cfg_(cfg) {}

std::optional<Nid> PartitionView::host_of(Vid vid) const {
  auto slot = provision::decode_vid(vid, cfg_);
  if (slot.gid != partition_ || slot.node_index >= node_by_index_.size()) return std::nullopt;
  return node_by_index_[slot.node_index];
}

std::optional<std::uint32_t> PartitionView::index_of(Nid nid) const {
  for (std::uint32_t i = 0; i < node_by_index_.size(); ++i)
    if (node_by_index_[i] == nid) return i;
  return std::nullopt;
}

std::vector<Vid> PartitionView::vms_on(Nid nid) const {
  std::vector<Vid> out;
  for (const auto& [vid, st] : vms_)
    if (host_of(vid) == nid) out.push_back(vid);
  return out;
}

Notification PartitionView::on_nd_timeout(Nid nid) {
  Notification n;
  auto it = nodes_.find(nid);
  if (it == nodes_.end() || it->second == NodeState::Crashed) return n;
  it->second = NodeState::Crashed;
  n.deltas.push_back(NodeDelta{nid, NodeState::Crashed});
  for (Vid vid : vms_on(nid)) {
    auto& st = vms_[vid];
    if (st != VmState::Crashed) {
      st = VmState::Crashed;
      n.deltas.push_back(VmDelta{vid, VmState::Crashed});
    }
  }
  return n;
}

Notification PartitionView::on_node_leave(Nid nid) {
  Notification n;
  if (!nodes_.count(nid)) return n;
  for (Vid vid : vms_on(nid)) {
    vms_.erase(vid);
    n.deltas.push_back(VmDelta{vid, std::nullopt});
  }
  nodes_.erase(nid);
  n.deltas.push_back(NodeDelta{nid, std::nullopt});
  return n;
}

Notification PartitionView::on_node_register(Nid nid, const std::vector<std::pair<Vid, VmState>>& hosted) {
  Notification n;
  if (!index_of(nid)) return n;
  auto it = nodes_.find(nid);
  if (it == nodes_.end() || it->second != NodeState::Running) {
    nodes_[nid] = NodeState::Running;
    n.deltas.push_back(NodeDelta{nid, NodeState::Running});
  }
  std::set<Vid> reported;
  for (const auto& [vid, st] : hosted) {
    if (host_of(vid) != nid) continue;
    reported.insert(vid);
    auto v = vms_.find(vid);
    if (v == vms_.end() || v->second != st) {
      vms_[vid] = st;
      n.deltas.push_back(VmDelta{vid, st});
    }
  }
  for (Vid vid : vms_on(nid)) {
    if (!reported.count(vid)) {
      vms_.erase(vid);
      n.deltas.push_back(VmDelta{vid, std::nullopt});
    }
  }
  return n;
}

Notification PartitionView::on_vm_report(Vid vid, VmState state) {
  Notification n;
  auto it = vms_.find(vid);
  if (it == vms_.end() || it->second == state) return n;
  it->second = state;
  n.deltas.push_back(VmDelta{vid, state});
  return n;
}

Notification PartitionView::add_vm(Vid vid, VmState state) {
  Notification n;
  auto host = host_of(vid);
  if (!host || !nodes_.count(*host)) return n;
  auto it = vms_.find(vid);
  if (it != vms_.end() && it->second == state) return n;
  vms_[vid] = state;
  n.deltas.push_back(VmDelta{vid, state});
  return n;
}

Notification PartitionView::remove_vm(Vid vid) {
  Notification n;
  if (vms_.erase(vid)) n.deltas.push_back(VmDelta{vid, std::nullopt});
  return n;
}

Notification PartitionView::on_node_unreachable(Nid nid) {
  Notification n;
  if (!index_of(nid)) return n;
  auto it = nodes_.find(nid);
  if (it != nodes_.end() && it->second == NodeState::Crashed) return n;
  nodes_[nid] = NodeState::Crashed;
  n.deltas.push_back(NodeDelta{nid, NodeState::Crashed});
  for (Vid vid : vms_on(nid)) {
    if (vms_[vid] != VmState::Crashed) {
      vms_[vid] = VmState::Crashed;
      n.deltas.push_back(VmDelta{vid, VmState::Crashed});
    }
  }
  return n;
}

bool PartitionView::cascade_holds() const {
  for (const auto& [vid, st] : vms_) {
    if (st != VmState::Running) continue;
    auto host = host_of(vid);
    if (!host) return false;
    auto it = nodes_.find(*host);
    if (it == nodes_.end() || it->second != NodeState::Running) return false;
  }
  return true;
}

bool PartitionView::references_hold() const {
  for (const auto& [vid, st] : vms_) {
    auto host = host_of(vid);
    if (!host || !nodes_.count(*host)) return false;
  }
  return true;
}

PartitionSnapshot PartitionView::snapshot(gm::Gid managed_by) const {
  return PartitionSnapshot{partition_, managed_by, nodes_, vms_};
}

// --- subscriptions -------------------------------------------------------------

std::optional<Filter> parse_filter(std::string_view s) {
  if (s == "nodes") return Filter::Nodes;
  if (s == "vms") return Filter::Vms;
  if (s == "both" || s == "all") return Filter::Both;
  return std::nullopt;
}

std::string_view to_string(Filter f) {
  switch (f) {
    case Filter::Nodes:
      return "nodes";
    case Filter::Vms:
      return "vms";
    case Filter::Both:
      return "both";
  }
  return "?";
}

void SubscriptionTable::subscribe(Subscription s) {
  auto key = s.client;
  subs_[key] = std::move(s);
}

bool SubscriptionTable::unsubscribe(const std::string& client) { return subs_.erase(client) != 0; }

std::vector<std::pair<std::string, Notification>> SubscriptionTable::route(const Notification& n) const {
  std::vector<std::pair<std::string, Notification>> out;
  for (const auto& [client, sub] : subs_) {
    Notification mine;
    for (const auto& d : n.deltas) {
      bool is_node = std::holds_alternative<NodeDelta>(d);
      if (sub.filter == Filter::Both || (is_node && sub.filter == Filter::Nodes) ||
          (!is_node && sub.filter == Filter::Vms))
        mine.deltas.push_back(d);
    }
    if (!mine.empty()) out.emplace_back(sub.endpoint, std::move(mine));
  }
  return out;
}

// --- cluster view --------------------------------------------------------------

ClusterView ClusterView::merge(gm::ViewId stamp, std::vector<PartitionSnapshot> parts) {
  ClusterView cv;
  cv.stamp = stamp;
  std::sort(parts.begin(), parts.end(),
            [](const PartitionSnapshot& a, const PartitionSnapshot& b) { return a.partition < b.partition; });
  for (auto& p : parts) {
    if (!cv.partitions.empty() && cv.partitions.back().partition == p.partition) continue;
    cv.partitions.push_back(std::move(p));
  }
  return cv;
}

std::string ClusterView::canonical() const {
  std::string out = "stamp=" + std::to_string(stamp);
  for (const auto& p : partitions) {
    out += ';';
    out += format_snapshot(p);
  }
  return out;
}

std::uint64_t ClusterView::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<gm::GMember> ClusterFetch::begin_round(const gm::ViewG& view, gm::Gid self,
                                                   std::vector<PartitionSnapshot> local) {
  ++rounds_;
  stamp_ = view.view_id;
  local_ = std::move(local);
  awaiting_.clear();
  replies_.clear();
  std::vector<gm::GMember> targets;
  for (const auto& m : view.members) {
    if (m.gid == self) continue;
    awaiting_.insert(m.gid);
    targets.push_back(m);
  }
  remote_messages_ += targets.size();
  return targets;
}

bool ClusterFetch::on_reply(gm::ViewId stamp, gm::Gid from, std::vector<PartitionSnapshot> parts) {
  ++remote_messages_;
  if (stamp != stamp_ || !awaiting_.erase(from)) return complete();
  replies_[from] = std::move(parts);
  return complete();
}

bool ClusterFetch::complete() const { return rounds_ > 0 && awaiting_.empty(); }

std::vector<gm::Gid> ClusterFetch::missing() const { return {awaiting_.begin(), awaiting_.end()}; }

ClusterView ClusterFetch::result() const {
  std::vector<PartitionSnapshot> all = local_;
  for (const auto& [gid, parts] : replies_) all.insert(all.end(), parts.begin(), parts.end());
  return ClusterView::merge(stamp_, std::move(all));
}

}  // namespace vcm::partition
