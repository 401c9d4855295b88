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
#include <string>
#include <vector>

#include "vcm/gm/types.hpp"
#include "vcm/partition/partition_view.hpp"
#include "vcm/sim/kernel.hpp"
#include "vcm/sim/scenario.hpp"

namespace vcm::cluster {

using partition::Nid;
using partition::Vid;
using sim::HostId;
using sim::Pid;

struct PartitionInfo {
  std::uint32_t index{0};  // 1-based
  std::optional<gm::Gid> gid;
  std::string gsd_name;
  Pid gsd{0};
  std::vector<Nid> nids;  // by node index
  /// Set when another daemon took over management of this partition.
  std::optional<Pid> adopted_by;
};

struct NodeInfo {
  Nid nid{0};
  std::uint32_t partition{0};
  std::uint32_t node_index{0};
  HostId host{0};
  Pid nd{0};
};

struct VmInfo {
  HostId host{0};
  Pid vmd{0};
};

/// Static cluster description shared by all simulated daemons: endpoint
/// names, the partition/node layout and gid registrations. Daemons use it
/// as their system database, never as a source of liveness information.
struct Directory {
  explicit Directory(const sim::Scenario& sc) : config(sc.config), topology(sc.topology) {}

  sim::ScenarioConfig config;
  sim::Topology topology;
  std::vector<PartitionInfo> partitions;  // index - 1
  std::map<Nid, NodeInfo> nodes;
  std::map<Vid, VmInfo> vms;
  std::map<std::uint32_t, std::uint32_t> partition_by_gid;
  std::vector<std::string> gsd_endpoints;
  std::vector<gm::GMember> static_members;
  Pid client{0};

  PartitionInfo& partition(std::uint32_t index) { return partitions.at(index - 1); }
  PartitionInfo* partition_of_gid(gm::Gid gid) {
    auto it = partition_by_gid.find(gid.value);
    return it == partition_by_gid.end() ? nullptr : &partition(it->second);
  }
  /// Daemon currently responsible for the partition with this gid.
  std::optional<Pid> manager_of(gm::Gid gid) {
    auto* p = partition_of_gid(gid);
    if (!p) return std::nullopt;
    return p->adopted_by.value_or(p->gsd);
  }
  const NodeInfo* node(Nid nid) const {
    auto it = nodes.find(nid);
    return it == nodes.end() ? nullptr : &it->second;
  }
  /// Node hosting `vid`, or nullopt if it decodes outside the cluster.
  std::optional<Nid> host_nid(Vid vid) const;
};

}  // namespace vcm::cluster
