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

#include "vcm/cluster/runner.hpp"

#include "vcm/cluster/daemons.hpp"
#include "vcm/cluster/format.hpp"

namespace vcm::cluster {

namespace {

using sim::Injection;
using sim::Kernel;
using sim::TargetKind;
using sim::Verb;

class Cluster {
 public:
  explicit Cluster(const sim::Scenario& sc, std::uint64_t seed) : sc_(sc), dir_(sc), k_(kernel_config(sc, seed)) {}

  RunOutput run();

 private:
  static sim::KernelConfig kernel_config(const sim::Scenario& sc, std::uint64_t seed) {
    sim::KernelConfig c;
    c.latency_min = sc.config.latency_min;
    c.latency_max = sc.config.latency_max;
    c.seed = seed;
    c.quiet_window = sc.config.effective_quiet_window();
    c.horizon = sc.config.effective_horizon();
    c.trace_heartbeats = sc.config.trace_heartbeats;
    return c;
  }

  void record_config(std::uint64_t seed);
  std::uint32_t add_partition(std::uint32_t nodes, bool founding);
  void spawn_partition(std::uint32_t index, bool founding);
  void schedule(const Injection& inj);
  void inject(const Injection& inj);
  void fail(const Injection& inj, const std::string& why);
  std::optional<Pid> process_of(const sim::Target& t);
  std::optional<HostId> host_of(const sim::Target& t);
  std::optional<Pid> manager_of_vid(Vid vid);
  void client_send(wire::Message msg, std::optional<Pid> to, const Injection& inj);

  const sim::Scenario& sc_;
  Directory dir_;
  Kernel k_;
  Nid next_nid_{1};
};

void Cluster::record_config(std::uint64_t seed) {
  const auto& c = sc_.config;
  const auto& t = sc_.topology;
  k_.record(sim::kKernelPid, "config",
            "partitions=" + std::to_string(t.partitions) + " nodes_per_partition=" +
                std::to_string(t.nodes_per_partition) + " vms_per_node=" + std::to_string(t.vms_per_node) +
                " heartbeat_interval=" + c.heartbeat.interval.str() + " heartbeat_timeout=" +
                c.heartbeat.timeout.str() + " restart_delay=" + c.recovery.restart_delay.str() +
                " max_restart_attempts=" + std::to_string(c.recovery.max_restart_attempts) +
                " max_nodes_per_partition=" + std::to_string(c.placement.max_nodes_per_partition) +
                " max_vms_per_node=" + std::to_string(c.placement.max_vms_per_node) +
                " latency_min=" + c.latency_min.str() + " latency_max=" + c.latency_max.str() +
                " ack_timeout=" + c.effective_ack_timeout().str() +
                " quiet_window=" + c.effective_quiet_window().str() + " fetch_retries=" +
                std::to_string(c.fetch_retries) + " seed=" + std::to_string(seed) +
                " scenario=" + sanitize(sc_.name));
}

std::uint32_t Cluster::add_partition(std::uint32_t nodes, bool founding) {
  const auto index = static_cast<std::uint32_t>(dir_.partitions.size() + 1);
  PartitionInfo p;
  p.index = index;
  p.gsd_name = "g" + std::to_string(index);
  if (founding) {
    p.gid = gm::Gid{index};
    dir_.partition_by_gid[index] = index;
    dir_.static_members.push_back(gm::GMember{gm::Gid{index}, p.gsd_name});
  }
  for (std::uint32_t i = 0; i < nodes; ++i) {
    Nid nid = next_nid_++;
    NodeInfo n;
    n.nid = nid;
    n.partition = index;
    n.node_index = i;
    n.host = k_.add_host("node" + std::to_string(nid));
    k_.record(sim::kKernelPid, "node",
              "nid=" + std::to_string(nid) + " partition=" + std::to_string(index) + " index=" + std::to_string(i));
    dir_.nodes[nid] = n;
    p.nids.push_back(nid);
  }
  dir_.gsd_endpoints.push_back(p.gsd_name);
  dir_.partitions.push_back(std::move(p));
  return index;
}

void Cluster::spawn_partition(std::uint32_t index, bool founding) {
  auto& p = dir_.partition(index);
  Directory* dir = &dir_;
  const HostId gsd_host = dir_.node(p.nids.front())->host;
  p.gsd = k_.spawn(p.gsd_name, gsd_host,
                   [dir, index, founding] { return std::make_unique<Gsd>(*dir, index, founding); });
  for (Nid nid : p.nids) {
    auto& n = dir_.nodes.at(nid);
    n.nd = k_.spawn("n" + std::to_string(nid), n.host, [dir, nid] { return std::make_unique<Nd>(*dir, nid); });
  }
}

std::optional<Pid> Cluster::process_of(const sim::Target& t) {
  switch (t.kind) {
    case TargetKind::Gsd:
      if (t.id == 0 || t.id > dir_.partitions.size()) return std::nullopt;
      return dir_.partition(t.id).gsd;
    case TargetKind::Nd:
      if (const auto* n = dir_.node(t.id)) return n->nd;
      return std::nullopt;
    case TargetKind::Vmd: {
      auto it = dir_.vms.find(t.id);
      if (it == dir_.vms.end() || it->second.vmd == 0) return std::nullopt;
      return it->second.vmd;
    }
    default:
      return std::nullopt;
  }
}

std::optional<HostId> Cluster::host_of(const sim::Target& t) {
  if (t.kind == TargetKind::Node) {
    if (const auto* n = dir_.node(t.id)) return n->host;
    return std::nullopt;
  }
  if (t.kind == TargetKind::Vm) {
    auto it = dir_.vms.find(t.id);
    if (it == dir_.vms.end()) return std::nullopt;
    return it->second.host;
  }
  return std::nullopt;
}

std::optional<Pid> Cluster::manager_of_vid(Vid vid) {
  if (vid == 0) return std::nullopt;
  try {
    auto slot = provision::decode_vid(vid, dir_.config.placement);
    return dir_.manager_of(slot.gid);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void Cluster::fail(const Injection& inj, const std::string& why) {
  k_.record(sim::kKernelPid, "inject_error", "line=" + std::to_string(inj.line) + " reason=" + sanitize(why));
}

void Cluster::client_send(wire::Message msg, std::optional<Pid> to, const Injection& inj) {
  if (!to) return fail(inj, "no-manager");
  auto client = k_.find(inj.client).value_or(dir_.client);
  if (!k_.alive(client)) client = dir_.client;
  k_.with_context(client, [&](sim::Actor& a, sim::Context& ctx) {
    static_cast<Client&>(a).request(ctx, *to, std::move(msg));
  });
}

void Cluster::schedule(const Injection& inj) {
  k_.at(inj.time, [this, &inj] {
    k_.record(sim::kKernelPid, "inject",
              "line=" + std::to_string(inj.line) + " verb=" + std::string(sim::to_string(inj.verb)) +
                  " target=" + (inj.target ? inj.target->str() : "-") + " cmd=" + sanitize(inj.text));
    inject(inj);
  });
}

void Cluster::inject(const Injection& inj) {
  const auto& n = inj.numbers;
  switch (inj.verb) {
    case Verb::CrashProcess:
    case Verb::PauseProcess:
    case Verb::ResumeProcess:
    case Verb::FailRestart: {
      auto pid = process_of(*inj.target);
      if (!pid) return fail(inj, "unknown target " + inj.target->str());
      if (inj.verb == Verb::CrashProcess) k_.crash_process(*pid);
      if (inj.verb == Verb::PauseProcess) k_.pause(*pid);
      if (inj.verb == Verb::ResumeProcess) k_.resume(*pid);
      if (inj.verb == Verb::FailRestart) k_.set_restart_failure(*pid, true);
      return;
    }
    case Verb::CrashNode: {
      auto h = host_of(*inj.target);
      if (!h) return fail(inj, "unknown target " + inj.target->str());
      k_.crash_host(*h);
      return;
    }
    case Verb::JoinGsd: {
      auto index = add_partition(n.empty() ? sc_.topology.nodes_per_partition : n[0], false);
      spawn_partition(index, false);
      return;
    }
    case Verb::LeaveGsd:
    case Verb::RejoinGsd: {
      auto pid = process_of(*inj.target);
      if (!pid) return fail(inj, "unknown target " + inj.target->str());
      const bool leave = inj.verb == Verb::LeaveGsd;
      k_.with_context(*pid, [&](sim::Actor& a, sim::Context& ctx) {
        auto& g = static_cast<Gsd&>(a);
        if (leave)
          g.leave(ctx);
        else
          g.rejoin_group(ctx);
      });
      return;
    }
    case Verb::LeaveNode: {
      const auto* node = dir_.node(inj.target->id);
      if (!node) return fail(inj, "unknown target " + inj.target->str());
      const Pid nd = node->nd;
      k_.with_context(nd, [&](sim::Actor& a, sim::Context& ctx) { static_cast<Nd&>(a).leave(ctx); });
      k_.stop(nd);
      return;
    }
    case Verb::JoinNode: {
      const auto* node = dir_.node(inj.target->id);
      if (!node) return fail(inj, "unknown target " + inj.target->str());
      k_.revive_host(node->host);
      if (!k_.alive(node->nd)) k_.restart(node->nd);
      return;
    }
    case Verb::GetClusterState: {
      auto* p = dir_.partition_of_gid(gm::Gid{n[0]});
      if (!p) return fail(inj, "unknown gid " + std::to_string(n[0]));
      return client_send(wire::GetClusterState{0}, p->gsd, inj);
    }
    case Verb::GetVmsState:
      return client_send(wire::GetVmsState{0, std::vector<Vid>(n.begin(), n.end())}, manager_of_vid(n[0]), inj);
    case Verb::Subscribe:
      return client_send(wire::Subscribe{gm::Gid{n[0]}, inj.client, inj.filter}, dir_.manager_of(gm::Gid{n[0]}), inj);
    case Verb::CreateVms: {
      std::vector<std::optional<std::uint32_t>> placements;
      if (n.size() > 2)
        placements.assign(n.begin() + 2, n.end());
      else
        placements.assign(n[1], std::nullopt);
      return client_send(wire::CreateVms{0, gm::Gid{n[0]}, std::move(placements)}, dir_.manager_of(gm::Gid{n[0]}),
                         inj);
    }
    case Verb::DestroyVms:
      return client_send(wire::DestroyVms{0, std::vector<Vid>(n.begin(), n.end())},
                         n.empty() ? dir_.manager_of(gm::Gid{1}) : manager_of_vid(n[0]), inj);
    case Verb::VmOp:
      return client_send(wire::ManageVm{0, n[0], *inj.op}, manager_of_vid(n[0]), inj);
  }
}

RunOutput Cluster::run() {
  const auto& t = sc_.topology;
  record_config(k_.config().seed);
  for (std::uint32_t p = 0; p < t.partitions; ++p) add_partition(t.nodes_per_partition, true);

  const auto& cfg = dir_.config.placement;
  for (const auto& [nid, node] : dir_.nodes) {
    auto& tags = k_.host_tags(node.host);
    const auto gid = *dir_.partition(node.partition).gid;
    for (std::uint32_t s = 0; s < t.vms_per_node; ++s) {
      Vid vid = provision::encode_vid(provision::VmSlot{gid, node.node_index, s}, cfg);
      dir_.vms[vid] = VmInfo{k_.add_host("vm" + std::to_string(vid), node.host), 0};
      tags["vm." + std::to_string(vid)] = "R:0";
    }
  }
  for (std::uint32_t p = 1; p <= t.partitions; ++p) spawn_partition(p, true);
  Directory* dir = &dir_;
  for (auto& [vid, vm] : dir_.vms) {
    const Nid nid = *dir_.host_nid(vid);
    const Vid v = vid;
    vm.vmd = k_.spawn("v" + std::to_string(vid), vm.host, [dir, v, nid] { return std::make_unique<Vmd>(*dir, v, nid); });
  }
  dir_.client = k_.spawn("client", k_.add_host("console"), [dir] { return std::make_unique<Client>(*dir); });

  for (const auto& inj : sc_.schedule) schedule(inj);

  RunOutput out;
  auto r = k_.run();
  if (r.quiescent) {
    k_.record(sim::kKernelPid, "phase", "name=final_fetch");
    for (const auto& p : dir_.partitions) {
      if (!k_.alive(p.gsd) || k_.paused(p.gsd)) continue;
      auto* g = static_cast<Gsd*>(k_.actor(p.gsd));
      if (!g->membership().active()) continue;
      const Pid to = p.gsd;
      k_.with_context(dir_.client, [&](sim::Actor& a, sim::Context& ctx) {
        static_cast<Client&>(a).request(ctx, to, wire::GetClusterState{0});
      });
    }
    auto r2 = k_.run();
    r2.events += r.events;
    r = r2;
  }
  for (const auto& p : dir_.partitions) {
    if (k_.alive(p.gsd) && !k_.paused(p.gsd)) {
      k_.with_context(p.gsd, [](sim::Actor& a, sim::Context& ctx) { static_cast<Gsd&>(a).emit_final(ctx); });
    } else {
      k_.record(p.gsd, "final",
                "gid=" + std::to_string(p.gid ? p.gid->value : 0) + " alive=0 paused=" +
                    (k_.alive(p.gsd) ? "1" : "0"));
    }
  }
  if (!r.quiescent) {
    for (const auto& line : k_.pending_summary(8)) k_.record(sim::kKernelPid, "pending", "what=" + sanitize(line));
  }
  k_.record(sim::kKernelPid, "end",
            std::string("status=") + (r.quiescent ? "quiescent" : "horizon") + " events=" + std::to_string(r.events));
  out.trace = k_.trace().text();
  out.quiescent = r.quiescent;
  out.error = r.error;
  out.end = r.end;
  out.events = r.events;
  return out;
}

}  // namespace

RunOutput run_scenario(const sim::Scenario& sc, std::optional<std::uint64_t> seed) {
  Cluster c(sc, seed.value_or(sc.config.seed));
  return c.run();
}

}  // namespace vcm::cluster
