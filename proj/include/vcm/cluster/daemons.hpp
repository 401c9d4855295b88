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

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vcm/cluster/directory.hpp"
#include "vcm/fd/failure_detector.hpp"
#include "vcm/gm/group_member.hpp"
#include "vcm/partition/partition_view.hpp"
#include "vcm/provision/provisioning.hpp"
#include "vcm/recovery/recovery.hpp"
#include "vcm/sim/kernel.hpp"
#include "vcm/wire.hpp"

namespace vcm::cluster {

using sim::Context;
using sim::SimTime;
using sim::TimerTag;

// ---------------------------------------------------------------------------
// Group service daemon: group membership, partition views, provisioning,
// cluster-view fan-out and recovery of peers and node daemons.
// ---------------------------------------------------------------------------
class Gsd : public sim::Actor {
 public:
  Gsd(Directory& dir, std::uint32_t partition_index, bool founding);

  void on_start(Context& ctx) override;
  void on_message(Context& ctx, Pid from, const wire::Message& m) override;
  void on_timer(Context& ctx, const TimerTag& t) override;
  void on_resume(Context& ctx, SimTime paused_for) override;

  void leave(Context& ctx);
  void rejoin_group(Context& ctx);
  /// Emits `final` and `partition` records describing this daemon.
  void emit_final(Context& ctx) const;

  const gm::GmState& membership() const { return gm_.state(); }
  std::vector<partition::PartitionSnapshot> snapshots() const;

 private:
  struct Active {
    enum class Kind { Create, Destroy, Op } kind{Kind::Create};
    Pid client{0};
    std::uint64_t request{0};
    provision::TxnId txn{0};
    std::vector<Vid> vids;
    std::set<Vid> awaiting;
    provision::VmOp op{provision::VmOp::Start};
    std::vector<std::string> errors;
  };
  struct Queued {
    Pid client;
    wire::Message msg;
  };
  struct Managed {
    std::uint32_t index{0};
    std::optional<partition::PartitionView> view;
    fd::MonitorTable<Nid> nds;
    partition::SubscriptionTable subs;
    std::map<std::string, partition::Filter> sub_filters;
    std::map<Nid, wire::NdRegister> early;
    std::set<Nid> requeried;
    std::set<Nid> awaiting_state;
    bool rebuilding{false};
    recovery::RestartTracker<Nid> nd_restarts;
    std::set<Nid> nd_restart_pending;
    provision::IntentLog wal;
    bool durable_wal{false};
    std::deque<Queued> queue;
    std::optional<Active> active;

    Managed(std::uint32_t idx, SimTime timeout, std::uint32_t attempts)
        : index(idx), nds(timeout), nd_restarts(attempts) {}
  };
  struct Fetch {
    partition::ClusterFetch fetch;
    Pid client;
    std::uint64_t client_request;
    std::size_t members{0};
  };
  struct GsdRecovery {
    gm::Gid gid;
    Pid pid;
  };

  void boot(Context& ctx);

  // membership
  void arm_retry(Context& ctx);
  void apply(Context& ctx, const gm::Outputs& outs);
  void feed(Context& ctx, const gm::GmEvent& ev) { apply(ctx, gm_.handle(ev)); }
  void on_installed(Context& ctx, const gm::ViewG& view, gm::Role rank);
  std::optional<Pid> pid_of(Context& ctx, const std::string& address) const;
  void send_to(Context& ctx, const gm::GMember& m, wire::Message msg);
  void broadcast_gsds(Context& ctx, const wire::Message& msg);
  void ring_beat(Context& ctx);
  void arm_monitor(Context& ctx);
  void check_monitors(Context& ctx);

  // peer recovery
  void start_gsd_recovery(Context& ctx, gm::Gid gid);
  void attempt_gsd_restart(Context& ctx, gm::Gid gid);
  void takeover(Context& ctx, gm::Gid gid);

  // partitions
  Managed& own();
  Managed* managing_node(Nid nid);
  Managed* managing_vm(Vid vid);
  void attach_partition(Context& ctx, Managed& m);
  void notify(Context& ctx, Managed& m, const partition::Notification& n);
  void on_nd_register(Context& ctx, Managed& m, const wire::NdRegister& r);
  void on_nd_timeout(Context& ctx, Managed& m, Nid nid);
  void restart_nd(Context& ctx, Nid nid);
  void finish_rebuild(Context& ctx, Managed& m);
  void resolve_pending(Context& ctx, Managed& m, const wire::NdRegister& r);
  void destroy_vm(Context& ctx, Managed& m, Vid vid, std::string_view reason);
  void persist(Context& ctx, Managed& m);
  void log_wal(Context& ctx, Managed& m, provision::IntentLogRecord r);
  void persist_subs(Context& ctx);

  // provisioning
  void enqueue(Context& ctx, Managed& m, Pid client, wire::Message msg);
  void pump(Context& ctx, Managed& m);
  void start_create(Context& ctx, Managed& m, Pid client, const wire::CreateVms& req);
  void start_destroy(Context& ctx, Managed& m, Pid client, const wire::DestroyVms& req);
  void start_op(Context& ctx, Managed& m, Pid client, const wire::ManageVm& req);
  void on_command_done(Context& ctx, Pid from, const wire::VmCommandDone& d);
  void abort_active(Context& ctx, Managed& m, Nid dead);
  void finish_active(Context& ctx, Managed& m, bool ok, std::string detail);
  provision::TxnId next_txn(Context& ctx);
  Pid nd_pid(Nid nid) const;

  // cluster view
  void start_fetch(Context& ctx, Pid client, std::uint64_t request);
  void begin_fetch_round(Context& ctx, std::uint64_t id, Fetch& f);
  void finish_fetch(Context& ctx, std::uint64_t id, Fetch& f);

  Directory& dir_;
  std::uint32_t index_;
  bool founding_;
  std::string address_;
  gm::GroupMember gm_;
  fd::MonitorTable<gm::Gid> ring_;
  std::optional<gm::Gid> ring_target_;
  fd::ProbeTracker probes_;
  std::map<std::uint32_t, Managed> managed_;  // by partition index
  std::map<std::uint64_t, Fetch> fetches_;
  std::uint64_t fetch_seq_{0};
  std::uint64_t txn_seq_{0};
  std::uint64_t monitor_gen_{0};
  std::optional<SimTime> monitor_at_;
  std::map<std::uint32_t, GsdRecovery> recovering_;
  std::set<std::uint32_t> recovered_peers_;
  recovery::RestartTracker<std::uint32_t> gsd_restarts_;
  bool rebuilding_own_{false};
  bool retry_armed_{false};
};

// ---------------------------------------------------------------------------
// Node daemon: hosts VMs, runs hypervisor operations serially, watches its
// VM daemons and reports to its managing group daemon.
// ---------------------------------------------------------------------------
class Nd : public sim::Actor {
 public:
  Nd(Directory& dir, Nid nid) : dir_(dir), nid_(nid), vmds_(dir.config.heartbeat.timeout),
                                restarts_(dir.config.recovery.max_restart_attempts) {}

  void on_start(Context& ctx) override;
  void on_message(Context& ctx, Pid from, const wire::Message& m) override;
  void on_timer(Context& ctx, const TimerTag& t) override;
  void on_resume(Context& ctx, SimTime paused_for) override;

  /// Orderly departure of the node from its partition.
  void leave(Context& ctx);

 private:
  struct LocalVm {
    partition::VmState state{partition::VmState::Running};
    provision::TxnId pending{0};
  };
  struct Pending {
    wire::VmCommand cmd;
  };

  void boot(Context& ctx);
  void register_with(Context& ctx, Pid to);
  void save(Context& ctx, Vid vid);
  void start_next(Context& ctx);
  void complete(Context& ctx, const wire::VmCommand& cmd);
  void arm_monitor(Context& ctx);
  void on_vmd_timeout(Context& ctx, Vid vid);
  void restart_vmd(Context& ctx, Vid vid);
  HostId vm_host(Context& ctx, Vid vid, bool create);
  void start_vmd(Context& ctx, Vid vid);
  Pid vmd_pid(Vid vid) const;

  Directory& dir_;
  Nid nid_;
  Pid manager_{0};
  std::map<Vid, LocalVm> vms_;
  fd::MonitorTable<Vid> vmds_;
  recovery::RestartTracker<Vid> restarts_;
  std::set<Vid> restart_pending_;
  std::deque<Pending> ops_;
  bool busy_{false};
  std::uint64_t monitor_gen_{0};
  std::optional<SimTime> monitor_at_;
};

/// VM daemon: heartbeats to the node daemon of its host node.
class Vmd : public sim::Actor {
 public:
  Vmd(Directory& dir, Vid vid, Nid nid) : dir_(dir), vid_(vid), nid_(nid) {}
  void on_start(Context& ctx) override;
  void on_message(Context&, Pid, const wire::Message&) override {}
  void on_timer(Context& ctx, const TimerTag& t) override;

 private:
  Directory& dir_;
  Vid vid_;
  Nid nid_;
};

/// The scripted user: issues client requests and records their results.
class Client : public sim::Actor {
 public:
  struct FetchResult {
    Pid entry;
    std::uint64_t digest;
    gm::ViewId stamp;
    bool complete;
  };

  explicit Client(Directory& dir) : dir_(dir) {}
  void on_message(Context& ctx, Pid from, const wire::Message& m) override;

  /// Sends `msg` with a fresh request id patched in; returns the id.
  std::uint64_t request(Context& ctx, Pid to, wire::Message msg);
  const std::map<std::uint64_t, FetchResult>& fetches() const { return fetches_; }

 private:
  Directory& dir_;
  std::uint64_t next_request_{1};
  std::map<std::uint64_t, FetchResult> fetches_;
};

}  // namespace vcm::cluster
