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

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "vcm/cluster/daemons.hpp"
#include "vcm/cluster/format.hpp"

namespace vcm::cluster {

namespace {

enum TimerKind : std::uint32_t {
  kBoot = 1,
  kRingBeat,
  kMonitor,
  kAck,
  kPrepare,
  kProbe,
  kGsdRestart,
  kNdRestart,
  kRejoin,
  kRetry,
  kRebuild,
  kFetchTimeout,
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

provision::VmLifecycleState to_lifecycle(partition::VmState s) {
  using V = partition::VmState;
  switch (s) {
    case V::Running:
      return provision::VmLifecycleState::Running;
    case V::Suspended:
      return provision::VmLifecycleState::Suspended;
    case V::Crashed:
      return provision::VmLifecycleState::Crashed;
    case V::Halted:
      return provision::VmLifecycleState::Halted;
  }
  return provision::VmLifecycleState::Halted;
}

std::optional<provision::TxnPhase> phase_of(const provision::IntentLog& wal, provision::TxnId txn) {
  std::optional<provision::TxnPhase> p;
  for (const auto& r : wal.records())
    if (r.txn == txn) p = r.phase;
  return p;
}

/// Kind of the most recent committed transaction that touched `vid`.
std::optional<provision::TxnKind> last_committed(const provision::IntentLog& wal, Vid vid) {
  std::map<provision::TxnId, const provision::IntentLogRecord*> begun;
  std::optional<provision::TxnKind> kind;
  for (const auto& r : wal.records()) {
    if (r.phase == provision::TxnPhase::Begun) begun[r.txn] = &r;
    if (r.phase != provision::TxnPhase::Committed) continue;
    auto it = begun.find(r.txn);
    const auto& vids = it != begun.end() ? it->second->vids : r.vids;
    if (std::find(vids.begin(), vids.end(), vid) != vids.end()) kind = r.op;
  }
  return kind;
}

}  // namespace

Gsd::Gsd(Directory& dir, std::uint32_t partition_index, bool founding)
    : dir_(dir),
      index_(partition_index),
      founding_(founding),
      address_(dir.partition(partition_index).gsd_name),
      gm_(gm::GroupMember::blank(gm::GMember{gm::Gid{0}, address_})),
      ring_(dir.config.heartbeat.timeout),
      probes_(dir.config.heartbeat.probe_timeout()),
      gsd_restarts_(dir.config.recovery.max_restart_attempts) {}

// --- lifecycle ------------------------------------------------------------------

void Gsd::on_start(Context& ctx) {
  ctx.timer(SimTime{}, TimerTag{kBoot});
  ctx.timer(dir_.config.heartbeat.interval, TimerTag{kRingBeat}, true);
}

void Gsd::boot(Context& ctx) {
  auto& info = dir_.partition(index_);
  auto& k = ctx.kernel();
  auto& m = managed_.try_emplace(index_, index_, dir_.config.heartbeat.timeout,
                                 dir_.config.recovery.max_restart_attempts)
                .first->second;
  m.durable_wal = true;
  const bool restarted = k.incarnation(ctx.self()) > 1;

  if (founding_ && !restarted) {
    auto [g, outs] = gm::GroupMember::bootstrap(dir_.static_members, gm::GMember{*info.gid, address_});
    gm_ = std::move(g);
    attach_partition(ctx, m);
    apply(ctx, outs);
    return;
  }
  if (!info.gid) {
    feed(ctx, gm::in::Join{});
    return;
  }

  gm_ = gm::GroupMember::blank(gm::GMember{*info.gid, address_});
  auto& cell = k.cell(ctx.self());
  if (auto it = cell.find("wal"); it != cell.end()) {
    try {
      m.wal = provision::IntentLog::parse(it->second);
    } catch (const std::exception&) {
      m.wal = provision::IntentLog{};
    }
  }
  if (auto it = cell.find("subs"); it != cell.end()) {
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ';')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) continue;
      auto f = partition::parse_filter(item.substr(eq + 1));
      if (!f) continue;
      std::string client = item.substr(0, eq);
      m.sub_filters[client] = *f;
      m.subs.subscribe(partition::Subscription{client, *f, client});
    }
  }
  rebuilding_own_ = true;
  m.view.emplace(*info.gid, info.nids, dir_.config.placement);
  m.rebuilding = true;
  for (Nid nid : info.nids) {
    m.awaiting_state.insert(nid);
    ctx.send(nd_pid(nid), wire::StateQuery{});
  }
  if (m.awaiting_state.empty())
    finish_rebuild(ctx, m);
  else
    ctx.timer(2 * dir_.config.heartbeat.interval, TimerTag{kRebuild, m.index});
}

void Gsd::leave(Context& ctx) { feed(ctx, gm::in::SelfLeave{}); }

void Gsd::rejoin_group(Context& ctx) {
  if (gm_.state().active()) {
    ctx.trace("ignored", "reason=rejoin_while_active");
    return;
  }
  feed(ctx, gm::in::Rejoin{});
}

void Gsd::on_resume(Context& ctx, SimTime paused_for) {
  ring_.reset_all(ctx.now());
  for (auto& [idx, m] : managed_) m.nds.reset_all(ctx.now());
  const auto& hb = dir_.config.heartbeat;
  if (paused_for >= hb.timeout - hb.interval && gm_.state().active()) feed(ctx, gm::in::Stale{});
  arm_monitor(ctx);
}

// --- membership ------------------------------------------------------------------

std::optional<Pid> Gsd::pid_of(Context& ctx, const std::string& address) const {
  return ctx.kernel().find(address);
}

void Gsd::send_to(Context& ctx, const gm::GMember& m, wire::Message msg) {
  if (auto p = pid_of(ctx, m.address)) ctx.send(*p, std::move(msg));
}

void Gsd::broadcast_gsds(Context& ctx, const wire::Message& msg) {
  for (const auto& ep : dir_.gsd_endpoints) {
    if (ep == address_) continue;
    if (auto p = pid_of(ctx, ep)) ctx.send(*p, msg);
  }
}

void Gsd::arm_retry(Context& ctx) {
  if (retry_armed_) return;
  retry_armed_ = true;
  const auto& hb = dir_.config.heartbeat;
  ctx.timer(hb.timeout + 2 * hb.interval, TimerTag{kRetry});
}

void Gsd::apply(Context& ctx, const gm::Outputs& outs) {
  const SimTime ack_timeout = dir_.config.effective_ack_timeout();
  for (const auto& o : outs) {
    std::visit(
        overloaded{
            [&](const gm::out::SendNewViewG& x) {
              for (const auto& r : x.recipients) send_to(ctx, r, wire::NewViewG{x.view, gm_.state().self.gid});
            },
            [&](const gm::out::SendAck& x) { send_to(ctx, x.to, wire::Ack{gm_.state().self.gid, x.view_id}); },
            [&](const gm::out::SendCrashReport& x) {
              send_to(ctx, x.to, wire::CrashReport{x.view_id, x.sender, x.crasher});
            },
            [&](const gm::out::SendCurrentVersion& x) { send_to(ctx, x.to, wire::CurrentVersion{x.view_id}); },
            [&](const gm::out::SendRejoining& x) {
              broadcast_gsds(ctx, wire::Rejoining{x.self});
              arm_retry(ctx);
            },
            [&](const gm::out::SendJoining& x) {
              broadcast_gsds(ctx, wire::Joining{x.address});
              arm_retry(ctx);
            },
            [&](const gm::out::SendLeavingPropose& x) {
              send_to(ctx, x.to, wire::LeavingPropose{x.view_id, x.self});
            },
            [&](const gm::out::SendPrepare& x) {
              for (const auto& r : x.recipients) send_to(ctx, r, wire::Prepare{gm_.state().self});
            },
            [&](const gm::out::SendPrepareAck& x) { send_to(ctx, x.to, wire::PrepareAck{gm_.state().self}); },
            [&](const gm::out::SendCommit& x) {
              for (const auto& r : x.recipients) send_to(ctx, r, wire::Commit{x.view, gm_.state().self.gid});
            },
            [&](const gm::out::StartAckTimer& x) { ctx.timer(ack_timeout, TimerTag{kAck, x.round}); },
            [&](const gm::out::StartPrepareTimer&) { ctx.timer(ack_timeout, TimerTag{kPrepare}); },
            [&](const gm::out::ProbeRequest& x) {
              auto nonce = probes_.start(x.member.gid, ctx.now());
              send_to(ctx, x.member, wire::Probe{nonce});
              ctx.timer(probes_.window(), TimerTag{kProbe, nonce});
            },
            [&](const gm::out::Installed& x) { on_installed(ctx, x.view, x.rank); },
            [&](const gm::out::ViewChange& x) {
              ctx.trace("change", "cause=" + std::string(gm::to_string(x.cause)) + " subjects=" +
                                      join_list(x.subjects, [](gm::Gid g) { return std::to_string(g.value); }) +
                                      " from=" + std::to_string(x.from) + " to=" + std::to_string(x.to));
            },
            [&](const gm::out::Halt& x) {
              ctx.trace("halt", std::string("rejoin=") + (x.rejoin ? "1" : "0"));
              ring_.clear();
              ring_target_.reset();
              if (x.rejoin) ctx.timer(dir_.config.recovery.restart_delay, TimerTag{kRejoin});
            },
            [&](const gm::out::Ignored& x) { ctx.trace("ignored", "reason=" + sanitize(x.reason)); },
        },
        o);
  }
}

void Gsd::on_installed(Context& ctx, const gm::ViewG& view, gm::Role rank) {
  const auto self = gm_.state().self;
  ctx.trace("view", "id=" + std::to_string(view.view_id) + " members=" + gm::format_members(view) +
                        " leader=" + std::to_string(gm_.state().leader ? gm_.state().leader->value : 0) +
                        " rank=" + std::string(gm::to_string(rank)) + " gid=" + std::to_string(self.gid.value));

  auto& info = dir_.partition(index_);
  if (!info.gid) {
    info.gid = self.gid;
    dir_.partition_by_gid[self.gid.value] = index_;
    ctx.kernel().cell(ctx.self())["gid"] = std::to_string(self.gid.value);
    attach_partition(ctx, own());
  }

  auto next = fd::recompute_ring_monitor(view, self.gid);
  if (next != ring_target_) {
    auto old = ring_target_;
    if (old) ring_.unwatch(*old);
    ring_target_ = next;
    if (next) ring_.watch(*next, ctx.now());
    if (old && !view.contains(*old)) start_gsd_recovery(ctx, *old);
  } else if (next) {
    ring_.rearm(*next);
  }
  arm_monitor(ctx);

  for (auto it = fetches_.begin(); it != fetches_.end();) {
    auto& f = it->second;
    bool dropped = false;
    for (gm::Gid g : f.fetch.missing())
      if (!view.contains(g)) dropped = true;
    if (dropped && f.fetch.can_retry()) {
      auto id = it->first;
      ++it;
      begin_fetch_round(ctx, id, fetches_.at(id));
    } else {
      ++it;
    }
  }
}

void Gsd::ring_beat(Context& ctx) {
  const auto& st = gm_.state();
  if (!st.active()) return;
  auto target = fd::heartbeat_target(st.view, st.self.gid);
  if (!target) return;
  if (const auto* m = st.view.find(*target)) send_to(ctx, *m, wire::RingHeartbeat{st.self.gid, st.view.view_id});
}

void Gsd::arm_monitor(Context& ctx) {
  std::optional<SimTime> best = ring_.next_deadline();
  for (const auto& [idx, m] : managed_) {
    if (m.rebuilding) continue;
    auto d = m.nds.next_deadline();
    if (d && (!best || *d < *best)) best = d;
  }
  if (!best) return;
  if (monitor_at_ && *monitor_at_ <= *best && *monitor_at_ >= ctx.now()) return;
  monitor_at_ = *best;
  SimTime delay = *best < ctx.now() ? SimTime{} : *best - ctx.now();
  ctx.timer(delay, TimerTag{kMonitor, ++monitor_gen_}, true);
}

void Gsd::check_monitors(Context& ctx) {
  const SimTime now = ctx.now();
  if (gm_.state().active()) {
    for (gm::Gid g : ring_.on_tick(now)) {
      if (g != ring_target_) continue;
      auto* p = dir_.partition_of_gid(g);
      ctx.trace("suspect", "kind=gsd target=" + std::to_string(p ? p->gsd : 0) + " id=" + std::to_string(g.value) +
                               " view=" + std::to_string(gm_.state().view.view_id));
      feed(ctx, gm::in::SucceedingFailure{g});
      start_gsd_recovery(ctx, g);
    }
  }
  for (auto& [idx, m] : managed_) {
    if (m.rebuilding || !m.view) continue;
    for (Nid nid : m.nds.on_tick(now)) on_nd_timeout(ctx, m, nid);
  }
}

// --- dispatch ---------------------------------------------------------------------

void Gsd::on_timer(Context& ctx, const TimerTag& t) {
  switch (t.kind) {
    case kBoot:
      boot(ctx);
      break;
    case kRingBeat:
      ring_beat(ctx);
      ctx.timer(dir_.config.heartbeat.interval, TimerTag{kRingBeat}, true);
      break;
    case kMonitor:
      if (t.arg != monitor_gen_) return;
      monitor_at_.reset();
      check_monitors(ctx);
      arm_monitor(ctx);
      break;
    case kAck:
      feed(ctx, gm::in::AckTimeout{t.arg});
      break;
    case kPrepare:
      feed(ctx, gm::in::PrepareTimeout{});
      break;
    case kProbe:
      if (auto r = probes_.on_expiry(t.arg)) feed(ctx, gm::in::ProbeResult{r->member, r->alive});
      break;
    case kGsdRestart:
      attempt_gsd_restart(ctx, gm::Gid{static_cast<std::uint32_t>(t.arg)});
      break;
    case kNdRestart:
      restart_nd(ctx, static_cast<Nid>(t.arg));
      break;
    case kRejoin:
      if (!gm_.state().active()) feed(ctx, gm::in::Rejoin{});
      break;
    case kRetry: {
      retry_armed_ = false;
      const auto& st = gm_.state();
      if (st.active()) break;
      if (st.rejoining) {
        broadcast_gsds(ctx, wire::Rejoining{st.self});
        arm_retry(ctx);
      } else if (st.joining) {
        broadcast_gsds(ctx, wire::Joining{st.self.address});
        arm_retry(ctx);
      }
      break;
    }
    case kRebuild: {
      auto it = managed_.find(static_cast<std::uint32_t>(t.arg));
      if (it != managed_.end() && it->second.rebuilding) finish_rebuild(ctx, it->second);
      break;
    }
    case kFetchTimeout: {
      auto it = fetches_.find(t.arg);
      if (it != fetches_.end()) finish_fetch(ctx, it->first, it->second);
      break;
    }
    default:
      break;
  }
}

void Gsd::on_message(Context& ctx, Pid from, const wire::Message& msg) {
  std::visit(
      overloaded{
          [&](const wire::Prepare& x) { feed(ctx, gm::in::RecvPrepare{x.from}); },
          [&](const wire::PrepareAck& x) { feed(ctx, gm::in::RecvPrepareAck{x.from}); },
          [&](const wire::Commit& x) { feed(ctx, gm::in::RecvCommit{x.view, x.from}); },
          [&](const wire::NewViewG& x) { feed(ctx, gm::in::RecvNewViewG{x.view, x.leader}); },
          [&](const wire::Ack& x) { feed(ctx, gm::in::RecvAck{x.sender, x.view_id}); },
          [&](const wire::CrashReport& x) { feed(ctx, gm::in::RecvCrashReport{x.view_id, x.sender, x.crasher}); },
          [&](const wire::Joining& x) { feed(ctx, gm::in::RecvJoining{x.address}); },
          [&](const wire::Rejoining& x) { feed(ctx, gm::in::RecvRejoining{x.member}); },
          [&](const wire::LeavingPropose& x) { feed(ctx, gm::in::RecvLeavingPropose{x.view_id, x.leaving}); },
          [&](const wire::CurrentVersion& x) { feed(ctx, gm::in::RecvCurrentVersion{x.view_id}); },
          [&](const wire::Probe& x) {
            if (gm_.state().active()) ctx.send(from, wire::ProbeReply{x.nonce});
          },
          [&](const wire::ProbeReply& x) {
            if (auto r = probes_.on_reply(x.nonce)) feed(ctx, gm::in::ProbeResult{r->member, r->alive});
          },
          [&](const wire::RingHeartbeat& x) {
            const auto& st = gm_.state();
            if (ring_target_ && *ring_target_ == x.gid) {
              ring_.heartbeat(x.gid, ctx.now());
            } else if (st.active() && !st.view.contains(x.gid) && x.view_id < st.view.view_id) {
              ctx.send(from, wire::CurrentVersion{st.view.view_id});
            }
          },
          [&](const wire::NdHeartbeat& x) {
            auto* m = managing_node(x.nid);
            if (!m || !m->view || m->rebuilding) return;
            m->nds.heartbeat(x.nid, ctx.now());
            auto it = m->view->nodes().find(x.nid);
            bool known_running = it != m->view->nodes().end() && it->second == partition::NodeState::Running;
            if (!known_running && m->requeried.insert(x.nid).second) ctx.send(from, wire::StateQuery{});
          },
          [&](const wire::NdRegister& x) {
            if (auto* m = managing_node(x.nid)) {
              on_nd_register(ctx, *m, x);
            } else if (!dir_.partition(index_).gid) {
              own().early[x.nid] = x;
            }
          },
          [&](const wire::NdLeave& x) {
            auto* m = managing_node(x.nid);
            if (!m || !m->view) return;
            m->nds.unwatch(x.nid);
            if (m->active) abort_active(ctx, *m, x.nid);
            notify(ctx, *m, m->view->on_node_leave(x.nid));
          },
          [&](const wire::VmReport& x) {
            auto* m = managing_vm(x.vid);
            if (!m || !m->view) return;
            notify(ctx, *m, m->view->on_vm_report(x.vid, x.state));
          },
          [&](const wire::VmCommandDone& x) { on_command_done(ctx, from, x); },
          [&](const wire::ClusterQuery& x) {
            ctx.send(from, wire::ClusterReply{x.request, x.stamp, gm_.state().self.gid, snapshots()});
          },
          [&](const wire::ClusterReply& x) {
            auto it = fetches_.find(x.request);
            if (it == fetches_.end()) return;
            if (it->second.fetch.on_reply(x.stamp, x.from, x.parts)) finish_fetch(ctx, it->first, it->second);
          },
          [&](const wire::GetClusterState& x) { start_fetch(ctx, from, x.request); },
          [&](const wire::GetVmsState& x) {
            wire::VmsStateResult r{x.request, {}};
            for (Vid vid : x.vids) {
              std::optional<partition::VmState> st;
              if (auto* m = managing_vm(vid); m && m->view) {
                auto it = m->view->vms().find(vid);
                if (it != m->view->vms().end()) st = it->second;
              }
              r.states.emplace_back(vid, st);
            }
            ctx.send(from, std::move(r));
          },
          [&](const wire::Subscribe& x) {
            Managed* m = nullptr;
            for (auto& [idx, mm] : managed_)
              if (mm.view && mm.view->partition() == x.partition) m = &mm;
            if (!m) {
              ctx.send(from, wire::ClientResult{0, false, "not-managed"});
              return;
            }
            m->subs.subscribe(partition::Subscription{x.client, x.filter, x.client});
            m->sub_filters[x.client] = x.filter;
            persist_subs(ctx);
            ctx.send(from, wire::ClientResult{0, true, "subscribed"});
          },
          [&](const wire::CreateVms& x) {
            Managed* m = nullptr;
            for (auto& [idx, mm] : managed_)
              if (mm.view && mm.view->partition() == x.partition) m = &mm;
            if (!m) {
              ctx.send(from, wire::ClientResult{x.request, false, "not-managed"});
              return;
            }
            enqueue(ctx, *m, from, x);
          },
          [&](const wire::DestroyVms& x) {
            Managed* m = x.vids.empty() ? &own() : managing_vm(x.vids.front());
            if (!m) m = &own();
            enqueue(ctx, *m, from, x);
          },
          [&](const wire::ManageVm& x) {
            Managed* m = managing_vm(x.vid);
            if (!m) {
              ctx.send(from, wire::ClientResult{x.request, false, "unknown-vm"});
              return;
            }
            enqueue(ctx, *m, from, x);
          },
          [&](const auto&) {},
      },
      msg);
}

// --- peer recovery ------------------------------------------------------------------

void Gsd::start_gsd_recovery(Context& ctx, gm::Gid gid) {
  if (recovering_.count(gid.value) || gid == gm_.state().self.gid) return;
  auto* p = dir_.partition_of_gid(gid);
  if (!p || p->adopted_by) return;
  auto& k = ctx.kernel();
  const Pid pid = p->gsd;
  std::string head = "kind=gsd target=" + std::to_string(pid) + " id=" + std::to_string(gid.value);
  if (k.alive(pid)) {
    ctx.trace("diagnose", head + " result=" + std::string(recovery::to_string(recovery::Diagnosis::ProcessAlive)) +
                              " action=none");
    return;
  }
  recovering_[gid.value] = GsdRecovery{gid, pid};
  for (auto& other : dir_.partitions)
    if (other.adopted_by == pid && other.gid) {
      other.adopted_by.reset();
      takeover(ctx, *other.gid);
    }
  auto d = k.host_alive(k.host_of(pid)) ? recovery::Diagnosis::ProcessFailed : recovery::Diagnosis::NodeFailed;
  ctx.trace("diagnose", head + " result=" + std::string(recovery::to_string(d)) + " action=restart");
  ctx.timer(dir_.config.recovery.restart_delay, TimerTag{kGsdRestart, gid.value});
}

void Gsd::attempt_gsd_restart(Context& ctx, gm::Gid gid) {
  auto rit = recovering_.find(gid.value);
  if (rit == recovering_.end()) return;
  auto& k = ctx.kernel();
  const Pid pid = rit->second.pid;
  if (k.alive(pid)) {
    recovering_.erase(rit);
    return;
  }
  auto* p = dir_.partition_of_gid(gid);
  if (!p) {
    recovering_.erase(rit);
    return;
  }
  if (!gsd_restarts_.try_attempt(gid.value)) {
    takeover(ctx, gid);
    return;
  }
  const HostId failed_host = k.host_of(pid);
  std::vector<std::pair<recovery::NodeId, bool>> nodes;
  recovery::NodeId failed_nid = 0;
  for (Nid nid : p->nids) {
    const auto* n = dir_.node(nid);
    nodes.emplace_back(nid, k.host_alive(n->host));
    if (n->host == failed_host) failed_nid = nid;
  }
  auto diag = k.host_alive(failed_host) ? recovery::Diagnosis::ProcessFailed : recovery::Diagnosis::NodeFailed;
  auto plan = recovery::plan_gsd(diag, failed_nid, nodes);
  std::string head = "kind=gsd target=" + std::to_string(pid) + " id=" + std::to_string(gid.value) +
                     " attempt=" + std::to_string(gsd_restarts_.attempts(gid.value)) +
                     " plan=" + std::string(recovery::to_string(plan.kind));
  bool ok = false;
  switch (plan.kind) {
    case recovery::GsdPlan::Kind::Nothing:
      recovering_.erase(rit);
      return;
    case recovery::GsdPlan::Kind::RestartInPlace:
      ctx.trace("recovery", head);
      ok = k.restart(pid);
      break;
    case recovery::GsdPlan::Kind::RestartOnSpare:
      ctx.trace("recovery", head + " spare=" + std::to_string(*plan.node));
      ok = k.restart(pid, dir_.node(*plan.node)->host);
      break;
    case recovery::GsdPlan::Kind::Takeover:
      ctx.trace("recovery", head);
      takeover(ctx, gid);
      return;
  }
  if (ok) {
    recovering_.erase(gid.value);
    gsd_restarts_.reset(gid.value);
    return;
  }
  ctx.timer(dir_.config.recovery.restart_delay, TimerTag{kGsdRestart, gid.value});
}

void Gsd::takeover(Context& ctx, gm::Gid gid) {
  recovering_.erase(gid.value);
  auto* p = dir_.partition_of_gid(gid);
  if (!p || managed_.count(p->index)) return;
  p->adopted_by = ctx.self();
  auto& m = managed_.try_emplace(p->index, p->index, dir_.config.heartbeat.timeout,
                                 dir_.config.recovery.max_restart_attempts)
                .first->second;
  m.view.emplace(gid, p->nids, dir_.config.placement);
  m.rebuilding = true;
  ctx.trace("takeover", "partition=" + std::to_string(gid.value) + " by=" +
                            std::to_string(gm_.state().self.gid.value) + " phase=begin");
  for (Nid nid : p->nids) {
    m.awaiting_state.insert(nid);
    ctx.send(nd_pid(nid), wire::Adopt{address_});
  }
  if (m.awaiting_state.empty())
    finish_rebuild(ctx, m);
  else
    ctx.timer(2 * dir_.config.heartbeat.interval, TimerTag{kRebuild, m.index});
}

// --- partitions -----------------------------------------------------------------------

Gsd::Managed& Gsd::own() { return managed_.at(index_); }

Gsd::Managed* Gsd::managing_node(Nid nid) {
  const auto* n = dir_.node(nid);
  if (!n) return nullptr;
  auto it = managed_.find(n->partition);
  if (it == managed_.end() || !it->second.view) return nullptr;
  return &it->second;
}

Gsd::Managed* Gsd::managing_vm(Vid vid) {
  auto slot = provision::decode_vid(vid, dir_.config.placement);
  auto* p = dir_.partition_of_gid(slot.gid);
  if (!p) return nullptr;
  auto it = managed_.find(p->index);
  if (it == managed_.end() || !it->second.view) return nullptr;
  return &it->second;
}

Pid Gsd::nd_pid(Nid nid) const { return dir_.node(nid)->nd; }

void Gsd::attach_partition(Context& ctx, Managed& m) {
  auto& info = dir_.partition(m.index);
  if (!m.view) m.view.emplace(*info.gid, info.nids, dir_.config.placement);
  auto early = std::move(m.early);
  m.early.clear();
  for (auto& [nid, reg] : early) on_nd_register(ctx, m, reg);
}

void Gsd::notify(Context& ctx, Managed& m, const partition::Notification& n) {
  if (n.empty() || !m.view) return;
  const gm::Gid part = m.view->partition();
  ctx.trace("delta", "partition=" + std::to_string(part.value) + " deltas=" + wire::format_deltas(n.deltas));
  for (auto& [endpoint, mine] : m.subs.route(n)) {
    Pid to = ctx.kernel().find(endpoint).value_or(dir_.client);
    if (to != 0) ctx.send(to, wire::Inform{part, std::move(mine.deltas)});
  }
}

void Gsd::on_nd_register(Context& ctx, Managed& m, const wire::NdRegister& r) {
  if (!m.view) {
    m.early[r.nid] = r;
    return;
  }
  if (m.rebuilding) {
    m.early[r.nid] = r;
    m.awaiting_state.erase(r.nid);
    if (m.awaiting_state.empty()) finish_rebuild(ctx, m);
    return;
  }
  std::vector<std::pair<Vid, partition::VmState>> hosted;
  for (const auto& vm : r.vms) {
    bool admit = true;
    if (vm.pending_txn != 0) {
      auto phase = phase_of(m.wal, vm.pending_txn);
      if (m.active && m.active->txn == vm.pending_txn) {
        admit = !m.active->awaiting.count(vm.vid);
      } else if (phase == provision::TxnPhase::Committed) {
        ctx.send(nd_pid(r.nid), wire::TxnCommit{vm.pending_txn});
      } else {
        admit = false;
        destroy_vm(ctx, m, vm.vid, "uncommitted");
      }
    } else if (last_committed(m.wal, vm.vid) == provision::TxnKind::Destroy) {
      admit = false;
      destroy_vm(ctx, m, vm.vid, "destroyed");
    }
    if (admit) hosted.emplace_back(vm.vid, vm.state);
  }
  notify(ctx, m, m.view->on_node_register(r.nid, hosted));
  m.nds.watch(r.nid, ctx.now());
  m.nds.heartbeat(r.nid, ctx.now());
  m.requeried.erase(r.nid);
  m.nd_restarts.reset(r.nid);
  m.nd_restart_pending.erase(r.nid);
  arm_monitor(ctx);
}

void Gsd::on_nd_timeout(Context& ctx, Managed& m, Nid nid) {
  auto& k = ctx.kernel();
  const auto* n = dir_.node(nid);
  ctx.trace("suspect", "kind=nd target=" + std::to_string(n->nd) + " id=" + std::to_string(nid) +
                           " partition=" + std::to_string(m.view->partition().value));
  notify(ctx, m, m.view->on_nd_timeout(nid));
  if (m.active) abort_active(ctx, m, nid);
  m.requeried.erase(nid);

  std::string head = "kind=nd target=" + std::to_string(n->nd) + " id=" + std::to_string(nid);
  if (k.alive(n->nd)) {
    ctx.trace("diagnose", head + " result=" + std::string(recovery::to_string(recovery::Diagnosis::ProcessAlive)) +
                              " action=none");
    return;
  }
  const bool host_up = k.host_alive(n->host);
  auto d = host_up ? recovery::Diagnosis::ProcessFailed : recovery::Diagnosis::NodeFailed;
  auto action = recovery::plan_child(recovery::ChildKind::Nd, host_up);
  ctx.trace("diagnose", head + " result=" + std::string(recovery::to_string(d)) +
                            " action=" + (action == recovery::ChildAction::Restart ? "restart" : "suppress"));
  if (action == recovery::ChildAction::Restart && m.nd_restart_pending.insert(nid).second)
    ctx.timer(dir_.config.recovery.restart_delay, TimerTag{kNdRestart, nid});
}

void Gsd::restart_nd(Context& ctx, Nid nid) {
  auto* m = managing_node(nid);
  if (!m) return;
  auto& k = ctx.kernel();
  const auto* n = dir_.node(nid);
  if (k.alive(n->nd)) {
    m->nd_restart_pending.erase(nid);
    return;
  }
  if (!m->nd_restarts.try_attempt(nid)) {
    m->nd_restart_pending.erase(nid);
    ctx.trace("recovery", "kind=nd target=" + std::to_string(n->nd) + " id=" + std::to_string(nid) + " gave_up=1");
    return;
  }
  ctx.trace("recovery", "kind=nd target=" + std::to_string(n->nd) + " id=" + std::to_string(nid) +
                            " attempt=" + std::to_string(m->nd_restarts.attempts(nid)));
  if (k.restart(n->nd)) {
    m->nd_restart_pending.erase(nid);
    return;
  }
  if (k.host_alive(n->host))
    ctx.timer(dir_.config.recovery.restart_delay, TimerTag{kNdRestart, nid});
  else
    m->nd_restart_pending.erase(nid);
}

void Gsd::finish_rebuild(Context& ctx, Managed& m) {
  m.rebuilding = false;
  auto& k = ctx.kernel();

  for (const auto& rec : m.wal.unfinished()) {
    if (rec.op == provision::TxnKind::Create) {
      log_wal(ctx, m, provision::IntentLogRecord{rec.txn, rec.op, rec.vids, provision::TxnPhase::Aborted});
      ctx.trace("rollback", "partition=" + std::to_string(m.view->partition().value) + " txn=" +
                                std::to_string(rec.txn) + " vids=" + join_ids(rec.vids));
    } else {
      for (Vid vid : rec.vids) destroy_vm(ctx, m, vid, "roll-forward");
      log_wal(ctx, m, provision::IntentLogRecord{rec.txn, rec.op, rec.vids, provision::TxnPhase::Committed});
    }
  }

  auto reports = std::move(m.early);
  m.early.clear();
  for (auto& [nid, reg] : reports) on_nd_register(ctx, m, reg);

  for (Nid nid : m.awaiting_state) {
    notify(ctx, m, m.view->on_node_unreachable(nid));
    const auto* n = dir_.node(nid);
    if (!k.alive(n->nd) && k.host_alive(n->host) && m.nd_restart_pending.insert(nid).second)
      ctx.timer(dir_.config.recovery.restart_delay, TimerTag{kNdRestart, nid});
  }
  m.awaiting_state.clear();

  if (m.index == index_ && rebuilding_own_) {
    rebuilding_own_ = false;
    if (k.crashed_before(ctx.self()))
      ctx.trace("recovered", "kind=gsd id=" + std::to_string(gm_.state().self.gid.value));
    feed(ctx, gm::in::Rejoin{});
  } else if (m.index != index_) {
    ctx.trace("takeover", "partition=" + std::to_string(m.view->partition().value) + " by=" +
                              std::to_string(gm_.state().self.gid.value) + " phase=done");
  }
  arm_monitor(ctx);
  pump(ctx, m);
}

void Gsd::destroy_vm(Context& ctx, Managed& m, Vid vid, std::string_view reason) {
  if (m.view) notify(ctx, m, m.view->remove_vm(vid));
  auto slot = provision::decode_vid(vid, dir_.config.placement);
  if (m.view && slot.node_index < m.view->node_by_index().size()) {
    Nid nid = m.view->node_by_index()[slot.node_index];
    ctx.send(nd_pid(nid), wire::VmCommand{wire::CommandKind::Destroy, vid, 0, provision::VmOp::Start});
  }
  ctx.trace("cleanup", "vid=" + std::to_string(vid) + " reason=" + std::string(reason));
}

void Gsd::log_wal(Context& ctx, Managed& m, provision::IntentLogRecord r) {
  ctx.trace("wal", "partition=" + std::to_string(m.view->partition().value) + " txn=" + std::to_string(r.txn) +
                       " op=" + std::string(provision::to_string(r.op)) +
                       " phase=" + std::string(provision::to_string(r.phase)) + " vids=" + join_ids(r.vids));
  m.wal.append(std::move(r));
  persist(ctx, m);
}

void Gsd::persist(Context& ctx, Managed& m) {
  if (m.durable_wal) ctx.kernel().cell(ctx.self())["wal"] = m.wal.serialize();
}

void Gsd::persist_subs(Context& ctx) {
  std::string s;
  for (const auto& [client, f] : own().sub_filters) {
    if (!s.empty()) s += ';';
    s += client + "=" + std::string(partition::to_string(f));
  }
  ctx.kernel().cell(ctx.self())["subs"] = s;
}

std::vector<partition::PartitionSnapshot> Gsd::snapshots() const {
  std::vector<partition::PartitionSnapshot> out;
  for (const auto& [idx, m] : managed_)
    if (m.view && !m.rebuilding) out.push_back(m.view->snapshot(gm_.state().self.gid));
  return out;
}

void Gsd::emit_final(Context& ctx) const {
  const auto& st = gm_.state();
  std::string manages;
  for (const auto& [idx, m] : managed_) {
    if (!m.view) continue;
    if (!manages.empty()) manages += ',';
    manages += std::to_string(m.view->partition().value);
  }
  ctx.trace("final", "gid=" + std::to_string(st.self.gid.value) + " alive=1 view=" + std::to_string(st.view.view_id) +
                         " members=" + gm::format_members(st.view) +
                         " leader=" + std::to_string(st.leader ? st.leader->value : 0) +
                         " rank=" + std::string(gm::to_string(st.rank)) + " active=" + (st.active() ? "1" : "0") +
                         " halted=" + (st.halted ? "1" : "0") + " manages=" + (manages.empty() ? "-" : manages));
  for (const auto& [idx, m] : managed_)
    if (m.view) ctx.trace("partition", partition::format_snapshot(m.view->snapshot(st.self.gid)));
}

// --- provisioning ------------------------------------------------------------------------

provision::TxnId Gsd::next_txn(Context& ctx) {
  return (static_cast<provision::TxnId>(ctx.self()) << 40) |
         (static_cast<provision::TxnId>(ctx.kernel().incarnation(ctx.self()) & 0xffff) << 24) | (++txn_seq_);
}

void Gsd::enqueue(Context& ctx, Managed& m, Pid client, wire::Message msg) {
  m.queue.push_back(Queued{client, std::move(msg)});
  pump(ctx, m);
}

void Gsd::pump(Context& ctx, Managed& m) {
  while (!m.active && !m.rebuilding && m.view && !m.queue.empty()) {
    Queued q = std::move(m.queue.front());
    m.queue.pop_front();
    std::visit(overloaded{
                   [&](const wire::CreateVms& x) { start_create(ctx, m, q.client, x); },
                   [&](const wire::DestroyVms& x) { start_destroy(ctx, m, q.client, x); },
                   [&](const wire::ManageVm& x) { start_op(ctx, m, q.client, x); },
                   [&](const auto&) {},
               },
               q.msg);
  }
}

void Gsd::start_create(Context& ctx, Managed& m, Pid client, const wire::CreateVms& req) {
  const auto& view = *m.view;
  const auto& cfg = dir_.config.placement;
  std::vector<provision::NodeCapacity> caps;
  for (std::uint32_t i = 0; i < view.node_by_index().size(); ++i) {
    Nid nid = view.node_by_index()[i];
    provision::NodeCapacity c;
    c.node_index = i;
    auto it = view.nodes().find(nid);
    c.running = it != view.nodes().end() && it->second == partition::NodeState::Running;
    for (Vid vid : view.vms_on(nid)) c.used_slots.insert(provision::decode_vid(vid, cfg).slot);
    caps.push_back(std::move(c));
  }
  auto placed = provision::place(view.partition(), std::move(caps), req.placements, cfg);
  if (!placed) {
    ctx.send(client, wire::ClientResult{req.request, false, sanitize(placed.error)});
    return;
  }
  Active a;
  a.kind = Active::Kind::Create;
  a.client = client;
  a.request = req.request;
  a.txn = next_txn(ctx);
  for (const auto& s : placed.slots) a.vids.push_back(provision::encode_vid(s, cfg));
  a.awaiting.insert(a.vids.begin(), a.vids.end());
  log_wal(ctx, m, provision::IntentLogRecord{a.txn, provision::TxnKind::Create, a.vids, provision::TxnPhase::Begun});
  m.active = a;
  if (a.vids.empty()) {
    log_wal(ctx, m, provision::IntentLogRecord{a.txn, provision::TxnKind::Create, {}, provision::TxnPhase::Committed});
    finish_active(ctx, m, true, "-");
    return;
  }
  for (Vid vid : a.vids)
    ctx.send(nd_pid(*view.host_of(vid)), wire::VmCommand{wire::CommandKind::Create, vid, a.txn, provision::VmOp::Start});
}

void Gsd::start_destroy(Context& ctx, Managed& m, Pid client, const wire::DestroyVms& req) {
  Active a;
  a.kind = Active::Kind::Destroy;
  a.client = client;
  a.request = req.request;
  for (Vid vid : req.vids) {
    Managed* owner = managing_vm(vid);
    if (owner != &m || !m.view->has_vm(vid)) {
      a.errors.push_back(std::to_string(vid) + ":unknown");
      continue;
    }
    if (std::find(a.vids.begin(), a.vids.end(), vid) == a.vids.end()) a.vids.push_back(vid);
  }
  a.txn = next_txn(ctx);
  log_wal(ctx, m, provision::IntentLogRecord{a.txn, provision::TxnKind::Destroy, a.vids, provision::TxnPhase::Begun});
  m.active = a;
  for (Vid vid : a.vids) {
    Nid nid = *m.view->host_of(vid);
    auto it = m.view->nodes().find(nid);
    if (it == m.view->nodes().end() || it->second != partition::NodeState::Running) {
      notify(ctx, m, m.view->remove_vm(vid));
      continue;
    }
    m.active->awaiting.insert(vid);
    ctx.send(nd_pid(nid), wire::VmCommand{wire::CommandKind::Destroy, vid, a.txn, provision::VmOp::Start});
  }
  if (m.active->awaiting.empty()) {
    log_wal(ctx, m, provision::IntentLogRecord{a.txn, provision::TxnKind::Destroy, a.vids, provision::TxnPhase::Committed});
    finish_active(ctx, m, a.errors.empty(), a.errors.empty() ? join_ids(a.vids) : join_strings(a.errors));
  }
}

void Gsd::start_op(Context& ctx, Managed& m, Pid client, const wire::ManageVm& req) {
  auto reject = [&](const char* why) { ctx.send(client, wire::ClientResult{req.request, false, why}); };
  auto it = m.view->vms().find(req.vid);
  if (it == m.view->vms().end()) return reject("unknown-vm");
  if (!provision::transition(to_lifecycle(it->second), req.op)) return reject("invalid-transition");
  Nid nid = *m.view->host_of(req.vid);
  auto n = m.view->nodes().find(nid);
  if (n == m.view->nodes().end() || n->second != partition::NodeState::Running) return reject("node-down");
  Active a;
  a.kind = Active::Kind::Op;
  a.client = client;
  a.request = req.request;
  a.vids = {req.vid};
  a.awaiting = {req.vid};
  a.op = req.op;
  m.active = a;
  ctx.send(nd_pid(nid), wire::VmCommand{wire::CommandKind::Op, req.vid, 0, req.op});
}

void Gsd::on_command_done(Context& ctx, Pid, const wire::VmCommandDone& d) {
  Managed* mp = managing_vm(d.vid);
  if (!mp || !mp->view) return;
  Managed& m = *mp;
  const bool ours = m.active && m.active->awaiting.count(d.vid) &&
                    ((d.kind == wire::CommandKind::Op && m.active->kind == Active::Kind::Op) ||
                     (d.kind != wire::CommandKind::Op && m.active->txn == d.txn));
  if (!ours) {
    if (d.kind == wire::CommandKind::Create) {
      auto phase = phase_of(m.wal, d.txn);
      if (phase != provision::TxnPhase::Committed) destroy_vm(ctx, m, d.vid, "stray");
    }
    return;
  }
  auto& a = *m.active;
  a.awaiting.erase(d.vid);
  switch (a.kind) {
    case Active::Kind::Create:
      if (d.ok) notify(ctx, m, m.view->add_vm(d.vid, partition::VmState::Running));
      if (a.awaiting.empty()) {
        log_wal(ctx, m, provision::IntentLogRecord{a.txn, provision::TxnKind::Create, a.vids, provision::TxnPhase::Committed});
        std::set<Nid> involved;
        for (Vid vid : a.vids) involved.insert(*m.view->host_of(vid));
        for (Nid nid : involved) ctx.send(nd_pid(nid), wire::TxnCommit{a.txn});
        finish_active(ctx, m, true, join_ids(a.vids));
      }
      break;
    case Active::Kind::Destroy:
      notify(ctx, m, m.view->remove_vm(d.vid));
      if (a.awaiting.empty()) {
        log_wal(ctx, m, provision::IntentLogRecord{a.txn, provision::TxnKind::Destroy, a.vids, provision::TxnPhase::Committed});
        bool ok = a.errors.empty();
        finish_active(ctx, m, ok, ok ? join_ids(a.vids) : join_strings(a.errors));
      }
      break;
    case Active::Kind::Op:
      if (d.ok) notify(ctx, m, m.view->on_vm_report(d.vid, d.state));
      finish_active(ctx, m, d.ok, std::string(provision::to_string(a.op)) + ":" +
                                      std::string(partition::to_string(d.state)));
      break;
  }
}

void Gsd::abort_active(Context& ctx, Managed& m, Nid dead) {
  auto& a = *m.active;
  bool involved = false;
  for (Vid vid : a.vids)
    if (m.view->host_of(vid) == dead) involved = true;
  if (!involved) return;
  switch (a.kind) {
    case Active::Kind::Create: {
      log_wal(ctx, m, provision::IntentLogRecord{a.txn, provision::TxnKind::Create, a.vids, provision::TxnPhase::Aborted});
      ctx.trace("rollback", "partition=" + std::to_string(m.view->partition().value) + " txn=" +
                                std::to_string(a.txn) + " vids=" + join_ids(a.vids));
      for (Vid vid : a.vids) {
        notify(ctx, m, m.view->remove_vm(vid));
        Nid nid = *m.view->host_of(vid);
        if (nid != dead)
          ctx.send(nd_pid(nid), wire::VmCommand{wire::CommandKind::Destroy, vid, 0, provision::VmOp::Start});
      }
      finish_active(ctx, m, false, "aborted");
      break;
    }
    case Active::Kind::Destroy: {
      for (Vid vid : a.vids) {
        if (m.view->host_of(vid) != dead) continue;
        a.awaiting.erase(vid);
        notify(ctx, m, m.view->remove_vm(vid));
      }
      if (a.awaiting.empty()) {
        log_wal(ctx, m, provision::IntentLogRecord{a.txn, provision::TxnKind::Destroy, a.vids, provision::TxnPhase::Committed});
        finish_active(ctx, m, a.errors.empty(), a.errors.empty() ? join_ids(a.vids) : join_strings(a.errors));
      }
      break;
    }
    case Active::Kind::Op:
      finish_active(ctx, m, false, "node-crashed");
      break;
  }
}

void Gsd::finish_active(Context& ctx, Managed& m, bool ok, std::string detail) {
  auto a = std::move(*m.active);
  m.active.reset();
  ctx.send(a.client, wire::ClientResult{a.request, ok, detail.empty() ? "-" : std::move(detail)});
  pump(ctx, m);
}

// --- cluster view --------------------------------------------------------------------------

void Gsd::start_fetch(Context& ctx, Pid client, std::uint64_t request) {
  const auto& st = gm_.state();
  if (!st.active()) {
    ctx.send(client, wire::ClusterStateResult{request, partition::ClusterView{}, 0, 0, false});
    ctx.trace("cluster_view", "request=" + std::to_string(request) + " entry_gid=" + std::to_string(st.self.gid.value) +
                                  " stamp=0 members=0 parts=0 digest=0 remote_msgs=0 retries=0 complete=0");
    return;
  }
  std::uint64_t id = (static_cast<std::uint64_t>(ctx.self()) << 40) |
                    (static_cast<std::uint64_t>(ctx.kernel().incarnation(ctx.self()) & 0xffff) << 24) | (++fetch_seq_);
  auto [it, fresh] =
      fetches_.emplace(id, Fetch{partition::ClusterFetch(id, dir_.config.fetch_retries), client, request});
  const auto& hb = dir_.config.heartbeat;
  ctx.timer(2 * (hb.timeout + hb.interval) + 3 * hb.interval, TimerTag{kFetchTimeout, id});
  begin_fetch_round(ctx, id, it->second);
}

void Gsd::begin_fetch_round(Context& ctx, std::uint64_t id, Fetch& f) {
  const auto& st = gm_.state();
  auto targets = f.fetch.begin_round(st.view, st.self.gid, snapshots());
  f.members = targets.size() + 1;
  for (const auto& t : targets) send_to(ctx, t, wire::ClusterQuery{id, f.fetch.stamp()});
  if (targets.empty()) finish_fetch(ctx, id, f);
}

void Gsd::finish_fetch(Context& ctx, std::uint64_t id, Fetch& f) {
  auto view = f.fetch.result();
  const auto& st = gm_.state();
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(view.digest()));
  const std::size_t members = f.members;
  ctx.trace("cluster_view", "request=" + std::to_string(f.client_request) + " fetch=" + std::to_string(id) +
                                " entry_gid=" + std::to_string(st.self.gid.value) +
                                " stamp=" + std::to_string(view.stamp) + " members=" + std::to_string(members) +
                                " parts=" + std::to_string(view.partitions.size()) + " digest=" + digest +
                                " remote_msgs=" + std::to_string(f.fetch.remote_messages()) +
                                " retries=" + std::to_string(f.fetch.retries_used()) +
                                " complete=" + (f.fetch.complete() ? "1" : "0"));
  ctx.send(f.client, wire::ClusterStateResult{f.client_request, std::move(view), f.fetch.remote_messages(),
                                              f.fetch.retries_used(), f.fetch.complete()});
  fetches_.erase(id);
}

}  // namespace vcm::cluster
