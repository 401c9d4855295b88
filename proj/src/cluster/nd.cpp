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

#include "vcm/cluster/daemons.hpp"

namespace vcm::cluster {

namespace {

enum TimerKind : std::uint32_t { kBoot = 1, kBeat, kMonitor, kOpDone, kVmdRestart };

std::string vm_tag(Vid vid) { return "vm." + std::to_string(vid); }

std::optional<partition::VmState> state_from_code(char c) {
  switch (c) {
    case 'R':
      return partition::VmState::Running;
    case 'C':
      return partition::VmState::Crashed;
    case 'S':
      return partition::VmState::Suspended;
    case 'H':
      return partition::VmState::Halted;
    default:
      return std::nullopt;
  }
}

provision::VmLifecycleState lifecycle(partition::VmState s) {
  switch (s) {
    case partition::VmState::Running:
      return provision::VmLifecycleState::Running;
    case partition::VmState::Suspended:
      return provision::VmLifecycleState::Suspended;
    case partition::VmState::Crashed:
      return provision::VmLifecycleState::Crashed;
    case partition::VmState::Halted:
      return provision::VmLifecycleState::Halted;
  }
  return provision::VmLifecycleState::Halted;
}

}  // namespace

void Nd::on_start(Context& ctx) { ctx.timer(SimTime{}, TimerTag{kBoot}); }

Pid Nd::vmd_pid(Vid vid) const {
  auto it = dir_.vms.find(vid);
  return it == dir_.vms.end() ? 0 : it->second.vmd;
}

void Nd::boot(Context& ctx) {
  auto& k = ctx.kernel();
  const auto* node = dir_.node(nid_);
  auto& tags = k.host_tags(node->host);
  manager_ = dir_.partition(node->partition).gsd;
  if (auto it = tags.find("manager"); it != tags.end())
    if (auto p = k.find(it->second)) manager_ = *p;

  for (const auto& [key, val] : tags) {
    if (key.rfind("vm.", 0) != 0 || val.size() < 3) continue;
    Vid vid = static_cast<Vid>(std::stoul(key.substr(3)));
    auto st = state_from_code(val[0]);
    if (!st) continue;
    LocalVm vm{*st, std::stoull(val.substr(2))};
    auto info = dir_.vms.find(vid);
    if (info == dir_.vms.end() || !k.host_alive(info->second.host)) vm.state = partition::VmState::Crashed;
    vms_[vid] = vm;
  }
  for (const auto& [vid, vm] : vms_)
    if (vm.state == partition::VmState::Running) vmds_.watch(vid, ctx.now());

  register_with(ctx, manager_);
  ctx.timer(dir_.config.heartbeat.interval, TimerTag{kBeat}, true);
  arm_monitor(ctx);
  if (k.crashed_before(ctx.self())) ctx.trace("recovered", "kind=nd id=" + std::to_string(nid_));
}

void Nd::register_with(Context& ctx, Pid to) {
  wire::NdRegister r{nid_, {}};
  for (const auto& [vid, vm] : vms_) r.vms.push_back(wire::VmRecord{vid, vm.state, vm.pending});
  ctx.send(to, std::move(r));
}

void Nd::save(Context& ctx, Vid vid) {
  auto& tags = ctx.kernel().host_tags(dir_.node(nid_)->host);
  auto it = vms_.find(vid);
  if (it == vms_.end()) {
    tags.erase(vm_tag(vid));
    return;
  }
  tags[vm_tag(vid)] = std::string(1, partition::code(it->second.state)) + ":" + std::to_string(it->second.pending);
}

void Nd::leave(Context& ctx) {
  ctx.send(manager_, wire::NdLeave{nid_});
  auto& k = ctx.kernel();
  for (const auto& [vid, vm] : vms_) {
    auto it = dir_.vms.find(vid);
    if (it != dir_.vms.end()) k.remove_host(it->second.host);
    k.host_tags(dir_.node(nid_)->host).erase(vm_tag(vid));
  }
  vms_.clear();
  vmds_.clear();
  ops_.clear();
}

void Nd::on_resume(Context& ctx, SimTime) {
  vmds_.reset_all(ctx.now());
  arm_monitor(ctx);
}

// --- monitoring ----------------------------------------------------------------

void Nd::arm_monitor(Context& ctx) {
  auto best = vmds_.next_deadline();
  if (!best) return;
  if (monitor_at_ && *monitor_at_ <= *best && *monitor_at_ >= ctx.now()) return;
  monitor_at_ = *best;
  SimTime delay = *best < ctx.now() ? SimTime{} : *best - ctx.now();
  ctx.timer(delay, TimerTag{kMonitor, ++monitor_gen_}, true);
}

void Nd::on_vmd_timeout(Context& ctx, Vid vid) {
  auto& k = ctx.kernel();
  const Pid vmd = vmd_pid(vid);
  ctx.trace("suspect", "kind=vmd target=" + std::to_string(vmd) + " id=" + std::to_string(vid) +
                           " nid=" + std::to_string(nid_));
  std::string head = "kind=vmd target=" + std::to_string(vmd) + " id=" + std::to_string(vid);
  if (vmd != 0 && k.alive(vmd)) {
    ctx.trace("diagnose", head + " result=" + std::string(recovery::to_string(recovery::Diagnosis::ProcessAlive)) +
                              " action=none");
    return;
  }
  auto info = dir_.vms.find(vid);
  const bool host_up = info != dir_.vms.end() && k.host_alive(info->second.host);
  auto action = recovery::plan_child(recovery::ChildKind::Vmd, host_up);
  ctx.trace("diagnose", head + " result=" +
                            std::string(recovery::to_string(host_up ? recovery::Diagnosis::ProcessFailed
                                                                    : recovery::Diagnosis::NodeFailed)) +
                            " action=" + (action == recovery::ChildAction::Restart ? "restart" : "suppress"));
  if (action == recovery::ChildAction::Restart) {
    if (restart_pending_.insert(vid).second)
      ctx.timer(dir_.config.recovery.restart_delay, TimerTag{kVmdRestart, vid});
    return;
  }
  auto it = vms_.find(vid);
  if (it == vms_.end() || it->second.state == partition::VmState::Crashed) return;
  it->second.state = partition::VmState::Crashed;
  save(ctx, vid);
  ctx.send(manager_, wire::VmReport{vid, partition::VmState::Crashed});
}

void Nd::restart_vmd(Context& ctx, Vid vid) {
  restart_pending_.erase(vid);
  auto it = vms_.find(vid);
  if (it == vms_.end() || it->second.state != partition::VmState::Running) return;
  auto& k = ctx.kernel();
  const Pid vmd = vmd_pid(vid);
  if (k.alive(vmd)) return;
  if (restarts_.try_attempt(vid)) {
    ctx.trace("recovery", "kind=vmd target=" + std::to_string(vmd) + " id=" + std::to_string(vid) +
                              " attempt=" + std::to_string(restarts_.attempts(vid)));
    if (k.restart(vmd)) {
      restarts_.reset(vid);
      vmds_.heartbeat(vid, ctx.now());
      arm_monitor(ctx);
      return;
    }
    if (restart_pending_.insert(vid).second)
      ctx.timer(dir_.config.recovery.restart_delay, TimerTag{kVmdRestart, vid});
    return;
  }
  ctx.trace("recovery", "kind=vmd target=" + std::to_string(vmd) + " id=" + std::to_string(vid) + " gave_up=1");
  restarts_.reset(vid);
  it->second.state = partition::VmState::Crashed;
  vmds_.unwatch(vid);
  save(ctx, vid);
  ctx.send(manager_, wire::VmReport{vid, partition::VmState::Crashed});
}

// --- hypervisor operations -----------------------------------------------------------

void Nd::start_next(Context& ctx) {
  if (busy_ || ops_.empty()) return;
  busy_ = true;
  const auto& cmd = ops_.front().cmd;
  std::string_view name = cmd.kind == wire::CommandKind::Create    ? "create"
                          : cmd.kind == wire::CommandKind::Destroy ? "destroy"
                                                                   : provision::to_string(cmd.op);
  ctx.timer(dir_.config.op_time(name), TimerTag{kOpDone});
}

HostId Nd::vm_host(Context& ctx, Vid vid, bool create) {
  auto& k = ctx.kernel();
  auto it = dir_.vms.find(vid);
  if (it != dir_.vms.end()) {
    if (create) k.revive_host(it->second.host);
    return it->second.host;
  }
  VmInfo info;
  info.host = k.add_host("vm" + std::to_string(vid), dir_.node(nid_)->host);
  dir_.vms[vid] = info;
  return info.host;
}

void Nd::start_vmd(Context& ctx, Vid vid) {
  auto& k = ctx.kernel();
  auto& info = dir_.vms.at(vid);
  if (info.vmd == 0) {
    Directory* dir = &dir_;
    Nid nid = nid_;
    info.vmd = k.spawn("v" + std::to_string(vid), info.host,
                       [dir, vid, nid] { return std::make_unique<Vmd>(*dir, vid, nid); });
  } else if (!k.alive(info.vmd)) {
    k.restart(info.vmd, info.host);
  }
}

void Nd::complete(Context& ctx, const wire::VmCommand& cmd) {
  auto& k = ctx.kernel();
  wire::VmCommandDone done{cmd.kind, cmd.vid, cmd.txn, cmd.op, true, partition::VmState::Running};
  switch (cmd.kind) {
    case wire::CommandKind::Create: {
      vm_host(ctx, cmd.vid, true);
      vms_[cmd.vid] = LocalVm{partition::VmState::Running, cmd.txn};
      start_vmd(ctx, cmd.vid);
      vmds_.unwatch(cmd.vid);
      vmds_.watch(cmd.vid, ctx.now());
      save(ctx, cmd.vid);
      break;
    }
    case wire::CommandKind::Destroy: {
      auto it = vms_.find(cmd.vid);
      if (it != vms_.end()) {
        k.remove_host(dir_.vms.at(cmd.vid).host);
        vms_.erase(it);
      }
      vmds_.unwatch(cmd.vid);
      save(ctx, cmd.vid);
      done.state = partition::VmState::Halted;
      break;
    }
    case wire::CommandKind::Op: {
      auto it = vms_.find(cmd.vid);
      if (it == vms_.end()) {
        done.ok = false;
        done.state = partition::VmState::Crashed;
        break;
      }
      auto& vm = it->second;
      auto next = provision::transition(lifecycle(vm.state), cmd.op);
      if (!next) {
        done.ok = false;
        done.state = vm.state;
        break;
      }
      const Pid vmd = vmd_pid(cmd.vid);
      switch (cmd.op) {
        case provision::VmOp::Start:
          if (!k.alive(vmd)) k.restart(vmd);
          vm.state = partition::VmState::Running;
          vmds_.unwatch(cmd.vid);
          vmds_.watch(cmd.vid, ctx.now());
          break;
        case provision::VmOp::Shutdown:
          k.stop(vmd);
          vmds_.unwatch(cmd.vid);
          vm.state = partition::VmState::Halted;
          break;
        case provision::VmOp::Reboot:
          k.stop(vmd);
          k.restart(vmd);
          vmds_.unwatch(cmd.vid);
          vmds_.watch(cmd.vid, ctx.now());
          break;
        case provision::VmOp::Resize:
          break;
        case provision::VmOp::Suspend:
          k.pause(vmd);
          vmds_.unwatch(cmd.vid);
          vm.state = partition::VmState::Suspended;
          break;
        case provision::VmOp::Resume:
          k.resume(vmd);
          vmds_.unwatch(cmd.vid);
          vmds_.watch(cmd.vid, ctx.now());
          vm.state = partition::VmState::Running;
          break;
      }
      done.state = vm.state;
      save(ctx, cmd.vid);
      break;
    }
  }
  ctx.send(manager_, done);
  arm_monitor(ctx);
}

// --- dispatch ------------------------------------------------------------------------

void Nd::on_timer(Context& ctx, const TimerTag& t) {
  switch (t.kind) {
    case kBoot:
      boot(ctx);
      break;
    case kBeat:
      ctx.send(manager_, wire::NdHeartbeat{nid_});
      ctx.timer(dir_.config.heartbeat.interval, TimerTag{kBeat}, true);
      break;
    case kMonitor:
      if (t.arg != monitor_gen_) return;
      monitor_at_.reset();
      for (Vid vid : vmds_.on_tick(ctx.now())) on_vmd_timeout(ctx, vid);
      arm_monitor(ctx);
      break;
    case kOpDone: {
      if (ops_.empty()) {
        busy_ = false;
        break;
      }
      auto cmd = ops_.front().cmd;
      ops_.pop_front();
      busy_ = false;
      complete(ctx, cmd);
      start_next(ctx);
      break;
    }
    case kVmdRestart:
      restart_vmd(ctx, static_cast<Vid>(t.arg));
      break;
    default:
      break;
  }
}

void Nd::on_message(Context& ctx, Pid from, const wire::Message& m) {
  if (const auto* hb = std::get_if<wire::VmdHeartbeat>(&m)) {
    vmds_.heartbeat(hb->vid, ctx.now());
  } else if (const auto* cmd = std::get_if<wire::VmCommand>(&m)) {
    ops_.push_back(Pending{*cmd});
    start_next(ctx);
  } else if (const auto* c = std::get_if<wire::TxnCommit>(&m)) {
    for (auto& [vid, vm] : vms_) {
      if (vm.pending != c->txn) continue;
      vm.pending = 0;
      save(ctx, vid);
    }
  } else if (std::holds_alternative<wire::StateQuery>(m)) {
    register_with(ctx, from);
  } else if (const auto* a = std::get_if<wire::Adopt>(&m)) {
    auto& k = ctx.kernel();
    if (auto p = k.find(a->manager)) manager_ = *p;
    k.host_tags(dir_.node(nid_)->host)["manager"] = a->manager;
    register_with(ctx, manager_);
  }
}

// --- VM daemon -------------------------------------------------------------------------

void Vmd::on_start(Context& ctx) {
  ctx.timer(dir_.config.heartbeat.interval, TimerTag{1}, true);
  if (ctx.kernel().crashed_before(ctx.self())) ctx.trace("recovered", "kind=vmd id=" + std::to_string(vid_));
}

void Vmd::on_timer(Context& ctx, const TimerTag&) {
  ctx.send(dir_.node(nid_)->nd, wire::VmdHeartbeat{vid_});
  ctx.timer(dir_.config.heartbeat.interval, TimerTag{1}, true);
}

}  // namespace vcm::cluster
