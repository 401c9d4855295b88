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

#include "vcm/sim/kernel.hpp"

#include <algorithm>
#include <stdexcept>

namespace vcm::sim {

namespace {

template <class Events>
std::uint64_t oneshots(const Events& events) {
  return static_cast<std::uint64_t>(std::count_if(events.begin(), events.end(), [](const auto& e) { return !e.periodic; }));
}

}  // namespace

SimTime Context::now() const { return kernel_.now(); }
void Context::send(Pid to, wire::Message m) { kernel_.send(self_, to, std::move(m)); }
void Context::timer(SimTime delay, TimerTag tag, bool periodic) { kernel_.set_timer(self_, delay, tag, periodic); }
void Context::trace(std::string_view kind, std::string_view payload) { kernel_.record(self_, kind, payload); }

bool Kernel::Later::operator()(const Event& a, const Event& b) const {
  if (a.time != b.time) return a.time > b.time;
  if (a.pid != b.pid) return a.pid > b.pid;
  return a.seq > b.seq;
}

Kernel::Kernel(KernelConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.latency_min < SimTime{} || cfg_.latency_max < cfg_.latency_min)
    throw std::invalid_argument("latency range must satisfy 0 <= min <= max");
}

Kernel::~Kernel() = default;

Kernel::Process& Kernel::proc(Pid p) {
  if (p == 0 || p > procs_.size()) throw std::out_of_range("unknown pid " + std::to_string(p));
  return procs_[p - 1];
}
const Kernel::Process& Kernel::proc(Pid p) const {
  if (p == 0 || p > procs_.size()) throw std::out_of_range("unknown pid " + std::to_string(p));
  return procs_[p - 1];
}

bool Kernel::traced(const wire::Message& m) const { return cfg_.trace_heartbeats || !wire::is_heartbeat(m); }

// --- topology ----------------------------------------------------------------

HostId Kernel::add_host(std::string name, std::optional<HostId> parent) {
  hosts_.push_back(Host{std::move(name), parent, true, {}});
  return static_cast<HostId>(hosts_.size() - 1);
}

bool Kernel::host_alive(HostId h) const { return hosts_.at(h).alive; }
const std::string& Kernel::host_name(HostId h) const { return hosts_.at(h).name; }
std::optional<HostId> Kernel::host_parent(HostId h) const { return hosts_.at(h).parent; }
std::map<std::string, std::string>& Kernel::host_tags(HostId h) { return hosts_.at(h).tags; }

void Kernel::revive_host(HostId h) {
  auto& host = hosts_.at(h);
  if (host.alive) return;
  host.alive = true;
  record(kKernelPid, "host_up", "host=" + host.name);
}

Pid Kernel::spawn(std::string name, HostId host, ActorFactory factory) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate process name " + name);
  Process p;
  p.name = name;
  p.host = host;
  p.factory = std::move(factory);
  p.alive = hosts_.at(host).alive;
  procs_.push_back(std::move(p));
  Pid pid = static_cast<Pid>(procs_.size());
  by_name_.emplace(name, pid);
  record(pid, "spawn", "name=" + name + " host=" + hosts_[host].name);
  auto& pr = proc(pid);
  if (pr.alive) {
    pr.actor = pr.factory();
    Context ctx(*this, pid);
    pr.actor->on_start(ctx);
  }
  return pid;
}

std::optional<Pid> Kernel::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

const std::string& Kernel::name_of(Pid p) const { return proc(p).name; }
bool Kernel::alive(Pid p) const { return proc(p).alive; }
bool Kernel::paused(Pid p) const { return proc(p).paused; }
HostId Kernel::host_of(Pid p) const { return proc(p).host; }
std::uint32_t Kernel::incarnation(Pid p) const { return proc(p).incarnation; }
bool Kernel::crashed_before(Pid p) const { return proc(p).last_exit_crash; }

Actor* Kernel::actor(Pid p) {
  auto& pr = proc(p);
  return pr.alive ? pr.actor.get() : nullptr;
}

std::map<std::string, std::string>& Kernel::cell(Pid p) { return proc(p).cell; }

void Kernel::set_restart_failure(Pid p, bool fail) { proc(p).fail_restart = fail; }

// --- faults ------------------------------------------------------------------

void Kernel::kill(Pid p, std::string_view cause) {
  auto& pr = proc(p);
  if (!pr.alive) return;
  pr.alive = false;
  pr.paused = false;
  pr.last_exit_crash = cause != "stop";
  held_ -= oneshots(pr.held);
  pr.held.clear();
  graveyard_.push_back(std::move(pr.actor));
  std::string payload = "cause=";
  payload += cause;
  payload += " name=" + pr.name;
  record(p, cause == "stop" ? "stop" : "crash", payload);
}

void Kernel::crash_process(Pid p, std::string_view cause) { kill(p, cause); }

void Kernel::stop(Pid p) { kill(p, "stop"); }

std::vector<bool> Kernel::subtree(HostId h) const {
  std::vector<bool> in(hosts_.size(), false);
  for (HostId i = 0; i < hosts_.size(); ++i) {
    for (std::optional<HostId> cur = i; cur; cur = hosts_[*cur].parent) {
      if (*cur == h) {
        in[i] = true;
        break;
      }
    }
  }
  return in;
}

void Kernel::remove_host(HostId h) {
  auto doomed = subtree(h);
  for (Pid p = 1; p <= procs_.size(); ++p)
    if (doomed[proc(p).host]) kill(p, "stop");
  for (HostId i = 0; i < hosts_.size(); ++i) {
    if (!doomed[i] || !hosts_[i].alive) continue;
    hosts_[i].alive = false;
    hosts_[i].tags.clear();
    record(kKernelPid, "host_removed", "host=" + hosts_[i].name);
  }
}

void Kernel::crash_host(HostId h) {
  auto doomed = subtree(h);
  for (HostId i = 0; i < hosts_.size(); ++i) {
    if (!doomed[i] || !hosts_[i].alive) continue;
    hosts_[i].alive = false;
    hosts_[i].tags.clear();
    record(kKernelPid, "host_down", "host=" + hosts_[i].name);
  }
  for (Pid p = 1; p <= procs_.size(); ++p) {
    auto& pr = proc(p);
    if (!doomed[pr.host]) continue;
    kill(p, "host");
    pr.cell.clear();
  }
}

void Kernel::pause(Pid p) {
  auto& pr = proc(p);
  if (!pr.alive || pr.paused) return;
  pr.paused = true;
  pr.paused_since = now_;
  record(p, "pause", "name=" + pr.name);
}

void Kernel::resume(Pid p) {
  auto& pr = proc(p);
  if (!pr.alive || !pr.paused) return;
  pr.paused = false;
  record(p, "resume", "name=" + pr.name + " paused_for=" + (now_ - pr.paused_since).str());
  {
    Context ctx(*this, p);
    pr.actor->on_resume(ctx, now_ - pr.paused_since);
  }
  auto& again = proc(p);
  if (!again.alive) return;
  auto held = std::move(again.held);
  again.held.clear();
  held_ -= oneshots(held);
  for (auto& e : held) {
    e.time = now_;
    e.seq = ++seq_;
    push(std::move(e));
  }
}

bool Kernel::restart(Pid p, std::optional<HostId> on_host) {
  auto& pr = proc(p);
  HostId target = on_host.value_or(pr.host);
  if (pr.alive) return false;
  if (!hosts_.at(target).alive || pr.fail_restart) {
    record(p, "restart_failed",
           "name=" + pr.name + " host=" + hosts_[target].name + " reason=" +
               (pr.fail_restart ? "forced" : "host-down"));
    return false;
  }
  if (target != pr.host) pr.cell.clear();
  pr.host = target;
  pr.alive = true;
  pr.paused = false;
  ++pr.incarnation;
  pr.actor = pr.factory();
  record(p, "restart", "name=" + pr.name + " host=" + hosts_[target].name + " inc=" + std::to_string(pr.incarnation));
  Context ctx(*this, p);
  pr.actor->on_start(ctx);
  return true;
}

// --- scheduling --------------------------------------------------------------

void Kernel::push(Event e) {
  if (std::holds_alternative<Injection>(e.body))
    ++pending_injections_;
  else if (!e.periodic)
    ++pending_oneshot_;
  heap_.push_back(std::move(e));
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

void Kernel::release(const Event& e) {
  if (std::holds_alternative<Injection>(e.body))
    --pending_injections_;
  else if (!e.periodic)
    --pending_oneshot_;
}

SimTime Kernel::latency() {
  if (cfg_.latency_min == cfg_.latency_max) return cfg_.latency_min;
  auto span = static_cast<std::uint64_t>((cfg_.latency_max - cfg_.latency_min).us()) + 1;
  return cfg_.latency_min + SimTime::micros(static_cast<std::int64_t>(rng_() % span));
}

void Kernel::at(SimTime t, std::function<void()> fn) {
  if (t < now_) t = now_;
  push(Event{t, kKernelPid, ++seq_, false, Injection{std::move(fn)}});
}

void Kernel::with_context(Pid p, const std::function<void(Actor&, Context&)>& fn) {
  auto& pr = proc(p);
  if (!pr.alive || pr.paused) return;
  Context ctx(*this, p);
  fn(*pr.actor, ctx);
}

void Kernel::send(Pid from, Pid to, wire::Message m) {
  auto& dst = proc(to);
  SimTime at = now_ + latency();
  auto key = (static_cast<std::uint64_t>(from) << 32) | to;
  auto [it, fresh] = channel_tail_.try_emplace(key, at);
  if (!fresh) {
    at = std::max(at, it->second);
    it->second = at;
  }
  std::uint64_t id = ++msg_seq_;
  bool periodic = wire::is_heartbeat(m);
  if (traced(m)) record(from, "send", "msg=" + std::to_string(id) + " to=" + std::to_string(to) + " at=" + at.str() + " " + wire::describe(m));
  push(Event{at, to, ++seq_, periodic, Delivery{id, from, dst.incarnation, std::move(m)}});
}

void Kernel::set_timer(Pid p, SimTime delay, TimerTag tag, bool periodic) {
  push(Event{now_ + delay, p, ++seq_, periodic, TimerFire{proc(p).incarnation, tag}});
}

void Kernel::dispatch(Event& e) {
  if (auto* inj = std::get_if<Injection>(&e.body)) {
    release(e);
    note_activity();
    inj->fn();
    return;
  }
  auto& pr = proc(e.pid);
  std::uint32_t inc = 0;
  if (auto* d = std::get_if<Delivery>(&e.body))
    inc = d->incarnation;
  else
    inc = std::get<TimerFire>(e.body).incarnation;

  if (!pr.alive || pr.incarnation != inc) {
    release(e);
    if (auto* d = std::get_if<Delivery>(&e.body); d && traced(d->msg)) {
      record(e.pid, "drop",
             "msg=" + std::to_string(d->msg_id) + " from=" + std::to_string(d->from) +
                 " type=" + std::string(wire::type_name(d->msg)) + " reason=" + (pr.alive ? "stale" : "dead"));
    }
    return;
  }
  if (pr.paused) {
    release(e);
    if (!e.periodic) ++held_;
    pr.held.push_back(std::move(e));
    return;
  }
  release(e);
  if (!e.periodic) note_activity();
  deliver(pr, e.pid, e);
}

void Kernel::deliver(Process& pr, Pid pid, Event& e) {
  Context ctx(*this, pid);
  Actor* actor = pr.actor.get();
  if (auto* d = std::get_if<Delivery>(&e.body)) {
    if (traced(d->msg))
      record(pid, "recv",
             "msg=" + std::to_string(d->msg_id) + " from=" + std::to_string(d->from) +
                 " type=" + std::string(wire::type_name(d->msg)));
    actor->on_message(ctx, d->from, d->msg);
  } else {
    actor->on_timer(ctx, std::get<TimerFire>(e.body).tag);
  }
}

RunResult Kernel::run() {
  RunResult r;
  while (!heap_.empty()) {
    const Event& top = heap_.front();
    if (pending_injections_ == 0 && pending_oneshot_ == 0 && held_ == 0 &&
        top.time > last_activity_ + cfg_.quiet_window) {
      now_ = std::max(now_, last_activity_ + cfg_.quiet_window);
      r.quiescent = true;
      break;
    }
    if (top.time > cfg_.horizon) {
      now_ = cfg_.horizon;
      r.error = "horizon " + cfg_.horizon.str() + " reached with pending work";
      break;
    }
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event e = std::move(heap_.back());
    heap_.pop_back();
    now_ = e.time;
    ++r.events;
    dispatch(e);
    graveyard_.clear();
  }
  if (heap_.empty()) r.quiescent = pending_injections_ == 0 && pending_oneshot_ == 0 && held_ == 0;
  r.end = now_;
  return r;
}

std::vector<std::string> Kernel::pending_summary(std::size_t limit) const {
  std::vector<const Event*> live;
  for (const auto& e : heap_)
    if (!e.periodic) live.push_back(&e);
  std::sort(live.begin(), live.end(), [](const Event* a, const Event* b) { return Later{}(*b, *a); });
  std::vector<std::string> out;
  for (const auto* e : live) {
    if (out.size() >= limit) break;
    std::string s = e->time.str() + " pid=" + std::to_string(e->pid) + " ";
    if (auto* d = std::get_if<Delivery>(&e->body))
      s += "deliver " + std::string(wire::type_name(d->msg));
    else if (std::holds_alternative<TimerFire>(e->body))
      s += "timer " + std::to_string(std::get<TimerFire>(e->body).tag.kind);
    else
      s += "injection";
    out.push_back(std::move(s));
  }
  for (const auto& pr : procs_)
    if (!pr.held.empty()) out.push_back(pr.name + " holds " + std::to_string(pr.held.size()) + " events while paused");
  return out;
}

}  // namespace vcm::sim
