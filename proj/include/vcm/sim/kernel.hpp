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
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vcm/sim/sim_time.hpp"
#include "vcm/sim/trace.hpp"
#include "vcm/wire.hpp"

namespace vcm::sim {

using HostId = std::uint32_t;

inline constexpr Pid kKernelPid = 0;

struct KernelConfig {
  SimTime latency_min = SimTime::millis(1);
  SimTime latency_max = SimTime::millis(1);
  std::uint64_t seed{1};
  /// Quiet period with no one-shot activity after which the run is
  /// declared quiescent.
  SimTime quiet_window = SimTime::seconds(30);
  SimTime horizon = SimTime::seconds(100000);
  bool trace_heartbeats{false};
};

struct TimerTag {
  std::uint32_t kind{0};
  std::uint64_t arg{0};
  std::uint64_t arg2{0};
};

class Kernel;

/// Handle through which an actor talks to the simulated world. Only valid
/// for the duration of one callback.
class Context {
 public:
  Context(Kernel& k, Pid self) : kernel_(k), self_(self) {}

  SimTime now() const;
  Pid self() const { return self_; }
  void send(Pid to, wire::Message m);
  /// One-shot timers count as pending work; periodic ones do not.
  void timer(SimTime delay, TimerTag tag, bool periodic = false);
  void trace(std::string_view kind, std::string_view payload);
  Kernel& kernel() { return kernel_; }

 private:
  Kernel& kernel_;
  Pid self_;
};

class Actor {
 public:
  virtual ~Actor() = default;
  virtual void on_start(Context&) {}
  virtual void on_message(Context& ctx, Pid from, const wire::Message& m) = 0;
  virtual void on_timer(Context&, const TimerTag&) {}
  /// Called after a pause; held messages and timers follow.
  virtual void on_resume(Context&, SimTime /*paused_for*/) {}
};

using ActorFactory = std::function<std::unique_ptr<Actor>()>;

struct RunResult {
  bool quiescent{false};
  SimTime end;
  std::uint64_t events{0};
  std::string error;
};

/// Single-threaded discrete-event kernel. Events run in (time, pid, seq)
/// order; the kernel itself is pid 0 so scheduled injections precede
/// process events at equal times.
class Kernel {
 public:
  explicit Kernel(KernelConfig cfg);
  ~Kernel();
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  const KernelConfig& config() const { return cfg_; }
  SimTime now() const { return now_; }
  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }

  // --- topology ------------------------------------------------------------
  HostId add_host(std::string name, std::optional<HostId> parent = std::nullopt);
  bool host_alive(HostId h) const;
  const std::string& host_name(HostId h) const;
  std::optional<HostId> host_parent(HostId h) const;
  /// Small per-host string tags (hypervisor bookkeeping) that survive
  /// process crashes on the host.
  std::map<std::string, std::string>& host_tags(HostId h);
  /// Brings a crashed or removed host back (empty, no processes).
  void revive_host(HostId h);
  /// Orderly teardown of a host and its descendants (processes stopped,
  /// not crashed).
  void remove_host(HostId h);

  Pid spawn(std::string name, HostId host, ActorFactory factory);
  std::optional<Pid> find(std::string_view name) const;
  const std::string& name_of(Pid p) const;
  bool alive(Pid p) const;
  bool paused(Pid p) const;
  HostId host_of(Pid p) const;
  std::uint32_t incarnation(Pid p) const;
  /// True if the last termination of the process was a crash.
  bool crashed_before(Pid p) const;
  Actor* actor(Pid p);
  std::size_t process_count() const { return procs_.size(); }

  // --- faults and control --------------------------------------------------
  void crash_process(Pid p, std::string_view cause = "process");
  /// Crashes the host, every descendant host and every process on them.
  void crash_host(HostId h);
  /// Graceful termination, e.g. a daemon whose VM was destroyed.
  void stop(Pid p);
  void pause(Pid p);
  void resume(Pid p);
  /// Restarts a dead process with fresh volatile state. Fails when the
  /// target host is down, the process is alive, or failure was forced.
  bool restart(Pid p, std::optional<HostId> on_host = std::nullopt);
  void set_restart_failure(Pid p, bool fail);

  /// Durable key-value cell of a process: survives process crashes, lost
  /// with the host.
  std::map<std::string, std::string>& cell(Pid p);

  // --- scheduling ----------------------------------------------------------
  void at(SimTime t, std::function<void()> fn);
  /// Runs `fn` in the context of a live process.
  void with_context(Pid p, const std::function<void(Actor&, Context&)>& fn);
  std::mt19937_64& rng() { return rng_; }

  /// Runs until quiescence, the horizon, or an empty queue.
  RunResult run();
  /// Descriptions of the pending one-shot events (for horizon errors).
  std::vector<std::string> pending_summary(std::size_t limit) const;

  // Used by Context.
  void send(Pid from, Pid to, wire::Message m);
  void set_timer(Pid p, SimTime delay, TimerTag tag, bool periodic);
  void record(Pid p, std::string_view kind, std::string_view payload) { trace_.record(now_, p, kind, payload); }

 private:
  struct Delivery {
    std::uint64_t msg_id;
    Pid from;
    std::uint32_t incarnation;
    wire::Message msg;
  };
  struct TimerFire {
    std::uint32_t incarnation;
    TimerTag tag;
  };
  struct Injection {
    std::function<void()> fn;
  };
  struct Event {
    SimTime time;
    Pid pid;
    std::uint64_t seq;
    bool periodic;
    std::variant<Delivery, TimerFire, Injection> body;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  struct Host {
    std::string name;
    std::optional<HostId> parent;
    bool alive{true};
    std::map<std::string, std::string> tags;
  };
  struct Process {
    std::string name;
    HostId host;
    ActorFactory factory;
    std::unique_ptr<Actor> actor;
    bool alive{true};
    bool paused{false};
    SimTime paused_since;
    std::uint32_t incarnation{1};
    bool fail_restart{false};
    bool last_exit_crash{false};
    std::vector<Event> held;
    std::map<std::string, std::string> cell;
  };

  void push(Event e);
  void dispatch(Event& e);
  void deliver(Process& p, Pid pid, Event& e);
  void kill(Pid p, std::string_view cause);
  std::vector<bool> subtree(HostId h) const;
  void note_activity() { last_activity_ = now_; }
  void release(const Event& e);
  Process& proc(Pid p);
  const Process& proc(Pid p) const;
  bool traced(const wire::Message& m) const;
  SimTime latency();

  KernelConfig cfg_;
  SimTime now_;
  SimTime last_activity_;
  std::uint64_t seq_{0};
  std::uint64_t msg_seq_{0};
  std::uint64_t pending_oneshot_{0};
  std::uint64_t pending_injections_{0};
  std::uint64_t held_{0};
  std::vector<Event> heap_;
  std::deque<Host> hosts_;
  std::deque<Process> procs_;  // index = pid - 1
  std::unordered_map<std::string, Pid> by_name_;
  std::unordered_map<std::uint64_t, SimTime> channel_tail_;
  std::vector<std::unique_ptr<Actor>> graveyard_;
  std::mt19937_64 rng_;
  Trace trace_;
};

}  // namespace vcm::sim
