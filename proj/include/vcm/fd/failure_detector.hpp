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
#include <vector>

#include "vcm/gm/types.hpp"
#include "vcm/sim/sim_time.hpp"

namespace vcm::fd {

using sim::SimTime;

struct HeartbeatConfig {
  SimTime interval = SimTime::seconds(1);
  SimTime timeout = SimTime::seconds(5);

  /// Throws std::invalid_argument unless 0 < interval < timeout.
  void validate() const;
  /// Worst-case gap between a crash and its suspicion.
  SimTime detection_bound() const { return timeout + interval; }
  /// Reply window for a leader's liveness probe.
  SimTime probe_timeout() const { return 2 * interval; }
};

/// Deadline bookkeeping for a set of monitored peers. A peer that misses its
/// deadline is reported once; the next heartbeat (or an explicit rearm)
/// makes it reportable again.
template <class Key>
class MonitorTable {
 public:
  struct Entry {
    SimTime last_heartbeat;
    SimTime deadline;
    bool suspected{false};
  };

  explicit MonitorTable(SimTime timeout) : timeout_(timeout) {}

  /// Starts watching `key` as if a heartbeat had just arrived. Existing
  /// entries are left alone.
  void watch(const Key& key, SimTime now) {
    entries_.try_emplace(key, Entry{now, now + timeout_, false});
  }
  void unwatch(const Key& key) { entries_.erase(key); }
  void clear() { entries_.clear(); }
  bool watching(const Key& key) const { return entries_.count(key) != 0; }

  /// Heartbeats from unwatched peers are ignored.
  void heartbeat(const Key& key, SimTime now) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    it->second.last_heartbeat = now;
    it->second.deadline = now + timeout_;
    it->second.suspected = false;
  }

  /// Allows a suspected entry to be reported again without resetting its
  /// deadline. Used when the surrounding context (e.g. the view) changed.
  void rearm(const Key& key) {
    auto it = entries_.find(key);
    if (it != entries_.end()) it->second.suspected = false;
  }

  /// Restarts every deadline, e.g. after the monitor itself was unable to
  /// observe for a while. Entries already suspected stay suspected.
  void reset_all(SimTime now) {
    for (auto& [key, e] : entries_) {
      e.last_heartbeat = now;
      e.deadline = now + timeout_;
    }
  }

  /// Every entry whose deadline has passed and is not yet suspected.
  std::vector<Key> on_tick(SimTime now) {
    std::vector<Key> due;
    for (auto& [key, e] : entries_) {
      if (!e.suspected && now >= e.deadline) {
        e.suspected = true;
        due.push_back(key);
      }
    }
    return due;
  }

  /// Earliest deadline among entries that can still fire.
  std::optional<SimTime> next_deadline() const {
    std::optional<SimTime> best;
    for (const auto& [key, e] : entries_)
      if (!e.suspected && (!best || e.deadline < *best)) best = e.deadline;
    return best;
  }

  const Entry* find(const Key& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return entries_.size(); }
  SimTime timeout() const { return timeout_; }

 private:
  SimTime timeout_;
  std::map<Key, Entry> entries_;
};

/// The gid this member watches in the ring: its succeeding member, i.e.
/// front(view, self). A singleton view watches nobody.
std::optional<gm::Gid> recompute_ring_monitor(const gm::ViewG& view, gm::Gid self);

/// The gid this member sends its ring heartbeats to (the member whose
/// succeeding it is). None for a singleton view.
std::optional<gm::Gid> heartbeat_target(const gm::ViewG& view, gm::Gid self);

/// Outstanding liveness probes issued by a Leader. A probe is answered by
/// a reply carrying its nonce; otherwise it expires after the probe window.
class ProbeTracker {
 public:
  struct Pending {
    gm::Gid member;
    SimTime deadline;
  };
  struct Result {
    gm::Gid member;
    bool alive;
  };

  explicit ProbeTracker(SimTime window) : window_(window) {}

  /// Returns the nonce to put on the request.
  std::uint64_t start(gm::Gid member, SimTime now);
  std::optional<Result> on_reply(std::uint64_t nonce);
  std::optional<Result> on_expiry(std::uint64_t nonce);
  std::size_t outstanding() const { return pending_.size(); }
  SimTime window() const { return window_; }

 private:
  SimTime window_;
  std::uint64_t next_nonce_{1};
  std::map<std::uint64_t, Pending> pending_;
};

}  // namespace vcm::fd
