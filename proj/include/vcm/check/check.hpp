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
#include <set>
#include <string>
#include <vector>

#include "vcm/partition/partition_view.hpp"
#include "vcm/provision/provisioning.hpp"
#include "vcm/sim/trace.hpp"

namespace vcm::check {

using sim::Pid;
using sim::SimTime;

/// Post-hoc view of a trace: indexes the records every property needs.
struct TraceModel {
  struct View {
    SimTime time;
    Pid pid{0};
    std::uint32_t gid{0};
    std::uint64_t id{0};
    std::set<std::uint32_t> members;
    std::uint32_t leader{0};
    std::string rank;
    std::size_t line{0};
  };
  struct Change {
    SimTime time;
    Pid pid{0};
    std::string cause;
    std::vector<std::uint32_t> subjects;
    std::uint64_t from{0};
    std::uint64_t to{0};
    std::size_t line{0};
  };
  /// Lifecycle event of one process: spawn, crash, stop, pause, resume,
  /// restart, restart_failed, halt, view, recovered.
  struct Life {
    SimTime time;
    std::string what;
    std::string cause;
    std::size_t line{0};
  };
  struct Send {
    SimTime time;
    SimTime at;
    Pid from{0};
    Pid to{0};
    std::string type;
    const sim::TraceRecord* rec{nullptr};
  };
  struct Final {
    Pid pid{0};
    std::uint32_t gid{0};
    bool alive{false};
    bool active{false};
    std::uint64_t view{0};
    std::set<std::uint32_t> members;
    std::size_t line{0};
  };
  struct Node {
    std::uint32_t partition{0};
    std::uint32_t index{0};
  };

  const sim::ParsedTrace* trace{nullptr};

  // config
  SimTime timeout;
  SimTime interval;
  SimTime restart_delay;
  SimTime ack_timeout;
  provision::PlacementConfig placement;
  std::uint64_t seed{0};
  std::string scenario;

  std::map<Pid, std::string> names;
  std::map<Pid, std::vector<Life>> life;
  std::vector<View> views;
  std::vector<Change> changes;
  std::map<std::uint64_t, Send> sends;
  std::vector<Final> finals;
  std::map<std::uint32_t, Node> nodes;  // by nid
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> nid_at;  // (partition, index)
  std::map<std::uint32_t, std::uint32_t> partition_of_gid;
  std::set<Pid> restart_failures;
  bool quiescent{false};
  bool ended{false};
  SimTime end;

  static TraceModel build(const sim::ParsedTrace& t);

  /// 'g', 'n', 'v', 'c' (client) or '?' from the spawn name.
  char kind_of(Pid p) const;
  /// Numeric suffix of the spawn name (partition, nid or vid).
  std::uint32_t id_of(Pid p) const;
  std::optional<Pid> pid_named(const std::string& name) const;
  /// Node hosting `vid` according to the layout records.
  std::optional<std::uint32_t> nid_of_vid(std::uint32_t vid) const;
  /// GSD gid of the partition with this 1-based index, if known.
  std::optional<std::uint32_t> gid_of_partition(std::uint32_t index) const;
};

struct PropertyResult {
  std::string name;
  bool pass{true};
  /// Number of instances evaluated (rounds, crashes, messages, ...).
  std::size_t checked{0};
  /// 1-based trace line of the first violation.
  std::optional<std::size_t> line;
  std::string detail;
};

struct CheckReport {
  std::string scenario;
  std::uint64_t seed{0};
  std::vector<PropertyResult> results;
  std::size_t views_installed{0};
  std::map<std::string, std::size_t> messages_by_type;
  std::string error;  // trace-level problem, e.g. "incomplete trace"

  bool passed() const;
};

/// Every property name accepted by check_trace, in report order.
const std::vector<std::string>& property_names();
/// Expands "all" and validates names; throws std::invalid_argument.
std::vector<std::string> resolve_properties(const std::vector<std::string>& selected);

CheckReport check_trace(const sim::ParsedTrace& trace, const std::vector<std::string>& props = {"all"});
PropertyResult check_property(const TraceModel& m, const std::string& name);

/// key=value lines followed by a table.
std::string format_report(const CheckReport& r);

// --- metrics -----------------------------------------------------------------

struct Stat {
  std::size_t count{0};
  double min{0};
  double max{0};
  double mean{0};
  void add(double v);

 private:
  double sum_{0};
};

struct Metrics {
  /// Cluster-view fetches keyed by member count: remote message totals.
  std::map<std::size_t, Stat> fetch_messages;
  /// Detection latency by daemon kind ("gsd", "nd", "vmd"), seconds.
  std::map<std::string, Stat> detection;
  /// Recovery latency by daemon kind, seconds.
  std::map<std::string, Stat> recovery;
  /// Membership update messages (NewViewG + Ack) per round, by (cause, group size).
  std::map<std::pair<std::string, std::size_t>, Stat> membership;
  std::size_t views_installed{0};
  std::size_t view_changes{0};
  double timeout{0};
  double interval{0};
};

Metrics compute_metrics(const TraceModel& m);
std::string format_metrics(const Metrics& mt);

}  // namespace vcm::check
