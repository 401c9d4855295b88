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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vcm/fd/failure_detector.hpp"
#include "vcm/partition/partition_view.hpp"
#include "vcm/provision/provisioning.hpp"
#include "vcm/recovery/recovery.hpp"
#include "vcm/sim/sim_time.hpp"

namespace vcm::sim {

struct Topology {
  std::uint32_t partitions{2};
  std::uint32_t nodes_per_partition{1};
  std::uint32_t vms_per_node{0};
};

struct ScenarioConfig {
  fd::HeartbeatConfig heartbeat;
  recovery::RecoveryPolicy recovery;
  provision::PlacementConfig placement;
  SimTime latency_min = SimTime::millis(1);
  SimTime latency_max = SimTime::millis(1);
  std::uint64_t seed{1};
  std::optional<SimTime> horizon;
  std::optional<SimTime> quiet_window;
  std::optional<SimTime> ack_timeout;
  std::uint32_t fetch_retries{2};
  bool trace_heartbeats{false};
  /// Hypervisor operation latencies keyed by operation name.
  std::map<std::string, SimTime> op_delay;

  SimTime op_time(std::string_view op) const;
  /// 2 x worst one-way latency + one heartbeat interval unless overridden.
  SimTime effective_ack_timeout() const;
  SimTime effective_quiet_window() const;
  SimTime effective_horizon() const;
};

/// Default operation latencies (seconds): create/start 3.765, suspend
/// 6.992, resume 5.813, shutdown 11.732, resize 0.391, reboot 15.497,
/// destroy 0.1.
std::map<std::string, SimTime> default_op_delays();

enum class TargetKind { Gsd, Nd, Vmd, Node, Vm };
std::string_view to_string(TargetKind k);

struct Target {
  TargetKind kind{TargetKind::Gsd};
  std::uint32_t id{0};
  std::string str() const;
};

enum class Verb {
  CrashProcess,
  CrashNode,
  PauseProcess,
  ResumeProcess,
  JoinGsd,
  LeaveGsd,
  RejoinGsd,
  LeaveNode,
  JoinNode,
  GetClusterState,
  GetVmsState,
  Subscribe,
  CreateVms,
  DestroyVms,
  VmOp,
  FailRestart,
};
std::string_view to_string(Verb v);

struct Injection {
  SimTime time;
  Verb verb{Verb::CrashProcess};
  std::optional<Target> target;
  /// Verb-specific integers: gid, counts, node indices, vids.
  std::vector<std::uint32_t> numbers;
  std::optional<provision::VmOp> op;
  partition::Filter filter{partition::Filter::Both};
  std::string client{"client"};
  std::size_t line{0};
  /// The schedule line as written, for trace records.
  std::string text;
};

struct Scenario {
  /// Source file name, empty for inline text.
  std::string name;
  Topology topology;
  ScenarioConfig config;
  std::vector<Injection> schedule;  // sorted by time, stable
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses the sectioned text format. Throws ScenarioError.
Scenario parse_scenario(std::string_view text);
/// Throws std::runtime_error if unreadable, ScenarioError if malformed.
Scenario load_scenario(const std::string& path);

}  // namespace vcm::sim
