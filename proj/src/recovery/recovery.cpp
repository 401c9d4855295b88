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

#include "vcm/recovery/recovery.hpp"

#include <stdexcept>

namespace vcm::recovery {

void RecoveryPolicy::validate() const {
  if (restart_delay < SimTime{}) throw std::invalid_argument("restart_delay must be >= 0");
  if (max_restart_attempts < 1) throw std::invalid_argument("max_restart_attempts must be >= 1");
}

std::string_view to_string(ChildKind k) { return k == ChildKind::Vmd ? "vmd" : "nd"; }

std::string_view to_string(Diagnosis d) {
  switch (d) {
    case Diagnosis::ProcessAlive:
      return "process-alive";
    case Diagnosis::ProcessFailed:
      return "process-failed";
    case Diagnosis::NodeFailed:
      return "node-failed";
  }
  return "?";
}

std::string_view to_string(GsdPlan::Kind k) {
  switch (k) {
    case GsdPlan::Kind::Nothing:
      return "nothing";
    case GsdPlan::Kind::RestartInPlace:
      return "restart-in-place";
    case GsdPlan::Kind::RestartOnSpare:
      return "restart-on-spare";
    case GsdPlan::Kind::Takeover:
      return "takeover";
  }
  return "?";
}

ChildAction plan_child(ChildKind, bool host_alive) {
  return host_alive ? ChildAction::Restart : ChildAction::Suppress;
}

std::optional<NodeId> select_spare(std::span<const std::pair<NodeId, bool>> nodes, NodeId failed_host) {
  std::optional<NodeId> best;
  for (const auto& [nid, alive] : nodes) {
    if (!alive || nid == failed_host) continue;
    if (!best || nid < *best) best = nid;
  }
  return best;
}

GsdPlan plan_gsd(Diagnosis d, NodeId failed_host, std::span<const std::pair<NodeId, bool>> partition_nodes) {
  switch (d) {
    case Diagnosis::ProcessAlive:
      return {GsdPlan::Kind::Nothing, std::nullopt};
    case Diagnosis::ProcessFailed:
      return {GsdPlan::Kind::RestartInPlace, failed_host};
    case Diagnosis::NodeFailed:
      if (auto spare = select_spare(partition_nodes, failed_host)) return {GsdPlan::Kind::RestartOnSpare, spare};
      return {GsdPlan::Kind::Takeover, std::nullopt};
  }
  return {};
}

}  // namespace vcm::recovery
