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
#include <optional>
#include <string>

#include "vcm/sim/sim_time.hpp"

namespace vcm::sim {

/// Knobs for random fault-injection scenarios. Faults are spaced far
/// enough apart that detection and recovery of one finish before the next.
struct GenOptions {
  std::uint32_t min_gsds{2};
  std::uint32_t max_gsds{12};
  std::uint32_t max_nodes_per_partition{3};
  std::uint32_t max_vms_per_node{2};
  std::uint32_t min_events{1};
  std::uint32_t max_events{6};
  /// Fixed detector timing; random from a small menu when unset.
  std::optional<SimTime> timeout;
  std::optional<SimTime> interval;
  std::optional<SimTime> restart_delay;

  bool process_crashes{true};
  bool node_crashes{true};
  bool membership{true};  // join, leave, rejoin
  bool pauses{true};
  bool provisioning{true};
  bool queries{true};
};

/// Scenario file text for `seed`; parse with parse_scenario.
std::string generate_scenario(const GenOptions& opts, std::uint64_t seed);

}  // namespace vcm::sim
