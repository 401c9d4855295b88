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

#include "vcm/sim/scenario.hpp"

namespace vcm::cluster {

struct RunOutput {
  std::string trace;
  bool quiescent{false};
  std::string error;
  sim::SimTime end;
  std::uint64_t events{0};
};

/// Builds the cluster described by `sc`, plays its schedule, drains to
/// quiescence, takes a final cluster-view fetch through every live group
/// daemon and returns the full trace.
RunOutput run_scenario(const sim::Scenario& sc, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace vcm::cluster
