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
#include <span>
#include <string_view>
#include <utility>

#include "vcm/sim/sim_time.hpp"

namespace vcm::recovery {

using sim::SimTime;
using NodeId = std::uint32_t;

struct RecoveryPolicy {
  SimTime restart_delay = SimTime::seconds(1);
  std::uint32_t max_restart_attempts{2};

  void validate() const;
};

enum class ChildKind { Vmd, Nd };
std::string_view to_string(ChildKind k);

/// What the diagnosing process learned about a failed peer.
enum class Diagnosis { ProcessAlive, ProcessFailed, NodeFailed };
std::string_view to_string(Diagnosis d);

enum class ChildAction { Restart, Suppress };

/// Node and VM daemons are restarted in place; nothing is done for a child
/// whose host is gone.
ChildAction plan_child(ChildKind kind, bool host_alive);

struct GsdPlan {
  enum class Kind { Nothing, RestartInPlace, RestartOnSpare, Takeover };
  Kind kind{Kind::Nothing};
  std::optional<NodeId> node;
};
std::string_view to_string(GsdPlan::Kind k);

/// Lowest-id live node other than `failed_host`.
std::optional<NodeId> select_spare(std::span<const std::pair<NodeId, bool>> nodes, NodeId failed_host);

/// Steps 2-3 of the group daemon recovery protocol: diagnose, then restart
/// in place or on a spare, falling back to takeover when no spare exists.
GsdPlan plan_gsd(Diagnosis d, NodeId failed_host, std::span<const std::pair<NodeId, bool>> partition_nodes);

/// Counts restart attempts per target and decides when to give up.
template <class Key>
class RestartTracker {
 public:
  explicit RestartTracker(std::uint32_t max_attempts) : max_attempts_(max_attempts) {}

  /// Records an attempt; false once the budget is exhausted.
  bool try_attempt(const Key& k) {
    auto& n = attempts_[k];
    if (n >= max_attempts_) return false;
    ++n;
    return true;
  }
  void reset(const Key& k) { attempts_.erase(k); }
  std::uint32_t attempts(const Key& k) const {
    auto it = attempts_.find(k);
    return it == attempts_.end() ? 0 : it->second;
  }

 private:
  std::uint32_t max_attempts_;
  std::map<Key, std::uint32_t> attempts_;
};

}  // namespace vcm::recovery
