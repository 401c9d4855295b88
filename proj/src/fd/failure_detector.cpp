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

#include "vcm/fd/failure_detector.hpp"

#include <stdexcept>

namespace vcm::fd {

void HeartbeatConfig::validate() const {
  if (interval <= SimTime{}) throw std::invalid_argument("heartbeat_interval must be positive");
  if (!(interval < timeout)) throw std::invalid_argument("heartbeat_interval must be smaller than heartbeat_timeout");
}

std::optional<gm::Gid> recompute_ring_monitor(const gm::ViewG& view, gm::Gid self) {
  if (view.members.size() < 2 || !view.contains(self)) return std::nullopt;
  return gm::front(view, self);
}

std::optional<gm::Gid> heartbeat_target(const gm::ViewG& view, gm::Gid self) {
  if (view.members.size() < 2 || !view.contains(self)) return std::nullopt;
  return gm::behind(view, self);
}

std::uint64_t ProbeTracker::start(gm::Gid member, SimTime now) {
  std::uint64_t nonce = next_nonce_++;
  pending_.emplace(nonce, Pending{member, now + window_});
  return nonce;
}

std::optional<ProbeTracker::Result> ProbeTracker::on_reply(std::uint64_t nonce) {
  auto it = pending_.find(nonce);
  if (it == pending_.end()) return std::nullopt;
  Result r{it->second.member, true};
  pending_.erase(it);
  return r;
}

std::optional<ProbeTracker::Result> ProbeTracker::on_expiry(std::uint64_t nonce) {
  auto it = pending_.find(nonce);
  if (it == pending_.end()) return std::nullopt;
  Result r{it->second.member, false};
  pending_.erase(it);
  return r;
}

}  // namespace vcm::fd
