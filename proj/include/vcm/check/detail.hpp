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
#include <set>
#include <string_view>
#include <vector>

#include "vcm/sim/trace.hpp"

namespace vcm::check::detail {

std::uint64_t to_u64(std::string_view s, std::uint64_t fallback = 0);
/// Splits on `sep`; "-" and "" yield no items.
std::vector<std::string_view> split(std::string_view s, char sep);
/// Gids of a "gid:addr,gid:addr" member list.
std::set<std::uint32_t> member_gids(std::string_view members);
std::string_view field(const sim::TraceRecord& r, std::string_view key);
std::uint64_t unum(const sim::TraceRecord& r, std::string_view key, std::uint64_t fallback = 0);
sim::SimTime time_field(const sim::TraceRecord& r, std::string_view key);

}  // namespace vcm::check::detail
