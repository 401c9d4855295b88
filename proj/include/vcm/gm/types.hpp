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

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcm::gm {

using ViewId = std::uint64_t;

/// Rank id of a group service daemon. Always >= 1.
struct Gid {
  std::uint32_t value{0};

  friend constexpr auto operator<=>(Gid, Gid) = default;
};

struct GMember {
  Gid gid;
  /// Endpoint name the member is reachable at.
  std::string address;

  friend bool operator==(const GMember&, const GMember&) = default;
};

/// A group view: id plus members kept sorted by gid. view_id 0 means "no
/// view installed yet"; installed views have view_id >= 1 and at least one
/// member.
struct ViewG {
  ViewId view_id{0};
  std::vector<GMember> members;

  bool contains(Gid g) const { return find(g) != nullptr; }
  const GMember* find(Gid g) const;
  const GMember* find_address(std::string_view address) const;
  std::vector<Gid> gids() const;
  Gid max_gid() const;
  Gid min_gid() const;

  /// Inserts or replaces the member with the same gid.
  void add(GMember m);
  /// Returns false if the gid was not present.
  bool remove(Gid g);

  friend bool operator==(const ViewG&, const ViewG&) = default;
};

enum class Role { Leader, Prince, Member };

std::string_view to_string(Role r);

/// Ring neighbour: smallest member gid strictly greater than g, wrapping to
/// the smallest member when g is the largest. Throws std::domain_error when
/// g is not a member.
Gid front(std::span<const Gid> members, Gid g);
Gid front(const ViewG& view, Gid g);

/// The member p with front(p) == g, i.e. the process that monitors g.
Gid behind(const ViewG& view, Gid g);

/// "1:g1,2:g2" -- stable text form used in traces.
std::string format_members(const ViewG& view);
/// Inverse of format_members; throws std::invalid_argument on bad input.
std::vector<GMember> parse_members(std::string_view text);

}  // namespace vcm::gm
