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

#include "vcm/gm/types.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace vcm::gm {

const GMember* ViewG::find(Gid g) const {
  auto it = std::lower_bound(members.begin(), members.end(), g,
                             [](const GMember& m, Gid x) { return m.gid < x; });
  if (it == members.end() || it->gid != g) return nullptr;
  return &*it;
}

const GMember* ViewG::find_address(std::string_view address) const {
  for (const auto& m : members)
    if (m.address == address) return &m;
  return nullptr;
}

std::vector<Gid> ViewG::gids() const {
  std::vector<Gid> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(m.gid);
  return out;
}

Gid ViewG::max_gid() const { return members.empty() ? Gid{0} : members.back().gid; }
Gid ViewG::min_gid() const { return members.empty() ? Gid{0} : members.front().gid; }

void ViewG::add(GMember m) {
  auto it = std::lower_bound(members.begin(), members.end(), m.gid,
                             [](const GMember& a, Gid x) { return a.gid < x; });
  if (it != members.end() && it->gid == m.gid) {
    *it = std::move(m);
  } else {
    members.insert(it, std::move(m));
  }
}

bool ViewG::remove(Gid g) {
  auto it = std::find_if(members.begin(), members.end(), [g](const GMember& m) { return m.gid == g; });
  if (it == members.end()) return false;
  members.erase(it);
  return true;
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Leader:
      return "Leader";
    case Role::Prince:
      return "Prince";
    case Role::Member:
      return "Member";
  }
  return "?";
}

Gid front(std::span<const Gid> members, Gid g) {
  bool present = false;
  std::optional<Gid> next;
  Gid lowest = g;
  for (Gid m : members) {
    if (m == g) present = true;
    if (m > g && (!next || m < *next)) next = m;
    if (m < lowest) lowest = m;
  }
  if (!present) throw std::domain_error("front: gid " + std::to_string(g.value) + " is not a member");
  return next ? *next : lowest;
}

Gid front(const ViewG& view, Gid g) {
  auto gids = view.gids();
  return front(gids, g);
}

Gid behind(const ViewG& view, Gid g) {
  if (!view.contains(g)) throw std::domain_error("behind: gid " + std::to_string(g.value) + " is not a member");
  // Previous entry in sorted order, wrapping.
  for (std::size_t i = 0; i < view.members.size(); ++i) {
    if (view.members[i].gid == g) return view.members[(i + view.members.size() - 1) % view.members.size()].gid;
  }
  return g;
}

std::string format_members(const ViewG& view) {
  std::string out;
  for (const auto& m : view.members) {
    if (!out.empty()) out += ',';
    out += std::to_string(m.gid.value);
    out += ':';
    out += m.address;
  }
  return out;
}

std::vector<GMember> parse_members(std::string_view text) {
  std::vector<GMember> out;
  if (text.empty() || text == "-") return out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    auto colon = item.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == item.size())
      throw std::invalid_argument("bad member entry: " + std::string(item));
    std::uint32_t g = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + colon, g);
    if (ec != std::errc{} || p != item.data() + colon || g == 0)
      throw std::invalid_argument("bad gid in member entry: " + std::string(item));
    out.push_back(GMember{Gid{g}, std::string(item.substr(colon + 1))});
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace vcm::gm
