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

#include <charconv>

#include "vcm/check/check.hpp"
#include "vcm/check/detail.hpp"

namespace vcm::check {

namespace detail {

std::uint64_t to_u64(std::string_view s, std::uint64_t fallback) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size() ? v : fallback;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (s.empty() || s == "-") return out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::set<std::uint32_t> member_gids(std::string_view members) {
  std::set<std::uint32_t> out;
  for (auto m : split(members, ',')) out.insert(static_cast<std::uint32_t>(to_u64(m.substr(0, m.find(':')))));
  return out;
}

std::string_view field(const sim::TraceRecord& r, std::string_view key) { return r.get(key).value_or(""); }

std::uint64_t unum(const sim::TraceRecord& r, std::string_view key, std::uint64_t fallback) {
  auto v = r.get(key);
  return v ? to_u64(*v, fallback) : fallback;
}

SimTime time_field(const sim::TraceRecord& r, std::string_view key) {
  auto v = r.get(key);
  if (!v) return SimTime{};
  try {
    return SimTime::parse(*v);
  } catch (const std::exception&) {
    return SimTime{};
  }
}

}  // namespace detail

using namespace detail;

TraceModel TraceModel::build(const sim::ParsedTrace& t) {
  TraceModel m;
  m.trace = &t;
  for (const auto& r : t.records) {
    const auto& k = r.kind;
    if (k == "config") {
      m.timeout = time_field(r, "heartbeat_timeout");
      m.interval = time_field(r, "heartbeat_interval");
      m.restart_delay = time_field(r, "restart_delay");
      m.ack_timeout = time_field(r, "ack_timeout");
      m.placement.max_nodes_per_partition = static_cast<std::uint32_t>(unum(r, "max_nodes_per_partition", 256));
      m.placement.max_vms_per_node = static_cast<std::uint32_t>(unum(r, "max_vms_per_node", 16));
      m.seed = unum(r, "seed", 0);
      m.scenario = std::string(field(r, "scenario"));
    } else if (k == "node") {
      auto nid = static_cast<std::uint32_t>(unum(r, "nid"));
      Node n{static_cast<std::uint32_t>(unum(r, "partition")), static_cast<std::uint32_t>(unum(r, "index"))};
      m.nodes[nid] = n;
      m.nid_at[{n.partition, n.index}] = nid;
    } else if (k == "spawn") {
      m.names[r.pid] = std::string(field(r, "name"));
      m.life[r.pid].push_back({r.time, k, "", r.line});
    } else if (k == "crash" || k == "stop" || k == "pause" || k == "resume" || k == "restart" ||
               k == "restart_failed" || k == "halt" || k == "recovered") {
      std::string cause(field(r, "cause"));
      if (k == "halt") cause = field(r, "rejoin") == "1" ? "stale" : "leave";
      m.life[r.pid].push_back({r.time, k, std::move(cause), r.line});
    } else if (k == "view") {
      View v{r.time, r.pid, static_cast<std::uint32_t>(unum(r, "gid")), unum(r, "id"), member_gids(field(r, "members")),
             static_cast<std::uint32_t>(unum(r, "leader")), std::string(field(r, "rank")), r.line};
      m.life[r.pid].push_back({r.time, "view", "", r.line});
      if (v.gid != 0) {
        auto name = m.names.count(r.pid) ? m.names[r.pid] : "";
        if (name.size() > 1 && name[0] == 'g') m.partition_of_gid[v.gid] = static_cast<std::uint32_t>(to_u64(name.substr(1)));
      }
      m.views.push_back(std::move(v));
    } else if (k == "change") {
      Change c{r.time, r.pid, std::string(field(r, "cause")), {}, unum(r, "from"), unum(r, "to"), r.line};
      for (auto s : split(field(r, "subjects"), ',')) c.subjects.push_back(static_cast<std::uint32_t>(to_u64(s)));
      m.changes.push_back(std::move(c));
    } else if (k == "send") {
      m.sends[unum(r, "msg")] = Send{r.time, time_field(r, "at"), r.pid, static_cast<Pid>(unum(r, "to")),
                                     std::string(field(r, "type")), &r};
    } else if (k == "final") {
      Final f{r.pid, static_cast<std::uint32_t>(unum(r, "gid")), unum(r, "alive") == 1, unum(r, "active") == 1,
              unum(r, "view"), member_gids(field(r, "members")), r.line};
      m.finals.push_back(std::move(f));
    } else if (k == "inject" && field(r, "verb") == "fail_restart") {
      auto target = field(r, "target");
      auto colon = target.find(':');
      if (colon != std::string_view::npos) {
        auto kind = target.substr(0, colon);
        std::string prefix = kind == "gsd" ? "g" : kind == "nd" ? "n" : "v";
        if (auto p = m.pid_named(prefix + std::string(target.substr(colon + 1)))) m.restart_failures.insert(*p);
      }
    } else if (k == "end") {
      m.ended = true;
      m.quiescent = field(r, "status") == "quiescent";
      m.end = r.time;
    }
  }
  return m;
}

char TraceModel::kind_of(Pid p) const {
  auto it = names.find(p);
  if (it == names.end() || it->second.empty()) return '?';
  const auto& n = it->second;
  if (n == "client") return 'c';
  if (n[0] == 'g' || n[0] == 'n' || n[0] == 'v') return n[0];
  return '?';
}

std::uint32_t TraceModel::id_of(Pid p) const {
  auto it = names.find(p);
  if (it == names.end() || it->second.size() < 2) return 0;
  return static_cast<std::uint32_t>(to_u64(std::string_view(it->second).substr(1), 0));
}

std::optional<Pid> TraceModel::pid_named(const std::string& name) const {
  for (const auto& [p, n] : names)
    if (n == name) return p;
  return std::nullopt;
}

std::optional<std::uint32_t> TraceModel::gid_of_partition(std::uint32_t index) const {
  for (const auto& [gid, idx] : partition_of_gid)
    if (idx == index) return gid;
  return std::nullopt;
}

std::optional<std::uint32_t> TraceModel::nid_of_vid(std::uint32_t vid) const {
  provision::VmSlot slot;
  try {
    slot = provision::decode_vid(vid, placement);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  auto pit = partition_of_gid.find(slot.gid.value);
  // Founding partitions carry gid == index even before any view is traced.
  const std::uint32_t index = pit == partition_of_gid.end() ? slot.gid.value : pit->second;
  auto it = nid_at.find({index, slot.node_index});
  if (it == nid_at.end()) return std::nullopt;
  return it->second;
}

}  // namespace vcm::check
