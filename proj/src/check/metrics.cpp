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

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "vcm/check/check.hpp"
#include "vcm/check/detail.hpp"

namespace vcm::check {

using namespace detail;

void Stat::add(double v) {
  min = count ? std::min(min, v) : v;
  max = count ? std::max(max, v) : v;
  ++count;
  sum_ += v;
  mean = sum_ / static_cast<double>(count);
}

namespace {

std::string kind_name(char k) { return k == 'g' ? "gsd" : k == 'n' ? "nd" : "vmd"; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string stat_kv(const Stat& s) {
  return "count=" + std::to_string(s.count) + " min=" + fmt(s.min) + " max=" + fmt(s.max) + " mean=" + fmt(s.mean);
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.resize(w, ' ');
  return s;
}

}  // namespace

Metrics compute_metrics(const TraceModel& m) {
  Metrics mt;
  mt.timeout = m.timeout.to_seconds();
  mt.interval = m.interval.to_seconds();
  mt.views_installed = m.views.size();
  mt.view_changes = m.changes.size();

  for (const auto& r : m.trace->records)
    if (r.kind == "cluster_view" && field(r, "complete") == "1")
      mt.fetch_messages[unum(r, "members")].add(static_cast<double>(unum(r, "remote_msgs")));

  std::vector<const sim::TraceRecord*> sus;
  for (const auto& r : m.trace->records)
    if (r.kind == "suspect") sus.push_back(&r);

  for (const auto& [p, ls] : m.life) {
    const char k = m.kind_of(p);
    if (k != 'g' && k != 'n' && k != 'v') continue;
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const auto& crash = ls[i];
      if (crash.what != "crash") continue;
      std::size_t limit = SIZE_MAX;
      for (std::size_t j = i + 1; j < ls.size(); ++j)
        if (ls[j].what == "restart") {
          limit = ls[j].line;
          break;
        }
      for (const auto* s : sus)
        if (unum(*s, "target") == p && s->line > crash.line && s->line < limit) {
          mt.detection[kind_name(k)].add((s->time - crash.time).to_seconds());
          break;
        }
      if (crash.cause != "process") continue;
      for (std::size_t j = i + 1; j < ls.size(); ++j) {
        if (ls[j].what == "crash") break;
        if (ls[j].what == "recovered") {
          mt.recovery[kind_name(k)].add((ls[j].time - crash.time).to_seconds());
          break;
        }
      }
    }
  }

  std::map<std::uint64_t, std::size_t> per_view;
  for (const auto& [id, s] : m.sends)
    if (s.type == "NewViewG" || s.type == "Ack") ++per_view[unum(*s.rec, "view")];
  for (const auto& c : m.changes) {
    std::size_t k = 0;
    for (const auto& v : m.views)
      if (v.pid == c.pid && v.id == c.to) k = v.members.size();
    mt.membership[{c.cause, k}].add(static_cast<double>(per_view[c.to]));
  }
  return mt;
}

std::string format_metrics(const Metrics& mt) {
  std::ostringstream os;
  os << "metric=config timeout=" << fmt(mt.timeout) << " interval=" << fmt(mt.interval) << "\n";
  os << "metric=views installed=" << mt.views_installed << " changes=" << mt.view_changes << "\n";
  for (const auto& [k, s] : mt.fetch_messages) os << "metric=fetch_messages k=" << k << " " << stat_kv(s) << "\n";
  for (const auto& [kind, s] : mt.detection)
    os << "metric=detection kind=" << kind << " " << stat_kv(s) << " bound=" << fmt(mt.timeout + mt.interval) << "\n";
  for (const auto& [kind, s] : mt.recovery)
    os << "metric=recovery kind=" << kind << " " << stat_kv(s) << " bound=" << fmt(mt.timeout + 3 * mt.interval)
       << "\n";
  for (const auto& [key, s] : mt.membership)
    os << "metric=membership cause=" << key.first << " k=" << key.second << " " << stat_kv(s)
       << " expected=" << (key.second ? 2 * (key.second - 1) : 0) << "\n";

  os << "\n" << pad("table", 12) << pad("class", 16) << pad("count", 7) << pad("min", 12) << pad("mean", 12)
     << pad("max", 12) << "reference\n";
  auto row = [&](const std::string& table, const std::string& cls, const Stat& s, const std::string& ref) {
    os << pad(table, 12) << pad(cls, 16) << pad(std::to_string(s.count), 7) << pad(fmt(s.min), 12)
       << pad(fmt(s.mean), 12) << pad(fmt(s.max), 12) << ref << "\n";
  };
  for (const auto& [k, s] : mt.fetch_messages)
    row("fetch", "k=" + std::to_string(k), s, "2(k-1)=" + std::to_string(2 * (k - 1)));
  for (const auto& [kind, s] : mt.detection) row("detection", kind, s, "N+h=" + fmt(mt.timeout + mt.interval));
  for (const auto& [kind, s] : mt.recovery) row("recovery", kind, s, "N+3h=" + fmt(mt.timeout + 3 * mt.interval));
  for (const auto& [key, s] : mt.membership)
    row("membership", key.first + " k=" + std::to_string(key.second), s,
        "2(k-1)=" + std::to_string(key.second ? 2 * (key.second - 1) : 0));
  return os.str();
}

}  // namespace vcm::check
