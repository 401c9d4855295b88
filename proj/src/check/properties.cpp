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
#include <functional>
#include <sstream>
#include <stdexcept>

#include "vcm/check/check.hpp"
#include "vcm/check/detail.hpp"

namespace vcm::check {

using namespace detail;

namespace {

using Life = TraceModel::Life;

bool is_fault(const Life& l) {
  return l.what == "crash" || l.what == "stop" || l.what == "pause" || l.what == "halt" ||
         l.what == "restart_failed";
}

/// Event that ends the silence opened by fault `f`.
bool heals(const Life& f, const Life& l) {
  if (f.what == "pause") return l.what == "resume" || l.what == "restart";
  if (f.what == "halt") return l.what == "view" || l.what == "restart";
  return l.what == "restart";
}

class Violations {
 public:
  explicit Violations(std::string name) { r_.name = std::move(name); }
  void ok() { ++r_.checked; }
  void fail(std::size_t line, const std::string& detail) {
    ++r_.checked;
    if (r_.pass || line < *r_.line) {
      r_.pass = false;
      r_.line = line;
      r_.detail = detail;
    }
    ++failures_;
  }
  void note(std::string detail) {
    if (r_.pass) r_.detail = std::move(detail);
  }
  PropertyResult done() {
    if (failures_ > 1) r_.detail += " (+" + std::to_string(failures_ - 1) + " more)";
    return r_;
  }

 private:
  PropertyResult r_;
  std::size_t failures_{0};
};

std::string set_str(const std::set<std::uint32_t>& s) {
  std::string out;
  for (auto v : s) out += (out.empty() ? "" : ",") + std::to_string(v);
  return out.empty() ? "-" : out;
}

/// Life events are in trace order; lines give a total order within a timestamp.
const std::vector<Life>& life_of(const TraceModel& m, Pid p) {
  static const std::vector<Life> none;
  auto it = m.life.find(p);
  return it == m.life.end() ? none : it->second;
}

bool alive_at(const TraceModel& m, Pid p, std::size_t line) {
  bool alive = false;
  for (const auto& l : life_of(m, p)) {
    if (l.line > line) break;
    if (l.what == "spawn" || l.what == "restart") alive = true;
    if (l.what == "crash" || l.what == "stop") alive = false;
  }
  return alive;
}

bool paused_at(const TraceModel& m, Pid p, std::size_t line) {
  bool paused = false;
  for (const auto& l : life_of(m, p)) {
    if (l.line > line) break;
    if (l.what == "pause") paused = true;
    if (l.what == "resume" || l.what == "crash" || l.what == "stop" || l.what == "restart") paused = false;
  }
  return paused;
}

/// VM `vid` reached Halted or was destroyed in [from, until]; its daemon is
/// then no longer watched.
bool vm_retired(const TraceModel& m, std::uint32_t vid, SimTime from, SimTime until) {
  const std::string key = "v" + std::to_string(vid) + ":";
  for (const auto& r : m.trace->records) {
    if (r.time < from) continue;
    if (r.time > until) break;
    if (r.kind != "delta") continue;
    for (auto d : split(field(r, "deltas"), ','))
      if (d.size() == key.size() + 1 && d.substr(0, key.size()) == key && (d.back() == 'H' || d.back() == 'X'))
        return true;
  }
  return false;
}

/// First life event of `p` named `what` with line in (after, before).
const Life* first_event(const TraceModel& m, Pid p, std::string_view what, std::size_t after,
                        std::size_t before = SIZE_MAX) {
  for (const auto& l : life_of(m, p))
    if (l.line > after && l.line < before && l.what == what) return &l;
  return nullptr;
}

/// Any fault on a daemon other than `self` (and other than processes
/// felled by the same host crash at the same instant) within [a, b].
bool other_fault(const TraceModel& m, Pid self, SimTime a, SimTime b, const Life* batch = nullptr) {
  for (const auto& [p, ls] : m.life) {
    if (p == self) continue;
    char k = m.kind_of(p);
    if (k != 'g' && k != 'n' && k != 'v') continue;
    for (const auto& l : ls) {
      if (l.time < a || l.time > b || !is_fault(l) || (l.what == "halt" && l.cause == "leave")) continue;
      if (batch && l.time == batch->time && l.what == "crash" && l.cause == "host") continue;
      return true;
    }
  }
  return false;
}

/// Members of the newest view installed by anyone up to `line`.
std::optional<TraceModel::View> group_at(const TraceModel& m, std::size_t line) {
  std::optional<TraceModel::View> best;
  for (const auto& v : m.views) {
    if (v.line > line) break;
    if (!best || v.id >= best->id) best = v;
  }
  return best;
}

struct Suspect {
  SimTime time;
  Pid monitor;
  Pid target;
  std::string kind;
  std::uint64_t view;
  std::size_t line;
};

std::vector<Suspect> suspects(const TraceModel& m) {
  std::vector<Suspect> out;
  for (const auto& r : m.trace->records)
    if (r.kind == "suspect")
      out.push_back({r.time, r.pid, static_cast<Pid>(unum(r, "target")), std::string(field(r, "kind")),
                     unum(r, "view", 0), r.line});
  return out;
}

std::string kind_name(char k) { return k == 'g' ? "gsd" : k == 'n' ? "nd" : "vmd"; }

// --- membership --------------------------------------------------------------

PropertyResult self_inclusion(const TraceModel& m) {
  Violations v("5.1");
  for (const auto& view : m.views) {
    if (view.members.count(view.gid))
      v.ok();
    else
      v.fail(view.line, "pid " + std::to_string(view.pid) + " installed view " + std::to_string(view.id) +
                            " without its own gid " + std::to_string(view.gid));
  }
  return v.done();
}

PropertyResult local_monotonicity(const TraceModel& m) {
  Violations v("5.2");
  std::map<Pid, std::uint64_t> last;
  for (const auto& view : m.views) {
    auto it = last.find(view.pid);
    if (it != last.end() && view.id <= it->second)
      v.fail(view.line, "pid " + std::to_string(view.pid) + " installed view " + std::to_string(view.id) + " after " +
                            std::to_string(it->second));
    else
      v.ok();
    last[view.pid] = view.id;
  }
  return v.done();
}

PropertyResult agreement(const TraceModel& m) {
  Violations v("5.3");
  std::map<std::uint64_t, const TraceModel::View*> first;
  for (const auto& view : m.views) {
    auto [it, fresh] = first.emplace(view.id, &view);
    if (fresh) continue;
    if (it->second->members != view.members)
      v.fail(view.line, "view " + std::to_string(view.id) + " has members " + set_str(view.members) + " at pid " +
                            std::to_string(view.pid) + " but " + set_str(it->second->members) + " at pid " +
                            std::to_string(it->second->pid));
    else
      v.ok();
  }
  for (auto it = first.begin(); it != first.end(); ++it) {
    auto next = std::next(it);
    if (next == first.end() || next->first != it->first + 1) continue;
    const auto& a = it->second->members;
    const auto& b = next->second->members;
    bool shared = std::any_of(a.begin(), a.end(), [&](auto g) { return b.count(g) > 0; });
    if (shared)
      v.ok();
    else
      v.fail(next->second->line, "views " + std::to_string(it->first) + " and " + std::to_string(next->first) +
                                     " share no member");
  }
  return v.done();
}

PropertyResult termination(const TraceModel& m) {
  Violations v("5.4");
  if (!m.quiescent) {
    v.note("not quiescent; not applicable");
    return v.done();
  }
  std::set<std::uint32_t> live;
  const TraceModel::Final* ref = nullptr;
  for (const auto& f : m.finals) {
    if (!f.alive || !f.active) continue;
    live.insert(f.gid);
    if (!ref) ref = &f;
  }
  for (const auto& f : m.finals) {
    if (!f.alive || !f.active) {
      if (ref && f.gid != 0 && ref->members.count(f.gid))
        v.fail(f.line, "gid " + std::to_string(f.gid) + " is down or inactive but in final view " +
                           std::to_string(ref->view));
      else
        v.ok();
      continue;
    }
    if (f.view != ref->view || f.members != ref->members)
      v.fail(f.line, "gid " + std::to_string(f.gid) + " ends with view " + std::to_string(f.view) + " {" +
                         set_str(f.members) + "} vs " + std::to_string(ref->view) + " {" + set_str(ref->members) + "}");
    else if (f.members != live)
      v.fail(f.line, "final view {" + set_str(f.members) + "} differs from live active gids {" + set_str(live) + "}");
    else
      v.ok();
  }
  return v.done();
}

struct RoundCounts {
  std::size_t new_views{0};
  std::size_t acks{0};
  std::set<Pid> ackers;
};

std::map<std::uint64_t, RoundCounts> round_counts(const TraceModel& m) {
  std::map<std::uint64_t, RoundCounts> out;
  for (const auto& [id, s] : m.sends) {
    if (s.type == "NewViewG") ++out[unum(*s.rec, "view")].new_views;
    if (s.type == "Ack") {
      auto& rc = out[unum(*s.rec, "view")];
      ++rc.acks;
      rc.ackers.insert(s.from);
    }
  }
  return out;
}

const TraceModel::View* view_at(const TraceModel& m, Pid p, std::uint64_t id) {
  for (const auto& v : m.views)
    if (v.pid == p && v.id == id) return &v;
  return nullptr;
}

std::optional<Pid> pid_of_gid(const TraceModel& m, std::uint32_t gid, std::size_t before_line) {
  std::optional<Pid> out;
  for (const auto& v : m.views) {
    if (v.line > before_line) break;
    if (v.gid == gid) out = v.pid;
  }
  return out;
}

bool gsd_fault(const TraceModel& m, SimTime a, SimTime b) {
  for (const auto& [p, ls] : m.life) {
    if (m.kind_of(p) != 'g') continue;
    for (const auto& l : ls)
      if (l.time >= a && l.time <= b && is_fault(l)) return true;
  }
  return false;
}

PropertyResult single_round(const TraceModel& m) {
  Violations v("single-round");
  auto counts = round_counts(m);
  const SimTime window = 2 * m.ack_timeout;
  for (const auto& c : m.changes) {
    if (gsd_fault(m, c.time, c.time + window)) continue;
    const auto* view = view_at(m, c.pid, c.to);
    if (!view) {
      v.fail(c.line, "leader installed no view " + std::to_string(c.to));
      continue;
    }
    const std::size_t k = view->members.size();
    const auto& rc = counts[c.to];
    if (c.to != c.from + 1)
      v.fail(c.line, "view id went " + std::to_string(c.from) + " -> " + std::to_string(c.to));
    else if (rc.new_views != k - 1 || rc.acks != k - 1)
      v.fail(c.line, "view " + std::to_string(c.to) + " with k=" + std::to_string(k) + ": " +
                         std::to_string(rc.new_views) + " NewViewG, " + std::to_string(rc.acks) + " Ack (want " +
                         std::to_string(k - 1) + ")");
    else
      v.ok();
  }
  return v.done();
}

PropertyResult compensation(const TraceModel& m) {
  Violations v("compensation");
  auto counts = round_counts(m);
  for (const auto& c : m.changes) {
    const auto* view = view_at(m, c.pid, c.to);
    if (!view) continue;
    const SimTime window_end = c.time + m.ack_timeout;
    std::vector<std::uint32_t> crashed;
    for (auto g : view->members) {
      auto p = pid_of_gid(m, g, c.line);
      if (!p || *p == c.pid) continue;
      const auto& rc = counts[c.to];
      if (rc.ackers.count(*p)) continue;
      for (const auto& l : life_of(m, *p))
        if (l.line > c.line && l.time <= window_end && l.what == "crash") {
          crashed.push_back(g);
          break;
        }
    }
    if (crashed.size() != 1) continue;
    if (!alive_at(m, c.pid, m.trace->records.back().line) && !m.quiescent) continue;
    const std::uint32_t gone = crashed.front();
    const TraceModel::Change* next = nullptr;
    for (const auto& c2 : m.changes)
      if (c2.line > c.line && c2.from == c.to) {
        next = &c2;
        break;
      }
    if (!next) {
      v.fail(c.line, "member " + std::to_string(gone) + " crashed before acking view " + std::to_string(c.to) +
                         " but no compensating view followed");
      continue;
    }
    const auto* comp = view_at(m, next->pid, next->to);
    auto expect = view->members;
    expect.erase(gone);
    if (next->to != c.to + 1 || std::find(next->subjects.begin(), next->subjects.end(), gone) == next->subjects.end())
      v.fail(next->line, "compensation for gid " + std::to_string(gone) + " went to view " +
                             std::to_string(next->to) + " with other subjects");
    else if (!comp || comp->members != expect)
      v.fail(next->line, "compensating view " + std::to_string(next->to) + " is not {" + set_str(expect) + "}");
    else
      v.ok();
  }
  return v.done();
}

// --- failure detection --------------------------------------------------------

PropertyResult detection(const TraceModel& m) {
  Violations v("detection");
  const SimTime bound = m.timeout + m.interval;
  auto sus = suspects(m);
  for (const auto& [p, ls] : m.life) {
    const char k = m.kind_of(p);
    if (k != 'g' && k != 'n' && k != 'v') continue;
    for (const auto& crash : ls) {
      if (crash.what != "crash") continue;
      if (m.end < crash.time + bound) continue;
      if (paused_at(m, p, crash.line - 1)) continue;
      if (other_fault(m, p, crash.time - bound, crash.time + bound, crash.cause == "host" ? &crash : nullptr)) continue;
      if (k == 'v' && vm_retired(m, m.id_of(p), crash.time, crash.time + bound)) continue;
      if (k == 'g') {
        auto g = group_at(m, crash.line);
        auto mine = std::find_if(m.views.rbegin(), m.views.rend(),
                                 [&](const auto& view) { return view.pid == p && view.line < crash.line; });
        if (!g || mine == m.views.rend() || !g->members.count(mine->gid) || g->members.size() < 2) continue;
        auto halted = std::find_if(ls.rbegin(), ls.rend(), [&](const Life& l) {
          return l.line < crash.line && (l.what == "halt" || l.what == "view");
        });
        if (halted != ls.rend() && halted->what == "halt") continue;
      }
      if (k == 'n' || k == 'v') {
        // A node crash also fells the daemons that would watch these.
        bool monitor_down = false;
        for (const auto& [q, qs] : m.life) {
          if (q == p) continue;
          const char qk = m.kind_of(q);
          if ((k == 'v' && qk == 'n' && m.id_of(q) == m.nid_of_vid(m.id_of(p)).value_or(0)) ||
              (k == 'n' && qk == 'g')) {
            if (!alive_at(m, q, crash.line) ||
                std::any_of(qs.begin(), qs.end(), [&](const Life& l) { return l.time == crash.time && is_fault(l); }))
              monitor_down = true;
          }
        }
        if (monitor_down) continue;
      }
      const Life* back = first_event(m, p, "restart", crash.line);
      const std::size_t limit = back ? back->line : SIZE_MAX;
      std::optional<std::pair<SimTime, std::size_t>> seen;
      auto s = std::find_if(sus.begin(), sus.end(),
                            [&](const Suspect& x) { return x.target == p && x.line > crash.line && x.line < limit; });
      if (s != sus.end()) seen = {s->time, s->line};
      if (k == 'g') {
        // Removal by a compensating or reported view also counts as detection.
        auto mine = std::find_if(m.views.rbegin(), m.views.rend(),
                                 [&](const auto& view) { return view.pid == p && view.line < crash.line; });
        for (const auto& c : m.changes) {
          if (c.line <= crash.line || c.line >= limit || (seen && c.line > seen->second)) continue;
          if (c.cause == "join" || c.cause == "leave" || c.cause == "rejoin") continue;
          if (std::find(c.subjects.begin(), c.subjects.end(), mine->gid) == c.subjects.end()) continue;
          seen = {c.time, c.line};
          break;
        }
      }
      const std::string who = kind_name(k) + " " + m.names.at(p);
      if (!seen)
        v.fail(crash.line, who + " crashed at " + crash.time.str() + " and was never suspected");
      else if (seen->first - crash.time > bound)
        v.fail(seen->second, who + " detected " + (seen->first - crash.time).str() + "s after its crash (bound " +
                                 bound.str() + ")");
      else
        v.ok();
    }
  }
  return v.done();
}

PropertyResult no_false_suspicion(const TraceModel& m) {
  Violations v("no-false-suspicion");
  const SimTime slack = m.ack_timeout;
  for (const auto& s : suspects(m)) {
    const Life* fault = nullptr;
    const Life* heal = nullptr;
    for (const auto& l : life_of(m, s.target)) {
      if (l.line > s.line) break;
      if (is_fault(l)) {
        fault = &l;
        heal = nullptr;
      } else if (fault && !heal && heals(*fault, l)) {
        heal = &l;
      }
    }
    if (fault && (!heal || s.time <= heal->time + slack))
      v.ok();
    else
      v.fail(s.line, "pid " + std::to_string(s.target) + " suspected by " + std::to_string(s.monitor) +
                         " while heartbeating");
  }
  return v.done();
}

PropertyResult suspect_once(const TraceModel& m) {
  Violations v("suspect-once");
  std::set<std::tuple<Pid, Pid, std::uint64_t>> seen;
  std::map<std::pair<Pid, Pid>, std::size_t> last;
  for (const auto& s : suspects(m)) {
    if (s.kind == "gsd") {
      if (!seen.insert({s.monitor, s.target, s.view}).second)
        v.fail(s.line, "pid " + std::to_string(s.monitor) + " suspected " + std::to_string(s.target) +
                           " twice in view " + std::to_string(s.view));
      else
        v.ok();
      continue;
    }
    auto key = std::make_pair(s.monitor, s.target);
    auto it = last.find(key);
    bool fresh = it == last.end();
    if (!fresh) {
      const std::size_t prev = it->second;
      for (const auto& l : life_of(m, s.target))
        if (l.line > prev && l.line < s.line &&
            (l.what == "restart" || l.what == "resume" || l.what == "recovered" || l.what == "crash"))
          fresh = true;
      for (const auto& l : life_of(m, s.monitor))
        if (l.line > prev && l.line < s.line && l.what == "restart") fresh = true;
    }
    if (fresh)
      v.ok();
    else
      v.fail(s.line, "pid " + std::to_string(s.monitor) + " suspected " + std::to_string(s.target) +
                         " again without an intervening recovery");
    last[key] = s.line;
  }
  return v.done();
}

// --- recovery -----------------------------------------------------------------

PropertyResult recovery_bound(const TraceModel& m) {
  Violations v("recovery");
  const SimTime bound = m.timeout + 3 * m.interval;
  for (const auto& [p, ls] : m.life) {
    const char k = m.kind_of(p);
    if (k != 'g' && k != 'n' && k != 'v') continue;
    for (const auto& crash : ls) {
      if (crash.what != "crash" || crash.cause != "process") continue;
      if (m.restart_failures.count(p) || m.end < crash.time + bound) continue;
      if (other_fault(m, p, crash.time - bound, crash.time + bound)) continue;
      if (paused_at(m, p, crash.line - 1)) continue;
      if (k == 'v' && vm_retired(m, m.id_of(p), crash.time, crash.time + bound)) continue;
      if (k == 'g') {
        auto g = group_at(m, crash.line);
        auto mine = std::find_if(m.views.rbegin(), m.views.rend(),
                                 [&](const auto& view) { return view.pid == p && view.line < crash.line; });
        if (!g || mine == m.views.rend() || !g->members.count(mine->gid) || g->members.size() < 2) continue;
      }
      const Life* rec = first_event(m, p, "recovered", crash.line);
      const std::string who = kind_name(k) + " " + m.names.at(p);
      if (!rec)
        v.fail(crash.line, who + " crashed at " + crash.time.str() + " and never recovered");
      else if (rec->time - crash.time > bound)
        v.fail(rec->line, who + " recovered " + (rec->time - crash.time).str() + "s after its crash (bound " +
                              bound.str() + ")");
      else
        v.ok();
    }
  }
  return v.done();
}

PropertyResult rejoin_gid(const TraceModel& m) {
  Violations v("rejoin-gid");
  for (const auto& [p, ls] : m.life) {
    if (m.kind_of(p) != 'g') continue;
    for (const auto& rec : ls) {
      if (rec.what != "recovered") continue;
      std::optional<std::uint32_t> gid;
      for (const auto& view : m.views)
        if (view.pid == p && view.line < rec.line) gid = view.gid;
      if (!gid) continue;
      bool good = true;
      for (const auto& view : m.views) {
        if (view.pid != p || view.line < rec.line || view.gid == *gid) continue;
        v.fail(view.line, m.names.at(p) + " came back as gid " + std::to_string(view.gid) + " instead of " +
                              std::to_string(*gid));
        good = false;
        break;
      }
      for (const auto& f : m.finals)
        if (good && f.pid == p && f.alive && f.active && !f.members.count(*gid)) {
          v.fail(f.line, "final view lacks recovered gid " + std::to_string(*gid));
          good = false;
        }
      if (good) v.ok();
    }
  }
  return v.done();
}

// --- partitions ---------------------------------------------------------------

struct Snapshot {
  std::uint32_t gid;
  Pid by;
  std::map<std::uint32_t, char> nodes;
  std::map<std::uint32_t, char> vms;
  std::size_t line;
};

std::map<std::uint32_t, char> parse_states(std::string_view s) {
  std::map<std::uint32_t, char> out;
  for (auto item : split(s, '|')) {
    auto colon = item.find(':');
    if (colon == std::string_view::npos || colon + 1 >= item.size()) continue;
    out[static_cast<std::uint32_t>(to_u64(item.substr(0, colon)))] = item[colon + 1];
  }
  return out;
}

std::vector<Snapshot> final_snapshots(const TraceModel& m) {
  std::vector<Snapshot> out;
  for (const auto& r : m.trace->records)
    if (r.kind == "partition")
      out.push_back({static_cast<std::uint32_t>(unum(r, "part")), r.pid, parse_states(field(r, "nodes")),
                     parse_states(field(r, "vms")), r.line});
  return out;
}

PropertyResult cascade(const TraceModel& m) {
  Violations v("cascade");
  for (const auto& s : final_snapshots(m)) {
    for (const auto& [vid, st] : s.vms) {
      if (st != 'R') continue;
      auto nid = m.nid_of_vid(vid);
      auto it = nid ? s.nodes.find(*nid) : s.nodes.end();
      if (it != s.nodes.end() && it->second != 'R')
        v.fail(s.line, "vm " + std::to_string(vid) + " Running on node " + std::to_string(*nid) + " in state " +
                           it->second);
      else
        v.ok();
    }
  }
  return v.done();
}

PropertyResult referential(const TraceModel& m) {
  Violations v("referential");
  for (const auto& s : final_snapshots(m)) {
    for (const auto& [vid, st] : s.vms) {
      auto nid = m.nid_of_vid(vid);
      if (!nid || !s.nodes.count(*nid))
        v.fail(s.line, "vm " + std::to_string(vid) + " of partition " + std::to_string(s.gid) +
                           " maps to no listed node");
      else
        v.ok();
    }
  }
  return v.done();
}

PropertyResult consistency(const TraceModel& m) {
  Violations v("consistency");
  if (!m.quiescent) {
    v.note("not quiescent; not applicable");
    return v.done();
  }
  bool final_phase = false;
  const sim::TraceRecord* ref = nullptr;
  std::size_t seen = 0;
  for (const auto& r : m.trace->records) {
    if (r.kind == "phase" && field(r, "name") == "final_fetch") final_phase = true;
    if (!final_phase || r.kind != "cluster_view") continue;
    ++seen;
    if (field(r, "complete") != "1") {
      v.fail(r.line, "fetch through gid " + std::string(field(r, "entry_gid")) + " incomplete");
      continue;
    }
    if (!ref) ref = &r;
    if (field(r, "digest") != field(*ref, "digest") || field(r, "stamp") != field(*ref, "stamp") ||
        field(r, "parts") != field(*ref, "parts"))
      v.fail(r.line, "view through gid " + std::string(field(r, "entry_gid")) + " digest " +
                         std::string(field(r, "digest")) + " differs from gid " +
                         std::string(field(*ref, "entry_gid")) + " digest " + std::string(field(*ref, "digest")));
    else
      v.ok();
  }
  std::size_t live = std::count_if(m.finals.begin(), m.finals.end(), [](const auto& f) { return f.alive && f.active; });
  if (seen != live)
    v.fail(m.trace->records.back().line,
           std::to_string(seen) + " final fetches for " + std::to_string(live) + " live group members");
  return v.done();
}

PropertyResult fanout(const TraceModel& m) {
  Violations v("fanout");
  std::map<std::uint64_t, std::size_t> wire_count;
  for (const auto& [id, s] : m.sends)
    if (s.type == "ClusterQuery" || s.type == "ClusterReply") ++wire_count[unum(*s.rec, "request")];
  for (const auto& r : m.trace->records) {
    if (r.kind != "cluster_view" || field(r, "complete") != "1" || unum(r, "retries") != 0) continue;
    const auto k = unum(r, "members");
    const auto remote = unum(r, "remote_msgs");
    const auto on_wire = wire_count[unum(r, "fetch")];
    if (remote != 2 * (k - 1))
      v.fail(r.line, "fetch with k=" + std::to_string(k) + " used " + std::to_string(remote) + " remote messages");
    else if (r.has("fetch") && on_wire != remote)
      v.fail(r.line, "fetch reports " + std::to_string(remote) + " remote messages but " + std::to_string(on_wire) +
                         " were sent");
    else
      v.ok();
  }
  return v.done();
}

PropertyResult coverage(const TraceModel& m) {
  Violations v("coverage");
  if (!m.quiescent) {
    v.note("not quiescent; not applicable");
    return v.done();
  }
  std::map<std::uint32_t, std::vector<const Snapshot*>> by_gid;
  auto snaps = final_snapshots(m);
  for (const auto& s : snaps) by_gid[s.gid].push_back(&s);
  for (const auto& f : m.finals) {
    if (f.gid == 0) continue;
    const auto& owners = by_gid[f.gid];
    if (owners.size() == 1)
      v.ok();
    else
      v.fail(f.line, "partition " + std::to_string(f.gid) + " managed by " + std::to_string(owners.size()) +
                         " live daemons");
  }
  return v.done();
}

// --- provisioning -------------------------------------------------------------

PropertyResult transactionality(const TraceModel& m) {
  Violations v("transactionality");
  if (!m.quiescent) {
    v.note("not quiescent; not applicable");
    return v.done();
  }
  struct Txn {
    std::string op;
    std::string phase;
    std::vector<std::uint32_t> vids;
    std::size_t line;
    Pid owner{0};
    bool log_lost{false};
  };
  std::map<std::uint64_t, Txn> txns;
  std::map<std::uint32_t, std::size_t> destroyed_at;  // vid -> line of committed destroy
  std::map<std::uint32_t, std::size_t> lost_at;       // vid -> line its host went down or left
  for (const auto& r : m.trace->records) {
    if (r.kind == "wal") {
      auto& t = txns[unum(r, "txn")];
      t.op = field(r, "op");
      t.phase = field(r, "phase");
      if (t.vids.empty())
        for (auto x : split(field(r, "vids"), ',')) t.vids.push_back(static_cast<std::uint32_t>(to_u64(x)));
      if (t.phase == "begun") {
        t.line = r.line;
        t.owner = r.pid;
      }
      if (t.op == "destroy" && t.phase == "committed")
        for (auto vid : t.vids) destroyed_at.emplace(vid, r.line);
    } else if (r.kind == "rollback") {
      txns[unum(r, "txn")].phase = "aborted";
    } else if (r.kind == "crash" && field(r, "cause") == "host") {
      for (auto& [id, t] : txns)
        if (t.owner == r.pid && t.phase == "begun") t.log_lost = true;
    } else if (r.kind == "host_down" || r.kind == "host_removed") {
      auto host = field(r, "host");
      if (host.substr(0, 2) == "vm") {
        lost_at.emplace(static_cast<std::uint32_t>(to_u64(host.substr(2))), r.line);
      } else if (host.substr(0, 4) == "node") {
        auto nid = static_cast<std::uint32_t>(to_u64(host.substr(4)));
        for (const auto& [id, t] : txns)
          for (auto vid : t.vids)
            if (m.nid_of_vid(vid) == nid) lost_at.emplace(vid, r.line);
      }
    }
  }
  std::map<std::uint32_t, std::set<std::uint32_t>> present;  // by partition gid
  for (const auto& s : final_snapshots(m))
    for (const auto& [vid, st] : s.vms) present[s.gid].insert(vid);
  auto exists = [&](std::uint32_t vid) {
    return std::any_of(present.begin(), present.end(), [&](const auto& kv) { return kv.second.count(vid) > 0; });
  };
  for (const auto& [id, t] : txns) {
    if (t.op != "create") continue;
    std::set<std::uint32_t> live, found;
    for (auto vid : t.vids) {
      auto d = destroyed_at.find(vid);
      auto l = lost_at.find(vid);
      if ((d != destroyed_at.end() && d->second > t.line) || (l != lost_at.end() && l->second > t.line)) continue;
      live.insert(vid);
      if (exists(vid)) found.insert(vid);
    }
    const std::string tag = "txn " + std::to_string(id);
    if (t.phase != "committed" && t.phase != "aborted" && !t.log_lost)
      v.fail(t.line, tag + " still " + t.phase + " at quiescence");
    else if (t.log_lost && t.phase == "begun" && !found.empty() && found != live)
      v.fail(t.line, tag + " lost its log with only {" + set_str(found) + "} of {" + set_str(live) + "} present");
    else if (t.phase == "committed" && found != live)
      v.fail(t.line, tag + " committed but only {" + set_str(found) + "} of {" + set_str(live) + "} exist");
    else if (t.phase == "aborted" && !found.empty())
      v.fail(t.line, tag + " aborted but {" + set_str(found) + "} exist");
    else
      v.ok();
  }
  return v.done();
}

PropertyResult slot_capacity(const TraceModel& m) {
  Violations v("slot-capacity");
  std::set<std::uint32_t> seen;
  auto check_vid = [&](std::uint32_t vid, std::size_t line) {
    if (!seen.insert(vid).second) return;
    try {
      auto slot = provision::decode_vid(vid, m.placement);
      if (slot.slot >= m.placement.max_vms_per_node)
        v.fail(line, "vm " + std::to_string(vid) + " occupies slot " + std::to_string(slot.slot));
      else
        v.ok();
    } catch (const std::exception& e) {
      v.fail(line, "vm " + std::to_string(vid) + " does not decode: " + e.what());
    }
  };
  for (const auto& r : m.trace->records) {
    if (r.kind == "delta") {
      for (auto d : split(field(r, "deltas"), ','))
        if (!d.empty() && d[0] == 'v') check_vid(static_cast<std::uint32_t>(to_u64(d.substr(1, d.find(':') - 1))), r.line);
    } else if (r.kind == "wal") {
      for (auto x : split(field(r, "vids"), ',')) check_vid(static_cast<std::uint32_t>(to_u64(x)), r.line);
    }
  }
  for (const auto& s : final_snapshots(m)) {
    std::map<std::uint32_t, std::size_t> per_node;
    for (const auto& [vid, st] : s.vms)
      if (auto nid = m.nid_of_vid(vid); nid && ++per_node[*nid] > m.placement.max_vms_per_node)
        v.fail(s.line, "node " + std::to_string(*nid) + " hosts more than " +
                           std::to_string(m.placement.max_vms_per_node) + " vms");
  }
  return v.done();
}

std::optional<provision::VmLifecycleState> lifecycle_of(char c) {
  using L = provision::VmLifecycleState;
  switch (c) {
    case 'R':
      return L::Running;
    case 'S':
      return L::Suspended;
    case 'H':
      return L::Halted;
    case 'C':
      return L::Crashed;
    default:
      return std::nullopt;
  }
}

PropertyResult lifecycle(const TraceModel& m) {
  Violations v("lifecycle");
  static const provision::VmOp ops[] = {provision::VmOp::Start,   provision::VmOp::Shutdown, provision::VmOp::Reboot,
                                        provision::VmOp::Resize,  provision::VmOp::Suspend,  provision::VmOp::Resume};
  std::map<std::pair<std::uint64_t, std::uint32_t>, char> state;  // (partition, vid)
  std::map<std::pair<std::uint64_t, std::uint32_t>, char> before_crash;
  for (const auto& r : m.trace->records) {
    if (r.kind != "delta") continue;
    const auto part = unum(r, "partition");
    for (auto d : split(field(r, "deltas"), ',')) {
      if (d.empty() || d[0] != 'v') continue;
      auto colon = d.find(':');
      if (colon == std::string_view::npos || colon + 1 >= d.size()) continue;
      const auto vid = static_cast<std::uint32_t>(to_u64(d.substr(1, colon - 1)));
      const char to = d[colon + 1];
      auto key = std::make_pair(part, vid);
      auto it = state.find(key);
      if (to == 'X') {
        if (it != state.end()) state.erase(it);
        continue;
      }
      if (it == state.end() || it->second == to) {
        state[key] = to;
        continue;
      }
      const char from = it->second;
      // A cascade is undone when the node comes back and reports what it holds.
      bool allowed = to == 'C' || (from == 'C' && (to == 'R' || before_crash[key] == to));
      if (to == 'C') before_crash[key] = from;
      auto a = lifecycle_of(from), b = lifecycle_of(to);
      for (auto op : ops)
        if (a && b && provision::transition(*a, op) == b) allowed = true;
      if (allowed)
        v.ok();
      else
        v.fail(r.line, "vm " + std::to_string(vid) + " went " + from + " -> " + to);
      it->second = to;
    }
  }
  return v.done();
}

// --- network ------------------------------------------------------------------

PropertyResult fifo(const TraceModel& m) {
  Violations v("fifo");
  std::map<std::pair<Pid, Pid>, std::uint64_t> last;
  for (const auto& r : m.trace->records) {
    if (r.kind != "recv") continue;
    auto key = std::make_pair(static_cast<Pid>(unum(r, "from")), r.pid);
    auto id = unum(r, "msg");
    auto& prev = last[key];
    if (id < prev)
      v.fail(r.line, "message " + std::to_string(id) + " on channel " + std::to_string(key.first) + "->" +
                         std::to_string(key.second) + " delivered after " + std::to_string(prev));
    else
      v.ok();
    prev = std::max(prev, id);
  }
  return v.done();
}

PropertyResult reliability(const TraceModel& m) {
  Violations v("reliability");
  std::map<std::uint64_t, std::size_t> recvs, drops, where;
  for (const auto& r : m.trace->records) {
    if (r.kind == "recv") {
      auto id = unum(r, "msg");
      ++recvs[id];
      where[id] = r.line;
    } else if (r.kind == "drop") {
      auto id = unum(r, "msg");
      ++drops[id];
      where[id] = r.line;
    }
  }
  const std::size_t last_line = m.trace->records.empty() ? 0 : m.trace->records.back().line;
  for (const auto& [id, s] : m.sends) {
    const std::size_t got = recvs[id];
    const std::size_t dropped = drops[id];
    const std::size_t send_line = s.rec->line;
    const std::string tag = s.type + " " + std::to_string(id) + " " + std::to_string(s.from) + "->" + std::to_string(s.to);
    if (got + dropped > 1) {
      v.fail(where[id], tag + " delivered " + std::to_string(got + dropped) + " times");
      continue;
    }
    auto disrupted = [&](std::size_t until) {
      if (!alive_at(m, s.to, send_line)) return true;
      for (const auto& l : life_of(m, s.to))
        if (l.line > send_line && l.line <= until && (l.what == "crash" || l.what == "stop" || l.what == "restart"))
          return true;
      return false;
    };
    if (dropped) {
      if (disrupted(where[id]))
        v.ok();
      else
        v.fail(where[id], tag + " dropped although the receiver stayed up");
      continue;
    }
    if (got) {
      v.ok();
      continue;
    }
    // Undelivered: only legal if the run ended first, or the receiver was
    // down or held the message while paused.
    if (m.end < s.at || paused_at(m, s.to, last_line) || disrupted(last_line))
      v.ok();
    else
      v.fail(send_line, tag + " never delivered");
  }
  return v.done();
}

PropertyResult clock(const TraceModel& m) {
  Violations v("clock");
  SimTime prev;
  for (const auto& r : m.trace->records) {
    if (r.time < prev)
      v.fail(r.line, "time " + r.time.str() + " after " + prev.str());
    else
      v.ok();
    prev = std::max(prev, r.time);
  }
  return v.done();
}

using PropertyFn = std::function<PropertyResult(const TraceModel&)>;

const std::vector<std::pair<std::string, PropertyFn>>& registry() {
  static const std::vector<std::pair<std::string, PropertyFn>> r = {
      {"5.1", self_inclusion},
      {"5.2", local_monotonicity},
      {"5.3", agreement},
      {"5.4", termination},
      {"single-round", single_round},
      {"compensation", compensation},
      {"detection", detection},
      {"no-false-suspicion", no_false_suspicion},
      {"suspect-once", suspect_once},
      {"recovery", recovery_bound},
      {"rejoin-gid", rejoin_gid},
      {"cascade", cascade},
      {"referential", referential},
      {"consistency", consistency},
      {"fanout", fanout},
      {"coverage", coverage},
      {"transactionality", transactionality},
      {"slot-capacity", slot_capacity},
      {"lifecycle", lifecycle},
      {"fifo", fifo},
      {"reliability", reliability},
      {"clock", clock},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [n, fn] : registry()) out.push_back(n);
    return out;
  }();
  return names;
}

std::vector<std::string> resolve_properties(const std::vector<std::string>& selected) {
  std::vector<std::string> out;
  for (const auto& s : selected) {
    if (s == "all") return property_names();
    if (std::find(property_names().begin(), property_names().end(), s) == property_names().end())
      throw std::invalid_argument("unknown property '" + s + "'");
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out.empty() ? property_names() : out;
}

PropertyResult check_property(const TraceModel& m, const std::string& name) {
  for (const auto& [n, fn] : registry())
    if (n == name) return fn(m);
  throw std::invalid_argument("unknown property '" + name + "'");
}

bool CheckReport::passed() const {
  return error.empty() && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
}

CheckReport check_trace(const sim::ParsedTrace& trace, const std::vector<std::string>& props) {
  CheckReport rep;
  auto names = resolve_properties(props);
  if (!trace.error.empty()) {
    rep.error = trace.error;
    return rep;
  }
  if (!trace.complete) {
    rep.error = "incomplete trace";
    return rep;
  }
  auto model = TraceModel::build(trace);
  rep.scenario = model.scenario;
  rep.seed = model.seed;
  rep.views_installed = model.views.size();
  for (const auto& [id, s] : model.sends) ++rep.messages_by_type[s.type];
  for (const auto& n : names) rep.results.push_back(check_property(model, n));
  return rep;
}

std::string format_report(const CheckReport& r) {
  std::ostringstream os;
  if (!r.error.empty()) {
    os << "status=error reason=" << r.error << "\n";
    return os.str();
  }
  for (const auto& p : r.results) {
    os << "property=" << p.name << " status=" << (p.pass ? "pass" : "fail") << " checked=" << p.checked;
    if (!p.pass) os << " scenario=" << (r.scenario.empty() ? "-" : r.scenario) << " seed=" << r.seed << " line=" << *p.line;
    os << "\n";
  }
  os << "count=views_installed value=" << r.views_installed << "\n";
  for (const auto& [type, n] : r.messages_by_type) os << "count=messages type=" << type << " value=" << n << "\n";
  os << "status=" << (r.passed() ? "pass" : "fail") << "\n\n";

  os << "property              result  checked  first violation\n";
  for (const auto& p : r.results) {
    std::string name = p.name;
    name.resize(std::max<std::size_t>(name.size(), 22), ' ');
    std::string res = p.pass ? "pass" : "FAIL";
    res.resize(8, ' ');
    std::string checked = std::to_string(p.checked);
    checked.resize(std::max<std::size_t>(checked.size(), 9), ' ');
    os << name << res << checked;
    if (!p.pass)
      os << "line " << *p.line << ": " << p.detail;
    else if (!p.detail.empty())
      os << p.detail;
    os << "\n";
  }
  return os.str();
}

}  // namespace vcm::check
