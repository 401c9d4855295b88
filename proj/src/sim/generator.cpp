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

#include "vcm/sim/generator.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "vcm/provision/provisioning.hpp"

namespace vcm::sim {

namespace {

struct Part {
  std::uint32_t index;
  std::vector<std::uint32_t> nids;
  std::uint32_t gsd_host;
  bool founding;
  bool member{true};
  bool gsd_alive{true};
};

struct Vm {
  std::uint32_t vid;
  std::uint32_t nid;
};

class Gen {
 public:
  Gen(const GenOptions& o, std::uint64_t seed) : o_(o), rng_(seed) {}

  std::string run(std::uint64_t seed);

 private:
  std::uint32_t pick(std::uint32_t lo, std::uint32_t hi) {
    return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng_);
  }
  template <class T>
  const T& choose(const std::vector<T>& v) {
    return v[pick(0, static_cast<std::uint32_t>(v.size() - 1))];
  }
  bool node_alive(std::uint32_t nid) const { return !dead_nodes_.count(nid); }
  Part& part_of(std::uint32_t nid) {
    for (auto& p : parts_)
      if (std::find(p.nids.begin(), p.nids.end(), nid) != p.nids.end()) return p;
    return parts_.front();
  }
  bool try_event(std::ostringstream& out, SimTime t);

  const GenOptions& o_;
  std::mt19937_64 rng_;
  SimTime timeout_, interval_;
  std::vector<Part> parts_;
  std::vector<Vm> vms_;
  std::set<std::uint32_t> dead_nodes_;
  std::uint32_t next_nid_{1};
  std::uint32_t npp_{1};
};

std::string Gen::run(std::uint64_t seed) {
  static const std::pair<const char*, const char*> timings[] = {{"1", "0.25"}, {"2", "0.5"}, {"3", "1"}, {"5", "1"}};
  const auto& tm = timings[pick(0, 3)];
  timeout_ = o_.timeout.value_or(SimTime::parse(tm.first));
  interval_ = o_.interval.value_or(SimTime::parse(tm.second));
  const SimTime delay = o_.restart_delay.value_or(interval_);

  const std::uint32_t p = pick(o_.min_gsds, o_.max_gsds);
  npp_ = pick(1, o_.max_nodes_per_partition);
  const std::uint32_t vpn = pick(0, o_.max_vms_per_node);
  provision::PlacementConfig cfg;
  for (std::uint32_t i = 1; i <= p; ++i) {
    Part part{i, {}, next_nid_, true};
    for (std::uint32_t n = 0; n < npp_; ++n) {
      const std::uint32_t nid = next_nid_++;
      part.nids.push_back(nid);
      for (std::uint32_t s = 0; s < vpn; ++s) vms_.push_back({provision::encode_vid({gm::Gid{i}, n, s}, cfg), nid});
    }
    parts_.push_back(part);
  }

  std::ostringstream out;
  out << "# generated seed=" << seed << "\n[topology]\npartitions = " << p << "\nnodes_per_partition = " << npp_
      << "\nvms_per_node = " << vpn << "\n\n[config]\nheartbeat_timeout = " << timeout_.str()
      << "\nheartbeat_interval = " << interval_.str() << "\nrestart_delay = " << delay.str() << "\nseed = " << seed
      << "\n\n[schedule]\n";

  // Room for detection, restart, rebuild and a membership round.
  const SimTime gap = 2 * timeout_ + 6 * interval_ + 2 * delay + SimTime::seconds(3);
  SimTime t = timeout_ + 2 * interval_;
  const std::uint32_t events = pick(o_.min_events, o_.max_events);
  for (std::uint32_t e = 0; e < events; ++e) {
    t += gap + SimTime::micros(pick(0, static_cast<std::uint32_t>(interval_.us())));
    for (int attempt = 0; attempt < 32; ++attempt)
      if (try_event(out, t)) break;
  }
  return out.str();
}

bool Gen::try_event(std::ostringstream& out, SimTime t) {
  enum Kind { CrashGsd, CrashNd, CrashVmd, CrashNode, Join, Leave, Rejoin, Pause, Query, Create, VmOpK, Destroy };
  std::vector<Kind> menu;
  if (o_.process_crashes) menu.insert(menu.end(), {CrashGsd, CrashGsd, CrashNd, CrashVmd});
  if (o_.node_crashes) menu.push_back(CrashNode);
  if (o_.membership) menu.insert(menu.end(), {Join, Leave, Rejoin});
  if (o_.pauses) menu.push_back(Pause);
  if (o_.queries) menu.push_back(Query);
  if (o_.provisioning) menu.insert(menu.end(), {Create, VmOpK, Destroy});
  if (menu.empty()) return true;

  std::vector<Part*> active, left, founding;
  for (auto& p : parts_) {
    if (p.member && p.gsd_alive) active.push_back(&p);
    if (!p.member && p.gsd_alive) left.push_back(&p);
    if (p.member && p.gsd_alive && p.founding &&
        std::any_of(p.nids.begin(), p.nids.end(), [&](auto n) { return node_alive(n); }))
      founding.push_back(&p);
  }
  std::vector<std::uint32_t> live_nodes;
  for (const auto& p : parts_)
    for (auto n : p.nids)
      if (node_alive(n)) live_nodes.push_back(n);
  std::vector<Vm> live_vms;
  for (const auto& v : vms_)
    if (node_alive(v.nid)) live_vms.push_back(v);

  const std::string at = t.str() + " ";
  switch (choose(menu)) {
    case CrashGsd: {
      if (active.size() < 2) return false;
      out << at << "crash_process gsd:" << choose(active)->index << "\n";
      return true;
    }
    case CrashNd: {
      if (live_nodes.empty()) return false;
      out << at << "crash_process nd:" << choose(live_nodes) << "\n";
      return true;
    }
    case CrashVmd: {
      if (live_vms.empty()) return false;
      out << at << "crash_process vmd:" << choose(live_vms).vid << "\n";
      return true;
    }
    case CrashNode: {
      if (live_nodes.empty()) return false;
      const auto nid = choose(live_nodes);
      auto& part = part_of(nid);
      if (part.gsd_host == nid) {
        if (!part.member || active.size() < 2) return false;
        dead_nodes_.insert(nid);
        auto spare = std::find_if(part.nids.begin(), part.nids.end(), [&](auto n) { return node_alive(n); });
        if (spare == part.nids.end())
          part.gsd_alive = false;
        else
          part.gsd_host = *spare;
      }
      dead_nodes_.insert(nid);
      out << at << "crash_node node:" << nid << "\n";
      return true;
    }
    case Join: {
      if (parts_.size() >= o_.max_gsds) return false;
      const std::uint32_t n = pick(1, npp_);
      Part part{static_cast<std::uint32_t>(parts_.size() + 1), {}, next_nid_, false};
      for (std::uint32_t i = 0; i < n; ++i) part.nids.push_back(next_nid_++);
      parts_.push_back(part);
      out << at << "join_gsd " << n << "\n";
      return true;
    }
    case Leave: {
      if (active.size() < 3) return false;
      auto* p = choose(active);
      p->member = false;
      out << at << "leave_gsd gsd:" << p->index << "\n";
      return true;
    }
    case Rejoin: {
      if (left.empty()) return false;
      auto* p = choose(left);
      p->member = true;
      out << at << "rejoin_gsd gsd:" << p->index << "\n";
      return true;
    }
    case Pause: {
      if (active.size() < 2) return false;
      auto* p = choose(active);
      const bool long_pause = pick(0, 1) == 1;
      const SimTime len = long_pause ? timeout_ + 2 * interval_ : SimTime::micros(interval_.us() / 2);
      out << at << "pause_process gsd:" << p->index << "\n" << (t + len).str() << " resume_process gsd:" << p->index << "\n";
      return true;
    }
    case Query: {
      if (founding.empty()) return false;
      out << at << "get_cluster_state " << choose(founding)->index << "\n";
      return true;
    }
    case Create: {
      if (founding.empty()) return false;
      out << at << "create_vms " << choose(founding)->index << " " << pick(1, 3) << "\n";
      return true;
    }
    case VmOpK: {
      if (live_vms.empty()) return false;
      static const std::vector<std::string> ops = {"start", "shutdown", "reboot", "resize", "suspend", "resume"};
      out << at << "vm_op " << choose(live_vms).vid << " " << choose(ops) << "\n";
      return true;
    }
    case Destroy: {
      if (live_vms.empty()) return false;
      const auto vid = choose(live_vms).vid;
      vms_.erase(std::remove_if(vms_.begin(), vms_.end(), [&](const Vm& v) { return v.vid == vid; }), vms_.end());
      out << at << "destroy_vms " << vid << "\n";
      return true;
    }
  }
  return false;
}

}  // namespace

std::string generate_scenario(const GenOptions& opts, std::uint64_t seed) { return Gen(opts, seed).run(seed); }

}  // namespace vcm::sim
