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

#include "vcm/sim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace vcm::sim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    auto start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::uint32_t parse_u32(std::string_view s, std::size_t line, std::string_view what) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ScenarioError(line, "expected non-negative integer for " + std::string(what) + ", got '" + std::string(s) + "'");
  return v;
}

SimTime parse_time(std::string_view s, std::size_t line, std::string_view what) {
  try {
    auto t = SimTime::parse(s);
    if (t < SimTime{}) throw std::invalid_argument("negative");
    return t;
  } catch (const std::exception&) {
    throw ScenarioError(line, "expected time in seconds for " + std::string(what) + ", got '" + std::string(s) + "'");
  }
}

bool parse_bool(std::string_view s, std::size_t line, std::string_view what) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ScenarioError(line, "expected boolean for " + std::string(what));
}

Target parse_target(std::string_view s, std::size_t line) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw ScenarioError(line, "target must look like kind:id, got '" + std::string(s) + "'");
  auto kind = s.substr(0, colon);
  Target t;
  if (kind == "gsd")
    t.kind = TargetKind::Gsd;
  else if (kind == "nd")
    t.kind = TargetKind::Nd;
  else if (kind == "vmd")
    t.kind = TargetKind::Vmd;
  else if (kind == "node")
    t.kind = TargetKind::Node;
  else if (kind == "vm")
    t.kind = TargetKind::Vm;
  else
    throw ScenarioError(line, "unknown target kind '" + std::string(kind) + "'");
  t.id = parse_u32(s.substr(colon + 1), line, "target id");
  if (t.id == 0) throw ScenarioError(line, "target ids start at 1");
  return t;
}

const std::map<std::string_view, Verb>& verbs() {
  static const std::map<std::string_view, Verb> m = {
      {"crash_process", Verb::CrashProcess},     {"crash_node", Verb::CrashNode},
      {"pause_process", Verb::PauseProcess},     {"resume_process", Verb::ResumeProcess},
      {"join_gsd", Verb::JoinGsd},               {"leave_gsd", Verb::LeaveGsd},
      {"rejoin_gsd", Verb::RejoinGsd},           {"leave_node", Verb::LeaveNode},
      {"join_node", Verb::JoinNode},             {"get_cluster_state", Verb::GetClusterState},
      {"get_vms_state", Verb::GetVmsState},      {"subscribe", Verb::Subscribe},
      {"create_vms", Verb::CreateVms},           {"destroy_vms", Verb::DestroyVms},
      {"vm_op", Verb::VmOp},                     {"fail_restart", Verb::FailRestart},
  };
  return m;
}

Injection parse_schedule_line(std::string_view text, std::size_t line) {
  auto tok = split_ws(text);
  if (tok.size() < 2) throw ScenarioError(line, "schedule lines are '<time> <verb> <args...>'");
  Injection inj;
  inj.line = line;
  inj.text = std::string(text);
  inj.time = parse_time(tok[0], line, "schedule time");
  auto it = verbs().find(tok[1]);
  if (it == verbs().end()) throw ScenarioError(line, "unknown verb '" + std::string(tok[1]) + "'");
  inj.verb = it->second;
  std::vector<std::string_view> args(tok.begin() + 2, tok.end());

  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      throw ScenarioError(line, std::string(tok[1]) + " takes " + std::to_string(lo) +
                                    (lo == hi ? "" : ".." + (hi == SIZE_MAX ? std::string("n") : std::to_string(hi))) +
                                    " arguments");
  };
  auto target_of = [&](std::string_view a, std::initializer_list<TargetKind> allowed) {
    auto t = parse_target(a, line);
    if (std::find(allowed.begin(), allowed.end(), t.kind) == allowed.end())
      throw ScenarioError(line, std::string(tok[1]) + " does not accept target '" + std::string(a) + "'");
    return t;
  };

  switch (inj.verb) {
    case Verb::CrashProcess:
    case Verb::PauseProcess:
    case Verb::ResumeProcess:
    case Verb::FailRestart:
      need(1, 1);
      inj.target = target_of(args[0], {TargetKind::Gsd, TargetKind::Nd, TargetKind::Vmd});
      break;
    case Verb::CrashNode:
      need(1, 1);
      inj.target = target_of(args[0], {TargetKind::Node, TargetKind::Vm});
      break;
    case Verb::JoinGsd:
      need(0, 1);
      if (!args.empty()) {
        inj.numbers.push_back(parse_u32(args[0], line, "node count"));
        if (inj.numbers[0] == 0) throw ScenarioError(line, "a joining partition needs at least one node");
      }
      break;
    case Verb::LeaveGsd:
    case Verb::RejoinGsd:
      need(1, 1);
      inj.target = target_of(args[0], {TargetKind::Gsd});
      break;
    case Verb::LeaveNode:
    case Verb::JoinNode:
      need(1, 1);
      inj.target = target_of(args[0], {TargetKind::Node});
      break;
    case Verb::GetClusterState:
      need(1, 1);
      inj.numbers.push_back(parse_u32(args[0], line, "gid"));
      break;
    case Verb::GetVmsState:
    case Verb::DestroyVms:
      need(0, SIZE_MAX);
      for (auto a : args) inj.numbers.push_back(parse_u32(a, line, "vid"));
      break;
    case Verb::Subscribe: {
      need(2, 3);
      inj.numbers.push_back(parse_u32(args[0], line, "gid"));
      auto f = partition::parse_filter(args[1]);
      if (!f) throw ScenarioError(line, "filter must be nodes, vms or both");
      inj.filter = *f;
      if (args.size() == 3) inj.client = std::string(args[2]);
      break;
    }
    case Verb::CreateVms: {
      need(2, SIZE_MAX);
      for (auto a : args) inj.numbers.push_back(parse_u32(a, line, "create_vms argument"));
      std::size_t pinned = inj.numbers.size() - 2;
      if (pinned != 0 && pinned != inj.numbers[1])
        throw ScenarioError(line, "create_vms lists node indices for none or all of the VMs");
      break;
    }
    case Verb::VmOp: {
      need(2, 2);
      inj.numbers.push_back(parse_u32(args[0], line, "vid"));
      inj.op = provision::parse_vm_op(args[1]);
      if (!inj.op) throw ScenarioError(line, "unknown vm operation '" + std::string(args[1]) + "'");
      break;
    }
  }
  return inj;
}

}  // namespace

std::map<std::string, SimTime> default_op_delays() {
  return {
      {"create", SimTime::parse("3.765")},  {"start", SimTime::parse("3.765")},
      {"suspend", SimTime::parse("6.992")}, {"resume", SimTime::parse("5.813")},
      {"shutdown", SimTime::parse("11.732")}, {"resize", SimTime::parse("0.391")},
      {"reboot", SimTime::parse("15.497")}, {"destroy", SimTime::parse("0.1")},
  };
}

SimTime ScenarioConfig::op_time(std::string_view op) const {
  auto it = op_delay.find(std::string(op));
  if (it != op_delay.end()) return it->second;
  auto defaults = default_op_delays();
  auto d = defaults.find(std::string(op));
  return d == defaults.end() ? SimTime{} : d->second;
}

SimTime ScenarioConfig::effective_ack_timeout() const {
  return ack_timeout.value_or(2 * latency_max + heartbeat.interval);
}

SimTime ScenarioConfig::effective_quiet_window() const {
  if (quiet_window) return *quiet_window;
  return 2 * (heartbeat.timeout + heartbeat.interval) +
         static_cast<std::int64_t>(recovery.max_restart_attempts) * recovery.restart_delay + 4 * heartbeat.interval;
}

SimTime ScenarioConfig::effective_horizon() const {
  return horizon.value_or(SimTime::seconds(1000000));
}

std::string_view to_string(TargetKind k) {
  switch (k) {
    case TargetKind::Gsd:
      return "gsd";
    case TargetKind::Nd:
      return "nd";
    case TargetKind::Vmd:
      return "vmd";
    case TargetKind::Node:
      return "node";
    case TargetKind::Vm:
      return "vm";
  }
  return "?";
}

std::string Target::str() const { return std::string(to_string(kind)) + ":" + std::to_string(id); }

std::string_view to_string(Verb v) {
  for (const auto& [name, verb] : verbs())
    if (verb == v) return name;
  return "?";
}

Scenario parse_scenario(std::string_view text) {
  Scenario sc;
  enum class Section { None, Topology, Config, Schedule } section = Section::None;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    auto line = trim(raw);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    if (line.front() == '[') {
      if (line == "[topology]")
        section = Section::Topology;
      else if (line == "[config]")
        section = Section::Config;
      else if (line == "[schedule]")
        section = Section::Schedule;
      else
        throw ScenarioError(line_no, "unknown section " + std::string(line));
      continue;
    }

    if (section == Section::Schedule) {
      sc.schedule.push_back(parse_schedule_line(line, line_no));
      continue;
    }
    auto eq = line.find('=');
    if (section == Section::None) throw ScenarioError(line_no, "content before the first section header");
    if (eq == std::string_view::npos) throw ScenarioError(line_no, "expected key = value");
    auto key = trim(line.substr(0, eq));
    auto val = trim(line.substr(eq + 1));

    if (section == Section::Topology) {
      if (key == "partitions")
        sc.topology.partitions = parse_u32(val, line_no, key);
      else if (key == "nodes_per_partition")
        sc.topology.nodes_per_partition = parse_u32(val, line_no, key);
      else if (key == "vms_per_node")
        sc.topology.vms_per_node = parse_u32(val, line_no, key);
      else
        throw ScenarioError(line_no, "unknown topology key '" + std::string(key) + "'");
      continue;
    }

    auto& c = sc.config;
    if (key == "heartbeat_interval")
      c.heartbeat.interval = parse_time(val, line_no, key);
    else if (key == "heartbeat_timeout")
      c.heartbeat.timeout = parse_time(val, line_no, key);
    else if (key == "latency")
      c.latency_min = c.latency_max = parse_time(val, line_no, key);
    else if (key == "latency_min")
      c.latency_min = parse_time(val, line_no, key);
    else if (key == "latency_max")
      c.latency_max = parse_time(val, line_no, key);
    else if (key == "seed")
      c.seed = parse_u32(val, line_no, key);
    else if (key == "restart_delay")
      c.recovery.restart_delay = parse_time(val, line_no, key);
    else if (key == "max_restart_attempts")
      c.recovery.max_restart_attempts = parse_u32(val, line_no, key);
    else if (key == "max_nodes_per_partition")
      c.placement.max_nodes_per_partition = parse_u32(val, line_no, key);
    else if (key == "max_vms_per_node")
      c.placement.max_vms_per_node = parse_u32(val, line_no, key);
    else if (key == "horizon")
      c.horizon = parse_time(val, line_no, key);
    else if (key == "quiet_window")
      c.quiet_window = parse_time(val, line_no, key);
    else if (key == "ack_timeout")
      c.ack_timeout = parse_time(val, line_no, key);
    else if (key == "fetch_retries")
      c.fetch_retries = parse_u32(val, line_no, key);
    else if (key == "trace_heartbeats")
      c.trace_heartbeats = parse_bool(val, line_no, key);
    else if (key.substr(0, 9) == "op_delay.") {
      auto op = key.substr(9);
      auto defaults = default_op_delays();
      if (!defaults.count(std::string(op))) throw ScenarioError(line_no, "unknown operation '" + std::string(op) + "'");
      c.op_delay[std::string(op)] = parse_time(val, line_no, key);
    } else
      throw ScenarioError(line_no, "unknown config key '" + std::string(key) + "'");
  }

  try {
    sc.config.heartbeat.validate();
    sc.config.recovery.validate();
    sc.config.placement.validate();
  } catch (const std::exception& e) {
    throw ScenarioError(line_no, e.what());
  }
  if (sc.config.latency_max < sc.config.latency_min) throw ScenarioError(line_no, "latency_max < latency_min");
  const auto& t = sc.topology;
  if (t.partitions == 0) throw ScenarioError(line_no, "partitions must be >= 1");
  if (t.nodes_per_partition == 0 || t.nodes_per_partition > sc.config.placement.max_nodes_per_partition)
    throw ScenarioError(line_no, "nodes_per_partition must be in 1..max_nodes_per_partition");
  if (t.vms_per_node > sc.config.placement.max_vms_per_node)
    throw ScenarioError(line_no, "vms_per_node exceeds max_vms_per_node");

  std::stable_sort(sc.schedule.begin(), sc.schedule.end(),
                   [](const Injection& a, const Injection& b) { return a.time < b.time; });
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open scenario " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  auto sc = parse_scenario(ss.str());
  sc.name = std::filesystem::path(path).filename().string();
  return sc;
}

}  // namespace vcm::sim
