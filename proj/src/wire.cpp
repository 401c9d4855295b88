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

#include "vcm/wire.hpp"

#include <sstream>

namespace vcm::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string member(const gm::GMember& m) { return std::to_string(m.gid.value) + ":" + m.address; }

template <class T>
std::string join_ids(const std::vector<T>& ids) {
  if (ids.empty()) return "-";
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(ids[i]);
  }
  return s;
}

}  // namespace

std::string_view to_string(CommandKind k) {
  switch (k) {
    case CommandKind::Create:
      return "create";
    case CommandKind::Destroy:
      return "destroy";
    case CommandKind::Op:
      return "op";
  }
  return "?";
}

std::string_view type_name(const Message& m) {
  static constexpr std::string_view names[] = {
      "Prepare",      "PrepareAck",    "Commit",         "NewViewG",      "Ack",
      "CrashReport",  "Joining",       "Rejoining",      "LeavingPropose", "CurrentVersion",
      "Probe",        "ProbeReply",    "RingHeartbeat",  "NdHeartbeat",   "VmdHeartbeat",
      "NdRegister",   "StateQuery",    "NdLeave",        "VmReport",      "VmCommand",
      "VmCommandDone", "TxnCommit",    "Adopt",          "ClusterQuery",  "ClusterReply",
      "GetClusterState", "ClusterStateResult", "GetVmsState", "VmsStateResult", "Subscribe",
      "Inform",       "CreateVms",     "DestroyVms",     "ManageVm",      "ClientResult"};
  static_assert(std::size(names) == std::variant_size_v<Message>);
  return names[m.index()];
}

bool is_heartbeat(const Message& m) {
  return std::holds_alternative<RingHeartbeat>(m) || std::holds_alternative<NdHeartbeat>(m) ||
         std::holds_alternative<VmdHeartbeat>(m);
}

std::string format_deltas(const std::vector<partition::Delta>& deltas) {
  if (deltas.empty()) return "-";
  std::string s;
  for (const auto& d : deltas) {
    if (!s.empty()) s += ',';
    std::visit(overloaded{[&](const partition::NodeDelta& n) {
                            s += "n" + std::to_string(n.nid) + ":";
                            s += n.state ? partition::code(*n.state) : 'X';
                          },
                          [&](const partition::VmDelta& v) {
                            s += "v" + std::to_string(v.vid) + ":";
                            s += v.state ? partition::code(*v.state) : 'X';
                          }},
               d);
  }
  return s;
}

std::string describe(const Message& m) {
  std::ostringstream os;
  os << "type=" << type_name(m);
  std::visit(
      overloaded{
          [&](const Prepare& x) { os << " from=" << member(x.from); },
          [&](const PrepareAck& x) { os << " from=" << member(x.from); },
          [&](const Commit& x) {
            os << " view=" << x.view.view_id << " members=" << gm::format_members(x.view) << " leader="
               << x.from.value;
          },
          [&](const NewViewG& x) {
            os << " view=" << x.view.view_id << " members=" << gm::format_members(x.view) << " leader="
               << x.leader.value;
          },
          [&](const Ack& x) { os << " gid=" << x.sender.value << " view=" << x.view_id; },
          [&](const CrashReport& x) {
            os << " view=" << x.view_id << " sender=" << member(x.sender) << " crasher=" << member(x.crasher);
          },
          [&](const Joining& x) { os << " address=" << x.address; },
          [&](const Rejoining& x) { os << " member=" << member(x.member); },
          [&](const LeavingPropose& x) { os << " view=" << x.view_id << " leaving=" << member(x.leaving); },
          [&](const CurrentVersion& x) { os << " view=" << x.view_id; },
          [&](const Probe& x) { os << " nonce=" << x.nonce; },
          [&](const ProbeReply& x) { os << " nonce=" << x.nonce; },
          [&](const RingHeartbeat& x) { os << " gid=" << x.gid.value << " view=" << x.view_id; },
          [&](const NdHeartbeat& x) { os << " nid=" << x.nid; },
          [&](const VmdHeartbeat& x) { os << " vid=" << x.vid; },
          [&](const NdRegister& x) { os << " nid=" << x.nid << " vms=" << x.vms.size(); },
          [&](const StateQuery&) {},
          [&](const NdLeave& x) { os << " nid=" << x.nid; },
          [&](const VmReport& x) { os << " vid=" << x.vid << " state=" << partition::to_string(x.state); },
          [&](const VmCommand& x) {
            os << " kind=" << to_string(x.kind) << " vid=" << x.vid << " txn=" << x.txn
               << " op=" << provision::to_string(x.op);
          },
          [&](const VmCommandDone& x) {
            os << " kind=" << to_string(x.kind) << " vid=" << x.vid << " txn=" << x.txn
               << " op=" << provision::to_string(x.op) << " ok=" << (x.ok ? 1 : 0)
               << " state=" << partition::to_string(x.state);
          },
          [&](const TxnCommit& x) { os << " txn=" << x.txn; },
          [&](const Adopt& x) { os << " manager=" << x.manager; },
          [&](const ClusterQuery& x) { os << " request=" << x.request << " stamp=" << x.stamp; },
          [&](const ClusterReply& x) {
            os << " request=" << x.request << " stamp=" << x.stamp << " gid=" << x.from.value
               << " parts=" << x.parts.size();
          },
          [&](const GetClusterState& x) { os << " request=" << x.request; },
          [&](const ClusterStateResult& x) {
            os << " request=" << x.request << " stamp=" << x.view.stamp << " parts=" << x.view.partitions.size()
               << " remote_msgs=" << x.remote_messages << " retries=" << x.retries
               << " complete=" << (x.complete ? 1 : 0);
          },
          [&](const GetVmsState& x) { os << " request=" << x.request << " vids=" << join_ids(x.vids); },
          [&](const VmsStateResult& x) { os << " request=" << x.request << " count=" << x.states.size(); },
          [&](const Subscribe& x) { os << " partition=" << x.partition.value << " client=" << x.client << " filter=" << partition::to_string(x.filter); },
          [&](const Inform& x) { os << " partition=" << x.partition.value << " deltas=" << format_deltas(x.deltas); },
          [&](const CreateVms& x) { os << " request=" << x.request << " partition=" << x.partition.value << " count=" << x.placements.size(); },
          [&](const DestroyVms& x) { os << " request=" << x.request << " vids=" << join_ids(x.vids); },
          [&](const ManageVm& x) {
            os << " request=" << x.request << " vid=" << x.vid << " op=" << provision::to_string(x.op);
          },
          [&](const ClientResult& x) {
            os << " request=" << x.request << " ok=" << (x.ok ? 1 : 0) << " detail=" << (x.detail.empty() ? "-" : x.detail);
          },
      },
      m);
  return os.str();
}

}  // namespace vcm::wire
