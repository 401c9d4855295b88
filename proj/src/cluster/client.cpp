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

#include <cstdio>

#include "vcm/cluster/daemons.hpp"
#include "vcm/cluster/format.hpp"

namespace vcm::cluster {

std::optional<Nid> Directory::host_nid(Vid vid) const {
  auto slot = provision::decode_vid(vid, config.placement);
  auto it = partition_by_gid.find(slot.gid.value);
  if (it == partition_by_gid.end()) return std::nullopt;
  const auto& p = partitions.at(it->second - 1);
  if (slot.node_index >= p.nids.size()) return std::nullopt;
  return p.nids[slot.node_index];
}

std::uint64_t Client::request(Context& ctx, Pid to, wire::Message msg) {
  const std::uint64_t id = next_request_++;
  std::visit(
      [&](auto& x) {
        if constexpr (requires { x.request; }) x.request = id;
      },
      msg);
  ctx.send(to, std::move(msg));
  return id;
}

void Client::on_message(Context& ctx, Pid from, const wire::Message& m) {
  if (const auto* r = std::get_if<wire::ClientResult>(&m)) {
    ctx.trace("result", "kind=client request=" + std::to_string(r->request) + " from=" + std::to_string(from) +
                            " ok=" + (r->ok ? "1" : "0") + " detail=" + sanitize(r->detail));
  } else if (const auto* c = std::get_if<wire::ClusterStateResult>(&m)) {
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(c->view.digest()));
    fetches_[c->request] = FetchResult{from, c->view.digest(), c->view.stamp, c->complete};
    ctx.trace("result", "kind=cluster request=" + std::to_string(c->request) + " entry=" + std::to_string(from) +
                            " stamp=" + std::to_string(c->view.stamp) +
                            " parts=" + std::to_string(c->view.partitions.size()) + " digest=" + digest +
                            " remote_msgs=" + std::to_string(c->remote_messages) +
                            " retries=" + std::to_string(c->retries) + " complete=" + (c->complete ? "1" : "0"));
  } else if (const auto* v = std::get_if<wire::VmsStateResult>(&m)) {
    std::string states = join_list(v->states, [](const auto& p) {
      return std::to_string(p.first) + ":" + (p.second ? std::string(partition::to_string(*p.second)) : "-");
    });
    ctx.trace("result", "kind=vms request=" + std::to_string(v->request) + " states=" + states);
  } else if (const auto* i = std::get_if<wire::Inform>(&m)) {
    ctx.trace("inform", "partition=" + std::to_string(i->partition.value) +
                            " deltas=" + wire::format_deltas(i->deltas));
  }
}

}  // namespace vcm::cluster
