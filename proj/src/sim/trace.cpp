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

#include "vcm/sim/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vcm::sim {

void Trace::record(SimTime t, Pid pid, std::string_view kind, std::string_view payload) {
  text_ += t.str();
  text_ += ' ';
  text_ += std::to_string(pid);
  text_ += ' ';
  text_ += kind;
  if (!payload.empty()) {
    text_ += ' ';
    text_ += payload;
  }
  text_ += '\n';
  ++lines_;
}

void Trace::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << text_;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::optional<std::string_view> TraceRecord::get(std::string_view key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return std::string_view(v);
  return std::nullopt;
}

std::int64_t TraceRecord::num(std::string_view key, std::int64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) return fallback;
  return out;
}

ParsedTrace parse_trace(std::string_view text) {
  ParsedTrace out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;

    TraceRecord r;
    r.line = line_no;
    std::size_t i = 0;
    auto next_token = [&]() -> std::string_view {
      while (i < line.size() && line[i] == ' ') ++i;
      auto start = i;
      while (i < line.size() && line[i] != ' ') ++i;
      return line.substr(start, i - start);
    };
    auto t = next_token();
    auto pid = next_token();
    auto kind = next_token();
    if (t.empty() || pid.empty() || kind.empty()) {
      out.error = "line " + std::to_string(line_no) + ": expected <time> <pid> <kind>";
      return out;
    }
    try {
      r.time = SimTime::parse(t);
    } catch (const std::exception&) {
      out.error = "line " + std::to_string(line_no) + ": bad time '" + std::string(t) + "'";
      return out;
    }
    auto [p, ec] = std::from_chars(pid.data(), pid.data() + pid.size(), r.pid);
    if (ec != std::errc() || p != pid.data() + pid.size()) {
      out.error = "line " + std::to_string(line_no) + ": bad pid '" + std::string(pid) + "'";
      return out;
    }
    r.kind = std::string(kind);
    for (auto tok = next_token(); !tok.empty(); tok = next_token()) {
      auto eq = tok.find('=');
      if (eq == std::string_view::npos) {
        out.error = "line " + std::to_string(line_no) + ": field without '=': " + std::string(tok);
        return out;
      }
      r.fields.emplace_back(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    out.records.push_back(std::move(r));
  }
  out.complete = !out.records.empty() && out.records.back().kind == "end";
  return out;
}

ParsedTrace read_trace_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    ParsedTrace out;
    out.error = "cannot open " + path;
    return out;
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trace(ss.str());
}

}  // namespace vcm::sim
