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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vcm/sim/sim_time.hpp"

namespace vcm::sim {

using Pid = std::uint32_t;

/// Append-only text trace. One record per line:
///   <time> <pid> <kind> key=value ...
class Trace {
 public:
  void record(SimTime t, Pid pid, std::string_view kind, std::string_view payload);
  const std::string& text() const { return text_; }
  std::size_t size() const { return lines_; }
  /// Throws std::runtime_error if the file cannot be written.
  void write(const std::string& path) const;

 private:
  std::string text_;
  std::size_t lines_{0};
};

struct TraceRecord {
  SimTime time;
  Pid pid{0};
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;
  std::size_t line{0};  // 1-based

  std::optional<std::string_view> get(std::string_view key) const;
  /// Missing or non-numeric keys yield `fallback`.
  std::int64_t num(std::string_view key, std::int64_t fallback = -1) const;
  bool has(std::string_view key) const { return get(key).has_value(); }
};

struct ParsedTrace {
  std::vector<TraceRecord> records;
  /// Empty when every line parsed; otherwise describes the first bad line.
  std::string error;
  bool complete{false};  // final record is `end`
};

ParsedTrace parse_trace(std::string_view text);
ParsedTrace read_trace_file(const std::string& path);

}  // namespace vcm::sim
