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

#include <string>
#include <string_view>
#include <vector>

namespace vcm::cluster {

/// Comma-joined rendering; "-" for an empty list.
template <class T, class F>
std::string join_list(const std::vector<T>& items, F&& render) {
  if (items.empty()) return "-";
  std::string s;
  for (const auto& x : items) {
    if (!s.empty()) s += ',';
    s += render(x);
  }
  return s;
}

template <class T>
std::string join_ids(const std::vector<T>& ids) {
  return join_list(ids, [](const T& v) { return std::to_string(v); });
}

inline std::string join_strings(const std::vector<std::string>& items) {
  return join_list(items, [](const std::string& v) { return v; });
}

/// Trace payload values never contain whitespace.
inline std::string sanitize(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c == ' ' || c == '\t' || c == '\n') c = '_';
  return out.empty() ? "-" : out;
}

}  // namespace vcm::cluster
