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

#include "vcm/sim/sim_time.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace vcm::sim {

SimTime SimTime::from_seconds(double s) {
  return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))};
}

SimTime SimTime::parse(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty time value");
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-') {
    negative = true;
    i = 1;
  }
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_digit = false;
  bool seen_dot = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("malformed time: " + std::string(text));
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw std::invalid_argument("malformed time: " + std::string(text));
    seen_digit = true;
    if (!seen_dot) {
      whole = whole * 10 + (c - '0');
    } else if (frac_digits < 6) {
      frac = frac * 10 + (c - '0');
      ++frac_digits;
    }
  }
  if (!seen_digit) throw std::invalid_argument("malformed time: " + std::string(text));
  while (frac_digits < 6) {
    frac *= 10;
    ++frac_digits;
  }
  std::int64_t us = whole * 1000000 + frac;
  return SimTime{negative ? -us : us};
}

std::string SimTime::str() const {
  char buf[40];
  std::int64_t v = us_;
  const char* sign = "";
  if (v < 0) {
    sign = "-";
    v = -v;
  }
  std::snprintf(buf, sizeof buf, "%s%lld.%06lld", sign, static_cast<long long>(v / 1000000),
                static_cast<long long>(v % 1000000));
  return buf;
}

}  // namespace vcm::sim
