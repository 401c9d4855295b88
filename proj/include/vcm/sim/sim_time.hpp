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

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace vcm::sim {

/// Simulated time in whole microseconds.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime micros(std::int64_t us) { return SimTime{us}; }
  static constexpr SimTime millis(std::int64_t ms) { return SimTime{ms * 1000}; }
  static constexpr SimTime seconds(std::int64_t s) { return SimTime{s * 1000000}; }
  /// Rounds to the nearest microsecond.
  static SimTime from_seconds(double s);
  /// Parses "12", "0.25", "3.765" without going through floating point.
  static SimTime parse(std::string_view text);
  static constexpr SimTime max() { return SimTime{INT64_MAX / 4}; }

  constexpr std::int64_t us() const { return us_; }
  double to_seconds() const { return static_cast<double>(us_) / 1e6; }
  /// Six fractional digits, e.g. "15.000000".
  std::string str() const;

  friend constexpr auto operator<=>(SimTime, SimTime) = default;
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.us_ + b.us_}; }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.us_ - b.us_}; }
  friend constexpr SimTime operator*(std::int64_t k, SimTime a) { return SimTime{k * a.us_}; }
  SimTime& operator+=(SimTime o) {
    us_ += o.us_;
    return *this;
  }

 private:
  constexpr explicit SimTime(std::int64_t us) : us_(us) {}
  std::int64_t us_{0};
};

}  // namespace vcm::sim
