// Copyright 2026 The sched-decode Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "sched/error.hpp"

namespace sched {

enum class ScheduleFamily { kLinear, kCosine, kExponential };

inline std::string_view to_string(ScheduleFamily f) {
  switch (f) {
    case ScheduleFamily::kLinear: return "linear";
    case ScheduleFamily::kCosine: return "cosine";
    case ScheduleFamily::kExponential: return "exponential";
  }
  return "unknown";
}

inline std::optional<ScheduleFamily> parse_family(std::string_view s) {
  if (s == "linear" || s == "lin") return ScheduleFamily::kLinear;
  if (s == "cosine" || s == "cos") return ScheduleFamily::kCosine;
  if (s == "exponential" || s == "exp") return ScheduleFamily::kExponential;
  return std::nullopt;
}

// Progress-dependent exit threshold in logit units. Values are taken as
// given; call validate() or require_valid() before use.
struct ThresholdSchedule {
  ScheduleFamily family = ScheduleFamily::kLinear;
  double tau_high = 7.5;
  double tau_low = 0.0;
  double k = 1.0;  // slope, Exponential only

  static ThresholdSchedule linear(double hi, double lo) {
    return {ScheduleFamily::kLinear, hi, lo, 1.0};
  }
  static ThresholdSchedule cosine(double hi, double lo) {
    return {ScheduleFamily::kCosine, hi, lo, 1.0};
  }
  static ThresholdSchedule exponential(double hi, double lo, double k) {
    return {ScheduleFamily::kExponential, hi, lo, k};
  }

  friend bool operator==(const ThresholdSchedule&, const ThresholdSchedule&) = default;
};

enum class ScheduleCheck { kOk, kOrdering, kSlope };

inline ScheduleCheck validate(const ThresholdSchedule& s) {
  // NaN bounds fail the ordering test as well.
  if (!(s.tau_high >= s.tau_low)) return ScheduleCheck::kOrdering;
  if (s.family == ScheduleFamily::kExponential && !(s.k > 0.0)) return ScheduleCheck::kSlope;
  return ScheduleCheck::kOk;
}

inline void require_valid(const ThresholdSchedule& s) {
  switch (validate(s)) {
    case ScheduleCheck::kOk:
      return;
    case ScheduleCheck::kOrdering:
      throw ScheduleError(ScheduleError::Kind::kOrdering,
                          "tau_low (" + std::to_string(s.tau_low) + ") exceeds tau_high (" +
                              std::to_string(s.tau_high) + ")");
    case ScheduleCheck::kSlope:
      throw ScheduleError(ScheduleError::Kind::kSlope,
                          "exponential schedule needs k > 0, got " + std::to_string(s.k));
  }
}

// tau(p) for p in [0, 1]. The exponential family keeps its raw form and so
// ends at tau_low + (tau_high - tau_low) e^{-k}, not tau_low.
inline double threshold(const ThresholdSchedule& s, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw RangeError("progress " + std::to_string(p) + " outside [0, 1]");
  }
  // Flat schedules are constant; also keeps an infinite sentinel free of inf - inf.
  if (s.tau_high == s.tau_low || p == 0.0) return s.tau_high;
  const double span = s.tau_high - s.tau_low;
  double tau = s.tau_high;
  switch (s.family) {
    case ScheduleFamily::kLinear:
      if (p == 1.0) return s.tau_low;
      tau = s.tau_high + (s.tau_low - s.tau_high) * p;
      break;
    case ScheduleFamily::kCosine:
      if (p == 1.0) return s.tau_low;
      tau = s.tau_low + 0.5 * span * (1.0 + std::cos(std::numbers::pi * p));
      break;
    case ScheduleFamily::kExponential:
      tau = s.tau_low + span * std::exp(-s.k * p);
      break;
  }
  // Rounding must not push the value outside the bounds.
  return std::clamp(tau, s.tau_low, s.tau_high);
}

}  // namespace sched
