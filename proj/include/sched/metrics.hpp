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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sched/engine.hpp"
#include "sched/error.hpp"

namespace sched {

// Step-count speedup T / steps_used.
inline double speedup(int budget, int steps_used) {
  if (steps_used <= 0 || steps_used > budget) {
    throw ContractError("steps_used " + std::to_string(steps_used) + " outside [1, " +
                        std::to_string(budget) + "]");
  }
  return static_cast<double>(budget) / static_cast<double>(steps_used);
}

// Quality-penalized speed: speedup * (score / baseline)^gamma.
inline double qps(double speedup, double score, double baseline_score, double gamma = 4.0) {
  if (!(baseline_score > 0.0)) throw ContractError("baseline score must be positive");
  if (!(gamma >= 1.0)) throw ContractError("gamma must be >= 1");
  return speedup * std::pow(score / baseline_score, gamma);
}

struct EntropyPoint {
  int step = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

struct EntropyCurves {
  enum class Status { kOk, kNoEntropyData };
  Status status = Status::kNoEntropyData;
  std::vector<EntropyPoint> points;

  bool empty() const noexcept { return status != Status::kOk; }
};

// Per-step mean and population std of the recorded mean entropy. A sample
// contributes only to the steps it actually ran.
inline EntropyCurves entropy_curves(std::span<const DecodeResult> results) {
  std::size_t longest = 0;
  for (const auto& r : results) longest = std::max(longest, r.trajectory.size());

  EntropyCurves curves;
  for (std::size_t s = 0; s < longest; ++s) {
    std::vector<double> values;
    for (const auto& r : results) {
      if (s < r.trajectory.size() && r.trajectory[s].mean_entropy) {
        values.push_back(*r.trajectory[s].mean_entropy);
      }
    }
    if (values.empty()) continue;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    curves.points.push_back({static_cast<int>(s + 1), mean, std::sqrt(var), values.size()});
  }
  curves.status = curves.points.empty() ? EntropyCurves::Status::kNoEntropyData
                                        : EntropyCurves::Status::kOk;
  return curves;
}

}  // namespace sched
