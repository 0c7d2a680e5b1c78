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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sched/diffusion.hpp"
#include "sched/error.hpp"

namespace sched {

// Dense per-position top-2 margins over the generation region. Positions
// without evidence are absent (has() == false).
class MarginVector {
 public:
  explicit MarginVector(std::size_t gen_len)
      : values_(gen_len, std::numeric_limits<double>::quiet_NaN()) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool has(std::size_t i) const { return i < values_.size() && !std::isnan(values_[i]); }

  double at(std::size_t i) const {
    if (!has(i)) throw ContractError("no margin for position " + std::to_string(i));
    return values_[i];
  }

  void set(std::size_t i, double margin) {
    if (i >= values_.size()) throw RangeError("margin position out of range");
    if (!(margin >= 0.0)) {
      throw ContractError("margin at position " + std::to_string(i) + " is negative or NaN");
    }
    values_[i] = margin;
  }

 private:
  std::vector<double> values_;
};

// Largest value minus second largest. Ties give zero.
inline double token_margin(std::span<const double> row) {
  if (row.size() < 2) throw InvalidVocabularyError("logit row needs at least 2 entries");
  double first = -std::numeric_limits<double>::infinity();
  double second = first;
  for (double v : row) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return first - second;
}

struct Aggregator {
  enum class Kind { kMean, kMin, kQuantile };
  Kind kind = Kind::kMean;
  double q = 0.5;  // Quantile only, strictly inside (0, 1)

  static Aggregator mean() { return {Kind::kMean, 0.5}; }
  static Aggregator min() { return {Kind::kMin, 0.5}; }
  static Aggregator quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) throw RangeError("quantile must lie strictly inside (0, 1)");
    return {Kind::kQuantile, q};
  }

  friend bool operator==(const Aggregator&, const Aggregator&) = default;
};

inline double aggregate(const MarginVector& margins, const AnswerRegion& region,
                        const Aggregator& agg) {
  const auto positions = region.positions();
  switch (agg.kind) {
    case Aggregator::Kind::kMean: {
      double sum = 0.0;
      for (std::size_t i : positions) sum += margins.at(i);
      return sum / static_cast<double>(positions.size());
    }
    case Aggregator::Kind::kMin: {
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t i : positions) lo = std::min(lo, margins.at(i));
      return lo;
    }
    case Aggregator::Kind::kQuantile: {
      if (!(agg.q > 0.0 && agg.q < 1.0)) throw RangeError("quantile must lie inside (0, 1)");
      std::vector<double> values;
      values.reserve(positions.size());
      for (std::size_t i : positions) values.push_back(margins.at(i));
      std::sort(values.begin(), values.end());
      // Nearest rank: smallest value with at least q of the mass at or below it.
      auto rank = static_cast<std::size_t>(std::ceil(agg.q * static_cast<double>(values.size())));
      rank = std::clamp<std::size_t>(rank, 1, values.size());
      return values[rank - 1];
    }
  }
  return 0.0;
}

// Shannon entropy in nats; the row is renormalized, 0 ln 0 = 0.
inline double token_entropy(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || std::isinf(p)) {
      throw InvalidDistributionError("probability row has a negative or non-finite entry");
    }
    total += p;
  }
  if (!(total > 0.0)) throw InvalidDistributionError("probability row sums to zero");
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) {
      const double q = p / total;
      h -= q * std::log(q);
    }
  }
  return std::max(h, 0.0);
}

// Mean token entropy over the region. rows[i] empty means no distribution.
inline double mean_entropy(std::span<const std::vector<double>> rows, const AnswerRegion& region) {
  double sum = 0.0;
  for (std::size_t i : region.positions()) {
    if (i >= rows.size() || rows[i].empty()) {
      throw ContractError("no distribution for position " + std::to_string(i));
    }
    sum += token_entropy(rows[i]);
  }
  return sum / static_cast<double>(region.size());
}

// Softmax with max subtraction; used to turn logit rows into distributions.
inline std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0) {
  if (logits.empty()) throw InvalidVocabularyError("empty logit row");
  if (!(temperature > 0.0)) throw RangeError("temperature must be positive");
  const double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - hi) / temperature);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

}  // namespace sched
