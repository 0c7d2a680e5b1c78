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
#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "sched/confidence.hpp"
#include "sched/diffusion.hpp"
#include "sched/error.hpp"

namespace sched {

// Commit every masked position in one step.
struct FullSuffix {
  friend bool operator==(const FullSuffix&, const FullSuffix&) = default;
};

// Commit the `per_step` lowest-indexed masked positions.
struct FixedCount {
  int per_step = 1;
  friend bool operator==(const FixedCount&, const FixedCount&) = default;
};

// Commit the `per_step` masked positions with the largest margins; ties go to
// the lower index.
struct LowConfidenceTopK {
  int per_step = 1;
  friend bool operator==(const LowConfidenceTopK&, const LowConfidenceTopK&) = default;
};

using InnerTransfer = std::variant<FullSuffix, FixedCount, LowConfidenceTopK>;

// Left-to-right blocks; only the lowest block that still holds a mask is
// eligible, and `inner` picks within it.
struct BlockDiffusion {
  int block_size = 32;
  InnerTransfer inner = LowConfidenceTopK{1};
  friend bool operator==(const BlockDiffusion&, const BlockDiffusion&) = default;
};

using TransferPolicy = std::variant<FullSuffix, FixedCount, LowConfidenceTopK, BlockDiffusion>;

// Per-step count that exhausts gen_len masks in exactly `budget` steps.
inline int default_per_step(std::size_t gen_len, int budget) {
  if (budget < 1) throw RangeError("budget must be >= 1");
  const auto b = static_cast<std::size_t>(budget);
  return static_cast<int>(std::max<std::size_t>(1, (gen_len + b - 1) / b));
}

namespace detail {

inline void check_per_step(int per_step) {
  if (per_step < 1) throw ContractError("per_step must be >= 1");
}

inline std::vector<std::size_t> pick(const InnerTransfer& rule,
                                     const std::vector<std::size_t>& candidates,
                                     const MarginVector& confidence) {
  return std::visit(
      [&](const auto& r) -> std::vector<std::size_t> {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, FullSuffix>) {
          return candidates;
        } else if constexpr (std::is_same_v<R, FixedCount>) {
          check_per_step(r.per_step);
          const auto n = std::min(candidates.size(), static_cast<std::size_t>(r.per_step));
          return {candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n)};
        } else {
          check_per_step(r.per_step);
          std::vector<std::size_t> order = candidates;
          const auto n = std::min(order.size(), static_cast<std::size_t>(r.per_step));
          std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n),
                            order.end(), [&](std::size_t a, std::size_t b) {
                              const double ga = confidence.at(a);
                              const double gb = confidence.at(b);
                              return ga != gb ? ga > gb : a < b;
                            });
          order.resize(n);
          std::sort(order.begin(), order.end());
          return order;
        }
      },
      rule);
}

}  // namespace detail

inline void require_valid(const TransferPolicy& policy) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedCount> || std::is_same_v<P, LowConfidenceTopK>) {
          detail::check_per_step(p.per_step);
        } else if constexpr (std::is_same_v<P, BlockDiffusion>) {
          if (p.block_size < 1) throw ContractError("block_size must be >= 1");
          std::visit(
              [](const auto& inner) {
                if constexpr (!std::is_same_v<std::decay_t<decltype(inner)>, FullSuffix>) {
                  detail::check_per_step(inner.per_step);
                }
              },
              p.inner);
        }
      },
      policy);
}

// Positions to commit this step, in ascending order. Every masked position must
// have a confidence entry; the result is non-empty whenever masks remain.
inline std::vector<std::size_t> select_positions(const TransferPolicy& policy, const Canvas& canvas,
                                                 const MarginVector& confidence) {
  if (confidence.size() != canvas.gen_len()) {
    throw ContractError("confidence vector length does not match the generation region");
  }
  std::vector<std::size_t> masked = canvas.masked_positions();
  for (std::size_t i : masked) {
    if (!confidence.has(i)) {
      throw ContractError("confidence missing for masked position " + std::to_string(i));
    }
  }
  if (masked.empty()) return {};

  return std::visit(
      [&](const auto& p) -> std::vector<std::size_t> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, BlockDiffusion>) {
          if (p.block_size < 1) throw ContractError("block_size must be >= 1");
          const std::size_t block = masked.front() / static_cast<std::size_t>(p.block_size);
          std::erase_if(masked, [&](std::size_t i) {
            return i / static_cast<std::size_t>(p.block_size) != block;
          });
          return detail::pick(p.inner, masked, confidence);
        } else {
          return detail::pick(InnerTransfer{p}, masked, confidence);
        }
      },
      policy);
}

}  // namespace sched
