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

#include "sched/transfer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

namespace sched {
namespace {

using Positions = std::vector<std::size_t>;

Canvas canvas_with_masks(std::size_t gen_len, const Positions& masked) {
  const Vocabulary v = Vocabulary::with_trailing_mask(8);
  std::vector<Token> gen(gen_len, 0);
  for (std::size_t i : masked) gen[i] = v.mask_id();
  return Canvas::from_state(v, {}, gen, 1, 4);
}

MarginVector margins_for(std::size_t gen_len, std::initializer_list<std::pair<std::size_t, double>> m) {
  MarginVector out(gen_len);
  for (auto [i, g] : m) out.set(i, g);
  return out;
}

TEST(SelectPositionsTest, FullSuffixTakesAllMasked) {
  const auto c = canvas_with_masks(7, {4, 5, 6});
  const auto m = margins_for(7, {{4, 1.0}, {5, 1.0}, {6, 1.0}});
  EXPECT_EQ(select_positions(FullSuffix{}, c, m), (Positions{4, 5, 6}));
}

TEST(SelectPositionsTest, TopKPicksLargestMargin) {
  const auto c = canvas_with_masks(7, {4, 5, 6});
  const auto m = margins_for(7, {{4, 1.0}, {5, 3.0}, {6, 2.0}});
  EXPECT_EQ(select_positions(LowConfidenceTopK{1}, c, m), (Positions{5}));
  EXPECT_EQ(select_positions(LowConfidenceTopK{2}, c, m), (Positions{5, 6}));
  EXPECT_EQ(select_positions(LowConfidenceTopK{9}, c, m), (Positions{4, 5, 6}));
}

TEST(SelectPositionsTest, TopKBreaksTiesByLowestIndex) {
  const auto c = canvas_with_masks(5, {0, 2, 3});
  const auto m = margins_for(5, {{0, 2.0}, {2, 2.0}, {3, 2.0}});
  EXPECT_EQ(select_positions(LowConfidenceTopK{2}, c, m), (Positions{0, 2}));
}

TEST(SelectPositionsTest, FixedCountIsLeftToRight) {
  const auto c = canvas_with_masks(6, {1, 3, 5});
  const auto m = margins_for(6, {{1, 0.0}, {3, 9.0}, {5, 9.0}});
  EXPECT_EQ(select_positions(FixedCount{2}, c, m), (Positions{1, 3}));
}

TEST(SelectPositionsTest, BlockRestrictsToLowestUnfinishedBlock) {
  const auto c = canvas_with_masks(4, {2, 3});
  const auto m = margins_for(4, {{2, 0.5}, {3, 0.7}});
  EXPECT_EQ(select_positions(BlockDiffusion{2, FullSuffix{}}, c, m), (Positions{2, 3}));
  const auto c2 = canvas_with_masks(6, {1, 2, 5});
  const auto m2 = margins_for(6, {{1, 0.1}, {2, 9.0}, {5, 9.0}});
  EXPECT_EQ(select_positions(BlockDiffusion{2, LowConfidenceTopK{1}}, c2, m2), (Positions{1}));
}

TEST(SelectPositionsTest, MissingConfidenceIsContractError) {
  const auto c = canvas_with_masks(4, {1, 2});
  const auto m = margins_for(4, {{1, 1.0}});
  EXPECT_THROW(select_positions(FullSuffix{}, c, m), ContractError);
  EXPECT_THROW(select_positions(FullSuffix{}, c, MarginVector(3)), ContractError);
}

TEST(SelectPositionsTest, NothingMaskedGivesEmpty) {
  const auto c = canvas_with_masks(3, {});
  EXPECT_TRUE(select_positions(LowConfidenceTopK{1}, c, MarginVector(3)).empty());
}

TEST(TransferPolicyTest, DefaultPerStepExhaustsBudget) {
  EXPECT_EQ(default_per_step(256, 256), 1);
  EXPECT_EQ(default_per_step(10, 4), 3);
  EXPECT_EQ(default_per_step(1, 8), 1);
  EXPECT_THROW(require_valid(TransferPolicy{FixedCount{0}}), ContractError);
  EXPECT_THROW(require_valid(TransferPolicy{BlockDiffusion{0, FullSuffix{}}}), ContractError);
  EXPECT_THROW(require_valid(TransferPolicy{BlockDiffusion{4, LowConfidenceTopK{0}}}), ContractError);
}

// Random canvases, every policy variant.
TEST(SelectPositionsProperty, SubsetOfMaskedAndNonEmpty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> margin(0.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    Positions masked;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 3 != 0) masked.push_back(i);
    }
    if (masked.empty()) masked.push_back(rng() % n);
    const auto c = canvas_with_masks(n, masked);
    MarginVector m(n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, std::round(margin(rng) * 2) / 2);
    const int k = 1 + static_cast<int>(rng() % 5);
    const int b = 1 + static_cast<int>(rng() % 8);
    const std::vector<TransferPolicy> policies = {
        FullSuffix{}, FixedCount{k}, LowConfidenceTopK{k}, BlockDiffusion{b, FullSuffix{}},
        BlockDiffusion{b, FixedCount{k}}, BlockDiffusion{b, LowConfidenceTopK{k}}};
    for (const auto& policy : policies) {
      const auto chosen = select_positions(policy, c, m);
      ASSERT_FALSE(chosen.empty());
      for (std::size_t i : chosen) ASSERT_TRUE(c.is_masked(i));
      if (const auto* bd = std::get_if<BlockDiffusion>(&policy)) {
        // No earlier block may still hold a mask.
        const std::size_t first_block = chosen.front() / static_cast<std::size_t>(bd->block_size);
        for (std::size_t i : masked) {
          ASSERT_GE(i / static_cast<std::size_t>(bd->block_size), first_block);
        }
        for (std::size_t i : chosen) {
          ASSERT_EQ(i / static_cast<std::size_t>(bd->block_size), first_block);
        }
      }
    }
  }
}

TEST(SelectPositionsProperty, TopKMatchesSortAndTake) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> margin(0, 6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 32;
    Positions masked;
    for (std::size_t i = 0; i < n; ++i) masked.push_back(i);
    const auto c = canvas_with_masks(n, masked);
    MarginVector m(n);
    std::vector<std::pair<double, std::size_t>> brute;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = margin(rng) * 0.5;
      m.set(i, g);
      brute.emplace_back(-g, i);
    }
    const int k = 1 + static_cast<int>(rng() % n);
    std::sort(brute.begin(), brute.end());
    Positions expect;
    for (int j = 0; j < k; ++j) expect.push_back(brute[j].second);
    std::sort(expect.begin(), expect.end());
    ASSERT_EQ(select_positions(LowConfidenceTopK{k}, c, m), expect);
  }
}

}  // namespace
}  // namespace sched
