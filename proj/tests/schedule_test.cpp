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

#include "sched/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace sched {
namespace {

TEST(ThresholdTest, Examples) {
  EXPECT_DOUBLE_EQ(threshold(ThresholdSchedule::linear(7.5, 0.0), 0.5), 3.75);
  EXPECT_DOUBLE_EQ(threshold(ThresholdSchedule::cosine(7.5, 2.5), 0.5), 5.0);
  // 2.5 + 5 e^{-2}, evaluated separately.
  EXPECT_NEAR(threshold(ThresholdSchedule::exponential(7.5, 2.5, 2.0), 1.0), 3.1766764161830636,
              1e-12);
  for (const auto& s : {ThresholdSchedule::linear(7.5, 0.0), ThresholdSchedule::cosine(7.5, 0.0),
                        ThresholdSchedule::exponential(7.5, 0.0, 16.0)}) {
    EXPECT_EQ(threshold(s, 0.0), 7.5);
  }
}

TEST(ThresholdTest, EndpointsOfLinearAndCosine) {
  EXPECT_EQ(threshold(ThresholdSchedule::linear(0.3, 0.1), 1.0), 0.1);
  EXPECT_EQ(threshold(ThresholdSchedule::cosine(0.3, 0.1), 1.0), 0.1);
  EXPECT_EQ(threshold(ThresholdSchedule::cosine(0.3, 0.1), 0.0), 0.3);
}

TEST(ThresholdTest, ExponentialDoesNotReachTauLow) {
  const auto s = ThresholdSchedule::exponential(7.5, 0.0, 2.0);
  EXPECT_GT(threshold(s, 1.0), 0.0);
  EXPECT_NEAR(threshold(s, 1.0), 7.5 * std::exp(-2.0), 1e-12);
}

TEST(ThresholdTest, ProgressOutOfRange) {
  const auto s = ThresholdSchedule::linear(7.5, 0.0);
  EXPECT_THROW(threshold(s, -0.01), RangeError);
  EXPECT_THROW(threshold(s, 1.01), RangeError);
  EXPECT_THROW(threshold(s, std::nan("")), RangeError);
}

TEST(ThresholdTest, FlatScheduleIsConstant) {
  for (auto f : {ScheduleFamily::kLinear, ScheduleFamily::kCosine, ScheduleFamily::kExponential}) {
    const ThresholdSchedule s{f, 4.2, 4.2, 3.0};
    for (double p : {0.0, 0.1, 0.5, 0.9, 1.0}) EXPECT_EQ(threshold(s, p), 4.2);
  }
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(threshold(ThresholdSchedule::linear(inf, inf), 0.5), inf);
}

TEST(ValidateTest, Examples) {
  EXPECT_EQ(validate(ThresholdSchedule::linear(7.5, 2.5)), ScheduleCheck::kOk);
  EXPECT_EQ(validate(ThresholdSchedule::linear(2.5, 7.5)), ScheduleCheck::kOrdering);
  EXPECT_EQ(validate(ThresholdSchedule::exponential(7.5, 0.0, 0.0)), ScheduleCheck::kSlope);
  EXPECT_EQ(validate(ThresholdSchedule::cosine(7.5, 7.5)), ScheduleCheck::kOk);
  try {
    require_valid(ThresholdSchedule::exponential(7.5, 0.0, -1.0));
    FAIL() << "expected a slope error";
  } catch (const ScheduleError& e) {
    EXPECT_EQ(e.kind(), ScheduleError::Kind::kSlope);
  }
  EXPECT_THROW(require_valid(ThresholdSchedule::linear(1.0, 2.0)), ScheduleError);
}

TEST(ThresholdProperty, NonincreasingInProgress) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto family = static_cast<ScheduleFamily>(trial % 3);
    const double lo = u(rng) * 10.0 - 2.0;
    const double hi = lo + u(rng) * 10.0;
    const ThresholdSchedule s{family, hi, lo, 1e-3 + u(rng) * 32.0};
    double p1 = u(rng), p2 = u(rng);
    if (p1 > p2) std::swap(p1, p2);
    ASSERT_GE(threshold(s, p1), threshold(s, p2));
    ASSERT_LE(threshold(s, p1), hi);
    ASSERT_GE(threshold(s, p2), lo);
  }
}

}  // namespace
}  // namespace sched
