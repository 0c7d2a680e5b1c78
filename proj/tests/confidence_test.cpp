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

#include "sched/confidence.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace sched {
namespace {

std::vector<double> random_row(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> row(n);
  for (double& v : row) v = d(rng);
  return row;
}

TEST(TokenMarginTest, Examples) {
  EXPECT_DOUBLE_EQ(token_margin(std::vector<double>{3.0, 1.0, 0.5}), 2.0);
  EXPECT_DOUBLE_EQ(token_margin(std::vector<double>{2.0, 2.0, 1.0}), 0.0);
  EXPECT_THROW(token_margin(std::vector<double>{1.0}), InvalidVocabularyError);
}

TEST(TokenMarginTest, MatchesFullSortOracle) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 16; ++trial) {
    auto row = random_row(rng, 2 + trial * 3);
    auto sorted = row;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    EXPECT_EQ(token_margin(row), sorted[0] - sorted[1]);
  }
}

TEST(TokenMarginProperty, ShiftAndScaleInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto row = random_row(rng, 2 + trial % 30);
    const double c = u(rng) - 5.0;
    const double scale = u(rng);
    auto shifted = row;
    auto scaled = row;
    for (double& v : shifted) v += c;
    for (double& v : scaled) v *= scale;
    const double g = token_margin(row);
    EXPECT_NEAR(token_margin(shifted), g, 1e-9 * (1 + std::abs(c)));
    EXPECT_NEAR(token_margin(scaled), scale * g, 1e-9 * scale * (1 + g));
    const auto argmax = std::max_element(row.begin(), row.end()) - row.begin();
    EXPECT_EQ(std::max_element(scaled.begin(), scaled.end()) - scaled.begin(), argmax);
  }
}

TEST(AggregateTest, Examples) {
  MarginVector m(3);
  m.set(0, 1.0);
  m.set(1, 2.0);
  m.set(2, 3.0);
  const auto all = AnswerRegion::full(3);
  EXPECT_DOUBLE_EQ(aggregate(m, all, Aggregator::mean()), 2.0);
  EXPECT_DOUBLE_EQ(aggregate(m, all, Aggregator::min()), 1.0);
  EXPECT_DOUBLE_EQ(aggregate(m, all, Aggregator::quantile(0.5)), 2.0);
  EXPECT_DOUBLE_EQ(aggregate(m, all, Aggregator::quantile(0.9)), 3.0);
  EXPECT_DOUBLE_EQ(aggregate(m, all, Aggregator::quantile(0.1)), 1.0);

  MarginVector single(1);
  single.set(0, 4.2);
  EXPECT_DOUBLE_EQ(aggregate(single, AnswerRegion::full(1), Aggregator::mean()), 4.2);
}

TEST(AggregateTest, MissingPositionIsContractError) {
  MarginVector m(3);
  m.set(0, 1.0);
  EXPECT_THROW(aggregate(m, AnswerRegion::full(3), Aggregator::mean()), ContractError);
  EXPECT_THROW(m.set(1, -0.5), ContractError);
  EXPECT_THROW(Aggregator::quantile(1.0), RangeError);
}

TEST(AggregateProperty, MeanBetweenMinAndMax) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 50;
    MarginVector m(n);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = u(rng);
      m.set(i, g);
      lo = std::min(lo, g);
      hi = std::max(hi, g);
    }
    const double mean = aggregate(m, AnswerRegion::full(n), Aggregator::mean());
    EXPECT_GE(mean, lo - 1e-12);
    EXPECT_LE(mean, hi + 1e-12);
  }
}

TEST(TokenEntropyTest, Examples) {
  EXPECT_EQ(token_entropy(std::vector<double>{1, 0, 0, 0}), 0.0);
  EXPECT_NEAR(token_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 1.3862943611198906, 1e-15);
  EXPECT_NEAR(token_entropy(std::vector<double>{0.5, 0.5}), 0.6931471805599453, 1e-15);
}

TEST(TokenEntropyTest, InvalidRows) {
  EXPECT_THROW(token_entropy(std::vector<double>{0.5, -0.1, 0.6}), InvalidDistributionError);
  EXPECT_THROW(token_entropy(std::vector<double>{0.0, 0.0}), InvalidDistributionError);
  // Slightly unnormalized rows are renormalized.
  EXPECT_NEAR(token_entropy(std::vector<double>{0.5 + 1e-10, 0.5}), std::log(2.0), 1e-9);
}

TEST(TokenEntropyProperty, BoundedByLogVocab) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 15;
    std::vector<double> row(n);
    double z = 0;
    for (double& v : row) z += (v = u(rng) * u(rng));
    for (double& v : row) v /= z;
    const double h = token_entropy(row);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(n)) + 1e-12);
  }
}

TEST(MeanEntropyTest, OneHotAndUniform) {
  const std::vector<std::vector<double>> one_hot(4, {0, 1, 0});
  EXPECT_EQ(mean_entropy(one_hot, AnswerRegion::full(4)), 0.0);
  const std::vector<std::vector<double>> uniform(3, std::vector<double>(8, 0.125));
  EXPECT_NEAR(mean_entropy(uniform, AnswerRegion::full(3)), std::log(8.0), 1e-12);
}

TEST(MeanEntropyTest, MissingRowIsContractError) {
  std::vector<std::vector<double>> rows = {{0.5, 0.5}, {}};
  EXPECT_THROW(mean_entropy(rows, AnswerRegion::full(2)), ContractError);
  EXPECT_NO_THROW(mean_entropy(rows, AnswerRegion({0}, 2)));
}

TEST(MeanEntropyTest, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t vocab = 2 + trial % 15;
    const std::size_t n = 1 + trial % 9;
    std::vector<std::vector<double>> rows(n, std::vector<double>(vocab));
    for (auto& row : rows) {
      double z = 0;
      for (double& v : row) z += (v = u(rng));
      for (double& v : row) v /= z;
    }
    double naive = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.0;
      for (std::size_t v = 0; v < vocab; ++v) z += rows[i][v];
      for (std::size_t v = 0; v < vocab; ++v) {
        const double p = rows[i][v] / z;
        if (p > 0) naive += -p * std::log(p);
      }
    }
    naive /= static_cast<double>(n);
    EXPECT_NEAR(mean_entropy(rows, AnswerRegion::full(n)), naive, 1e-12);
  }
}

TEST(SoftmaxTest, NormalizesAndRespectsTemperature) {
  const auto p = softmax(std::vector<double>{1.0, 2.0, 3.0});
  double z = 0;
  for (double v : p) z += v;
  EXPECT_NEAR(z, 1.0, 1e-15);
  EXPECT_GT(p[2], p[1]);
  const auto sharp = softmax(std::vector<double>{1.0, 2.0, 3.0}, 0.1);
  EXPECT_GT(sharp[2], p[2]);
  EXPECT_THROW(softmax(std::vector<double>{1.0}, 0.0), RangeError);
}

}  // namespace
}  // namespace sched
