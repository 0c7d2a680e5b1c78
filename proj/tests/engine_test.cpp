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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "sched/engine.hpp"
#include "sched/oracle_provider.hpp"

namespace sched {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

OracleConfig oracle(std::size_t n, std::uint64_t seed, double noise = 0.3) {
  OracleConfig c;
  c.vocab_size = 24;
  c.noise_sd = noise;
  c.distractor_rate = 0.3;
  c.stabilization = 0.6;
  c.seed = seed;
  std::mt19937_64 rng(seed ^ 0xabc);
  for (std::size_t i = 0; i < n; ++i) c.truth.push_back(static_cast<Token>(rng() % 24));
  return c;
}

DecodeRequest request(std::size_t n, int budget) {
  DecodeRequest r;
  r.prompt = {0, 1, 2};
  r.gen_len = n;
  r.budget = budget;
  return r;
}

// Reports the same margin everywhere; fails on a chosen step.
class ConstantProvider final : public LogitProvider {
 public:
  ConstantProvider(double margin, int fail_at = 0) : margin_(margin), fail_at_(fail_at) {}
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::string name() const override { return "constant"; }
  LogitBundle query(const Canvas& c, const QueryOptions&) override {
    if (c.step() == fail_at_) throw TransportError("pipe closed");
    ++calls;
    LogitBundle b;
    for (std::size_t i = 0; i < c.gen_len(); ++i) b.positions.push_back({i, 1, margin_, 0.0, {}, {}});
    return b;
  }
  int calls = 0;

 private:
  Vocabulary vocab_ = Vocabulary::with_trailing_mask(4);
  double margin_;
  int fail_at_;
};

TEST(EngineTest, ProgressExamples) {
  EXPECT_EQ(progress(1, 256), 1.0 / 256.0);
  EXPECT_EQ(progress(256, 256), 1.0);
  EXPECT_EQ(progress(64, 128), 0.5);
  EXPECT_THROW(progress(0, 8), RangeError);
  EXPECT_THROW(progress(9, 8), RangeError);
}

TEST(EngineTest, EvaluateStopExamples) {
  const StopPolicy lin = SchedStop{ThresholdSchedule::linear(7.5, 0.0)};
  EXPECT_TRUE(evaluate_stop(lin, 3.75, 0.5));
  EXPECT_FALSE(evaluate_stop(lin, 3.7, 0.5));
  EXPECT_FALSE(evaluate_stop(NeverStop{}, 1e300, 1.0));
  const StopPolicy hard = HardThresholdStop{3.0, 0.25};
  EXPECT_FALSE(evaluate_stop(hard, 5.0, 0.2));
  EXPECT_TRUE(evaluate_stop(hard, 3.0, 0.25));
  EXPECT_EQ(effective_threshold(NeverStop{}, 0.5), kInf);
  EXPECT_THROW(evaluate_stop(lin, 1.0, 0.0), RangeError);
}

TEST(EngineTest, NeverStopUsesWholeBudget) {
  OracleProvider p(oracle(16, 1));
  auto req = request(16, 16);
  const auto r = decode(p, req);
  EXPECT_EQ(r.steps_used, 16);
  EXPECT_FALSE(r.exit_step);
  EXPECT_EQ(r.trajectory.size(), 16u);
  for (Token t : r.tokens) EXPECT_TRUE(p.vocabulary().is_real(t));
}

TEST(EngineTest, FullSuffixFinishesInOneStep) {
  OracleProvider p(oracle(8, 1));
  auto req = request(8, 8);
  req.transfer = FullSuffix{};
  const auto r = decode(p, req);
  EXPECT_EQ(r.steps_used, 1);
  EXPECT_FALSE(r.exit_step);
}

TEST(EngineTest, DisabledTriggerMatchesBaseline) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const int budget = 2 + static_cast<int>(rng() % 30);
    const std::size_t n = 1 + rng() % 30;
    OracleProvider p(oracle(n, rng()));
    auto req = request(n, budget);
    req.transfer = trial % 2 ? TransferPolicy{BlockDiffusion{4, LowConfidenceTopK{2}}}
                             : TransferPolicy{LowConfidenceTopK{1}};
    const auto base = decode(p, req);
    req.stop = SchedStop{ThresholdSchedule::linear(kInf, kInf)};
    EXPECT_EQ(decode(p, req), base);
  }
}

TEST(EngineTest, ZeroThresholdExitsAtFirstStep) {
  OracleProvider p(oracle(12, 2));
  auto req = request(12, 12);
  req.stop = SchedStop{ThresholdSchedule::linear(0.0, 0.0)};
  const auto r = decode(p, req);
  ASSERT_TRUE(r.exit_step);
  EXPECT_EQ(*r.exit_step, 1);
  EXPECT_EQ(r.steps_used, 1);
  // Fill-all commits the step-1 argmax everywhere.
  Canvas c(p.vocabulary(), req.prompt, 12, 12);
  c.set_step(1);
  const auto b = p.query(c, {});
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(r.tokens[i], b.positions[i].argmax);
}

TEST(EngineTest, RelaxedScheduleNeverExitsLater) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    OracleProvider p(oracle(24, seed));
    auto req = request(24, 24);
    req.stop = SchedStop{ThresholdSchedule::linear(7.5, 0.0)};
    const auto relaxed = decode(p, req);
    req.stop = SchedStop{ThresholdSchedule::linear(7.5, 2.5)};
    const auto strict = decode(p, req);
    EXPECT_LE(relaxed.steps_used, strict.steps_used) << "seed " << seed;
  }
}

TEST(EngineTest, ExitIsSoundAndBudgetIsRespected) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const int budget = 1 + static_cast<int>(rng() % 40);
    const std::size_t n = 1 + rng() % 40;
    OracleProvider p(oracle(n, rng(), 1.0));
    auto req = request(n, budget);
    req.stop = SchedStop{ThresholdSchedule::exponential(7.5, 0.0, 1.0 + static_cast<double>(rng() % 16))};
    const auto r = decode(p, req);
    EXPECT_GE(r.steps_used, 1);
    EXPECT_LE(r.steps_used, budget);
    EXPECT_EQ(r.trajectory.size(), static_cast<std::size_t>(r.steps_used));
    for (Token t : r.tokens) EXPECT_TRUE(p.vocabulary().is_real(t));
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
      const auto& s = r.trajectory[k];
      const bool fired = s.margin >= s.threshold;
      EXPECT_EQ(fired, r.exit_step && *r.exit_step == s.step);
      EXPECT_EQ(s.threshold, threshold(std::get<SchedStop>(req.stop).schedule, s.progress));
    }
    if (r.exit_step) {
      EXPECT_EQ(*r.exit_step, r.steps_used);
    }
  }
}

TEST(EngineTest, DeterministicIncludingSampling) {
  OracleProvider p(oracle(20, 4));
  auto req = request(20, 10);
  req.commit = SampleCommit{1.3};
  req.seed = 42;
  req.transfer = FixedCount{2};
  EXPECT_EQ(decode(p, req), decode(p, req));
  req.seed = 43;
  EXPECT_NO_THROW(decode(p, req));
  req.commit = SampleCommit{-1.0};
  EXPECT_THROW(decode(p, req), ConfigError);
}

TEST(EngineTest, SamplingNeedsRows) {
  ConstantProvider p(1.0);
  auto req = request(3, 3);
  req.commit = SampleCommit{1.0};
  EXPECT_THROW(decode(p, req), ContractError);
}

TEST(EngineTest, AnswerRegionRestrictsTheAggregate) {
  ConstantProvider p(2.0);
  auto req = request(6, 6);
  req.region = AnswerRegion({4, 5}, 6);
  req.stop = HardThresholdStop{2.0, 0.5};
  const auto r = decode(p, req);
  ASSERT_TRUE(r.exit_step);
  EXPECT_EQ(*r.exit_step, 3);
  req.region = AnswerRegion({9}, 10);
  EXPECT_THROW(decode(p, req), RangeError);
}

TEST(EngineTest, ProviderErrorsCarryTheStep) {
  ConstantProvider p(0.1, 3);
  auto req = request(6, 6);
  try {
    decode(p, req);
    FAIL() << "expected a transport error";
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos);
  }
  EXPECT_EQ(p.calls, 2);
}

TEST(EngineTest, EntropyRecordedOnlyOnRequest) {
  OracleProvider p(oracle(8, 6, 0.0));
  auto req = request(8, 8);
  for (const auto& s : decode(p, req).trajectory) EXPECT_FALSE(s.mean_entropy);
  req.record_entropy = true;
  const auto r = decode(p, req);
  for (const auto& s : r.trajectory) {
    ASSERT_TRUE(s.mean_entropy);
    EXPECT_GE(*s.mean_entropy, 0.0);
  }
  ConstantProvider bare(1.0);
  auto bare_req = request(3, 3);
  bare_req.record_entropy = true;
  for (const auto& s : decode(bare, bare_req).trajectory) EXPECT_FALSE(s.mean_entropy);
}

TEST(EngineTest, InvalidRequests) {
  ConstantProvider p(1.0);
  auto req = request(0, 4);
  EXPECT_THROW(decode(p, req), ContractError);
  req = request(4, 0);
  EXPECT_THROW(decode(p, req), RangeError);
  req = request(4, 4);
  req.stop = SchedStop{{ScheduleFamily::kLinear, 1.0, 2.0, 1.0}};
  EXPECT_THROW(decode(p, req), ScheduleError);
}

}  // namespace
}  // namespace sched
