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
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sched/confidence.hpp"
#include "sched/engine.hpp"
#include "sched/error.hpp"
#include "sched/provider.hpp"

namespace sched {

enum class MarginGrowth { kUnmaskedFraction, kStepFraction };

// Synthetic provider with a known answer. Margins grow from margin_floor to
// margin_ceil as decoding progresses; a fraction `distractor_rate` of
// positions report a wrong argmax until the growth variable reaches
// `stabilization`.
struct OracleConfig {
  std::vector<Token> truth;
  std::int64_t vocab_size = 32;
  double margin_floor = 0.5;
  double margin_ceil = 10.0;
  MarginGrowth growth = MarginGrowth::kUnmaskedFraction;
  double noise_sd = 0.0;
  double distractor_rate = 0.0;
  double stabilization = 1.0;
  // Logit drop of the non-contending tokens per unit of growth; controls how
  // quickly the synthesized entropy decays.
  double background_decay = 8.0;
  std::uint64_t seed = 0;
};

class OracleProvider final : public LogitProvider {
 public:
  explicit OracleProvider(OracleConfig config)
      : config_(std::move(config)), vocab_(Vocabulary::with_trailing_mask(config_.vocab_size)) {
    if (!(config_.margin_floor >= 0.0) || !(config_.margin_ceil > config_.margin_floor)) {
      throw ConfigError("oracle needs 0 <= margin_floor < margin_ceil");
    }
    if (!(config_.noise_sd >= 0.0)) throw ConfigError("oracle noise_sd must be >= 0");
    if (!(config_.distractor_rate >= 0.0 && config_.distractor_rate <= 1.0)) {
      throw ConfigError("oracle distractor_rate must lie in [0, 1]");
    }
    if (!(config_.stabilization > 0.0 && config_.stabilization <= 1.0)) {
      throw ConfigError("oracle stabilization must lie in (0, 1]");
    }
    if (!(config_.background_decay >= 0.0)) {
      throw ConfigError("oracle background_decay must be >= 0");
    }
    for (Token t : config_.truth) {
      if (!vocab_.is_real(t)) throw ConfigError("oracle truth token outside the vocabulary");
    }
    wrong_prone_.resize(config_.truth.size());
    distractor_.resize(config_.truth.size());
    for (std::size_t i = 0; i < config_.truth.size(); ++i) {
      std::mt19937_64 rng(mix(config_.seed, 0x5eedULL, i));
      wrong_prone_[i] = std::bernoulli_distribution(config_.distractor_rate)(rng);
      const auto offset = std::uniform_int_distribution<std::int64_t>(1, vocab_.size() - 1)(rng);
      distractor_[i] = static_cast<Token>((config_.truth[i] + offset) % vocab_.size());
    }
  }

  const Vocabulary& vocabulary() const override { return vocab_; }
  std::string name() const override { return "oracle"; }
  bool concurrent_safe() const override { return true; }
  const OracleConfig& config() const noexcept { return config_; }

  // Growth variable in [0, 1] for the canvas state.
  double growth_level(const Canvas& canvas) const {
    if (config_.growth == MarginGrowth::kStepFraction) {
      return static_cast<double>(canvas.step()) / static_cast<double>(canvas.budget());
    }
    return canvas.unmasked_fraction();
  }

  bool wrong_prone(std::size_t i) const { return wrong_prone_.at(i); }

  LogitBundle query(const Canvas& canvas, const QueryOptions& options) override {
    if (canvas.gen_len() != config_.truth.size()) {
      throw ContractError("oracle truth length " + std::to_string(config_.truth.size()) +
                          " does not match generation length " +
                          std::to_string(canvas.gen_len()));
    }
    const double level = growth_level(canvas);
    const double base = config_.margin_floor + (config_.margin_ceil - config_.margin_floor) * level;
    const bool stabilized = level >= config_.stabilization;
    const double background = -config_.background_decay * level;

    LogitBundle bundle;
    bundle.positions.reserve(canvas.gen_len());
    for (std::size_t i = 0; i < canvas.gen_len(); ++i) {
      double margin = base;
      if (config_.noise_sd > 0.0) {
        std::mt19937_64 rng(mix(config_.seed, static_cast<std::uint64_t>(canvas.step()), i));
        margin += std::normal_distribution<double>(0.0, config_.noise_sd)(rng);
      }
      margin = std::max(margin, config_.margin_floor);

      const bool wrong = wrong_prone_[i] && !stabilized;
      const Token first = wrong ? distractor_[i] : config_.truth[i];
      const Token second = wrong ? config_.truth[i] : distractor_[i];

      PositionEvidence e;
      e.position = i;
      e.argmax = first;
      e.top1 = margin;
      e.top2 = 0.0;
      if (options.want_full || options.want_entropy) {
        std::vector<double> logits(static_cast<std::size_t>(vocab_.size()),
                                   std::min(background, 0.0));
        logits[static_cast<std::size_t>(second)] = 0.0;
        logits[static_cast<std::size_t>(first)] = margin;
        std::vector<double> probs = softmax(logits);
        if (options.want_entropy) e.entropy = token_entropy(probs);
        if (options.want_full) e.row = std::move(probs);
      }
      bundle.positions.push_back(std::move(e));
    }
    return bundle;
  }

 private:
  // splitmix64 finalizer over the three inputs.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t z = a * 0x9e3779b97f4a7c15ULL ^ (b + 0x632be59bd9b4e019ULL) * 0xbf58476d1ce4e5b9ULL ^
                      (c + 0x1f83d9abfb41bd6bULL) * 0x94d049bb133111ebULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  OracleConfig config_;
  Vocabulary vocab_;
  std::vector<bool> wrong_prone_;
  std::vector<Token> distractor_;
};

// Fraction of positions where the decoded token equals the reference.
inline double oracle_truth_accuracy(std::span<const Token> decoded, std::span<const Token> truth) {
  if (decoded.size() != truth.size()) {
    throw ContractError("decoded length " + std::to_string(decoded.size()) +
                        " differs from truth length " + std::to_string(truth.size()));
  }
  if (truth.empty()) return 1.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += decoded[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

inline double oracle_truth_accuracy(const DecodeResult& result, std::span<const Token> truth) {
  return oracle_truth_accuracy(std::span<const Token>(result.tokens), truth);
}

}  // namespace sched
