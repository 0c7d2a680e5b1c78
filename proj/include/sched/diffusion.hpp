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
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sched/error.hpp"

namespace sched {

using Token = std::int32_t;

// Real tokens are [0, size); the mask placeholder lives outside that range.
class Vocabulary {
 public:
  Vocabulary(std::int64_t size, Token mask_id) : size_(size), mask_id_(mask_id) {
    if (size < 2) {
      throw InvalidVocabularyError("vocabulary needs at least 2 real tokens, got " +
                                   std::to_string(size));
    }
    if (mask_id >= 0 && mask_id < size) {
      throw InvalidVocabularyError("mask id " + std::to_string(mask_id) +
                                   " collides with a real token");
    }
  }

  // Convenience: mask id placed right after the last real token.
  static Vocabulary with_trailing_mask(std::int64_t size) {
    return Vocabulary(size, static_cast<Token>(size));
  }

  std::int64_t size() const noexcept { return size_; }
  Token mask_id() const noexcept { return mask_id_; }
  bool is_real(Token t) const noexcept { return t >= 0 && t < size_; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::int64_t size_;
  Token mask_id_;
};

// Prompt plus a generation region that starts fully masked and is filled in
// monotonically by the decode loop. Committed positions are never re-masked.
class Canvas {
 public:
  Canvas(Vocabulary vocab, std::vector<Token> prompt, std::size_t gen_len, int budget)
      : vocab_(vocab),
        prompt_(std::move(prompt)),
        gen_(gen_len, vocab.mask_id()),
        budget_(budget),
        masked_(gen_len) {
    if (budget < 1) throw RangeError("step budget must be >= 1");
    for (Token t : prompt_) {
      if (!vocab_.is_real(t)) {
        throw InvalidInputError("prompt token " + std::to_string(t) + " is not a real token");
      }
    }
  }

  // Rebuilds a canvas from an arbitrary intermediate state (e.g. a wire request).
  static Canvas from_state(Vocabulary vocab, std::vector<Token> prompt, std::vector<Token> gen,
                           int step, int budget) {
    Canvas c(vocab, std::move(prompt), 0, budget);
    c.masked_ = 0;
    for (Token t : gen) {
      if (t == vocab.mask_id()) {
        ++c.masked_;
      } else if (!vocab.is_real(t)) {
        throw InvalidInputError("gen token " + std::to_string(t) + " is neither real nor mask");
      }
    }
    c.gen_ = std::move(gen);
    c.set_step(step);
    return c;
  }

  const Vocabulary& vocab() const noexcept { return vocab_; }
  const std::vector<Token>& prompt() const noexcept { return prompt_; }
  const std::vector<Token>& gen() const noexcept { return gen_; }
  std::size_t gen_len() const noexcept { return gen_.size(); }
  int step() const noexcept { return step_; }
  int budget() const noexcept { return budget_; }

  bool is_masked(std::size_t i) const { return gen_.at(i) == vocab_.mask_id(); }
  std::size_t masked_count() const noexcept { return masked_; }

  // Fraction of the generation region already holding real tokens.
  double unmasked_fraction() const noexcept {
    if (gen_.empty()) return 1.0;
    return static_cast<double>(gen_.size() - masked_) / static_cast<double>(gen_.size());
  }

  std::vector<std::size_t> masked_positions() const {
    std::vector<std::size_t> out;
    out.reserve(masked_);
    for (std::size_t i = 0; i < gen_.size(); ++i) {
      if (gen_[i] == vocab_.mask_id()) out.push_back(i);
    }
    return out;
  }

  void commit(std::size_t i, Token token) {
    if (i >= gen_.size()) throw RangeError("commit position out of range");
    if (gen_[i] != vocab_.mask_id()) {
      throw ContractError("position " + std::to_string(i) + " is already committed");
    }
    if (!vocab_.is_real(token)) {
      throw ContractError("cannot commit non-real token " + std::to_string(token));
    }
    gen_[i] = token;
    --masked_;
  }

  void set_step(int step) {
    if (step < 0 || step > budget_) {
      throw RangeError("step " + std::to_string(step) + " outside [0, " +
                       std::to_string(budget_) + "]");
    }
    step_ = step;
  }

 private:
  Vocabulary vocab_;
  std::vector<Token> prompt_;
  std::vector<Token> gen_;
  int step_ = 0;
  int budget_;
  std::size_t masked_;
};

// Ordered, non-empty set of generation-region positions.
class AnswerRegion {
 public:
  AnswerRegion(std::vector<std::size_t> positions, std::size_t gen_len)
      : positions_(std::move(positions)) {
    std::sort(positions_.begin(), positions_.end());
    positions_.erase(std::unique(positions_.begin(), positions_.end()), positions_.end());
    if (positions_.empty()) throw ContractError("answer region must be non-empty");
    if (positions_.back() >= gen_len) {
      throw RangeError("answer region position " + std::to_string(positions_.back()) +
                       " outside generation length " + std::to_string(gen_len));
    }
  }

  static AnswerRegion full(std::size_t gen_len) {
    std::vector<std::size_t> all(gen_len);
    for (std::size_t i = 0; i < gen_len; ++i) all[i] = i;
    return AnswerRegion(std::move(all), gen_len);
  }

  std::span<const std::size_t> positions() const noexcept { return positions_; }
  std::size_t size() const noexcept { return positions_.size(); }

 private:
  std::vector<std::size_t> positions_;
};

// Forward corruption with per-step masking rates beta_t in [0, 1).
class MaskingProcess {
 public:
  explicit MaskingProcess(std::vector<double> betas) : betas_(std::move(betas)) {
    for (double b : betas_) {
      if (!(b >= 0.0 && b < 1.0)) {
        throw InvalidInputError("masking rate " + std::to_string(b) + " outside [0, 1)");
      }
    }
  }

  std::span<const double> betas() const noexcept { return betas_; }
  int steps() const noexcept { return static_cast<int>(betas_.size()); }

 private:
  std::vector<double> betas_;
};

// prod_{s<=t} (1 - beta_s); equals 1 at t = 0.
inline double survival_probability(const MaskingProcess& process, int t) {
  if (t < 0 || t > process.steps()) {
    throw RangeError("step " + std::to_string(t) + " outside [0, " +
                     std::to_string(process.steps()) + "]");
  }
  double alpha = 1.0;
  for (int s = 0; s < t; ++s) alpha *= 1.0 - process.betas()[s];
  return alpha;
}

// Keeps each token independently with probability `survival`, masks it
// otherwise. Exposed separately so callers can force the survival value.
inline std::vector<Token> corrupt_with_survival(std::span<const Token> clean, double survival,
                                                const Vocabulary& vocab, std::uint64_t seed) {
  if (!(survival >= 0.0 && survival <= 1.0)) {
    throw RangeError("survival probability must lie in [0, 1]");
  }
  for (Token t : clean) {
    if (t == vocab.mask_id()) throw InvalidInputError("clean sequence contains the mask token");
    if (!vocab.is_real(t)) throw InvalidInputError("clean sequence contains a non-real token");
  }
  std::vector<Token> out(clean.begin(), clean.end());
  if (survival == 1.0) return out;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(survival);
  for (Token& t : out) {
    if (!keep(rng)) t = vocab.mask_id();
  }
  return out;
}

inline std::vector<Token> corrupt(std::span<const Token> clean, const MaskingProcess& process,
                                  int t, const Vocabulary& vocab, std::uint64_t seed) {
  return corrupt_with_survival(clean, survival_probability(process, t), vocab, seed);
}

}  // namespace sched
