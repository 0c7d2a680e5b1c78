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
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sched/confidence.hpp"
#include "sched/error.hpp"
#include "sched/provider.hpp"

namespace sched {

// Count-based n-gram model with add-alpha smoothing. Each generation position
// is predicted from the longest mask-free left context (up to order - 1
// tokens) that was seen in training, backing off down to the unigram table.
class NgramProvider final : public LogitProvider {
 public:
  NgramProvider(Vocabulary vocab, std::span<const Token> corpus, int order = 2, double alpha = 0.1)
      : vocab_(vocab), order_(order), alpha_(alpha) {
    if (order < 1) throw ConfigError("n-gram order must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("n-gram smoothing alpha must be > 0");
    for (Token t : corpus) {
      if (!vocab_.is_real(t)) throw ConfigError("corpus token outside the vocabulary");
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const std::size_t max_ctx = std::min<std::size_t>(static_cast<std::size_t>(order_ - 1), i);
      for (std::size_t len = 0; len <= max_ctx; ++len) {
        Context ctx(corpus.begin() + static_cast<std::ptrdiff_t>(i - len),
                    corpus.begin() + static_cast<std::ptrdiff_t>(i));
        auto& row = counts_[ctx];
        if (row.empty()) row.assign(static_cast<std::size_t>(vocab_.size()), 0.0);
        row[static_cast<std::size_t>(corpus[i])] += 1.0;
      }
    }
  }

  const Vocabulary& vocabulary() const override { return vocab_; }
  std::string name() const override { return "ngram-" + std::to_string(order_); }
  bool concurrent_safe() const override { return true; }

  LogitBundle query(const Canvas& canvas, const QueryOptions& options) override {
    std::vector<Token> seq = canvas.prompt();
    seq.insert(seq.end(), canvas.gen().begin(), canvas.gen().end());
    const std::size_t offset = canvas.prompt().size();

    LogitBundle bundle;
    bundle.positions.reserve(canvas.gen_len());
    for (std::size_t i = 0; i < canvas.gen_len(); ++i) {
      const std::size_t at = offset + i;
      // Longest mask-free suffix of the left context.
      std::size_t len = 0;
      while (len + 1 < static_cast<std::size_t>(order_) && len < at &&
             seq[at - len - 1] != vocab_.mask_id()) {
        ++len;
      }
      const std::vector<double>* counts = nullptr;
      for (;; --len) {
        Context ctx(seq.begin() + static_cast<std::ptrdiff_t>(at - len),
                    seq.begin() + static_cast<std::ptrdiff_t>(at));
        if (auto it = counts_.find(ctx); it != counts_.end()) {
          counts = &it->second;
          break;
        }
        if (len == 0) break;
      }

      std::vector<double> logp(static_cast<std::size_t>(vocab_.size()));
      double total = 0.0;
      for (std::size_t v = 0; v < logp.size(); ++v) {
        total += (counts ? (*counts)[v] : 0.0) + alpha_;
      }
      for (std::size_t v = 0; v < logp.size(); ++v) {
        logp[v] = std::log(((counts ? (*counts)[v] : 0.0) + alpha_) / total);
      }

      PositionEvidence e;
      e.position = i;
      std::size_t best = 0;
      for (std::size_t v = 1; v < logp.size(); ++v) {
        if (logp[v] > logp[best]) best = v;
      }
      double second = -std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < logp.size(); ++v) {
        if (v != best) second = std::max(second, logp[v]);
      }
      e.argmax = static_cast<Token>(best);
      e.top1 = logp[best];
      e.top2 = second;
      if (options.want_full || options.want_entropy) {
        std::vector<double> probs(logp.size());
        for (std::size_t v = 0; v < logp.size(); ++v) probs[v] = std::exp(logp[v]);
        if (options.want_entropy) e.entropy = token_entropy(probs);
        if (options.want_full) e.row = std::move(probs);
      }
      bundle.positions.push_back(std::move(e));
    }
    return bundle;
  }

 private:
  using Context = std::vector<Token>;

  Vocabulary vocab_;
  int order_;
  double alpha_;
  std::map<Context, std::vector<double>> counts_;
};

}  // namespace sched
