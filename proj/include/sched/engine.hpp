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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "sched/confidence.hpp"
#include "sched/diffusion.hpp"
#include "sched/error.hpp"
#include "sched/provider.hpp"
#include "sched/schedule.hpp"
#include "sched/transfer.hpp"

namespace sched {

// Run the full budget.
struct NeverStop {
  friend bool operator==(const NeverStop&, const NeverStop&) = default;
};

// Exit as soon as the aggregated margin reaches tau(t / T).
struct SchedStop {
  ThresholdSchedule schedule;
  friend bool operator==(const SchedStop&, const SchedStop&) = default;
};

// Constant-threshold early commit, armed once progress reaches the warmup
// fraction. Stands in for top-2-gap early-commit baselines.
struct HardThresholdStop {
  double tau = 3.0;
  double warmup_fraction = 0.0;
  friend bool operator==(const HardThresholdStop&, const HardThresholdStop&) = default;
};

using StopPolicy = std::variant<NeverStop, SchedStop, HardThresholdStop>;

inline void require_valid(const StopPolicy& stop) {
  if (const auto* s = std::get_if<SchedStop>(&stop)) require_valid(s->schedule);
  if (const auto* h = std::get_if<HardThresholdStop>(&stop)) {
    if (!(h->warmup_fraction >= 0.0 && h->warmup_fraction < 1.0)) {
      throw ConfigError("hard-threshold warmup_fraction must lie in [0, 1)");
    }
  }
}

inline double progress(int t, int budget) {
  if (budget < 1 || t < 1 || t > budget) {
    throw RangeError("step " + std::to_string(t) + " outside [1, " + std::to_string(budget) + "]");
  }
  return static_cast<double>(t) / static_cast<double>(budget);
}

// Threshold the policy compares against at progress p; +inf when the policy
// cannot fire.
inline double effective_threshold(const StopPolicy& stop, double p) {
  constexpr double kNever = std::numeric_limits<double>::infinity();
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, NeverStop>) {
          return kNever;
        } else if constexpr (std::is_same_v<S, SchedStop>) {
          return threshold(s.schedule, p);
        } else {
          return p >= s.warmup_fraction ? s.tau : kNever;
        }
      },
      stop);
}

inline bool evaluate_stop(const StopPolicy& stop, double aggregated, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw RangeError("progress must lie in (0, 1]");
  if (std::holds_alternative<NeverStop>(stop)) return false;
  return aggregated >= effective_threshold(stop, p);
}

struct ArgmaxCommit {
  friend bool operator==(const ArgmaxCommit&, const ArgmaxCommit&) = default;
};

// Categorical draw from the provider's distribution sharpened or flattened
// by `temperature`. Needs full rows.
struct SampleCommit {
  double temperature = 1.0;
  friend bool operator==(const SampleCommit&, const SampleCommit&) = default;
};

using CommitMode = std::variant<ArgmaxCommit, SampleCommit>;

struct StepRecord {
  int step = 0;
  double progress = 0.0;
  double margin = 0.0;     // aggregated over the answer region
  double threshold = 0.0;  // +inf when the policy could not fire
  std::optional<double> mean_entropy;
  std::size_t masked_remaining = 0;  // before this step's commits

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct DecodeResult {
  std::vector<Token> tokens;
  int steps_used = 0;
  std::optional<int> exit_step;
  std::vector<StepRecord> trajectory;

  friend bool operator==(const DecodeResult&, const DecodeResult&) = default;
};

struct DecodeRequest {
  std::vector<Token> prompt;
  std::size_t gen_len = 1;
  int budget = 1;
  TransferPolicy transfer = LowConfidenceTopK{1};
  StopPolicy stop = NeverStop{};
  std::optional<AnswerRegion> region;  // whole generation region when empty
  Aggregator aggregator = Aggregator::mean();
  CommitMode commit = ArgmaxCommit{};
  std::uint64_t seed = 0;
  bool record_entropy = false;
};

namespace detail {

inline Token draw_token(const PositionEvidence& e, double temperature, std::mt19937_64& rng) {
  if (!e.row) {
    throw ContractError("sampled commits need full distribution rows from the provider");
  }
  std::vector<double> weights(e.row->size());
  for (std::size_t v = 0; v < weights.size(); ++v) {
    const double p = (*e.row)[v];
    weights[v] = p > 0.0 ? std::pow(p, 1.0 / temperature) : 0.0;
  }
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  return static_cast<Token>(pick(rng));
}

inline std::optional<double> region_entropy(const LogitBundle& bundle, const AnswerRegion& region) {
  double sum = 0.0;
  for (std::size_t i : region.positions()) {
    const auto& e = bundle.positions[i];
    if (e.entropy) {
      sum += *e.entropy;
    } else if (e.row) {
      sum += token_entropy(*e.row);
    } else {
      return std::nullopt;
    }
  }
  return sum / static_cast<double>(region.size());
}

template <typename E>
[[noreturn]] void rethrow_at_step(const E& e, int t) {
  throw E("step " + std::to_string(t) + ": " + e.what());
}

}  // namespace detail

// Schedule-based early-exit decode. Each step: query logits, aggregate the
// region margins, test the stop policy at p = t / T, then either fill every
// remaining mask with its argmax and return, or commit the positions chosen
// by the transfer policy. The last budgeted step commits everything left.
inline DecodeResult decode(LogitProvider& provider, const DecodeRequest& req) {
  if (req.gen_len < 1) throw ContractError("gen_len must be >= 1");
  if (req.budget < 1) throw RangeError("budget must be >= 1");
  require_valid(req.transfer);
  require_valid(req.stop);
  const double temperature =
      std::holds_alternative<SampleCommit>(req.commit) ? std::get<SampleCommit>(req.commit).temperature
                                                       : 1.0;
  if (!(temperature > 0.0)) throw ConfigError("sampling temperature must be > 0");
  const AnswerRegion region = req.region ? *req.region : AnswerRegion::full(req.gen_len);
  if (region.positions().back() >= req.gen_len) {
    throw RangeError("answer region exceeds the generation region");
  }

  const bool sampling = std::holds_alternative<SampleCommit>(req.commit);
  QueryOptions options;
  options.want_full = sampling;
  options.want_entropy = req.record_entropy;

  Canvas canvas(provider.vocabulary(), req.prompt, req.gen_len, req.budget);
  std::mt19937_64 rng(req.seed);
  DecodeResult result;
  result.trajectory.reserve(static_cast<std::size_t>(req.budget));

  for (int t = 1; t <= req.budget; ++t) {
    canvas.set_step(t);
    LogitBundle bundle;
    try {
      bundle = provider.query(canvas, options);
      check_bundle(bundle, canvas);
    } catch (const TransportError& e) {
      detail::rethrow_at_step(e, t);
    } catch (const ProtocolError& e) {
      detail::rethrow_at_step(e, t);
    } catch (const ProviderError& e) {
      detail::rethrow_at_step(e, t);
    }

    MarginVector margins(req.gen_len);
    for (const auto& e : bundle.positions) margins.set(e.position, e.margin());

    StepRecord rec;
    rec.step = t;
    rec.progress = progress(t, req.budget);
    rec.margin = aggregate(margins, region, req.aggregator);
    rec.threshold = effective_threshold(req.stop, rec.progress);
    if (req.record_entropy) rec.mean_entropy = detail::region_entropy(bundle, region);
    rec.masked_remaining = canvas.masked_count();
    result.trajectory.push_back(rec);

    if (evaluate_stop(req.stop, rec.margin, rec.progress)) {
      for (std::size_t i : canvas.masked_positions()) canvas.commit(i, bundle.positions[i].argmax);
      result.exit_step = t;
      result.steps_used = t;
      break;
    }

    std::vector<std::size_t> chosen = t == req.budget ? canvas.masked_positions()
                                                      : select_positions(req.transfer, canvas, margins);
    if (chosen.empty()) throw ContractError("transfer policy selected nothing while masks remain");
    for (std::size_t i : chosen) {
      const auto& e = bundle.positions[i];
      canvas.commit(i, sampling ? detail::draw_token(e, temperature, rng) : e.argmax);
    }
    if (canvas.masked_count() == 0) {
      result.steps_used = t;
      break;
    }
  }

  result.tokens = canvas.gen();
  return result;
}

}  // namespace sched
