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

// JSON forms of configs and results.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sched/engine.hpp"
#include "sched/error.hpp"
#include "sched/harness.hpp"

namespace sched {

using nlohmann::json;
using nlohmann::ordered_json;

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

inline std::string kind_of(const json& j, const char* what) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object() && j.contains("kind") && j["kind"].is_string()) return j["kind"];
  throw ConfigError(std::string(what) + " needs a \"kind\"");
}

inline ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

}  // namespace detail

// ---- schedules and policies ------------------------------------------------

inline ThresholdSchedule schedule_from_json(const json& j) {
  ThresholdSchedule s;
  const auto family = parse_family(detail::get_or<std::string>(j, "family", "linear"));
  if (!family) throw ConfigError("unknown schedule family " + j.value("family", std::string()));
  s.family = *family;
  s.tau_high = detail::get_or(j, "tau_high", 7.5);
  s.tau_low = detail::get_or(j, "tau_low", 0.0);
  s.k = detail::get_or(j, "k", 1.0);
  try {
    require_valid(s);
  } catch (const ScheduleError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

inline ordered_json to_json(const ThresholdSchedule& s) {
  ordered_json j = {{"family", std::string(to_string(s.family))},
                    {"tau_high", detail::number_or_null(s.tau_high)},
                    {"tau_low", detail::number_or_null(s.tau_low)}};
  if (s.family == ScheduleFamily::kExponential) j["k"] = s.k;
  return j;
}

inline StopPolicy stop_from_json(const json& j) {
  const std::string kind = detail::kind_of(j, "stop policy");
  if (kind == "never") return NeverStop{};
  if (kind == "sched") return SchedStop{schedule_from_json(j.value("schedule", json::object()))};
  if (kind == "hard_threshold") {
    HardThresholdStop h{detail::get_or(j, "tau", 3.0), detail::get_or(j, "warmup_fraction", 0.0)};
    if (!(h.warmup_fraction >= 0.0 && h.warmup_fraction < 1.0)) {
      throw ConfigError("warmup_fraction must lie in [0, 1)");
    }
    return h;
  }
  throw ConfigError("unknown stop policy '" + kind + "'");
}

inline ordered_json to_json(const StopPolicy& stop) {
  return std::visit(
      [](const auto& s) -> ordered_json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, NeverStop>) {
          return {{"kind", "never"}};
        } else if constexpr (std::is_same_v<S, SchedStop>) {
          return {{"kind", "sched"}, {"schedule", to_json(s.schedule)}};
        } else {
          return {{"kind", "hard_threshold"}, {"tau", s.tau}, {"warmup_fraction", s.warmup_fraction}};
        }
      },
      stop);
}

inline InnerTransfer inner_transfer_from_json(const json& j, int default_per_step) {
  const std::string kind = detail::kind_of(j, "transfer policy");
  if (kind == "full_suffix") return FullSuffix{};
  if (kind == "fixed_count") return FixedCount{detail::get_or(j, "per_step", default_per_step)};
  if (kind == "low_confidence_topk") {
    return LowConfidenceTopK{detail::get_or(j, "per_step", default_per_step)};
  }
  throw ConfigError("unknown transfer policy '" + kind + "'");
}

inline TransferPolicy transfer_from_json(const json& j, int default_per_step, int default_block) {
  if (detail::kind_of(j, "transfer policy") == "block") {
    BlockDiffusion b;
    b.block_size = detail::get_or(j, "block_size", default_block);
    b.inner = inner_transfer_from_json(
        j.is_object() && j.contains("inner") ? j["inner"] : json("low_confidence_topk"),
        default_per_step);
    return b;
  }
  return std::visit([](const auto& p) -> TransferPolicy { return p; },
                    inner_transfer_from_json(j, default_per_step));
}

inline ordered_json to_json(const TransferPolicy& policy) {
  auto inner_json = [](const InnerTransfer& inner) -> ordered_json {
    return std::visit(
        [](const auto& p) -> ordered_json {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, FullSuffix>) {
            return {{"kind", "full_suffix"}};
          } else if constexpr (std::is_same_v<P, FixedCount>) {
            return {{"kind", "fixed_count"}, {"per_step", p.per_step}};
          } else {
            return {{"kind", "low_confidence_topk"}, {"per_step", p.per_step}};
          }
        },
        inner);
  };
  if (const auto* b = std::get_if<BlockDiffusion>(&policy)) {
    return {{"kind", "block"}, {"block_size", b->block_size}, {"inner", inner_json(b->inner)}};
  }
  return std::visit(
      [&](const auto& p) -> ordered_json {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, BlockDiffusion>) {
          return {};
        } else {
          return inner_json(InnerTransfer{p});
        }
      },
      policy);
}

inline Aggregator aggregator_from_json(const json& j) {
  const std::string kind = detail::kind_of(j, "aggregator");
  if (kind == "mean") return Aggregator::mean();
  if (kind == "min") return Aggregator::min();
  if (kind == "quantile") {
    try {
      return Aggregator::quantile(detail::get_or(j, "q", 0.5));
    } catch (const RangeError& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError("unknown aggregator '" + kind + "'");
}

inline ordered_json to_json(const Aggregator& a) {
  switch (a.kind) {
    case Aggregator::Kind::kMean: return {{"kind", "mean"}};
    case Aggregator::Kind::kMin: return {{"kind", "min"}};
    case Aggregator::Kind::kQuantile: return {{"kind", "quantile"}, {"q", a.q}};
  }
  return {};
}

inline CommitMode commit_from_json(const json& j) {
  const std::string mode =
      j.is_string() ? j.get<std::string>() : detail::get_or<std::string>(j, "mode", "argmax");
  if (mode == "argmax") return ArgmaxCommit{};
  if (mode == "sample") {
    const double temperature = j.is_object() ? detail::get_or(j, "temperature", 1.0) : 1.0;
    if (!(temperature > 0.0)) throw ConfigError("sampling temperature must be > 0");
    return SampleCommit{temperature};
  }
  throw ConfigError("unknown commit mode '" + mode + "'");
}

inline ordered_json to_json(const CommitMode& c) {
  if (const auto* s = std::get_if<SampleCommit>(&c)) {
    return {{"mode", "sample"}, {"temperature", s->temperature}};
  }
  return {{"mode", "argmax"}};
}

// ---- providers ---------------------------------------------------------------

inline std::vector<Token> bytes_to_tokens(const std::string& text) {
  std::vector<Token> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<Token>(c));
  return out;
}

inline ProviderSpec provider_from_json(const json& j) {
  const std::string kind = detail::kind_of(j, "provider");
  if (kind == "oracle") {
    OracleSpec o;
    auto& c = o.base;
    c.vocab_size = detail::get_or<std::int64_t>(j, "vocab_size", c.vocab_size);
    c.margin_floor = detail::get_or(j, "margin_floor", c.margin_floor);
    c.margin_ceil = detail::get_or(j, "margin_ceil", c.margin_ceil);
    const auto growth = detail::get_or<std::string>(j, "growth", "unmasked_fraction");
    if (growth == "unmasked_fraction") {
      c.growth = MarginGrowth::kUnmaskedFraction;
    } else if (growth == "step_fraction") {
      c.growth = MarginGrowth::kStepFraction;
    } else {
      throw ConfigError("unknown oracle growth '" + growth + "'");
    }
    c.noise_sd = detail::get_or(j, "noise_sd", c.noise_sd);
    c.distractor_rate = detail::get_or(j, "distractor_rate", c.distractor_rate);
    c.stabilization = detail::get_or(j, "stabilization", c.stabilization);
    c.background_decay = detail::get_or(j, "background_decay", c.background_decay);
    c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
    // Validate eagerly with a placeholder truth.
    OracleConfig probe = c;
    probe.truth.clear();
    OracleProvider check(probe);
    return o;
  }
  if (kind == "ngram") {
    NgramSpec n;
    n.order = detail::get_or(j, "order", 2);
    n.alpha = detail::get_or(j, "alpha", 0.1);
    if (j.contains("corpus_text")) {
      n.corpus = bytes_to_tokens(j["corpus_text"].get<std::string>());
      n.vocab_size = detail::get_or<std::int64_t>(j, "vocab_size", 256);
    } else {
      n.corpus = detail::get_or(j, "corpus", std::vector<Token>{});
      n.vocab_size = detail::get_or<std::int64_t>(j, "vocab_size", 0);
    }
    if (n.vocab_size < 2) throw ConfigError("ngram provider needs vocab_size >= 2");
    return n;
  }
  if (kind == "wire") {
    WireSpec w;
    w.command = detail::get_or(j, "command", std::vector<std::string>{});
    w.host = detail::get_or<std::string>(j, "host", "");
    w.port = detail::get_or(j, "port", 0);
    w.connections = detail::get_or(j, "connections", 1);
    if (w.command.empty() && (w.host.empty() || w.port <= 0)) {
      throw ConfigError("wire provider needs a command or host/port");
    }
    if (w.connections < 1) throw ConfigError("wire provider needs connections >= 1");
    return w;
  }
  throw ConfigError("unknown provider '" + kind + "'");
}

inline ordered_json to_json(const ProviderSpec& spec) {
  return std::visit(
      [](const auto& p) -> ordered_json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, OracleSpec>) {
          const auto& c = p.base;
          return {{"kind", "oracle"},
                  {"vocab_size", c.vocab_size},
                  {"margin_floor", c.margin_floor},
                  {"margin_ceil", c.margin_ceil},
                  {"growth", c.growth == MarginGrowth::kUnmaskedFraction ? "unmasked_fraction"
                                                                          : "step_fraction"},
                  {"noise_sd", c.noise_sd},
                  {"distractor_rate", c.distractor_rate},
                  {"stabilization", c.stabilization},
                  {"background_decay", c.background_decay},
                  {"seed", c.seed}};
        } else if constexpr (std::is_same_v<P, NgramSpec>) {
          return {{"kind", "ngram"}, {"vocab_size", p.vocab_size}, {"order", p.order},
                  {"alpha", p.alpha}, {"corpus", p.corpus}};
        } else {
          ordered_json j = {{"kind", "wire"}};
          if (!p.command.empty()) {
            j["command"] = p.command;
          } else {
            j["host"] = p.host;
            j["port"] = p.port;
          }
          return j;
        }
      },
      spec);
}

// ---- run config ----------------------------------------------------------------

inline RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    RunConfig c;
    if (j.contains("preset")) apply_preset(c, j["preset"].get<std::string>());
    c.budget = detail::get_or(j, "budget", c.budget);
    c.gen_len = detail::get_or(j, "gen_len", c.gen_len);
    if (j.contains("block_size") && !j["block_size"].is_null()) {
      c.block_size = j["block_size"].get<int>();
    }
    c.shots = detail::get_or(j, "shots", c.shots);
    if (c.budget < 1 || c.gen_len < 1) throw ConfigError("budget and gen_len must be >= 1");

    const int per_step = default_per_step(c.gen_len, c.budget);
    c.transfer = j.contains("transfer")
                     ? transfer_from_json(j["transfer"], per_step, c.block_size.value_or(32))
                     : TransferPolicy{LowConfidenceTopK{per_step}};
    if (j.contains("stop")) c.stop = stop_from_json(j["stop"]);
    if (j.contains("aggregator")) c.aggregator = aggregator_from_json(j["aggregator"]);
    if (j.contains("commit")) c.commit = commit_from_json(j["commit"]);
    if (j.contains("region") && !j["region"].is_null()) {
      c.region = j["region"].get<std::vector<std::size_t>>();
    }
    c.seeds = j.contains("seeds") ? j["seeds"].get<std::vector<std::uint64_t>>()
                                  : std::vector<std::uint64_t>{default_seed()};
    if (j.contains("provider")) c.provider = provider_from_json(j["provider"]);
    c.record_entropy = detail::get_or(j, "record_entropy", c.record_entropy);
    c.workers = detail::get_or(j, "workers", c.workers);
    c.gamma = detail::get_or(j, "gamma", c.gamma);
    require_valid(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// Canonical form; worker count is left out because it never changes results.
inline ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  if (c.preset) j["preset"] = *c.preset;
  j["budget"] = c.budget;
  j["gen_len"] = c.gen_len;
  if (c.block_size) j["block_size"] = *c.block_size;
  j["shots"] = c.shots;
  j["transfer"] = to_json(c.transfer);
  j["stop"] = to_json(c.stop);
  j["aggregator"] = to_json(c.aggregator);
  j["commit"] = to_json(c.commit);
  if (c.region) j["region"] = *c.region;
  j["seeds"] = c.seeds;
  j["provider"] = to_json(c.provider);
  j["record_entropy"] = c.record_entropy;
  j["gamma"] = c.gamma;
  return j;
}

inline std::string fingerprint(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

inline std::vector<Sample> samples_from_json(const json& j, const RunConfig& config) {
  std::vector<Sample> out;
  if (j.is_array()) {
    for (std::size_t n = 0; n < j.size(); ++n) {
      const auto& s = j[n];
      Sample sample;
      char id[32];
      std::snprintf(id, sizeof(id), "s%05zu", n);
      sample.id = detail::get_or<std::string>(s, "id", id);
      sample.prompt = s.contains("prompt_text") ? bytes_to_tokens(s["prompt_text"])
                                                : detail::get_or(s, "prompt", std::vector<Token>{});
      if (s.contains("truth")) sample.truth = s["truth"].get<std::vector<Token>>();
      out.push_back(std::move(sample));
    }
  } else if (j.is_object() && j.contains("synthetic")) {
    const auto& g = j["synthetic"];
    std::int64_t vocab = 32;
    if (const auto* o = std::get_if<OracleSpec>(&config.provider)) vocab = o->base.vocab_size;
    if (const auto* n = std::get_if<NgramSpec>(&config.provider)) vocab = n->vocab_size;
    out = synthetic_samples(detail::get_or<std::size_t>(g, "count", 1),
                            detail::get_or<std::size_t>(g, "prompt_len", 4), config.gen_len,
                            detail::get_or<std::int64_t>(g, "vocab_size", vocab),
                            detail::get_or<std::uint64_t>(g, "seed", 1));
  } else {
    throw ConfigError("samples must be a list or {\"synthetic\": {...}}");
  }
  if (out.empty()) throw ConfigError("no samples");
  return out;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false, /*ignore_comments=*/true);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + path);
  return j;
}

// ---- results -------------------------------------------------------------------

inline ordered_json to_json(const DecodeResult& r) {
  ordered_json traj = ordered_json::array();
  for (const auto& s : r.trajectory) {
    ordered_json e = {{"step", s.step},
                      {"progress", s.progress},
                      {"margin", s.margin},
                      {"threshold", detail::number_or_null(s.threshold)}};
    if (s.mean_entropy) e["mean_entropy"] = *s.mean_entropy;
    e["masked_remaining"] = s.masked_remaining;
    traj.push_back(std::move(e));
  }
  ordered_json j;
  j["tokens"] = r.tokens;
  j["steps_used"] = r.steps_used;
  j["exit_step"] = r.exit_step ? ordered_json(*r.exit_step) : ordered_json(nullptr);
  j["trajectory"] = std::move(traj);
  return j;
}

inline ordered_json to_json(const RunRecord& r, const std::string& variant) {
  ordered_json j;
  j["variant"] = variant;
  j["sample_id"] = r.sample_id;
  j["seed"] = r.seed;
  j["score"] = r.score ? ordered_json(*r.score) : ordered_json(nullptr);
  j["steps_used"] = r.steps_used;
  j["budget"] = r.budget;
  j["speedup"] = r.speedup;
  j["exit_step"] = r.exit_step ? ordered_json(*r.exit_step) : ordered_json(nullptr);
  j["fingerprint"] = r.fingerprint;
  if (r.error) j["error"] = *r.error;
  return j;
}

inline ordered_json to_json(const Summary& s) {
  ordered_json j;
  j["records"] = s.records;
  j["failures"] = s.failures;
  j["mean_score"] = s.mean_score ? ordered_json(*s.mean_score) : ordered_json(nullptr);
  j["mean_speedup"] = s.mean_speedup;
  j["baseline_score"] = s.baseline_score ? ordered_json(*s.baseline_score) : ordered_json(nullptr);
  j["qps"] = s.qps ? ordered_json(*s.qps) : ordered_json(nullptr);
  j["gamma"] = s.gamma;
  j["speedup_definition"] = "step_ratio";
  j["averaging"] = "macro";
  return j;
}

inline std::string entropy_csv(const EntropyCurves& curves) {
  std::ostringstream out;
  out << "step,mean,std\n";
  char buf[96];
  for (const auto& p : curves.points) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", p.step, p.mean, p.std);
    out << buf;
  }
  return out.str();
}

}  // namespace sched
