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
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "sched/engine.hpp"
#include "sched/error.hpp"
#include "sched/metrics.hpp"
#include "sched/ngram_provider.hpp"
#include "sched/oracle_provider.hpp"
#include "sched/presets.hpp"
#include "sched/wire.hpp"

namespace sched {

// Oracle parameters shared by all samples; truth and seed come per sample.
struct OracleSpec {
  OracleConfig base;
};

struct NgramSpec {
  std::int64_t vocab_size = 0;
  std::vector<Token> corpus;
  int order = 2;
  double alpha = 0.1;
};

// External server: either a command to spawn (stdio) or a TCP endpoint.
struct WireSpec {
  std::vector<std::string> command;
  std::string host;
  int port = 0;
  int connections = 1;
};

using ProviderSpec = std::variant<OracleSpec, NgramSpec, WireSpec>;

struct Sample {
  std::string id;
  std::vector<Token> prompt;
  std::optional<std::vector<Token>> truth;
};

struct RunConfig {
  std::optional<std::string> preset;
  int budget = 64;
  std::size_t gen_len = 64;
  std::optional<int> block_size;
  int shots = 0;
  TransferPolicy transfer = LowConfidenceTopK{1};
  StopPolicy stop = NeverStop{};
  Aggregator aggregator = Aggregator::mean();
  CommitMode commit = ArgmaxCommit{};
  std::optional<std::vector<std::size_t>> region;
  std::vector<std::uint64_t> seeds = {0};
  ProviderSpec provider = OracleSpec{};
  bool record_entropy = false;
  int workers = 1;
  double gamma = 4.0;
};

// Seed used when a config lists none; SCHED_SEED overrides it.
inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("SCHED_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
    throw ConfigError(std::string("SCHED_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

inline void apply_preset(RunConfig& config, std::string_view name) {
  const auto preset = find_preset(name);
  if (!preset) throw ConfigError("unknown preset '" + std::string(name) + "'");
  config.preset = std::string(name);
  config.budget = preset->budget;
  config.gen_len = preset->gen_len;
  config.shots = preset->shots;
  config.block_size = preset->block_size;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Random samples with a known answer, for the oracle provider.
inline std::vector<Sample> synthetic_samples(std::size_t count, std::size_t prompt_len,
                                             std::size_t gen_len, std::int64_t vocab_size,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Token> token(0, static_cast<Token>(vocab_size - 1));
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Sample s;
    char id[32];
    std::snprintf(id, sizeof(id), "s%05zu", n);
    s.id = id;
    s.prompt.resize(prompt_len);
    for (auto& t : s.prompt) t = token(rng);
    s.truth.emplace(gen_len);
    for (auto& t : *s.truth) t = token(rng);
    out.push_back(std::move(s));
  }
  return out;
}

// Hands out a provider for each (sample, seed). In-process n-gram and wire
// providers are shared; the oracle is built per sample around its truth.
class ProviderFactory {
 public:
  explicit ProviderFactory(const ProviderSpec& spec) : spec_(spec) {
    if (const auto* n = std::get_if<NgramSpec>(&spec_)) {
      shared_ = std::make_shared<NgramProvider>(Vocabulary::with_trailing_mask(n->vocab_size),
                                                n->corpus, n->order, n->alpha);
    } else if (const auto* w = std::get_if<WireSpec>(&spec_)) {
      std::vector<std::unique_ptr<wire::WireClient>> clients;
      for (int c = 0; c < std::max(1, w->connections); ++c) {
        auto channel = w->command.empty() ? wire::connect_tcp(w->host, w->port)
                                          : wire::spawn_process(w->command);
        clients.push_back(std::make_unique<wire::WireClient>(std::move(channel)));
      }
      shared_ = std::make_shared<wire::WireClientPool>(std::move(clients));
    }
  }

  bool concurrent_safe() const {
    if (std::holds_alternative<OracleSpec>(spec_)) return true;
    if (std::holds_alternative<WireSpec>(spec_)) {
      return std::get<WireSpec>(spec_).connections > 1;
    }
    return shared_->concurrent_safe();
  }

  std::shared_ptr<LogitProvider> for_sample(const Sample& sample, std::uint64_t seed) const {
    if (const auto* o = std::get_if<OracleSpec>(&spec_)) {
      if (!sample.truth) throw ConfigError("oracle provider needs a truth sequence for " + sample.id);
      OracleConfig cfg = o->base;
      cfg.truth = *sample.truth;
      cfg.seed = fnv1a(sample.id, o->base.seed * 0x9e3779b97f4a7c15ULL + seed);
      return std::make_shared<OracleProvider>(std::move(cfg));
    }
    return shared_;
  }

 private:
  ProviderSpec spec_;
  std::shared_ptr<LogitProvider> shared_;
};

struct RunRecord {
  std::string sample_id;
  std::uint64_t seed = 0;
  std::optional<double> score;
  int steps_used = 0;
  int budget = 0;
  double speedup = 0.0;
  std::optional<int> exit_step;
  std::string fingerprint;
  std::optional<std::string> error;  // set when the sample failed
  std::optional<DecodeResult> result;
};

struct Summary {
  std::size_t records = 0;
  std::size_t failures = 0;
  std::optional<double> mean_score;
  double mean_speedup = 0.0;
  std::optional<double> baseline_score;
  std::optional<double> qps;
  double gamma = 4.0;
  EntropyCurves entropy;
};

struct BenchmarkResult {
  std::vector<RunRecord> records;
  Summary summary;
  std::vector<RunRecord> baseline_records;
  Summary baseline_summary;
};

inline DecodeRequest make_request(const RunConfig& config, const Sample& sample,
                                  std::uint64_t seed) {
  DecodeRequest req;
  req.prompt = sample.prompt;
  req.gen_len = config.gen_len;
  req.budget = config.budget;
  req.transfer = config.transfer;
  req.stop = config.stop;
  req.aggregator = config.aggregator;
  req.commit = config.commit;
  if (config.region) req.region = AnswerRegion(*config.region, config.gen_len);
  req.seed = seed;
  req.record_entropy = config.record_entropy;
  return req;
}

// Decodes every (sample, seed) pair. Records come back sorted by sample id,
// then seed, whatever the worker count. Provider failures become records
// with `error` set.
inline std::vector<RunRecord> run_records(const RunConfig& config,
                                          const std::vector<Sample>& samples,
                                          const ProviderFactory& factory,
                                          const std::string& fingerprint) {
  struct Job {
    const Sample* sample;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& s : samples) {
    for (auto seed : config.seeds) jobs.push_back({&s, seed});
  }
  std::vector<RunRecord> records(jobs.size());

  auto run_one = [&](std::size_t n) {
    const Job& job = jobs[n];
    RunRecord& rec = records[n];
    rec.sample_id = job.sample->id;
    rec.seed = job.seed;
    rec.budget = config.budget;
    rec.fingerprint = fingerprint;
    try {
      auto provider = factory.for_sample(*job.sample, job.seed);
      DecodeResult result = decode(*provider, make_request(config, *job.sample, job.seed));
      rec.steps_used = result.steps_used;
      rec.speedup = speedup(config.budget, result.steps_used);
      rec.exit_step = result.exit_step;
      if (job.sample->truth) rec.score = oracle_truth_accuracy(result, *job.sample->truth);
      rec.result = std::move(result);
    } catch (const ProviderError& e) {
      rec.error = e.what();
    }
  };

  const std::size_t workers =
      factory.concurrent_safe() ? std::clamp<std::size_t>(config.workers, 1, jobs.size()) : 1;
  if (workers <= 1) {
    for (std::size_t n = 0; n < jobs.size(); ++n) run_one(n);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t n = next++; n < jobs.size(); n = next++) {
          try {
            run_one(n);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return a.sample_id != b.sample_id ? a.sample_id < b.sample_id : a.seed < b.seed;
  });
  return records;
}

// Macro averages over successful records.
inline Summary summarize(const std::vector<RunRecord>& records, double gamma) {
  Summary s;
  s.gamma = gamma;
  s.records = records.size();
  double score_sum = 0.0;
  std::size_t scored = 0;
  double speed_sum = 0.0;
  std::size_t ok = 0;
  std::vector<DecodeResult> results;
  for (const auto& r : records) {
    if (r.error) {
      ++s.failures;
      continue;
    }
    ++ok;
    speed_sum += r.speedup;
    if (r.score) {
      score_sum += *r.score;
      ++scored;
    }
    if (r.result) results.push_back(*r.result);
  }
  if (ok) s.mean_speedup = speed_sum / static_cast<double>(ok);
  if (scored) s.mean_score = score_sum / static_cast<double>(scored);
  s.entropy = entropy_curves(results);
  return s;
}

inline void attach_baseline(Summary& summary, const Summary& baseline) {
  summary.baseline_score = baseline.mean_score;
  if (summary.mean_score && baseline.mean_score && *baseline.mean_score > 0.0 &&
      summary.records > summary.failures) {
    summary.qps = qps(summary.mean_speedup, *summary.mean_score, *baseline.mean_score,
                      summary.gamma);
  }
}

inline void require_valid(const RunConfig& config) {
  if (config.budget < 1) throw ConfigError("budget must be >= 1");
  if (config.gen_len < 1) throw ConfigError("gen_len must be >= 1");
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");
  if (!(config.gamma >= 1.0)) throw ConfigError("gamma must be >= 1");
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  try {
    require_valid(config.transfer);
    require_valid(config.stop);
    if (config.region) AnswerRegion(*config.region, config.gen_len);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (const auto* s = std::get_if<SampleCommit>(&config.commit); s && !(s->temperature > 0.0)) {
    throw ConfigError("sampling temperature must be > 0");
  }
}

inline RunConfig baseline_of(const RunConfig& config) {
  RunConfig base = config;
  base.stop = NeverStop{};
  return base;
}

}  // namespace sched
