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

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sched/config_io.hpp"
#include "sched/harness.hpp"

namespace sched {

// Runs `config` and its paired no-exit baseline, then summarizes. QPS is taken
// from the mean score and mean speedup, against the baseline's mean score.
inline BenchmarkResult run_benchmark(const RunConfig& config, const std::vector<Sample>& samples,
                                     const ProviderFactory& factory,
                                     const std::optional<BenchmarkResult>& baseline = std::nullopt) {
  if (samples.empty()) throw ConfigError("run_benchmark needs at least one sample");
  require_valid(config);
  BenchmarkResult out;
  if (baseline) {
    out.baseline_records = baseline->baseline_records;
    out.baseline_summary = baseline->baseline_summary;
  } else {
    const RunConfig base = baseline_of(config);
    out.baseline_records = run_records(base, samples, factory, fingerprint(base));
    out.baseline_summary = summarize(out.baseline_records, config.gamma);
    attach_baseline(out.baseline_summary, out.baseline_summary);
  }
  if (std::holds_alternative<NeverStop>(config.stop)) {
    out.records = out.baseline_records;
    out.summary = out.baseline_summary;
    return out;
  }
  out.records = run_records(config, samples, factory, fingerprint(config));
  out.summary = summarize(out.records, config.gamma);
  attach_baseline(out.summary, out.baseline_summary);
  return out;
}

inline BenchmarkResult run_benchmark(const RunConfig& config, const std::vector<Sample>& samples) {
  ProviderFactory factory(config.provider);
  return run_benchmark(config, samples, factory);
}

struct Variant {
  std::string name;
  StopPolicy stop;
};

inline std::string variant_name(const StopPolicy& stop) {
  char buf[96];
  if (std::holds_alternative<NeverStop>(stop)) return "baseline";
  if (const auto* h = std::get_if<HardThresholdStop>(&stop)) {
    std::snprintf(buf, sizeof(buf), "hard(%g,w=%g)", h->tau, h->warmup_fraction);
    return buf;
  }
  const auto& s = std::get<SchedStop>(stop).schedule;
  switch (s.family) {
    case ScheduleFamily::kLinear:
      std::snprintf(buf, sizeof(buf), "linear(%g,%g)", s.tau_high, s.tau_low);
      break;
    case ScheduleFamily::kCosine:
      std::snprintf(buf, sizeof(buf), "cosine(%g,%g)", s.tau_high, s.tau_low);
      break;
    case ScheduleFamily::kExponential:
      std::snprintf(buf, sizeof(buf), "exp-k%g(%g,%g)", s.k, s.tau_high, s.tau_low);
      break;
  }
  return buf;
}

// Linear, cosine, exp k=2 and exp k=16, each with tau_high = 7.5 and
// tau_low in {0, 2.5}.
inline std::vector<Variant> standard_grid() {
  std::vector<ThresholdSchedule> schedules;
  for (double lo : {0.0, 2.5}) {
    schedules.push_back(ThresholdSchedule::linear(7.5, lo));
    schedules.push_back(ThresholdSchedule::cosine(7.5, lo));
    schedules.push_back(ThresholdSchedule::exponential(7.5, lo, 2.0));
    schedules.push_back(ThresholdSchedule::exponential(7.5, lo, 16.0));
  }
  std::vector<Variant> out;
  for (const auto& s : schedules) {
    StopPolicy stop = SchedStop{s};
    out.push_back({variant_name(stop), stop});
  }
  return out;
}

struct SweepConfig {
  RunConfig base;
  std::vector<Variant> variants;
  std::vector<Sample> samples;
};

inline SweepConfig sweep_config_from_json(const json& j) {
  SweepConfig sc;
  sc.base = run_config_from_json(j);
  const json sweep = j.value("sweep", json{{"grid", "standard"}});
  if (sweep.is_object()) {
    if (sweep.value("grid", std::string("standard")) != "standard") {
      throw ConfigError("unknown sweep grid");
    }
    sc.variants = standard_grid();
    if (sweep.value("include_hard_threshold", false)) {
      StopPolicy hard = HardThresholdStop{sweep.value("hard_tau", 3.0),
                                          sweep.value("hard_warmup", 0.0)};
      require_valid(hard);
      sc.variants.push_back({variant_name(hard), hard});
    }
  } else if (sweep.is_array()) {
    for (const auto& v : sweep) {
      StopPolicy stop = stop_from_json(v.at("stop"));
      sc.variants.push_back({v.value("name", variant_name(stop)), stop});
    }
  } else {
    throw ConfigError("sweep must be an object or a list of variants");
  }
  if (!j.contains("samples")) throw ConfigError("sweep config needs samples");
  sc.samples = samples_from_json(j["samples"], sc.base);
  return sc;
}

struct SweepEntry {
  Variant variant;
  BenchmarkResult result;
};

struct SweepOutput {
  std::vector<SweepEntry> entries;  // baseline first
  std::string records_jsonl;
  std::string summary_csv;
  std::string summary_json;
};

inline std::string summary_csv(const std::vector<SweepEntry>& entries, double gamma) {
  std::ostringstream out;
  char qps_col[32];
  std::snprintf(qps_col, sizeof(qps_col), "qps_gamma%g", gamma);
  out << "variant,tau_high,tau_low,k,mean_score,mean_speedup," << qps_col << "\n";
  auto num = [](std::optional<double> v) {
    if (!v) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return std::string(buf);
  };
  for (const auto& e : entries) {
    std::optional<double> hi, lo, k;
    if (const auto* s = std::get_if<SchedStop>(&e.variant.stop)) {
      hi = s->schedule.tau_high;
      lo = s->schedule.tau_low;
      if (s->schedule.family == ScheduleFamily::kExponential) k = s->schedule.k;
    } else if (const auto* h = std::get_if<HardThresholdStop>(&e.variant.stop)) {
      hi = lo = h->tau;
    }
    const auto& sm = e.result.summary;
    out << e.variant.name << ',' << num(hi) << ',' << num(lo) << ',' << num(k) << ','
        << num(sm.mean_score) << ',' << num(sm.mean_speedup) << ',' << num(sm.qps) << '\n';
  }
  return out.str();
}

// Baseline first, then each variant. Output text depends only on the config,
// not on the worker count.
inline SweepOutput run_sweep(const SweepConfig& sc) {
  ProviderFactory factory(sc.base.provider);
  SweepOutput out;
  RunConfig base_cfg = baseline_of(sc.base);
  BenchmarkResult baseline = run_benchmark(base_cfg, sc.samples, factory);
  out.entries.push_back({{"baseline", NeverStop{}}, baseline});
  for (const auto& v : sc.variants) {
    RunConfig cfg = sc.base;
    cfg.stop = v.stop;
    out.entries.push_back({v, run_benchmark(cfg, sc.samples, factory, baseline)});
  }

  std::string jsonl;
  ordered_json summaries = ordered_json::array();
  for (const auto& e : out.entries) {
    for (const auto& r : e.result.records) jsonl += to_json(r, e.variant.name).dump() + "\n";
    ordered_json s = to_json(e.result.summary);
    s["variant"] = e.variant.name;
    s["stop"] = to_json(e.variant.stop);
    summaries.push_back(std::move(s));
  }
  out.records_jsonl = std::move(jsonl);
  out.summary_csv = summary_csv(out.entries, sc.base.gamma);
  ordered_json meta;
  meta["config"] = to_json(sc.base);
  meta["fingerprint"] = fingerprint(sc.base);
  meta["variants"] = std::move(summaries);
  out.summary_json = meta.dump(2) + "\n";
  return out;
}

}  // namespace sched
