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

// Command-line front end: decode, sweep, qps, entropy, serve-check, serve.

#include <unistd.h>

#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sched/sched.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitProvider = 2;
constexpr int kExitMismatch = 3;

std::vector<sched::Token> parse_tokens(const std::string& csv) {
  std::vector<sched::Token> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(static_cast<sched::Token>(std::stol(item)));
    } catch (const std::exception&) {
      throw sched::ConfigError("bad token list entry '" + item + "'");
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sched::ConfigError("cannot write " + path.string());
  out << text;
}

sched::json load_config(const std::string& path) { return sched::load_json_file(path); }

int cmd_decode(const std::string& config_path, std::size_t sample_index,
               const std::string& prompt_csv, bool entropy) {
  const auto j = load_config(config_path);
  sched::RunConfig config = sched::run_config_from_json(j);
  if (entropy) config.record_entropy = true;
  std::vector<sched::Sample> samples;
  if (!prompt_csv.empty()) {
    samples.push_back({"cli", parse_tokens(prompt_csv), std::nullopt});
    sample_index = 0;
  } else if (j.contains("samples")) {
    samples = sched::samples_from_json(j["samples"], config);
  } else {
    throw sched::ConfigError("decode needs --prompt or samples in the config");
  }
  if (sample_index >= samples.size()) throw sched::ConfigError("--sample index out of range");
  const auto& sample = samples[sample_index];

  sched::ProviderFactory factory(config.provider);
  const auto seed = config.seeds.front();
  auto provider = factory.for_sample(sample, seed);
  const auto result = sched::decode(*provider, sched::make_request(config, sample, seed));

  sched::ordered_json out;
  out["sample_id"] = sample.id;
  out["provider"] = provider->name();
  out["fingerprint"] = sched::fingerprint(config);
  out["speedup"] = sched::speedup(config.budget, result.steps_used);
  if (sample.truth) out["score"] = sched::oracle_truth_accuracy(result, *sample.truth);
  out["result"] = sched::to_json(result);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int workers) {
  auto sc = sched::sweep_config_from_json(load_config(config_path));
  if (workers > 0) sc.base.workers = workers;
  const auto out = sched::run_sweep(sc);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_file(dir / "records.jsonl", out.records_jsonl);
  write_file(dir / "summary.csv", out.summary_csv);
  write_file(dir / "summary.json", out.summary_json);
  std::cout << out.summary_csv;
  std::size_t failures = 0;
  for (const auto& e : out.entries) failures += e.result.summary.failures;
  if (failures) {
    std::cerr << failures << " sample(s) failed; see records.jsonl\n";
    return kExitProvider;
  }
  return 0;
}

// CSV columns: model,method,score,speedup,baseline_score[,expected_qps]
int cmd_qps(const std::string& csv_path, double gamma, double tolerance) {
  std::ifstream in(csv_path);
  if (!in) throw sched::ConfigError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw sched::ConfigError("empty CSV");
  bool mismatch = false;
  std::size_t rows = 0;
  std::cout << "model,method,score,speedup,baseline_score,qps,expected_qps,status\n";
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 5) throw sched::ConfigError("CSV row needs at least 5 columns: " + line);
    double score = 0, spd = 0, base = 0;
    try {
      score = std::stod(cells[2]);
      spd = std::stod(cells[3]);
      base = std::stod(cells[4]);
    } catch (const std::exception&) {
      throw sched::ConfigError("non-numeric CSV row: " + line);
    }
    const double value = sched::qps(spd, score, base, gamma);
    std::string expected, status = "-";
    if (cells.size() > 5 && !cells[5].empty()) {
      expected = cells[5];
      const bool ok = std::abs(value - std::stod(cells[5])) <= tolerance;
      status = ok ? "ok" : "MISMATCH";
      mismatch = mismatch || !ok;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    std::cout << cells[0] << ',' << cells[1] << ',' << cells[2] << ',' << cells[3] << ','
              << cells[4] << ',' << buf << ',' << expected << ',' << status << "\n";
    ++rows;
  }
  std::cerr << rows << " rows, " << (mismatch ? "mismatches found" : "all within tolerance")
            << "\n";
  return mismatch ? kExitMismatch : 0;
}

int cmd_entropy(const std::string& config_path, const std::string& out_path) {
  const auto j = load_config(config_path);
  sched::RunConfig config = sched::run_config_from_json(j);
  config.record_entropy = true;
  if (!j.contains("samples")) throw sched::ConfigError("entropy needs samples in the config");
  const auto samples = sched::samples_from_json(j["samples"], config);
  sched::ProviderFactory factory(config.provider);
  const auto records = sched::run_records(config, samples, factory, sched::fingerprint(config));
  const auto summary = sched::summarize(records, config.gamma);
  const std::string csv = sched::entropy_csv(summary.entropy);
  if (out_path.empty() || out_path == "-") {
    std::cout << csv;
  } else {
    write_file(out_path, csv);
  }
  if (summary.entropy.empty()) {
    std::cerr << "no entropy data: the provider returned neither entropies nor rows\n";
    return kExitProvider;
  }
  return 0;
}

int cmd_serve_check(const std::vector<std::string>& command, const std::string& host, int port,
                    std::size_t gen_len) {
  auto channel = command.empty() ? sched::wire::connect_tcp(host, port)
                                 : sched::wire::spawn_process(command);
  sched::wire::WireClient client(std::move(channel));
  sched::Canvas canvas(client.vocabulary(), {}, gen_len, 1);
  canvas.set_step(1);
  const auto bundle = client.query(canvas, {false, true});
  sched::ordered_json out;
  out["name"] = client.name();
  out["vocab_size"] = client.vocabulary().size();
  out["mask_id"] = client.vocabulary().mask_id();
  out["positions"] = bundle.positions.size();
  out["status"] = "ok";
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& truth_csv, std::size_t gen_len) {
  const auto j = load_config(config_path);
  const sched::json pj = j.contains("provider") ? j["provider"] : j;
  const auto spec = sched::provider_from_json(pj);
  std::unique_ptr<sched::LogitProvider> provider;
  if (const auto* o = std::get_if<sched::OracleSpec>(&spec)) {
    sched::OracleConfig cfg = o->base;
    if (!truth_csv.empty()) {
      cfg.truth = parse_tokens(truth_csv);
    } else {
      cfg.truth = sched::synthetic_samples(1, 0, gen_len, cfg.vocab_size, cfg.seed).front().truth.value();
    }
    provider = std::make_unique<sched::OracleProvider>(std::move(cfg));
  } else if (const auto* n = std::get_if<sched::NgramSpec>(&spec)) {
    provider = std::make_unique<sched::NgramProvider>(
        sched::Vocabulary::with_trailing_mask(n->vocab_size), n->corpus, n->order, n->alpha);
  } else {
    throw sched::ConfigError("serve supports oracle and ngram providers");
  }
  sched::wire::FdChannel channel(STDIN_FILENO, STDOUT_FILENO, false);
  return sched::wire::serve(*provider, channel);
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"Schedule-based early-exit decoding for masked diffusion language models"};
  app.require_subcommand(1);

  std::string config_path, out_path, prompt, csv_path, host = "127.0.0.1", truth;
  std::size_t sample_index = 0, gen_len = 8;
  int workers = 0, port = 0;
  double gamma = 4.0, tolerance = 0.02;
  bool entropy = false;
  std::vector<std::string> command;

  auto* decode = app.add_subcommand("decode", "Decode one sample and print the result as JSON");
  decode->add_option("-c,--config", config_path, "Run config (JSON)")->required();
  decode->add_option("--sample", sample_index, "Index into the config's samples");
  decode->add_option("--prompt", prompt, "Comma-separated prompt token ids");
  decode->add_flag("--entropy", entropy, "Record mean entropy per step");

  auto* sweep = app.add_subcommand("sweep", "Run a grid of stop policies");
  sweep->add_option("-c,--config", config_path, "Sweep config (JSON)")->required();
  sweep->add_option("-o,--out", out_path, "Output directory")->required();
  sweep->add_option("-j,--workers", workers, "Parallel decodes (overrides config)");

  auto* qps = app.add_subcommand("qps", "Recompute QPS from a CSV of scores and speedups");
  qps->add_option("--csv", csv_path, "model,method,score,speedup,baseline_score[,expected_qps]")
      ->required();
  qps->add_option("--gamma", gamma, "Quality penalty exponent");
  qps->add_option("--tolerance", tolerance, "Allowed |qps - expected|");

  auto* ent = app.add_subcommand("entropy", "Emit the per-step entropy curve as CSV");
  ent->add_option("-c,--config", config_path, "Run config with samples (JSON)")->required();
  ent->add_option("-o,--out", out_path, "Output CSV ('-' for stdout)");

  auto* check = app.add_subcommand("serve-check", "Handshake and one request against a server");
  check->add_option("command", command, "Server command to spawn over stdio, after --");
  check->add_option("--host", host, "TCP host");
  check->add_option("--port", port, "TCP port");
  check->add_option("--gen-len", gen_len, "Generation length of the probe request");

  auto* serve = app.add_subcommand("serve", "Serve a built-in provider over stdio");
  serve->add_option("-c,--config", config_path, "Provider config (JSON)")->required();
  serve->add_option("--truth", truth, "Comma-separated oracle truth tokens");
  serve->add_option("--gen-len", gen_len, "Oracle truth length when --truth is absent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*decode) return cmd_decode(config_path, sample_index, prompt, entropy);
    if (*sweep) return cmd_sweep(config_path, out_path, workers);
    if (*qps) return cmd_qps(csv_path, gamma, tolerance);
    if (*ent) return cmd_entropy(config_path, out_path);
    if (*check) {
      if (command.empty() && port <= 0) throw sched::ConfigError("serve-check needs a command after -- or --port");
      return cmd_serve_check(command, host, port, gen_len);
    }
    if (*serve) return cmd_serve(config_path, truth, gen_len);
  } catch (const sched::ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const sched::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
