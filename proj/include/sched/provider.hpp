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
#include <optional>
#include <string>
#include <vector>

#include "sched/confidence.hpp"
#include "sched/diffusion.hpp"
#include "sched/error.hpp"

namespace sched {

// Decoding evidence for one generation position at one step. `row`, when
// present, is a probability distribution over the real vocabulary.
struct PositionEvidence {
  std::size_t position = 0;
  Token argmax = 0;
  double top1 = 0.0;  // logit units
  double top2 = 0.0;
  std::optional<std::vector<double>> row;
  std::optional<double> entropy;  // nats

  double margin() const noexcept { return top1 - top2; }

  friend bool operator==(const PositionEvidence&, const PositionEvidence&) = default;
};

// One step's evidence, one entry per generation position, ordered by position.
struct LogitBundle {
  std::vector<PositionEvidence> positions;

  friend bool operator==(const LogitBundle&, const LogitBundle&) = default;
};

struct QueryOptions {
  bool want_full = false;
  bool want_entropy = false;
};

// Source of per-position logits for a canvas. Implementations must be
// deterministic in (their seed, canvas, step).
class LogitProvider {
 public:
  virtual ~LogitProvider() = default;

  virtual const Vocabulary& vocabulary() const = 0;
  virtual LogitBundle query(const Canvas& canvas, const QueryOptions& options) = 0;
  virtual std::string name() const = 0;

  // True when query() may be called from several threads at once.
  virtual bool concurrent_safe() const { return false; }
};

// Checks the bundle invariants against a canvas: full coverage in order,
// top1 >= top2, argmax maximizes row, entropy consistent with row.
inline void check_bundle(const LogitBundle& bundle, const Canvas& canvas) {
  if (bundle.positions.size() != canvas.gen_len()) {
    throw ProtocolError("bundle covers " + std::to_string(bundle.positions.size()) +
                        " positions, expected " + std::to_string(canvas.gen_len()));
  }
  const auto& vocab = canvas.vocab();
  for (std::size_t i = 0; i < bundle.positions.size(); ++i) {
    const auto& e = bundle.positions[i];
    if (e.position != i) {
      throw ProtocolError("bundle entry " + std::to_string(i) + " reports position " +
                          std::to_string(e.position));
    }
    if (!vocab.is_real(e.argmax)) {
      throw ProtocolError("argmax " + std::to_string(e.argmax) + " is not a real token");
    }
    if (!(e.top1 >= e.top2) || !std::isfinite(e.top1) || !std::isfinite(e.top2)) {
      throw ProtocolError("position " + std::to_string(i) + " violates top1 >= top2");
    }
    if (e.entropy && !(*e.entropy >= 0.0)) {
      throw ProtocolError("negative entropy at position " + std::to_string(i));
    }
    if (e.row) {
      const auto& row = *e.row;
      if (static_cast<std::int64_t>(row.size()) != vocab.size()) {
        throw ProtocolError("row length does not match the vocabulary");
      }
      const double best = row[static_cast<std::size_t>(e.argmax)];
      for (double v : row) {
        if (v > best) throw ProtocolError("argmax is not a maximizer of the row");
      }
      if (e.entropy && std::abs(*e.entropy - token_entropy(row)) > 1e-9) {
        throw ProtocolError("entropy disagrees with the row at position " + std::to_string(i));
      }
    }
  }
}

}  // namespace sched
