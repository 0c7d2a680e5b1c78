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

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace sched {

// Decoding budgets per benchmark. block_size applies to block-diffusion
// decoders only.
struct Preset {
  std::string_view name;
  int budget;
  std::size_t gen_len;
  int shots;
  int block_size;
};

inline constexpr std::array<Preset, 11> kPresets = {{
    {"mcq", 5, 5, 5, 5},
    {"mmlu", 5, 5, 5, 5},
    {"hellaswag", 5, 5, 5, 5},
    {"piqa", 5, 5, 5, 5},
    {"winogrande", 5, 5, 5, 5},
    {"gpqa", 128, 128, 8, 32},
    {"gsm8k", 256, 256, 8, 32},
    {"wmt14-en-fr", 256, 256, 5, 32},
    {"wmt16-en-de", 256, 256, 5, 32},
    {"multinews", 512, 512, 0, 32},
    {"hotpotqa", 32, 32, 0, 32},
}};

inline std::optional<Preset> find_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

}  // namespace sched
