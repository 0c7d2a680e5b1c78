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

#include "sched/benchmark.hpp"
#include "sched/confidence.hpp"
#include "sched/config_io.hpp"
#include "sched/diffusion.hpp"
#include "sched/engine.hpp"
#include "sched/error.hpp"
#include "sched/harness.hpp"
#include "sched/metrics.hpp"
#include "sched/ngram_provider.hpp"
#include "sched/oracle_provider.hpp"
#include "sched/presets.hpp"
#include "sched/provider.hpp"
#include "sched/schedule.hpp"
#include "sched/transfer.hpp"
#include "sched/wire.hpp"
