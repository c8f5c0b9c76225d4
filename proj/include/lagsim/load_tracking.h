// Copyright 2026 The lagsim Authors
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

// Per-entity load tracking (geometrically decayed running time, 1024us
// periods, 32-period half-life) and the per-group Load Credit, an EMA of the
// group's aggregate load sampled once per scheduler tick.

#ifndef LAGSIM_LOAD_TRACKING_H_
#define LAGSIM_LOAD_TRACKING_H_

#include <cstdint>
#include <span>

#include "lagsim/types.h"

namespace lagsim {

inline constexpr Micros kPeltPeriodUs = 1024;
inline constexpr int kPeltHalfLifePeriods = 32;

// Decay applied per elapsed period: y^32 == 1/2.
double PeltDecayPerPeriod();
// Saturation value of the decayed sum, 1024 / (1 - y).
double PeltMaxSum();

struct PeltState {
  // Decayed sum of runnable microseconds. load_avg = weight * sum / divider,
  // the divider being the largest sum reachable at the same point in the
  // period, so that an always-runnable entity converges to its weight.
  double load_sum = 0.0;
  double load_avg = 0.0;
  Micros last_update = 0;
  // Microseconds already accumulated in the current period.
  Micros period_contrib = 0;

  // A state whose average is `load` at time `now`, aligned to a period start.
  static PeltState WithLoad(double load, double weight, Micros now = 0);
};

// Advances `state` to `now`, assuming the entity was runnable for
// `runnable_fraction` of the interval [last_update, now). Throws SimError on
// time regression or a fraction outside [0, 1].
PeltState PeltUpdate(const PeltState& state, Micros now,
                     double runnable_fraction, double weight);

// The aggregate group load: the sum of per-core entity contributions.
double AggregateLoad(std::span<const double> per_core_load);

struct LoadCreditState {
  double load_avg_ema = 0.0;
  // 0 selects the unbounded window: the credit integrates load per tick.
  uint32_t window_ticks = 1000;
  int64_t last_tick = -1;
};

// alpha = 2 / (window + 1). Returns 0 for the unbounded window.
double EmaAlpha(uint32_t window_ticks);

// Folds `load_avg` into the credit for scheduler tick `tick`. Repeated calls
// for an already applied tick are no-ops; skipped ticks are applied in closed
// form with constant input. Throws SimError if `tick` precedes last_tick.
LoadCreditState UpdateLoadCredit(const LoadCreditState& state, double load_avg,
                                 int64_t tick);

}  // namespace lagsim

#endif  // LAGSIM_LOAD_TRACKING_H_
