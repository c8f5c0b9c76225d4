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

#include "lagsim/load_tracking.h"

#include <array>
#include <cmath>
#include <numeric>

namespace lagsim {

double PeltDecayPerPeriod() {
  static const double y = std::pow(0.5, 1.0 / kPeltHalfLifePeriods);
  return y;
}

double PeltMaxSum() {
  static const double max_sum =
      static_cast<double>(kPeltPeriodUs) / (1.0 - PeltDecayPerPeriod());
  return max_sum;
}

namespace {

// y^n, with a table for the short gaps that dominate.
double DecayPow(int64_t n) {
  static const auto table = [] {
    std::array<double, 64> t{};
    t[0] = 1.0;
    for (size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * PeltDecayPerPeriod();
    return t;
  }();
  if (n < static_cast<int64_t>(table.size())) return table[n];
  if (n > 64 * kPeltHalfLifePeriods) return 0.0;
  return std::pow(PeltDecayPerPeriod(), static_cast<double>(n));
}

// Largest sum reachable with `contrib` microseconds into the current period.
double Divider(Micros contrib) {
  return PeltMaxSum() - static_cast<double>(kPeltPeriodUs - contrib);
}

}  // namespace

PeltState PeltState::WithLoad(double load, double weight, Micros now) {
  PeltState s;
  s.load_avg = load;
  s.load_sum = weight > 0 ? load / weight * Divider(0) : 0.0;
  s.last_update = now - now % kPeltPeriodUs;
  s.period_contrib = 0;
  if (s.last_update != now) {
    s = PeltUpdate(s, now, load / weight, weight);
  }
  return s;
}

PeltState PeltUpdate(const PeltState& state, Micros now,
                     double runnable_fraction, double weight) {
  if (now < state.last_update) {
    throw SimError("pelt update: time regression");
  }
  if (!(runnable_fraction >= 0.0 && runnable_fraction <= 1.0)) {
    throw SimError("pelt update: runnable fraction outside [0, 1]");
  }
  const Micros delta = now - state.last_update;
  if (delta == 0) return state;

  PeltState s = state;
  const double r = runnable_fraction;
  const Micros total = s.period_contrib + delta;
  if (total < kPeltPeriodUs) {
    s.load_sum += r * static_cast<double>(delta);
    s.period_contrib = total;
  } else {
    const int64_t periods = total / kPeltPeriodUs;
    const Micros d1 = kPeltPeriodUs - s.period_contrib;
    const Micros d3 = total % kPeltPeriodUs;
    const double y = PeltDecayPerPeriod();
    const double yp = DecayPow(periods);
    // Full periods strictly between the first and the current one.
    const double full = periods > 1
                            ? y * (1.0 - DecayPow(periods - 1)) / (1.0 - y)
                            : 0.0;
    s.load_sum = (s.load_sum + r * static_cast<double>(d1)) * yp +
                 r * static_cast<double>(kPeltPeriodUs) * full +
                 r * static_cast<double>(d3);
    s.period_contrib = d3;
  }
  if (s.load_sum < 1e-9) s.load_sum = 0.0;
  s.load_avg = weight * s.load_sum / Divider(s.period_contrib);
  s.last_update = now;
  return s;
}

double AggregateLoad(std::span<const double> per_core_load) {
  return std::accumulate(per_core_load.begin(), per_core_load.end(), 0.0);
}

double EmaAlpha(uint32_t window_ticks) {
  if (window_ticks == 0) return 0.0;
  return 2.0 / (static_cast<double>(window_ticks) + 1.0);
}

LoadCreditState UpdateLoadCredit(const LoadCreditState& state, double load_avg,
                                 int64_t tick) {
  if (tick < state.last_tick) {
    throw SimError("load credit update: tick regression");
  }
  if (tick == state.last_tick) return state;
  LoadCreditState s = state;
  const int64_t steps = state.last_tick < 0 ? 1 : tick - state.last_tick;
  if (s.window_ticks == 0) {
    s.load_avg_ema += load_avg * static_cast<double>(steps);
  } else {
    const double alpha = EmaAlpha(s.window_ticks);
    const double keep = steps == 1 ? 1.0 - alpha
                                   : std::pow(1.0 - alpha, static_cast<double>(steps));
    s.load_avg_ema += (1.0 - keep) * (load_avg - s.load_avg_ema);
  }
  s.last_tick = tick;
  return s;
}

}  // namespace lagsim
