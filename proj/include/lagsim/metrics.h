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

#ifndef LAGSIM_METRICS_H_
#define LAGSIM_METRICS_H_

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lagsim/types.h"

namespace lagsim {

inline constexpr Micros kDefaultLatencyTargetUs = kMicrosPerSecond;

struct LatencySample {
  FunctionId function = 0;
  Micros arrival = 0;
  Micros latency = 0;
};

// Raw counters of one run, filled by the engine.
struct RunMetrics {
  std::vector<LatencySample> latency_samples;
  uint64_t switches = 0;
  Micros switch_cost_total = 0;
  std::vector<Micros> busy;
  std::vector<Micros> idle;
  std::vector<Micros> overhead;
  // Time tasks spent runnable but not running.
  Micros rq_wait_total = 0;
  uint64_t completions_within_target = 0;
  Micros horizon = 0;
  Micros latency_target = kDefaultLatencyTargetUs;
  // Requests arriving before this instant are excluded from latency samples.
  Micros measure_from = 0;

  uint64_t requests_arrived = 0;
  uint64_t requests_incomplete = 0;
  uint64_t migrations = 0;
  uint64_t wakeup_preemptions = 0;
  // Switch counts indexed by the number of entities reinserted.
  std::vector<uint64_t> switches_by_reinsert;
  uint64_t tick_preemptions = 0;
  // Balance instants at which a core idled while another had queued work.
  uint64_t work_conservation_violations = 0;
  // CPU time consumed by the real-time class.
  Micros rt_busy = 0;
  uint64_t events = 0;

  int cores() const { return static_cast<int>(busy.size()); }
  Micros TotalBusy() const;
  Micros TotalIdle() const;
  Micros TotalOverhead() const;
};

struct Summary {
  std::string policy;
  double density = 0.0;
  int cores = 0;
  double median_us = 0.0;
  double p95_us = 0.0;
  double p99_us = 0.0;
  double throughput_rps = 0.0;
  double overhead_pct = 0.0;
  double mean_switch_cost_us = 0.0;
  double switch_rate_hz = 0.0;
  double rq_wait_s = 0.0;
  double util_effective_pct = 0.0;
  double util_perceived_pct = 0.0;
  uint64_t seed = 0;

  uint64_t completions = 0;
  // No request completed within the target.
  bool zero_throughput = false;
  // No context switch happened; mean_switch_cost_us is 0 by convention.
  bool no_switches = false;
};

struct CdfPoint {
  double latency_us = 0.0;
  double cum_prob = 0.0;
};

// Nearest-rank percentile of an ascending sample; 0 for an empty one.
double Percentile(std::span<const Micros> sorted, double p);

Summary Summarize(const RunMetrics& metrics, const std::string& policy,
                  double density, uint64_t seed);

// Empirical CDF. When there are more than `max_points` samples the points are
// taken at evenly spaced ranks; the last point is always (max, 1.0).
std::vector<CdfPoint> LatencyCdf(const RunMetrics& metrics, size_t max_points = 1000);

// Latencies (ascending) of the samples whose function satisfies `keep`.
template <typename Pred>
std::vector<Micros> SortedLatencies(const RunMetrics& metrics, Pred keep);
std::vector<Micros> SortedLatencies(const RunMetrics& metrics);

struct ComparisonRow {
  std::string policy;
  double density = 0.0;
  Summary summary;
  // Relative to the same policy's peak-throughput row.
  double throughput_vs_peak_pct = 0.0;
  // Relative to the first policy's row at the same density.
  double p95_delta_pct = 0.0;
  double switch_cost_delta_pct = 0.0;
  double overhead_delta_pct = 0.0;
};

struct Comparison {
  std::vector<std::string> policies;
  std::vector<double> densities;
  std::vector<ComparisonRow> rows;
  // Per policy: 100 * (peak - throughput at the highest density) / peak.
  std::vector<double> degradation_pct;
};

// Aligns runs by (policy, density). Throws ConfigError for fewer than two
// runs, duplicate (policy, density) pairs or policies covering different
// densities.
Comparison Compare(std::span<const Summary> runs);

void WriteSummaryCsvHeader(std::ostream& out);
void WriteSummaryCsvRow(std::ostream& out, const Summary& s);
void WriteCdfCsvHeader(std::ostream& out);
void WriteCdfCsvRows(std::ostream& out, const std::string& policy, double density,
                     std::span<const CdfPoint> cdf);
void WriteComparisonCsv(std::ostream& out, const Comparison& cmp);

template <typename Pred>
std::vector<Micros> SortedLatencies(const RunMetrics& metrics, Pred keep) {
  std::vector<Micros> out;
  for (const LatencySample& s : metrics.latency_samples) {
    if (keep(s.function)) out.push_back(s.latency);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lagsim

#endif  // LAGSIM_METRICS_H_
