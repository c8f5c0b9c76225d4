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

#include "lagsim/metrics.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

namespace lagsim {

namespace {

std::string Fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string Compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

Micros Sum(const std::vector<Micros>& v) {
  return std::accumulate(v.begin(), v.end(), Micros{0});
}

double RelativePct(double value, double base) {
  if (base == 0.0) return 0.0;
  return 100.0 * (value - base) / base;
}

}  // namespace

Micros RunMetrics::TotalBusy() const { return Sum(busy); }
Micros RunMetrics::TotalIdle() const { return Sum(idle); }
Micros RunMetrics::TotalOverhead() const { return Sum(overhead); }

double Percentile(std::span<const Micros> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double n = static_cast<double>(sorted.size());
  size_t rank = static_cast<size_t>(std::ceil(p * n));
  rank = std::clamp<size_t>(rank, 1, sorted.size());
  return static_cast<double>(sorted[rank - 1]);
}

std::vector<Micros> SortedLatencies(const RunMetrics& metrics) {
  return SortedLatencies(metrics, [](FunctionId) { return true; });
}

Summary Summarize(const RunMetrics& m, const std::string& policy, double density,
                  uint64_t seed) {
  Summary s;
  s.policy = policy;
  s.density = density;
  s.cores = m.cores();
  s.seed = seed;
  const std::vector<Micros> lat = SortedLatencies(m);
  s.completions = lat.size();
  s.median_us = Percentile(lat, 0.50);
  s.p95_us = Percentile(lat, 0.95);
  s.p99_us = Percentile(lat, 0.99);

  const double measured_s =
      static_cast<double>(m.horizon - m.measure_from) / kMicrosPerSecond;
  s.throughput_rps =
      measured_s > 0 ? static_cast<double>(m.completions_within_target) / measured_s : 0.0;
  s.zero_throughput = m.completions_within_target == 0;

  const double capacity = static_cast<double>(m.cores()) * static_cast<double>(m.horizon);
  const double busy = static_cast<double>(m.TotalBusy());
  const double overhead = static_cast<double>(m.TotalOverhead());
  if (capacity > 0) {
    s.overhead_pct = 100.0 * overhead / capacity;
    s.util_effective_pct = 100.0 * busy / capacity;
    s.util_perceived_pct = 100.0 * (busy + overhead) / capacity;
  }
  if (m.switches == 0) {
    s.no_switches = true;
    s.mean_switch_cost_us = 0.0;
  } else {
    s.mean_switch_cost_us =
        static_cast<double>(m.switch_cost_total) / static_cast<double>(m.switches);
  }
  const double horizon_s = static_cast<double>(m.horizon) / kMicrosPerSecond;
  s.switch_rate_hz = horizon_s > 0 ? static_cast<double>(m.switches) / horizon_s : 0.0;
  s.rq_wait_s = static_cast<double>(m.rq_wait_total) / kMicrosPerSecond;
  return s;
}

std::vector<CdfPoint> LatencyCdf(const RunMetrics& metrics, size_t max_points) {
  const std::vector<Micros> lat = SortedLatencies(metrics);
  std::vector<CdfPoint> out;
  const size_t n = lat.size();
  if (n == 0 || max_points == 0) return out;
  const size_t points = std::min(n, max_points);
  out.reserve(points);
  for (size_t k = 1; k <= points; ++k) {
    // Rank of the k-th point, 1-based; the last one is n.
    const size_t rank = (k * n + points - 1) / points;
    out.push_back({static_cast<double>(lat[rank - 1]),
                   static_cast<double>(rank) / static_cast<double>(n)});
  }
  return out;
}

Comparison Compare(std::span<const Summary> runs) {
  if (runs.size() < 2) throw ConfigError("compare: need at least two runs");
  Comparison cmp;
  std::map<std::string, std::map<double, const Summary*>> by_policy;
  for (const Summary& s : runs) {
    if (!by_policy.count(s.policy)) cmp.policies.push_back(s.policy);
    auto& row = by_policy[s.policy];
    if (!row.emplace(s.density, &s).second) {
      throw ConfigError("compare: duplicate run for policy " + s.policy +
                        " at density " + Compact(s.density));
    }
  }
  std::set<double> densities;
  for (const auto& [policy, row] : by_policy) {
    for (const auto& [d, s] : row) densities.insert(d);
  }
  for (const auto& [policy, row] : by_policy) {
    if (row.size() != densities.size()) {
      throw ConfigError("compare: mismatched sweep axes for policy " + policy);
    }
  }
  cmp.densities.assign(densities.begin(), densities.end());
  const auto& base = by_policy[cmp.policies.front()];
  for (const std::string& policy : cmp.policies) {
    const auto& row = by_policy[policy];
    double peak = 0.0;
    for (const auto& [d, s] : row) peak = std::max(peak, s->throughput_rps);
    for (const auto& [d, s] : row) {
      ComparisonRow r;
      r.policy = policy;
      r.density = d;
      r.summary = *s;
      r.throughput_vs_peak_pct = RelativePct(s->throughput_rps, peak);
      const Summary& b = *base.at(d);
      r.p95_delta_pct = RelativePct(s->p95_us, b.p95_us);
      r.switch_cost_delta_pct = RelativePct(s->mean_switch_cost_us, b.mean_switch_cost_us);
      r.overhead_delta_pct = RelativePct(s->overhead_pct, b.overhead_pct);
      cmp.rows.push_back(r);
    }
    const double last = row.rbegin()->second->throughput_rps;
    cmp.degradation_pct.push_back(peak > 0 ? 100.0 * (peak - last) / peak : 0.0);
  }
  return cmp;
}

void WriteSummaryCsvHeader(std::ostream& out) {
  out << "policy,density,cores,median_us,p95_us,p99_us,throughput_rps,"
         "overhead_pct,mean_switch_cost_us,switch_rate_hz,rq_wait_s,"
         "util_effective_pct,util_perceived_pct,seed\n";
}

void WriteSummaryCsvRow(std::ostream& out, const Summary& s) {
  out << s.policy << ',' << Compact(s.density) << ',' << s.cores << ','
      << Fixed(s.median_us, 0) << ',' << Fixed(s.p95_us, 0) << ','
      << Fixed(s.p99_us, 0) << ',' << Fixed(s.throughput_rps, 3) << ','
      << Fixed(s.overhead_pct, 4) << ',' << Fixed(s.mean_switch_cost_us, 3) << ','
      << Fixed(s.switch_rate_hz, 2) << ',' << Fixed(s.rq_wait_s, 4) << ','
      << Fixed(s.util_effective_pct, 4) << ',' << Fixed(s.util_perceived_pct, 4)
      << ',' << s.seed << '\n';
}

void WriteCdfCsvHeader(std::ostream& out) {
  out << "policy,density,latency_us,cum_prob\n";
}

void WriteCdfCsvRows(std::ostream& out, const std::string& policy, double density,
                     std::span<const CdfPoint> cdf) {
  const std::string d = Compact(density);
  for (const CdfPoint& p : cdf) {
    out << policy << ',' << d << ',' << Fixed(p.latency_us, 0) << ','
        << Fixed(p.cum_prob, 6) << '\n';
  }
}

void WriteComparisonCsv(std::ostream& out, const Comparison& cmp) {
  out << "policy,density,throughput_rps,throughput_vs_peak_pct,degradation_pct,"
         "median_us,p95_us,p95_delta_pct,mean_switch_cost_us,"
         "switch_cost_delta_pct,overhead_pct,overhead_delta_pct,rq_wait_s\n";
  for (const ComparisonRow& r : cmp.rows) {
    size_t pi = 0;
    while (cmp.policies[pi] != r.policy) ++pi;
    out << r.policy << ',' << Compact(r.density) << ','
        << Fixed(r.summary.throughput_rps, 3) << ','
        << Fixed(r.throughput_vs_peak_pct, 3) << ','
        << Fixed(cmp.degradation_pct[pi], 3) << ','
        << Fixed(r.summary.median_us, 0) << ',' << Fixed(r.summary.p95_us, 0) << ','
        << Fixed(r.p95_delta_pct, 3) << ','
        << Fixed(r.summary.mean_switch_cost_us, 3) << ','
        << Fixed(r.switch_cost_delta_pct, 3) << ','
        << Fixed(r.summary.overhead_pct, 4) << ','
        << Fixed(r.overhead_delta_pct, 3) << ',' << Fixed(r.summary.rq_wait_s, 4)
        << '\n';
  }
}

}  // namespace lagsim
