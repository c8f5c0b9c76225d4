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

// Scenarios: a workload mapped onto a cgroup hierarchy and run under one
// policy, plus density/policy sweeps and the cluster consolidation estimate.

#ifndef LAGSIM_EXPERIMENT_H_
#define LAGSIM_EXPERIMENT_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lagsim/engine.h"
#include "lagsim/metrics.h"
#include "lagsim/workloads.h"

namespace lagsim {

enum class WorkloadKind { kSteady, kAzure, kRandom, kReplay };
enum class HierarchyKind { kFlat, kKnative };

std::string_view WorkloadKindName(WorkloadKind kind);
WorkloadKind ParseWorkloadKind(std::string_view name);
std::string_view HierarchyKindName(HierarchyKind kind);
HierarchyKind ParseHierarchyKind(std::string_view name);

// Per-request CPU demand of the trace-like workloads when none is given:
// short invocations, 70% at 150us and 30% at 500us.
ServiceModel DefaultAzureService();
// Closed-loop default: a CPU-bound 100ms request.
ServiceModel DefaultSteadyService();
ServiceModel DefaultService(WorkloadKind kind);

struct WorkloadConfig {
  WorkloadKind kind = WorkloadKind::kAzure;
  // Functions per core; ignored when n_functions > 0.
  double density = 9.0;
  int n_functions = 0;
  std::optional<ServiceModel> service;
  // Empty: BandProfile::Default over the service mean at anchor_density.
  std::string band_profile_path;
  double anchor_density = 9.0;
  BurstParams burst{5 * kMicrosPerSecond, 3.0};
  double random_max_rps = 5.0;
  SteadyParams steady;
  std::string trace_path;
  HierarchyKind hierarchy = HierarchyKind::kKnative;
  bool flag_functions = true;
  // Static hybrid: functions in demand bands <= this run in the RR class
  // while the policy stays CFS. 0 disables it.
  int static_rt_bands = 0;
  // Latencies of requests arriving earlier are ignored; -1 picks the steady
  // warmup for closed-loop workloads and 0 otherwise.
  Micros measure_from_us = -1;
  Micros latency_target_us = kDefaultLatencyTargetUs;

  void Validate() const;
  ServiceModel ResolvedService() const;
};

struct Scenario {
  RunConfig run;
  WorkloadConfig workload;

  void Validate() const;
  int FunctionCount() const;
  Micros MeasureFrom() const;
  // Policy name, or "LAGS-static" for the static hybrid.
  std::string Label() const;
};

// Applies a policy label: CFS, EEVDF, RR, LAGS or LAGS-static.
Scenario WithPolicy(Scenario scenario, std::string_view label);

struct ScenarioResult {
  std::string label;
  Summary summary;
  std::vector<CdfPoint> cdf;
  RunMetrics metrics;
  std::vector<FunctionSpec> functions;
  std::vector<DispatchRecord> schedule;
};

// The function population of a scenario, rates included.
std::vector<FunctionSpec> BuildPopulation(const Scenario& scenario);

// Runs the scenario over its own population.
ScenarioResult RunScenario(const Scenario& scenario, bool record_schedule = false);
// Runs the scenario over an explicit population (a node's share of a cluster).
ScenarioResult RunScenarioOn(const Scenario& scenario, std::vector<FunctionSpec> functions,
                             bool record_schedule = false);

// Sorted latencies of requests from functions in the given demand bands.
std::vector<Micros> BandLatencies(const ScenarioResult& result, int min_band, int max_band);

struct SweepPoint {
  double density = 0.0;
  std::string policy;
  uint32_t window_ticks = 0;
};

struct SweepOutcome {
  std::vector<SweepPoint> points;
  // One per point, in point order; empty for runs that failed.
  std::vector<std::optional<ScenarioResult>> results;
  std::vector<std::string> errors;
  bool ok() const;
};

// Independent runs over `parallel` worker threads.
SweepOutcome RunPoints(const Scenario& base, std::vector<SweepPoint> points, int parallel);
// Cross product density x policy. Throws ConfigError on empty axes or
// densities below 1.
SweepOutcome Sweep(const Scenario& base, std::span<const double> densities,
                   std::span<const std::string> policies, int parallel);
// LAGS over each Load Credit window at the base density.
SweepOutcome WindowSweep(const Scenario& base, std::span<const uint32_t> windows,
                         int parallel);

struct ConsolidationParams {
  // Functions of the whole cluster; the per-node scenario supplies the rest.
  int total_functions = 0;
  int min_nodes = 1;
  int max_nodes = 1;
  std::vector<std::string> policies{"CFS", "LAGS"};

  void Validate() const;
};

struct ConsolidationRow {
  std::string policy;
  int nodes = 0;
  double p95_us = 0.0;
  double median_us = 0.0;
  double throughput_rps = 0.0;
  double util_effective_pct = 0.0;
  double util_perceived_pct = 0.0;
  bool meets_target = false;
};

struct ConsolidationResult {
  std::vector<ConsolidationRow> rows;
  // Smallest node count whose cluster p95 meets the latency target.
  std::map<std::string, std::optional<int>> min_nodes;
  std::vector<std::string> policies;
};

// Round-robin partition of the population (function i on node i % nodes);
// each node is simulated independently and latencies are pooled.
ConsolidationResult Consolidate(const Scenario& node, const ConsolidationParams& params,
                                int parallel);

void WriteConsolidationCsv(std::ostream& out, const ConsolidationResult& result);

}  // namespace lagsim

#endif  // LAGSIM_EXPERIMENT_H_
