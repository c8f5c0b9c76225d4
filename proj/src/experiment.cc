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

#include "lagsim/experiment.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace lagsim {

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

constexpr char kStaticLabel[] = "LAGS-static";

// Creates one task group per function and returns them in population order.
std::vector<GroupId> BuildHierarchy(Engine& engine, const Scenario& s,
                                    const std::vector<FunctionSpec>& functions) {
  const WorkloadConfig& w = s.workload;
  std::vector<GroupId> groups;
  groups.reserve(functions.size());
  engine.AddGroup(kRootGroup, "system.slice");
  engine.AddGroup(kRootGroup, "user.slice");
  if (w.hierarchy == HierarchyKind::kFlat) {
    const GroupId faas = engine.AddGroup(kRootGroup, "faas.slice");
    for (const FunctionSpec& f : functions) {
      groups.push_back(engine.AddGroup(faas, "func-" + std::to_string(f.id),
                                       w.flag_functions && f.flagged));
    }
  } else {
    const GroupId pods = engine.AddGroup(kRootGroup, "kubepods");
    const GroupId burstable = engine.AddGroup(pods, "burstable");
    for (const FunctionSpec& f : functions) {
      const GroupId pod = engine.AddGroup(burstable, "pod-" + std::to_string(f.id),
                                          w.flag_functions && f.flagged);
      engine.AddGroup(pod, "queue-proxy");
      groups.push_back(engine.AddGroup(pod, "user-container"));
    }
  }
  if (w.static_rt_bands > 0) {
    for (size_t i = 0; i < functions.size(); ++i) {
      if (functions[i].demand_band <= w.static_rt_bands) engine.SetRealTime(groups[i]);
    }
  }
  return groups;
}

}  // namespace

std::string_view WorkloadKindName(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::kSteady:
      return "steady";
    case WorkloadKind::kAzure:
      return "azure";
    case WorkloadKind::kRandom:
      return "random";
    case WorkloadKind::kReplay:
      return "replay";
  }
  return "?";
}

WorkloadKind ParseWorkloadKind(std::string_view name) {
  const std::string n = Lower(name);
  if (n == "steady") return WorkloadKind::kSteady;
  if (n == "azure") return WorkloadKind::kAzure;
  if (n == "random") return WorkloadKind::kRandom;
  if (n == "replay") return WorkloadKind::kReplay;
  throw ConfigError("workload.kind: unknown kind '" + std::string(name) + "'");
}

std::string_view HierarchyKindName(HierarchyKind kind) {
  return kind == HierarchyKind::kFlat ? "flat" : "knative";
}

HierarchyKind ParseHierarchyKind(std::string_view name) {
  const std::string n = Lower(name);
  if (n == "flat") return HierarchyKind::kFlat;
  if (n == "knative") return HierarchyKind::kKnative;
  throw ConfigError("workload.hierarchy: unknown hierarchy '" + std::string(name) + "'");
}

ServiceModel DefaultAzureService() {
  return ServiceModel::Mix({{0.7, 150}, {0.3, 500}});
}

ServiceModel DefaultSteadyService() { return ServiceModel::Fixed(100'000); }

ServiceModel DefaultService(WorkloadKind kind) {
  return kind == WorkloadKind::kSteady ? DefaultSteadyService() : DefaultAzureService();
}

ServiceModel WorkloadConfig::ResolvedService() const {
  return service ? *service : DefaultService(kind);
}

void WorkloadConfig::Validate() const {
  if (n_functions < 0) throw ConfigError("workload.n_functions: must be >= 0");
  if (n_functions == 0 && !(density >= 1.0)) {
    throw ConfigError("workload.density: must be >= 1");
  }
  try {
    ResolvedService().Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("workload.") + e.what());
  }
  if (!(anchor_density > 0.0)) throw ConfigError("workload.anchor_density: must be > 0");
  if (burst.cv < 0.0) throw ConfigError("workload.burst.cv: must be >= 0");
  if (burst.cv > 0.0 && burst.segment_us <= 0) {
    throw ConfigError("workload.burst.segment_us: must be > 0");
  }
  if (!(random_max_rps >= 0.0)) throw ConfigError("workload.random_max_rps: must be >= 0");
  if (steady.initial_concurrency < 1) {
    throw ConfigError("workload.steady.initial_concurrency: must be >= 1");
  }
  if (steady.max_concurrency < steady.initial_concurrency) {
    throw ConfigError("workload.steady.max_concurrency: must be >= initial_concurrency");
  }
  if (steady.control_interval_us <= 0) {
    throw ConfigError("workload.steady.control_interval_us: must be > 0");
  }
  if (steady.target_latency_us <= 0) {
    throw ConfigError("workload.steady.target_latency_us: must be > 0");
  }
  if (kind == WorkloadKind::kReplay && trace_path.empty()) {
    throw ConfigError("workload.trace: required for replay");
  }
  if (static_rt_bands < 0 || static_rt_bands > kDemandBands) {
    throw ConfigError("workload.static_rt_bands: must be in [0, 10]");
  }
  if (measure_from_us < -1) throw ConfigError("workload.measure_from_us: must be >= -1");
  if (latency_target_us <= 0) throw ConfigError("workload.latency_target_us: must be > 0");
}

void Scenario::Validate() const {
  run.Validate();
  workload.Validate();
  if (MeasureFrom() >= run.horizon_us) {
    throw ConfigError("workload.measure_from_us: must be before the horizon");
  }
}

int Scenario::FunctionCount() const {
  if (workload.n_functions > 0) return workload.n_functions;
  return std::max(1, static_cast<int>(std::lround(workload.density * run.cores)));
}

Micros Scenario::MeasureFrom() const {
  if (workload.measure_from_us >= 0) return workload.measure_from_us;
  return workload.kind == WorkloadKind::kSteady ? workload.steady.warmup_us : 0;
}

std::string Scenario::Label() const {
  if (workload.static_rt_bands > 0) return kStaticLabel;
  return std::string(PolicyName(run.policy.kind));
}

Scenario WithPolicy(Scenario scenario, std::string_view label) {
  if (Lower(label) == Lower(kStaticLabel)) {
    scenario.run.policy.kind = PolicyKind::kCfs;
    if (scenario.workload.static_rt_bands == 0) scenario.workload.static_rt_bands = 1;
    return scenario;
  }
  scenario.run.policy.kind = ParsePolicyKind(label);
  scenario.workload.static_rt_bands = 0;
  return scenario;
}

std::vector<FunctionSpec> BuildPopulation(const Scenario& s) {
  const WorkloadConfig& w = s.workload;
  const ServiceModel service = w.ResolvedService();
  const BandProfile profile =
      w.band_profile_path.empty()
          ? BandProfile::Default(service.MeanCpuUs(), w.anchor_density)
          : BandProfile::LoadCsv(w.band_profile_path);
  std::vector<FunctionSpec> fs = SynthPopulation(s.FunctionCount(), profile, s.run.seed, service);
  if (w.kind == WorkloadKind::kRandom) fs = WithRandomRates(fs, w.random_max_rps, s.run.seed);
  return fs;
}

ScenarioResult RunScenario(const Scenario& scenario, bool record_schedule) {
  scenario.Validate();
  return RunScenarioOn(scenario, BuildPopulation(scenario), record_schedule);
}

ScenarioResult RunScenarioOn(const Scenario& s, std::vector<FunctionSpec> functions,
                             bool record_schedule) {
  s.Validate();
  Engine engine(s.run);
  engine.set_record_schedule(record_schedule);
  engine.set_measure_from(s.MeasureFrom());
  engine.set_latency_target(s.workload.latency_target_us);
  const std::vector<GroupId> groups = BuildHierarchy(engine, s, functions);

  RunMetrics metrics;
  switch (s.workload.kind) {
    case WorkloadKind::kSteady: {
      SteadySource src(functions, groups, s.run.seed, s.workload.steady);
      metrics = engine.Run(src);
      break;
    }
    case WorkloadKind::kAzure:
    case WorkloadKind::kRandom: {
      const BurstParams burst =
          s.workload.kind == WorkloadKind::kAzure ? s.workload.burst : BurstParams{0, 0.0};
      PoissonSource src(functions, groups, s.run.horizon_us, s.run.seed, burst);
      metrics = engine.Run(src);
      break;
    }
    case WorkloadKind::kReplay: {
      std::vector<TraceEvent> events = LoadTraceCsv(s.workload.trace_path);
      // Keep events of functions on this node, renumbered to positions.
      std::map<FunctionId, FunctionId> position;
      for (size_t i = 0; i < functions.size(); ++i) {
        position[functions[i].id] = static_cast<FunctionId>(i);
      }
      std::vector<TraceEvent> local;
      for (const TraceEvent& e : events) {
        auto it = position.find(e.function);
        if (it == position.end()) {
          if (e.function >= static_cast<FunctionId>(s.FunctionCount())) {
            throw ConfigError("trace: function_id " + std::to_string(e.function) +
                              " outside the population");
          }
          continue;
        }
        if (e.timestamp_us < s.run.horizon_us) local.push_back({it->second, e.timestamp_us});
      }
      std::vector<FunctionSpec> renumbered = functions;
      for (size_t i = 0; i < renumbered.size(); ++i) {
        renumbered[i].id = static_cast<FunctionId>(i);
      }
      ReplaySource src(local, renumbered, groups, s.run.seed);
      metrics = engine.Run(src);
      for (LatencySample& l : metrics.latency_samples) l.function = functions[l.function].id;
      break;
    }
  }

  ScenarioResult r;
  r.label = s.Label();
  const double density = s.workload.n_functions > 0
                             ? static_cast<double>(functions.size()) / s.run.cores
                             : s.workload.density;
  r.summary = Summarize(metrics, r.label, density, s.run.seed);
  r.cdf = LatencyCdf(metrics);
  r.metrics = std::move(metrics);
  r.functions = std::move(functions);
  if (record_schedule) r.schedule = engine.schedule();
  return r;
}

std::vector<Micros> BandLatencies(const ScenarioResult& result, int min_band, int max_band) {
  std::map<FunctionId, int> band;
  for (const FunctionSpec& f : result.functions) band[f.id] = f.demand_band;
  return SortedLatencies(result.metrics, [&](FunctionId f) {
    auto it = band.find(f);
    return it != band.end() && it->second >= min_band && it->second <= max_band;
  });
}

bool SweepOutcome::ok() const {
  return std::all_of(errors.begin(), errors.end(),
                     [](const std::string& e) { return e.empty(); });
}

SweepOutcome RunPoints(const Scenario& base, std::vector<SweepPoint> points, int parallel) {
  if (parallel < 1) throw ConfigError("parallel: must be >= 1");
  SweepOutcome out;
  out.points = std::move(points);
  out.results.resize(out.points.size());
  out.errors.resize(out.points.size());
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    while (!failed.load()) {
      const size_t i = next.fetch_add(1);
      if (i >= out.points.size()) return;
      const SweepPoint& p = out.points[i];
      try {
        Scenario s = WithPolicy(base, p.policy);
        s.workload.n_functions = 0;
        s.workload.density = p.density;
        if (p.window_ticks > 0) s.run.load_credit_window_ticks = p.window_ticks;
        out.results[i] = RunScenario(s);
      } catch (const std::exception& e) {
        out.errors[i] = e.what();
        if (out.errors[i].empty()) out.errors[i] = "unknown error";
        failed.store(true);
      }
    }
  };
  const int n = std::min<int>(parallel, static_cast<int>(out.points.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  return out;
}

SweepOutcome Sweep(const Scenario& base, std::span<const double> densities,
                   std::span<const std::string> policies, int parallel) {
  if (densities.empty()) throw ConfigError("sweep.densities: must not be empty");
  if (policies.empty()) throw ConfigError("sweep.policies: must not be empty");
  std::vector<SweepPoint> points;
  for (double d : densities) {
    if (!(d >= 1.0)) throw ConfigError("sweep.densities: values must be >= 1");
    for (const std::string& p : policies) {
      WithPolicy(base, p);  // validates the name up front
      points.push_back({d, p, 0});
    }
  }
  return RunPoints(base, std::move(points), parallel);
}

SweepOutcome WindowSweep(const Scenario& base, std::span<const uint32_t> windows,
                         int parallel) {
  if (windows.empty()) throw ConfigError("sweep.window_ticks: must not be empty");
  std::vector<SweepPoint> points;
  const double density = base.workload.n_functions > 0
                             ? static_cast<double>(base.FunctionCount()) / base.run.cores
                             : base.workload.density;
  for (uint32_t w : windows) {
    if (w == 0) throw ConfigError("sweep.window_ticks: values must be >= 1");
    points.push_back({density, "LAGS", w});
  }
  return RunPoints(base, std::move(points), parallel);
}

void ConsolidationParams::Validate() const {
  if (total_functions < 1) throw ConfigError("consolidate.total_functions: must be >= 1");
  if (min_nodes < 1) throw ConfigError("consolidate.min_nodes: must be >= 1");
  if (max_nodes < min_nodes) throw ConfigError("consolidate.max_nodes: must be >= min_nodes");
  if (max_nodes > total_functions) {
    throw ConfigError("consolidate.max_nodes: node count exceeds function count");
  }
  if (policies.empty()) throw ConfigError("consolidate.policies: must not be empty");
}

ConsolidationResult Consolidate(const Scenario& node, const ConsolidationParams& params,
                                int parallel) {
  params.Validate();
  if (parallel < 1) throw ConfigError("parallel: must be >= 1");
  Scenario cluster = node;
  cluster.workload.n_functions = params.total_functions;
  cluster.Validate();
  const std::vector<FunctionSpec> population = BuildPopulation(cluster);

  struct Job {
    size_t policy;
    int nodes;
    int node;
  };
  std::vector<Job> jobs;
  for (size_t p = 0; p < params.policies.size(); ++p) {
    WithPolicy(node, params.policies[p]);
    for (int k = params.min_nodes; k <= params.max_nodes; ++k) {
      for (int i = 0; i < k; ++i) jobs.push_back({p, k, i});
    }
  }
  std::vector<std::optional<ScenarioResult>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      try {
        Scenario s = WithPolicy(cluster, params.policies[job.policy]);
        std::vector<FunctionSpec> share;
        for (size_t f = static_cast<size_t>(job.node); f < population.size();
             f += static_cast<size_t>(job.nodes)) {
          share.push_back(population[f]);
        }
        s.workload.n_functions = static_cast<int>(share.size());
        results[j] = RunScenarioOn(s, std::move(share));
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
  };
  const int n = std::min<int>(parallel, static_cast<int>(jobs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  for (size_t j = 0; j < jobs.size(); ++j) {
    if (!results[j]) throw SimError("consolidate: node run failed: " + errors[j]);
  }

  ConsolidationResult out;
  out.policies = params.policies;
  size_t j = 0;
  for (size_t p = 0; p < params.policies.size(); ++p) {
    const std::string& label = params.policies[p];
    out.min_nodes[label] = std::nullopt;
    for (int k = params.min_nodes; k <= params.max_nodes; ++k) {
      std::vector<Micros> pooled;
      double busy = 0.0;
      double overhead = 0.0;
      double capacity = 0.0;
      double throughput = 0.0;
      for (int i = 0; i < k; ++i, ++j) {
        const ScenarioResult& r = *results[j];
        for (const LatencySample& l : r.metrics.latency_samples) pooled.push_back(l.latency);
        busy += static_cast<double>(r.metrics.TotalBusy());
        overhead += static_cast<double>(r.metrics.TotalOverhead());
        capacity += static_cast<double>(r.metrics.cores()) * r.metrics.horizon;
        throughput += r.summary.throughput_rps;
      }
      std::sort(pooled.begin(), pooled.end());
      ConsolidationRow row;
      row.policy = label;
      row.nodes = k;
      row.p95_us = Percentile(pooled, 0.95);
      row.median_us = Percentile(pooled, 0.50);
      row.throughput_rps = throughput;
      row.util_effective_pct = capacity > 0 ? 100.0 * busy / capacity : 0.0;
      row.util_perceived_pct = capacity > 0 ? 100.0 * (busy + overhead) / capacity : 0.0;
      row.meets_target = !pooled.empty() &&
                         row.p95_us <= static_cast<double>(node.workload.latency_target_us);
      if (row.meets_target && !out.min_nodes[label]) out.min_nodes[label] = k;
      out.rows.push_back(row);
    }
  }
  return out;
}

void WriteConsolidationCsv(std::ostream& out, const ConsolidationResult& result) {
  out << "policy,nodes,median_us,p95_us,throughput_rps,util_effective_pct,"
         "util_perceived_pct,meets_target\n";
  char buf[256];
  for (const ConsolidationRow& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.0f,%.0f,%.3f,%.4f,%.4f,%d\n", r.policy.c_str(),
                  r.nodes, r.median_us, r.p95_us, r.throughput_rps, r.util_effective_pct,
                  r.util_perceived_pct, r.meets_target ? 1 : 0);
    out << buf;
  }
}

}  // namespace lagsim
