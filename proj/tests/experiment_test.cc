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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lagsim/experiment.h"

namespace lagsim {
namespace {

constexpr Micros kSec = kMicrosPerSecond;

Scenario Small(double density = 2) {
  Scenario s;
  s.run.cores = 2;
  s.run.horizon_us = 2 * kSec;
  s.workload.density = density;
  return s;
}

TEST_CASE("names round trip") {
  for (WorkloadKind k : {WorkloadKind::kSteady, WorkloadKind::kAzure, WorkloadKind::kRandom,
                         WorkloadKind::kReplay}) {
    CHECK(ParseWorkloadKind(WorkloadKindName(k)) == k);
  }
  CHECK(ParseHierarchyKind("Knative") == HierarchyKind::kKnative);
  CHECK_THROWS_AS(ParseWorkloadKind("bursty"), ConfigError);
  CHECK_THROWS_AS(ParseHierarchyKind("deep"), ConfigError);
}

TEST_CASE("policy labels") {
  const Scenario s = Small();
  CHECK(WithPolicy(s, "lags").Label() == "LAGS");
  const Scenario st = WithPolicy(s, "LAGS-static");
  CHECK(st.Label() == "LAGS-static");
  CHECK(st.run.policy.kind == PolicyKind::kCfs);
  CHECK(st.workload.static_rt_bands == 1);
  CHECK(WithPolicy(st, "CFS").workload.static_rt_bands == 0);
  CHECK_THROWS_AS(WithPolicy(s, "SRPT"), ConfigError);
}

TEST_CASE("function count and measurement start") {
  Scenario s = Small(9);
  s.run.cores = 12;
  CHECK(s.FunctionCount() == 108);
  s.workload.density = 100.0 / 12;
  CHECK(s.FunctionCount() == 100);
  s.workload.n_functions = 7;
  CHECK(s.FunctionCount() == 7);
  CHECK(s.MeasureFrom() == 0);
  s.workload.kind = WorkloadKind::kSteady;
  CHECK(s.MeasureFrom() == s.workload.steady.warmup_us);
  s.workload.measure_from_us = 3;
  CHECK(s.MeasureFrom() == 3);
}

TEST_CASE("switch cost reflects the hierarchy depth") {
  Scenario flat = Small(1);
  flat.workload.hierarchy = HierarchyKind::kFlat;
  Scenario knative = flat;
  knative.workload.hierarchy = HierarchyKind::kKnative;
  const ScenarioResult a = RunScenario(flat);
  const ScenarioResult b = RunScenario(knative);
  // Light load: almost every switch is from idle, costing 2 + 3 * descent.
  CHECK(a.summary.mean_switch_cost_us == doctest::Approx(8.0).epsilon(0.1));
  CHECK(b.summary.mean_switch_cost_us == doctest::Approx(14.0).epsilon(0.1));
  CHECK(a.metrics.switches_by_reinsert.size() >= 1);
}

TEST_CASE("static hybrid runs the lowest band in the real-time class") {
  Scenario s = WithPolicy(Small(5), "LAGS-static");
  const ScenarioResult r = RunScenario(s);
  CHECK(r.metrics.rt_busy > 0);
  const ScenarioResult cfs = RunScenario(WithPolicy(s, "CFS"));
  CHECK(cfs.metrics.rt_busy == 0);
  // Band 1 is the least loaded: its share of real-time CPU is small.
  CHECK(static_cast<double>(r.metrics.rt_busy) <
        0.05 * static_cast<double>(r.metrics.TotalBusy()));
  CHECK(!BandLatencies(r, 1, 1).empty());
  CHECK(BandLatencies(r, 1, 10).size() == r.metrics.latency_samples.size());
}

TEST_CASE("sweep runs the cross product") {
  const std::vector<double> d{1, 2};
  const std::vector<std::string> p{"CFS", "LAGS", "LAGS-static"};
  const SweepOutcome o = Sweep(Small(), d, p, 2);
  REQUIRE(o.ok());
  REQUIRE(o.results.size() == 6);
  CHECK(o.results[0]->summary.policy == "CFS");
  CHECK(o.results[5]->summary.policy == "LAGS-static");
  CHECK(o.results[5]->summary.density == 2);
  // Parallel and serial sweeps agree.
  const SweepOutcome serial = Sweep(Small(), d, p, 1);
  for (size_t i = 0; i < 6; ++i) {
    CHECK(serial.results[i]->summary.p95_us == o.results[i]->summary.p95_us);
    CHECK(serial.results[i]->metrics.switches == o.results[i]->metrics.switches);
  }
  const std::vector<double> none;
  CHECK_THROWS_AS(Sweep(Small(), none, p, 1), ConfigError);
  const std::vector<double> low{0.5};
  CHECK_THROWS_AS(Sweep(Small(), low, p, 1), ConfigError);
}

TEST_CASE("a failing member leaves a partial outcome") {
  Scenario s = Small();
  s.workload.kind = WorkloadKind::kReplay;
  s.workload.trace_path = "/nonexistent/trace.csv";
  const std::vector<double> d{1, 2};
  const std::vector<std::string> p{"CFS"};
  const SweepOutcome o = Sweep(s, d, p, 1);
  CHECK_FALSE(o.ok());
  CHECK(o.errors[0].find("cannot open") != std::string::npos);
  CHECK_FALSE(o.results[0].has_value());
}

TEST_CASE("window sweep") {
  const std::vector<uint32_t> w{1, 100, 1000};
  const SweepOutcome o = WindowSweep(Small(), w, 1);
  REQUIRE(o.ok());
  CHECK(o.points[2].window_ticks == 1000);
  CHECK(o.results[0]->label == "LAGS");
  const std::vector<uint32_t> zero{0};
  CHECK_THROWS_AS(WindowSweep(Small(), zero, 1), ConfigError);
}

TEST_CASE("replay of a trace file") {
  const std::string path = "experiment_test_trace.csv";
  {
    std::ofstream f(path);
    f << "function_id,timestamp_us\n0,1000\n1,2000\n0,5000\n";
  }
  Scenario s = Small();
  s.workload.kind = WorkloadKind::kReplay;
  s.workload.trace_path = path;
  s.workload.n_functions = 2;
  const ScenarioResult r = RunScenario(s);
  REQUIRE(r.metrics.latency_samples.size() == 3);
  std::vector<Micros> arrivals;
  for (const LatencySample& l : r.metrics.latency_samples) arrivals.push_back(l.arrival);
  std::sort(arrivals.begin(), arrivals.end());
  CHECK(arrivals == std::vector<Micros>{1000, 2000, 5000});
  s.workload.n_functions = 1;
  CHECK_THROWS_AS(RunScenario(s), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("consolidation on a trivially light workload") {
  Scenario node = Small();
  node.workload.kind = WorkloadKind::kRandom;
  ConsolidationParams p;
  p.total_functions = 4;
  p.min_nodes = 1;
  p.max_nodes = 2;
  const ConsolidationResult r = Consolidate(node, p, 1);
  CHECK(r.rows.size() == 4);
  CHECK(r.min_nodes.at("CFS") == 1);
  CHECK(r.min_nodes.at("LAGS") == 1);
  for (const ConsolidationRow& row : r.rows) {
    CHECK(row.meets_target);
    CHECK(row.util_perceived_pct >= row.util_effective_pct);
  }
  std::ostringstream csv;
  WriteConsolidationCsv(csv, r);
  CHECK(csv.str().rfind("policy,nodes,", 0) == 0);

  p.max_nodes = 5;
  CHECK_THROWS_AS(Consolidate(node, p, 1), ConfigError);
}

TEST_CASE("consolidation partitions round robin") {
  Scenario node = Small();
  ConsolidationParams p;
  p.total_functions = 8;
  p.min_nodes = 2;
  p.max_nodes = 2;
  p.policies = {"CFS"};
  const ConsolidationResult r = Consolidate(node, p, 1);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].nodes == 2);
  CHECK(r.rows[0].throughput_rps > 0);
}

}  // namespace
}  // namespace lagsim
