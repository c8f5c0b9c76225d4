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

// Python bindings. Configs and results cross the boundary as JSON text; the
// lagsim package converts them to and from dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>
#include <vector>

#include "lagsim/config.h"
#include "lagsim/experiment.h"

namespace py = pybind11;

namespace lagsim {
namespace {

nlohmann::json SummaryJson(const Summary& s) {
  return {{"policy", s.policy},
          {"density", s.density},
          {"cores", s.cores},
          {"median_us", s.median_us},
          {"p95_us", s.p95_us},
          {"p99_us", s.p99_us},
          {"throughput_rps", s.throughput_rps},
          {"overhead_pct", s.overhead_pct},
          {"mean_switch_cost_us", s.mean_switch_cost_us},
          {"switch_rate_hz", s.switch_rate_hz},
          {"rq_wait_s", s.rq_wait_s},
          {"util_effective_pct", s.util_effective_pct},
          {"util_perceived_pct", s.util_perceived_pct},
          {"seed", s.seed},
          {"completions", s.completions},
          {"zero_throughput", s.zero_throughput},
          {"no_switches", s.no_switches}};
}

nlohmann::json ResultJson(const ScenarioResult& r) {
  nlohmann::json cdf = nlohmann::json::array();
  for (const CdfPoint& p : r.cdf) cdf.push_back({p.latency_us, p.cum_prob});
  return {{"label", r.label}, {"summary", SummaryJson(r.summary)}, {"cdf", cdf}};
}

std::string Run(const std::string& config_text) {
  const ExperimentConfig c = ParseConfigText(config_text);
  ScenarioResult r;
  {
    py::gil_scoped_release release;
    r = RunScenario(c.scenario);
  }
  return ResultJson(r).dump();
}

std::string RunSweep(const std::string& config_text) {
  const ExperimentConfig c = ParseConfigText(config_text);
  SweepOutcome o;
  {
    py::gil_scoped_release release;
    o = c.sweep.window_ticks.empty()
            ? Sweep(c.scenario, c.sweep.densities, c.sweep.policies, c.sweep.parallel)
            : WindowSweep(c.scenario, c.sweep.window_ticks, c.sweep.parallel);
  }
  nlohmann::json out = nlohmann::json::array();
  for (size_t i = 0; i < o.points.size(); ++i) {
    nlohmann::json row = {{"density", o.points[i].density},
                          {"policy", o.points[i].policy},
                          {"window_ticks", o.points[i].window_ticks}};
    if (o.results[i]) {
      row["result"] = ResultJson(*o.results[i]);
    } else {
      row["error"] = o.errors[i];
    }
    out.push_back(row);
  }
  return out.dump();
}

std::string Resolve(const std::string& config_text) {
  return ToJson(ParseConfigText(config_text)).dump();
}

}  // namespace
}  // namespace lagsim

PYBIND11_MODULE(_lagsim, m) {
  m.doc() = "lagsim native core";
  py::register_exception<lagsim::ConfigError>(m, "ConfigError", PyExc_ValueError);
  m.attr("SCHEMA_VERSION") = lagsim::kSchemaVersion;
  m.def("run", &lagsim::Run, py::arg("config_json"));
  m.def("sweep", &lagsim::RunSweep, py::arg("config_json"));
  m.def("resolve", &lagsim::Resolve, py::arg("config_json"));
  m.def(
      "percentile",
      [](std::vector<lagsim::Micros> v, double p) {
        std::sort(v.begin(), v.end());
        return lagsim::Percentile(v, p);
      },
      py::arg("values"), py::arg("p"));
}
