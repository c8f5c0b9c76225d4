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

// lagsim command-line tool: run, sweep, consolidate, ingest.
//
// Exit codes: 0 success, 1 usage or validation error, 2 runtime failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lagsim/config.h"
#include "lagsim/experiment.h"
#include "lagsim/metrics.h"
#include "lagsim/workloads.h"

namespace {

using lagsim::ConfigError;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Raised for I/O and simulation problems that are not the user's input.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<int> parallel;
  std::optional<std::string> policy;
  std::optional<std::string> density;
  std::optional<std::string> window_ticks;
  std::string trace;
};

void AddCommonFlags(CLI::App* cmd, Options* o, bool needs_out = true) {
  cmd->add_option("--config", o->config, "JSON config (or a manifest.json)");
  auto* out = cmd->add_option("--out", o->out, "output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", o->seed, "override run.seed");
  cmd->add_option("--parallel", o->parallel, "concurrent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--policy", o->policy, "policy name(s): CFS,EEVDF,RR,LAGS,LAGS-static");
  cmd->add_option("--density", o->density, "density value(s), comma separated");
  cmd->add_option("--window-ticks", o->window_ticks, "Load Credit window(s) in ticks");
}

lagsim::ExperimentConfig LoadBase(const Options& o) {
  lagsim::ExperimentConfig c;
  if (!o.config.empty()) c = lagsim::LoadConfig(o.config);
  if (o.seed) c.scenario.run.seed = *o.seed;
  if (o.parallel) c.sweep.parallel = *o.parallel;
  return c;
}

std::filesystem::path PrepareOut(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw RuntimeFailure("cannot write " + path.string());
  return f;
}

void WriteJson(const std::filesystem::path& path, const json& j) {
  std::ofstream f = OpenOut(path);
  f << j.dump(2) << '\n';
}

json Manifest(const std::string& command, const lagsim::ExperimentConfig& c) {
  return {{"tool", "lagsim"},
          {"command", command},
          {"seed", c.scenario.run.seed},
          {"config", lagsim::ToJson(c)}};
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

int CmdRun(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  lagsim::ExperimentConfig c = LoadBase(o);
  if (o.policy) {
    const std::vector<std::string> p = lagsim::ParseNameList(*o.policy, "--policy");
    if (p.size() != 1) throw ConfigError("--policy: run takes a single policy");
    c.scenario = lagsim::WithPolicy(c.scenario, p[0]);
  }
  if (o.density) {
    const std::vector<double> d = lagsim::ParseDoubleList(*o.density, "--density");
    if (d.size() != 1) throw ConfigError("--density: run takes a single density");
    c.scenario.workload.density = d[0];
    c.scenario.workload.n_functions = 0;
  }
  if (o.window_ticks) {
    const std::vector<uint32_t> w = lagsim::ParseUintList(*o.window_ticks, "--window-ticks");
    if (w.size() != 1) throw ConfigError("--window-ticks: run takes a single window");
    c.scenario.run.load_credit_window_ticks = w[0];
  }
  c.Validate();
  const std::filesystem::path out = PrepareOut(o.out);

  const lagsim::ScenarioResult r = lagsim::RunScenario(c.scenario);
  {
    std::ofstream f = OpenOut(out / "summary.csv");
    lagsim::WriteSummaryCsvHeader(f);
    lagsim::WriteSummaryCsvRow(f, r.summary);
  }
  {
    std::ofstream f = OpenOut(out / "cdf.csv");
    lagsim::WriteCdfCsvHeader(f);
    lagsim::WriteCdfCsvRows(f, r.label, r.summary.density, r.cdf);
  }
  json m = Manifest("run", c);
  m["label"] = r.label;
  m["outputs"] = {"summary.csv", "cdf.csv"};
  m["wall_time_s"] = Seconds(start);
  WriteJson(out / "manifest.json", m);
  std::printf("%s density=%g p95=%.0fus throughput=%.1frps overhead=%.2f%%\n",
              r.label.c_str(), r.summary.density, r.summary.p95_us,
              r.summary.throughput_rps, r.summary.overhead_pct);
  return kExitOk;
}

int CmdSweep(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  lagsim::ExperimentConfig c = LoadBase(o);
  if (o.policy) c.sweep.policies = lagsim::ParseNameList(*o.policy, "--policy");
  if (o.density) c.sweep.densities = lagsim::ParseDoubleList(*o.density, "--density");
  if (o.window_ticks) {
    c.sweep.window_ticks = lagsim::ParseUintList(*o.window_ticks, "--window-ticks");
  }
  c.Validate();
  const std::filesystem::path out = PrepareOut(o.out);

  const bool windows = !c.sweep.window_ticks.empty();
  const lagsim::SweepOutcome outcome =
      windows ? lagsim::WindowSweep(c.scenario, c.sweep.window_ticks, c.sweep.parallel)
              : lagsim::Sweep(c.scenario, c.sweep.densities, c.sweep.policies,
                              c.sweep.parallel);

  json m = Manifest("sweep", c);
  json runs = json::array();
  std::vector<lagsim::Summary> done;
  for (size_t i = 0; i < outcome.points.size(); ++i) {
    const lagsim::SweepPoint& p = outcome.points[i];
    json entry = {{"policy", p.policy}, {"density", p.density}};
    if (windows) entry["window_ticks"] = p.window_ticks;
    if (outcome.results[i]) {
      entry["status"] = "ok";
      done.push_back(outcome.results[i]->summary);
    } else if (!outcome.errors[i].empty()) {
      entry["status"] = "failed";
      entry["error"] = outcome.errors[i];
    } else {
      entry["status"] = "not run";
    }
    runs.push_back(entry);
  }
  m["runs"] = runs;

  {
    std::ofstream f = OpenOut(out / "summary.csv");
    lagsim::WriteSummaryCsvHeader(f);
    for (const lagsim::Summary& s : done) lagsim::WriteSummaryCsvRow(f, s);
  }
  if (!outcome.ok()) {
    m["status"] = "partial";
    m["outputs"] = {"summary.csv"};
    m["wall_time_s"] = Seconds(start);
    WriteJson(out / "manifest.json", m);
    for (const std::string& e : outcome.errors) {
      if (!e.empty()) std::fprintf(stderr, "lagsim: sweep run failed: %s\n", e.c_str());
    }
    return kExitRuntime;
  }

  std::vector<std::string> outputs{"summary.csv", "cdf.csv"};
  {
    std::ofstream f = OpenOut(out / "cdf.csv");
    lagsim::WriteCdfCsvHeader(f);
    for (size_t i = 0; i < outcome.results.size(); ++i) {
      const lagsim::ScenarioResult& r = *outcome.results[i];
      const std::string label =
          windows ? r.label + "-w" + std::to_string(outcome.points[i].window_ticks) : r.label;
      lagsim::WriteCdfCsvRows(f, label, r.summary.density, r.cdf);
    }
  }
  if (windows) {
    std::ofstream f = OpenOut(out / "windows.csv");
    f << "window_ticks,median_us,p95_us,p99_us,throughput_rps,overhead_pct\n";
    for (size_t i = 0; i < outcome.points.size(); ++i) {
      const lagsim::Summary& s = outcome.results[i]->summary;
      f << outcome.points[i].window_ticks << ',' << s.median_us << ',' << s.p95_us << ','
        << s.p99_us << ',' << s.throughput_rps << ',' << s.overhead_pct << '\n';
    }
    outputs.push_back("windows.csv");
  } else if (done.size() >= 2) {
    const lagsim::Comparison cmp = lagsim::Compare(done);
    std::ofstream f = OpenOut(out / "comparison.csv");
    lagsim::WriteComparisonCsv(f, cmp);
    outputs.push_back("comparison.csv");
    for (size_t p = 0; p < cmp.policies.size(); ++p) {
      std::printf("%s: degradation beyond peak %.1f%%\n", cmp.policies[p].c_str(),
                  cmp.degradation_pct[p]);
    }
  }
  m["status"] = "ok";
  m["outputs"] = outputs;
  m["wall_time_s"] = Seconds(start);
  WriteJson(out / "manifest.json", m);
  std::printf("%zu runs written to %s\n", done.size(), o.out.c_str());
  return kExitOk;
}

int CmdConsolidate(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  lagsim::ExperimentConfig c = LoadBase(o);
  if (o.policy) c.consolidate.policies = lagsim::ParseNameList(*o.policy, "--policy");
  c.Validate();
  const std::filesystem::path out = PrepareOut(o.out);

  const lagsim::ConsolidationResult r =
      lagsim::Consolidate(c.scenario, c.consolidate, c.sweep.parallel);
  {
    std::ofstream f = OpenOut(out / "consolidation.csv");
    lagsim::WriteConsolidationCsv(f, r);
  }
  json m = Manifest("consolidate", c);
  json mins = json::object();
  for (const std::string& p : r.policies) {
    const std::optional<int>& k = r.min_nodes.at(p);
    mins[p] = k ? json(*k) : json(nullptr);
    if (k) {
      std::printf("%s: %d node(s) meet p95 <= %.0fus\n", p.c_str(), *k,
                  static_cast<double>(c.scenario.workload.latency_target_us));
    } else {
      std::printf("%s: no node count in [%d, %d] meets the target\n", p.c_str(),
                  c.consolidate.min_nodes, c.consolidate.max_nodes);
    }
  }
  m["min_nodes"] = mins;
  if (r.policies.size() >= 2) {
    const auto& base = r.min_nodes.at(r.policies[0]);
    const auto& other = r.min_nodes.at(r.policies[1]);
    if (base && other) {
      const double pct = 100.0 * (*base - *other) / *base;
      m["reduction_pct"] = pct;
      std::printf("%s vs %s: %.1f%% fewer nodes\n", r.policies[1].c_str(),
                  r.policies[0].c_str(), pct);
    }
  }
  m["outputs"] = {"consolidation.csv"};
  m["wall_time_s"] = Seconds(start);
  WriteJson(out / "manifest.json", m);
  return kExitOk;
}

int CmdIngest(const Options& o) {
  const std::vector<lagsim::TraceEvent> events = lagsim::LoadTraceCsv(o.trace);
  const std::filesystem::path out = PrepareOut(o.out);

  std::map<lagsim::FunctionId, uint64_t> counts;
  lagsim::Micros first = 0;
  lagsim::Micros last = 0;
  for (size_t i = 0; i < events.size(); ++i) {
    ++counts[events[i].function];
    if (i == 0 || events[i].timestamp_us < first) first = events[i].timestamp_us;
    last = std::max(last, events[i].timestamp_us);
  }
  std::vector<lagsim::TraceEvent> sorted = events;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const lagsim::TraceEvent& a, const lagsim::TraceEvent& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  {
    std::ofstream f = OpenOut(out / "trace.csv");
    f << "function_id,timestamp_us\n";
    for (const lagsim::TraceEvent& e : sorted) f << e.function << ',' << e.timestamp_us << '\n';
  }
  std::vector<std::string> outputs{"trace.csv"};

  // Per-function rates over the trace span, grouped into ten equal bands.
  const double span_s =
      std::max<double>(1.0, static_cast<double>(last - first)) / lagsim::kMicrosPerSecond;
  std::vector<double> rates;
  for (const auto& [f, n] : counts) rates.push_back(static_cast<double>(n) / span_s);
  std::sort(rates.begin(), rates.end());
  if (rates.size() >= static_cast<size_t>(lagsim::kDemandBands)) {
    std::ofstream f = OpenOut(out / "band_profile.csv");
    f << "band,mean_rps\n";
    const size_t n = rates.size();
    for (int b = 0; b < lagsim::kDemandBands; ++b) {
      const size_t lo = n * static_cast<size_t>(b) / lagsim::kDemandBands;
      const size_t hi = n * static_cast<size_t>(b + 1) / lagsim::kDemandBands;
      double sum = 0.0;
      for (size_t i = lo; i < hi; ++i) sum += rates[i];
      f << b + 1 << ',' << sum / static_cast<double>(hi - lo) << '\n';
    }
    outputs.push_back("band_profile.csv");
  }
  json m = {{"tool", "lagsim"},
            {"command", "ingest"},
            {"source", o.trace},
            {"events", events.size()},
            {"functions", counts.size()},
            {"first_us", first},
            {"last_us", last},
            {"outputs", outputs}};
  WriteJson(out / "manifest.json", m);
  std::printf("%zu events, %zu functions\n", events.size(), counts.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lagsim: hierarchical cgroup CPU scheduling simulator"};
  app.require_subcommand(1);
  Options run_opts, sweep_opts, cons_opts, ingest_opts;

  CLI::App* run = app.add_subcommand("run", "run one simulation");
  AddCommonFlags(run, &run_opts);
  CLI::App* sweep = app.add_subcommand("sweep", "density x policy sweep, or a window sweep");
  AddCommonFlags(sweep, &sweep_opts);
  CLI::App* cons = app.add_subcommand("consolidate", "minimum nodes meeting the p95 target");
  AddCommonFlags(cons, &cons_opts);
  CLI::App* ingest = app.add_subcommand("ingest", "validate a trace and derive a band profile");
  ingest->add_option("trace", ingest_opts.trace, "CSV with function_id,timestamp_us")
      ->required();
  ingest->add_option("--out", ingest_opts.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) return CmdRun(run_opts);
    if (*sweep) return CmdSweep(sweep_opts);
    if (*cons) return CmdConsolidate(cons_opts);
    if (*ingest) return CmdIngest(ingest_opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "lagsim: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lagsim: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitValidation;
}
