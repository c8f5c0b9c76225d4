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

#include "lagsim/config.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace lagsim {

namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

// One JSON object; every key must be consumed before Finish().
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(path_.empty() ? "config" : path_, "must be an object");
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* Find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  void Int(const std::string& key, int64_t lo, int64_t hi, int64_t* out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_number_integer()) Fail(Path(key), "must be an integer");
    const int64_t x = v->is_number_unsigned()
                          ? static_cast<int64_t>(std::min<uint64_t>(
                                v->get<uint64_t>(), std::numeric_limits<int64_t>::max()))
                          : v->get<int64_t>();
    if (x < lo || x > hi) {
      Fail(Path(key), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    *out = x;
  }

  void Int(const std::string& key, int* out) {
    int64_t x = *out;
    Int(key, std::numeric_limits<int>::min(), std::numeric_limits<int>::max(), &x);
    *out = static_cast<int>(x);
  }

  void Uint32(const std::string& key, uint32_t* out) {
    int64_t x = *out;
    Int(key, 0, std::numeric_limits<uint32_t>::max(), &x);
    *out = static_cast<uint32_t>(x);
  }

  void Uint64(const std::string& key, uint64_t* out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_number_unsigned()) Fail(Path(key), "must be a non-negative integer");
    *out = v->get<uint64_t>();
  }

  void Double(const std::string& key, double* out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_number()) Fail(Path(key), "must be a number");
    *out = v->get<double>();
    if (!std::isfinite(*out)) Fail(Path(key), "must be finite");
  }

  void Bool(const std::string& key, bool* out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_boolean()) Fail(Path(key), "must be true or false");
    *out = v->get<bool>();
  }

  void String(const std::string& key, std::string* out) {
    const json* v = Find(key);
    if (!v) return;
    if (!v->is_string()) Fail(Path(key), "must be a string");
    *out = v->get<std::string>();
  }

  const json* Array(const std::string& key) {
    const json* v = Find(key);
    if (v && !v->is_array()) Fail(Path(key), "must be an array");
    return v;
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) Fail(Path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

constexpr int64_t kMaxMicros = int64_t{1} << 52;

void MicrosField(Section& s, const std::string& key, Micros* out) {
  int64_t x = *out;
  s.Int(key, std::numeric_limits<int64_t>::min(), kMaxMicros, &x);
  *out = x;
}

ServiceModel ParseService(const json& j, const std::string& path) {
  Section s(j, path);
  std::string kind = "fixed";
  s.String("kind", &kind);
  ServiceModel m;
  if (kind == "fixed") {
    m.kind = ServiceKind::kFixed;
    MicrosField(s, "demand_us", &m.fixed_us);
  } else if (kind == "mix") {
    m.kind = ServiceKind::kMix;
    const json* entries = s.Array("mix");
    if (!entries) Fail(path + ".mix", "required for kind 'mix'");
    for (size_t i = 0; i < entries->size(); ++i) {
      Section e((*entries)[i], path + ".mix[" + std::to_string(i) + "]");
      MixEntry entry;
      e.Double("probability", &entry.probability);
      MicrosField(e, "demand_us", &entry.demand_us);
      e.Finish();
      m.mix.push_back(entry);
    }
  } else if (kind == "parallel") {
    m.kind = ServiceKind::kParallel;
    s.Int("workers", &m.workers);
    MicrosField(s, "per_worker_us", &m.per_worker_us);
  } else {
    Fail(path + ".kind", "unknown service kind '" + kind + "'");
  }
  s.Finish();
  return m;
}

json ServiceToJson(const ServiceModel& m) {
  switch (m.kind) {
    case ServiceKind::kFixed:
      return {{"kind", "fixed"}, {"demand_us", m.fixed_us}};
    case ServiceKind::kMix: {
      json entries = json::array();
      for (const MixEntry& e : m.mix) {
        entries.push_back({{"probability", e.probability}, {"demand_us", e.demand_us}});
      }
      return {{"kind", "mix"}, {"mix", entries}};
    }
    case ServiceKind::kParallel:
      return {{"kind", "parallel"},
              {"workers", m.workers},
              {"per_worker_us", m.per_worker_us}};
  }
  return {};
}

void ParseRun(const json& j, Scenario* sc, std::string* policy_label) {
  Section s(j, "run");
  RunConfig& r = sc->run;
  s.Int("cores", &r.cores);
  s.String("policy", policy_label);
  MicrosField(s, "tick_us", &r.tick_us);
  MicrosField(s, "horizon_us", &r.horizon_us);
  s.Uint32("load_credit_window_ticks", &r.load_credit_window_ticks);
  s.Uint64("seed", &r.seed);
  MicrosField(s, "balance_interval_us", &r.balance_interval_us);
  s.Int("imbalance_threshold", &r.imbalance_threshold);
  if (const json* v = s.Find("switch_cost")) {
    Section c(*v, "run.switch_cost");
    MicrosField(c, "base_us", &r.switch_cost.base_cost_us);
    MicrosField(c, "per_level_us", &r.switch_cost.per_level_cost_us);
    c.Finish();
  }
  if (const json* v = s.Find("policy_params")) {
    Section p(*v, "run.policy_params");
    PolicyParams& pp = r.policy.params;
    MicrosField(p, "rr_quantum_us", &pp.rr_quantum_us);
    p.Double("rr_bandwidth_cap", &pp.rr_bandwidth_cap);
    MicrosField(p, "rt_period_us", &pp.rt_period_us);
    MicrosField(p, "wakeup_granularity_us", &pp.wakeup_granularity_us);
    MicrosField(p, "eevdf_base_slice_us", &pp.eevdf_base_slice_us);
    MicrosField(p, "sched_latency_us", &pp.sched_latency_us);
    MicrosField(p, "min_granularity_us", &pp.min_granularity_us);
    p.Finish();
  }
  s.Finish();
}

void ParseWorkload(const json& j, WorkloadConfig* w) {
  Section s(j, "workload");
  if (const json* v = s.Find("kind")) {
    if (!v->is_string()) Fail("workload.kind", "must be a string");
    w->kind = ParseWorkloadKind(v->get<std::string>());
  }
  s.Double("density", &w->density);
  s.Int("n_functions", &w->n_functions);
  if (const json* v = s.Find("service")) w->service = ParseService(*v, "workload.service");
  s.String("band_profile", &w->band_profile_path);
  s.Double("anchor_density", &w->anchor_density);
  if (const json* v = s.Find("burst")) {
    Section b(*v, "workload.burst");
    MicrosField(b, "segment_us", &w->burst.segment_us);
    b.Double("cv", &w->burst.cv);
    b.Finish();
  }
  s.Double("random_max_rps", &w->random_max_rps);
  if (const json* v = s.Find("steady")) {
    Section st(*v, "workload.steady");
    st.Int("initial_concurrency", &w->steady.initial_concurrency);
    MicrosField(st, "warmup_us", &w->steady.warmup_us);
    MicrosField(st, "target_latency_us", &w->steady.target_latency_us);
    MicrosField(st, "control_interval_us", &w->steady.control_interval_us);
    st.Int("max_concurrency", &w->steady.max_concurrency);
    st.Finish();
  }
  s.String("trace", &w->trace_path);
  if (const json* v = s.Find("hierarchy")) {
    if (!v->is_string()) Fail("workload.hierarchy", "must be a string");
    w->hierarchy = ParseHierarchyKind(v->get<std::string>());
  }
  s.Bool("flag_functions", &w->flag_functions);
  s.Int("static_rt_bands", &w->static_rt_bands);
  MicrosField(s, "measure_from_us", &w->measure_from_us);
  MicrosField(s, "latency_target_us", &w->latency_target_us);
  s.Finish();
}

std::vector<std::string> StringList(const json& arr, const std::string& path) {
  std::vector<std::string> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) Fail(path + "[" + std::to_string(i) + "]", "must be a string");
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

void ParseSweep(const json& j, SweepConfig* sw) {
  Section s(j, "sweep");
  if (const json* v = s.Array("densities")) {
    sw->densities.clear();
    for (size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        Fail("sweep.densities[" + std::to_string(i) + "]", "must be a number");
      }
      sw->densities.push_back((*v)[i].get<double>());
    }
  }
  if (const json* v = s.Array("policies")) sw->policies = StringList(*v, "sweep.policies");
  if (const json* v = s.Array("window_ticks")) {
    sw->window_ticks.clear();
    for (size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number_unsigned()) {
        Fail("sweep.window_ticks[" + std::to_string(i) + "]", "must be a non-negative integer");
      }
      sw->window_ticks.push_back((*v)[i].get<uint32_t>());
    }
  }
  s.Int("parallel", &sw->parallel);
  s.Finish();
}

void ParseConsolidate(const json& j, ConsolidationParams* c) {
  Section s(j, "consolidate");
  s.Int("total_functions", &c->total_functions);
  s.Int("min_nodes", &c->min_nodes);
  s.Int("max_nodes", &c->max_nodes);
  if (const json* v = s.Array("policies")) c->policies = StringList(*v, "consolidate.policies");
  s.Finish();
}

void CheckPolicyNames(const std::vector<std::string>& names, const std::string& path) {
  for (size_t i = 0; i < names.size(); ++i) {
    try {
      WithPolicy(Scenario{}, names[i]);
    } catch (const ConfigError&) {
      Fail(path + "[" + std::to_string(i) + "]", "unknown policy '" + names[i] + "'");
    }
  }
}

template <typename T>
std::vector<T> ParseList(const std::string& text, const std::string& field,
                         T (*convert)(const std::string&)) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const size_t b = item.find_first_not_of(" \t");
    const size_t e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(field + ": empty list element");
    item = item.substr(b, e - b + 1);
    try {
      out.push_back(convert(item));
    } catch (const std::exception&) {
      throw ConfigError(field + ": invalid value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(field + ": list must not be empty");
  return out;
}

double ToDouble(const std::string& s) {
  size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
  return v;
}

uint32_t ToUint32(const std::string& s) {
  size_t used = 0;
  if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size() || v > std::numeric_limits<uint32_t>::max()) {
    throw std::invalid_argument(s);
  }
  return static_cast<uint32_t>(v);
}

std::string Identity(const std::string& s) { return s; }

}  // namespace

void ExperimentConfig::Validate() const {
  try {
    scenario.run.policy.params.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("run.policy_params.") + e.what());
  }
  try {
    scenario.run.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("run.") + e.what());
  }
  scenario.Validate();
  if (sweep.densities.empty()) throw ConfigError("sweep.densities: must not be empty");
  for (size_t i = 0; i < sweep.densities.size(); ++i) {
    if (!(sweep.densities[i] >= 1.0)) {
      throw ConfigError("sweep.densities[" + std::to_string(i) + "]: must be >= 1");
    }
  }
  if (sweep.policies.empty()) throw ConfigError("sweep.policies: must not be empty");
  CheckPolicyNames(sweep.policies, "sweep.policies");
  if (sweep.parallel < 1) throw ConfigError("sweep.parallel: must be >= 1");
  consolidate.Validate();
  CheckPolicyNames(consolidate.policies, "consolidate.policies");
}

ExperimentConfig ParseConfig(const json& doc_in) {
  const json* doc = &doc_in;
  if (doc->is_object() && doc->contains("config")) doc = &(*doc)["config"];
  Section top(*doc, "");
  if (!doc->contains("schema_version")) Fail("schema_version", "required");
  int64_t version = 0;
  top.Int("schema_version", std::numeric_limits<int64_t>::min(),
          std::numeric_limits<int64_t>::max(), &version);
  if (version != kSchemaVersion) {
    Fail("schema_version", "unsupported version " + std::to_string(version) +
                               " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  ExperimentConfig c;
  std::string policy = std::string(PolicyName(c.scenario.run.policy.kind));
  if (const json* v = top.Find("run")) ParseRun(*v, &c.scenario, &policy);
  if (const json* v = top.Find("workload")) ParseWorkload(*v, &c.scenario.workload);
  if (const json* v = top.Find("sweep")) ParseSweep(*v, &c.sweep);
  if (const json* v = top.Find("consolidate")) ParseConsolidate(*v, &c.consolidate);
  top.Finish();

  try {
    const int bands = c.scenario.workload.static_rt_bands;
    c.scenario = WithPolicy(c.scenario, policy);
    // A plain policy name keeps an explicit static band count.
    if (c.scenario.workload.static_rt_bands == 0) c.scenario.workload.static_rt_bands = bands;
  } catch (const ConfigError&) {
    Fail("run.policy", "unknown policy '" + policy + "'");
  }
  c.Validate();
  return c;
}

ExperimentConfig ParseConfigText(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return ParseConfig(doc);
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfigText(buf.str());
}

json ToJson(const ExperimentConfig& c) {
  const RunConfig& r = c.scenario.run;
  const PolicyParams& pp = r.policy.params;
  const WorkloadConfig& w = c.scenario.workload;
  json run = {
      {"cores", r.cores},
      {"policy", std::string(PolicyName(r.policy.kind))},
      {"tick_us", r.tick_us},
      {"horizon_us", r.horizon_us},
      {"load_credit_window_ticks", r.load_credit_window_ticks},
      {"seed", r.seed},
      {"balance_interval_us", r.balance_interval_us},
      {"imbalance_threshold", r.imbalance_threshold},
      {"switch_cost",
       {{"base_us", r.switch_cost.base_cost_us},
        {"per_level_us", r.switch_cost.per_level_cost_us}}},
      {"policy_params",
       {{"rr_quantum_us", pp.rr_quantum_us},
        {"rr_bandwidth_cap", pp.rr_bandwidth_cap},
        {"rt_period_us", pp.rt_period_us},
        {"wakeup_granularity_us", pp.wakeup_granularity_us},
        {"eevdf_base_slice_us", pp.eevdf_base_slice_us},
        {"sched_latency_us", pp.sched_latency_us},
        {"min_granularity_us", pp.min_granularity_us}}},
  };
  json workload = {
      {"kind", std::string(WorkloadKindName(w.kind))},
      {"density", w.density},
      {"n_functions", w.n_functions},
      {"service", ServiceToJson(w.ResolvedService())},
      {"band_profile", w.band_profile_path},
      {"anchor_density", w.anchor_density},
      {"burst", {{"segment_us", w.burst.segment_us}, {"cv", w.burst.cv}}},
      {"random_max_rps", w.random_max_rps},
      {"steady",
       {{"initial_concurrency", w.steady.initial_concurrency},
        {"warmup_us", w.steady.warmup_us},
        {"target_latency_us", w.steady.target_latency_us},
        {"control_interval_us", w.steady.control_interval_us},
        {"max_concurrency", w.steady.max_concurrency}}},
      {"trace", w.trace_path},
      {"hierarchy", std::string(HierarchyKindName(w.hierarchy))},
      {"flag_functions", w.flag_functions},
      {"static_rt_bands", w.static_rt_bands},
      {"measure_from_us", w.measure_from_us},
      {"latency_target_us", w.latency_target_us},
  };
  json sweep = {{"densities", c.sweep.densities},
                {"policies", c.sweep.policies},
                {"window_ticks", c.sweep.window_ticks},
                {"parallel", c.sweep.parallel}};
  json consolidate = {{"total_functions", c.consolidate.total_functions},
                      {"min_nodes", c.consolidate.min_nodes},
                      {"max_nodes", c.consolidate.max_nodes},
                      {"policies", c.consolidate.policies}};
  return {{"schema_version", kSchemaVersion},
          {"run", run},
          {"workload", workload},
          {"sweep", sweep},
          {"consolidate", consolidate}};
}

std::vector<double> ParseDoubleList(const std::string& text, const std::string& field) {
  return ParseList<double>(text, field, &ToDouble);
}

std::vector<uint32_t> ParseUintList(const std::string& text, const std::string& field) {
  return ParseList<uint32_t>(text, field, &ToUint32);
}

std::vector<std::string> ParseNameList(const std::string& text, const std::string& field) {
  return ParseList<std::string>(text, field, &Identity);
}

}  // namespace lagsim
