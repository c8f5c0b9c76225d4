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

#include "lagsim/workloads.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

namespace lagsim {

namespace {

// Random stream indices per function.
constexpr uint64_t kStreamArrivals = 0;
constexpr uint64_t kStreamDemand = 1;
constexpr uint64_t kStreamBursts = 2;
constexpr uint64_t kStreamRates = 3;
constexpr uint64_t kStreamPopulation = 4;
constexpr uint64_t kStreamSteady = 5;

constexpr Micros kNever = std::numeric_limits<Micros>::max();

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string Trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T ParseNumber(const std::string& s, const std::string& what, int line) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) {
    throw ConfigError(what + ": line " + std::to_string(line) + ": invalid number '" + s + "'");
  }
  return v;
}

}  // namespace

uint64_t DeriveSeed(uint64_t seed, uint64_t stream, uint64_t index) {
  return SplitMix(SplitMix(SplitMix(seed) ^ stream) ^ index);
}

ServiceModel ServiceModel::Fixed(Micros demand_us) {
  ServiceModel m;
  m.kind = ServiceKind::kFixed;
  m.fixed_us = demand_us;
  return m;
}

ServiceModel ServiceModel::Mix(std::vector<MixEntry> entries) {
  ServiceModel m;
  m.kind = ServiceKind::kMix;
  m.mix = std::move(entries);
  return m;
}

ServiceModel ServiceModel::Parallel(int workers, Micros per_worker_us) {
  ServiceModel m;
  m.kind = ServiceKind::kParallel;
  m.workers = workers;
  m.per_worker_us = per_worker_us;
  return m;
}

void ServiceModel::Validate() const {
  switch (kind) {
    case ServiceKind::kFixed:
      if (fixed_us <= 0) throw ConfigError("service.demand_us: must be > 0");
      break;
    case ServiceKind::kMix: {
      if (mix.empty()) throw ConfigError("service.mix: must not be empty");
      double total = 0.0;
      for (const MixEntry& e : mix) {
        if (!(e.probability >= 0.0)) {
          throw ConfigError("service.mix: probabilities must be >= 0");
        }
        if (e.demand_us <= 0) throw ConfigError("service.mix: demands must be > 0");
        total += e.probability;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("service.mix: probabilities must sum to 1");
      }
      break;
    }
    case ServiceKind::kParallel:
      if (workers < 1) throw ConfigError("service.workers: must be >= 1");
      if (per_worker_us <= 0) throw ConfigError("service.per_worker_us: must be > 0");
      break;
  }
}

double ServiceModel::MeanCpuUs() const {
  switch (kind) {
    case ServiceKind::kFixed:
      return static_cast<double>(fixed_us);
    case ServiceKind::kMix: {
      double m = 0.0;
      for (const MixEntry& e : mix) m += e.probability * static_cast<double>(e.demand_us);
      return m;
    }
    case ServiceKind::kParallel:
      return static_cast<double>(workers) * static_cast<double>(per_worker_us);
  }
  return 0.0;
}

ServiceDemand SampleServiceDemand(const ServiceModel& model, Rng& rng) {
  switch (model.kind) {
    case ServiceKind::kFixed:
      return {1, model.fixed_us};
    case ServiceKind::kMix: {
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      double acc = 0.0;
      for (const MixEntry& e : model.mix) {
        acc += e.probability;
        if (u < acc) return {1, e.demand_us};
      }
      return {1, model.mix.back().demand_us};
    }
    case ServiceKind::kParallel:
      return {model.workers, model.per_worker_us};
  }
  return {};
}

const std::array<double, kDemandBands>& DefaultBandShape() {
  static const std::array<double, kDemandBands> shape = {
      1.0, 1.5, 2.2, 3.3, 5.0, 7.5, 11.0, 17.0, 40.0, 90.0};
  return shape;
}

double BandProfile::Sum() const {
  return std::accumulate(mean_rps.begin(), mean_rps.end(), 0.0);
}

void BandProfile::Validate() const {
  for (int b = 0; b < kDemandBands; ++b) {
    if (!std::isfinite(mean_rps[b]) || mean_rps[b] < 0.0) {
      throw ConfigError("band profile: band " + std::to_string(b + 1) +
                        " mean_rps must be finite and >= 0");
    }
    if (b > 0 && mean_rps[b] < mean_rps[b - 1]) {
      throw ConfigError("band profile: mean_rps must be non-decreasing from band 1 to 10");
    }
  }
}

BandProfile BandProfile::Default(double mean_cpu_us, double anchor_density) {
  if (!(mean_cpu_us > 0.0)) throw ConfigError("band profile: mean demand must be > 0");
  if (!(anchor_density > 0.0)) throw ConfigError("band profile: anchor density must be > 0");
  const auto& shape = DefaultBandShape();
  const double shape_sum = std::accumulate(shape.begin(), shape.end(), 0.0);
  // Per core: (anchor / 10) functions per band, sum of rates * demand == 1.
  const double scale = kDemandBands * static_cast<double>(kMicrosPerSecond) /
                       (anchor_density * shape_sum * mean_cpu_us);
  BandProfile p;
  for (int b = 0; b < kDemandBands; ++b) p.mean_rps[b] = shape[b] * scale;
  return p;
}

BandProfile BandProfile::FromCsv(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ConfigError("band profile: empty file");
  ++line_no;
  if (Trim(line) != "band,mean_rps") {
    throw ConfigError("band profile: header must be 'band,mean_rps'");
  }
  BandProfile p;
  std::array<bool, kDemandBands> seen{};
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != 2) {
      throw ConfigError("band profile: line " + std::to_string(line_no) +
                        ": expected 2 columns");
    }
    const int band = ParseNumber<int>(cells[0], "band profile", line_no);
    if (band < 1 || band > kDemandBands) {
      throw ConfigError("band profile: line " + std::to_string(line_no) +
                        ": band must be in [1, 10]");
    }
    if (seen[band - 1]) {
      throw ConfigError("band profile: line " + std::to_string(line_no) +
                        ": duplicate band");
    }
    seen[band - 1] = true;
    p.mean_rps[band - 1] = ParseNumber<double>(cells[1], "band profile", line_no);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ConfigError("band profile: expected exactly 10 bands");
  }
  p.Validate();
  return p;
}

BandProfile BandProfile::LoadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("band profile: cannot open " + path);
  return FromCsv(in);
}

std::vector<FunctionSpec> SynthPopulation(int n_functions, const BandProfile& profile,
                                          uint64_t seed, const ServiceModel& service) {
  if (n_functions < 1) throw ConfigError("population: n_functions must be >= 1");
  profile.Validate();
  service.Validate();
  std::vector<FunctionSpec> out;
  out.reserve(n_functions);
  for (int i = 0; i < n_functions; ++i) {
    Rng rng(DeriveSeed(seed, kStreamPopulation, static_cast<uint64_t>(i)));
    FunctionSpec f;
    f.id = static_cast<FunctionId>(i);
    f.demand_band = i % kDemandBands + 1;
    const double jitter = std::uniform_real_distribution<double>(0.75, 1.25)(rng);
    f.rate_rps = profile.mean_rps[f.demand_band - 1] * jitter;
    f.service = service;
    out.push_back(f);
  }
  return out;
}

std::vector<FunctionSpec> WithRandomRates(std::vector<FunctionSpec> functions,
                                          double max_rps, uint64_t seed) {
  if (!(max_rps >= 0.0)) throw ConfigError("random: max_rps must be >= 0");
  for (FunctionSpec& f : functions) {
    Rng rng(DeriveSeed(seed, kStreamRates, f.id));
    f.rate_rps = std::uniform_real_distribution<double>(0.0, max_rps)(rng);
  }
  return functions;
}

PoissonSource::PoissonSource(std::vector<FunctionSpec> functions,
                             std::vector<GroupId> groups, Micros horizon_us,
                             uint64_t seed, BurstParams burst)
    : functions_(std::move(functions)),
      groups_(std::move(groups)),
      horizon_us_(horizon_us),
      burst_(burst) {
  if (horizon_us_ <= 0) throw ConfigError("workload: horizon must be > 0");
  if (groups_.size() != functions_.size()) {
    throw ConfigError("workload: one group per function required");
  }
  if (burst_.cv < 0.0) throw ConfigError("workload.burst_cv: must be >= 0");
  if (burst_.cv > 0.0 && burst_.segment_us <= 0) {
    throw ConfigError("workload.burst_segment_us: must be > 0");
  }
  streams_.resize(functions_.size());
  for (size_t f = 0; f < functions_.size(); ++f) {
    if (!(functions_[f].rate_rps >= 0.0)) throw ConfigError("workload: rate must be >= 0");
    functions_[f].service.Validate();
    const uint64_t id = functions_[f].id;
    Stream& s = streams_[f];
    s.arrivals.seed(DeriveSeed(seed, kStreamArrivals, id));
    s.demand.seed(DeriveSeed(seed, kStreamDemand, id));
    s.bursts.seed(DeriveSeed(seed, kStreamBursts, id));
    s.next = 0;
    s.segment_end = 0;
    Advance(f);
  }
}

double PoissonSource::SegmentRate(size_t f) {
  const double base = functions_[f].rate_rps / static_cast<double>(kMicrosPerSecond);
  if (burst_.cv <= 0.0) return base;
  const double shape = 1.0 / (burst_.cv * burst_.cv);
  std::gamma_distribution<double> gamma(shape, 1.0 / shape);
  return base * gamma(streams_[f].bursts);
}

void PoissonSource::Advance(size_t f) {
  Stream& s = streams_[f];
  double t = static_cast<double>(s.next);
  while (true) {
    if (t >= static_cast<double>(s.segment_end)) {
      if (s.segment_end >= horizon_us_) break;
      s.rate_per_us = SegmentRate(f);
      s.segment_end = burst_.cv > 0.0 ? s.segment_end + burst_.segment_us : kNever;
    }
    if (s.rate_per_us <= 0.0) {
      t = static_cast<double>(s.segment_end);
      continue;
    }
    const double dt = std::exponential_distribution<double>(s.rate_per_us)(s.arrivals);
    if (t + dt < static_cast<double>(s.segment_end)) {
      t += dt;
      const Micros at = static_cast<Micros>(t);
      if (at >= horizon_us_) break;
      s.next = at;
      heap_.push({at, f});
      return;
    }
    t = static_cast<double>(s.segment_end);
  }
  s.next = kNever;
}

std::optional<Request> PoissonSource::NextArrival() {
  if (heap_.empty()) return std::nullopt;
  const auto [at, f] = heap_.top();
  heap_.pop();
  Stream& s = streams_[f];
  const ServiceDemand d = SampleServiceDemand(functions_[f].service, s.demand);
  Request r;
  r.id = next_id_++;
  r.function = functions_[f].id;
  r.group = groups_[f];
  r.arrival = at;
  r.workers = d.workers;
  r.per_worker_us = d.per_worker_us;
  // Fractional part of the arrival time is carried in the stream state.
  Advance(f);
  return r;
}

SteadySource::SteadySource(std::vector<FunctionSpec> functions,
                           std::vector<GroupId> groups, uint64_t seed,
                           SteadyParams params)
    : functions_(std::move(functions)), groups_(std::move(groups)), params_(params) {
  if (groups_.size() != functions_.size()) {
    throw ConfigError("workload: one group per function required");
  }
  if (params_.initial_concurrency < 1) {
    throw ConfigError("workload.steady_concurrency: must be >= 1");
  }
  if (params_.control_interval_us <= 0) {
    throw ConfigError("workload.steady_control_interval_us: must be > 0");
  }
  if (params_.max_concurrency < params_.initial_concurrency) {
    throw ConfigError("workload.steady_max_concurrency: must be >= initial concurrency");
  }
  state_.resize(functions_.size());
  for (size_t f = 0; f < functions_.size(); ++f) {
    functions_[f].service.Validate();
    State& st = state_[f];
    st.demand.seed(DeriveSeed(seed, kStreamDemand, functions_[f].id));
    st.concurrency = params_.initial_concurrency;
    // Stagger first issue within one mean service time.
    Rng start(DeriveSeed(seed, kStreamSteady, functions_[f].id));
    const Micros spread =
        std::max<Micros>(1, static_cast<Micros>(functions_[f].service.MeanCpuUs()));
    for (int i = 0; i < st.concurrency; ++i) {
      const Micros at = static_cast<Micros>(start() % static_cast<uint64_t>(spread));
      initial_.push_back(Make(f, at));
    }
  }
  std::stable_sort(initial_.begin(), initial_.end(),
                   [](const Request& a, const Request& b) { return a.arrival < b.arrival; });
}

Request SteadySource::Make(size_t f, Micros arrival) {
  State& st = state_[f];
  const ServiceDemand d = SampleServiceDemand(functions_[f].service, st.demand);
  Request r;
  r.id = next_id_++;
  r.function = functions_[f].id;
  r.group = groups_[f];
  r.arrival = arrival;
  r.workers = d.workers;
  r.per_worker_us = d.per_worker_us;
  st.in_flight += 1;
  return r;
}

std::optional<Request> SteadySource::NextArrival() {
  if (next_initial_ >= initial_.size()) return std::nullopt;
  return initial_[next_initial_++];
}

void SteadySource::OnCompletion(const CompletedRequest& done,
                                std::vector<Request>* follow_ups) {
  size_t f = 0;
  while (f < functions_.size() && functions_[f].id != done.request.function) ++f;
  if (f == functions_.size()) throw SimError("steady: completion of unknown function");
  State& st = state_[f];
  st.in_flight -= 1;
  const Micros now = done.completion;
  if (now < params_.warmup_us) {
    st.latency_sum += static_cast<double>(now - done.request.arrival);
    st.completions += 1;
    if (now - st.interval_start >= params_.control_interval_us) {
      const double mean = st.latency_sum / st.completions;
      if (mean <= static_cast<double>(params_.target_latency_us)) {
        st.concurrency = std::min(params_.max_concurrency, st.concurrency + 1);
      } else {
        st.concurrency = std::max(1, st.concurrency / 2);
      }
      st.interval_start = now;
      st.latency_sum = 0.0;
      st.completions = 0;
    }
  }
  while (st.in_flight < st.concurrency) follow_ups->push_back(Make(f, now));
}

std::vector<TraceEvent> ParseTraceCsv(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ConfigError("trace: empty file");
  ++line_no;
  if (Trim(line) != "function_id,timestamp_us") {
    throw ConfigError("trace: header must be 'function_id,timestamp_us'");
  }
  std::vector<TraceEvent> out;
  std::vector<Micros> last;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != 2) {
      throw ConfigError("trace: line " + std::to_string(line_no) + ": expected 2 columns");
    }
    const int64_t fid = ParseNumber<int64_t>(cells[0], "trace", line_no);
    const int64_t ts = ParseNumber<int64_t>(cells[1], "trace", line_no);
    if (fid < 0 || fid > std::numeric_limits<FunctionId>::max()) {
      throw ConfigError("trace: line " + std::to_string(line_no) + ": bad function_id");
    }
    if (ts < 0) {
      throw ConfigError("trace: line " + std::to_string(line_no) + ": negative timestamp");
    }
    if (static_cast<size_t>(fid) >= last.size()) last.resize(fid + 1, -1);
    if (ts < last[fid]) {
      throw ConfigError("trace: line " + std::to_string(line_no) +
                        ": timestamps must be non-decreasing per function");
    }
    last[fid] = ts;
    out.push_back({static_cast<FunctionId>(fid), ts});
  }
  return out;
}

std::vector<TraceEvent> LoadTraceCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("trace: cannot open " + path);
  return ParseTraceCsv(in);
}

ReplaySource::ReplaySource(std::vector<TraceEvent> events,
                           std::vector<FunctionSpec> functions,
                           std::vector<GroupId> groups, uint64_t seed)
    : events_(std::move(events)), functions_(std::move(functions)), groups_(std::move(groups)) {
  if (groups_.size() != functions_.size()) {
    throw ConfigError("workload: one group per function required");
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const TraceEvent& a, const TraceEvent& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  for (const TraceEvent& e : events_) {
    if (e.function >= functions_.size()) {
      throw ConfigError("trace: function_id " + std::to_string(e.function) +
                        " outside the population");
    }
  }
  for (const FunctionSpec& f : functions_) {
    f.service.Validate();
    demand_.emplace_back(DeriveSeed(seed, kStreamDemand, f.id));
  }
}

std::optional<Request> ReplaySource::NextArrival() {
  if (next_ >= events_.size()) return std::nullopt;
  const TraceEvent& e = events_[next_++];
  const ServiceDemand d = SampleServiceDemand(functions_[e.function].service, demand_[e.function]);
  Request r;
  r.id = next_;
  r.function = e.function;
  r.group = groups_[e.function];
  r.arrival = e.timestamp_us;
  r.workers = d.workers;
  r.per_worker_us = d.per_worker_us;
  return r;
}

}  // namespace lagsim
