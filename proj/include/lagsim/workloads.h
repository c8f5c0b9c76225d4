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

// Function populations, service demand models and request streams.
//
// Every function owns private random streams derived from (seed, function
// id), so open-loop arrivals and sampled demands do not depend on the
// scheduler under test.

#ifndef LAGSIM_WORKLOADS_H_
#define LAGSIM_WORKLOADS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "lagsim/engine.h"
#include "lagsim/types.h"

namespace lagsim {

inline constexpr int kDemandBands = 10;

using Rng = std::mt19937_64;

// Seed for an independent stream: splitmix64 over (seed, stream, index).
uint64_t DeriveSeed(uint64_t seed, uint64_t stream, uint64_t index);

enum class ServiceKind { kFixed, kMix, kParallel };

struct MixEntry {
  double probability = 0.0;
  Micros demand_us = 0;
};

struct ServiceModel {
  ServiceKind kind = ServiceKind::kFixed;
  Micros fixed_us = 100'000;
  std::vector<MixEntry> mix;
  int workers = 1;
  Micros per_worker_us = 0;

  static ServiceModel Fixed(Micros demand_us);
  static ServiceModel Mix(std::vector<MixEntry> entries);
  static ServiceModel Parallel(int workers, Micros per_worker_us);

  // Throws ConfigError: mix probabilities must sum to 1 +- 1e-9, demands and
  // workers must be positive.
  void Validate() const;
  // Expected CPU time of one request, all workers included.
  double MeanCpuUs() const;
};

struct ServiceDemand {
  int workers = 1;
  Micros per_worker_us = 0;
  bool operator==(const ServiceDemand&) const = default;
};

ServiceDemand SampleServiceDemand(const ServiceModel& model, Rng& rng);

struct FunctionSpec {
  FunctionId id = 0;
  int demand_band = 1;  // 1..10, ascending rate
  double rate_rps = 0.0;
  ServiceModel service;
  bool flagged = true;
};

// Mean invocation rate of each demand band, band 1 first.
struct BandProfile {
  std::array<double, kDemandBands> mean_rps{};

  // Throws ConfigError unless rates are finite, >= 0 and non-decreasing.
  void Validate() const;
  double Sum() const;

  // Heavy-tailed default, scaled so that a population of `anchor_density`
  // functions per core, each request costing `mean_cpu_us`, demands exactly
  // the cores' capacity.
  static BandProfile Default(double mean_cpu_us, double anchor_density = 9.0);
  // CSV with header `band,mean_rps` and one row per band 1..10.
  static BandProfile FromCsv(std::istream& in);
  static BandProfile LoadCsv(const std::string& path);
};

// Relative band weights behind BandProfile::Default.
const std::array<double, kDemandBands>& DefaultBandShape();

// Functions drawn equally from the 10 bands (function i in band i % 10 + 1)
// with per-function rates jittered uniformly in [0.75, 1.25] of the band
// mean. Throws ConfigError for n_functions < 1.
std::vector<FunctionSpec> SynthPopulation(int n_functions, const BandProfile& profile,
                                          uint64_t seed, const ServiceModel& service);

struct BurstParams {
  // Rates are redrawn per segment as mean * Gamma(1/cv^2, cv^2).
  Micros segment_us = kMicrosPerSecond;
  double cv = 1.0;
};

// Open-loop doubly stochastic Poisson arrivals (trace-like) or plain Poisson
// arrivals (cv = 0), merged across functions in time order.
class PoissonSource : public RequestSource {
 public:
  PoissonSource(std::vector<FunctionSpec> functions, std::vector<GroupId> groups,
                Micros horizon_us, uint64_t seed, BurstParams burst = {0, 0.0});
  std::optional<Request> NextArrival() override;

  uint64_t emitted() const { return next_id_ - 1; }

 private:
  struct Stream {
    Rng arrivals;
    Rng demand;
    Rng bursts;
    Micros next = 0;
    Micros segment_end = 0;
    double rate_per_us = 0.0;
  };
  void Advance(size_t f);
  double SegmentRate(size_t f);

  std::vector<FunctionSpec> functions_;
  std::vector<GroupId> groups_;
  Micros horizon_us_;
  BurstParams burst_;
  std::vector<Stream> streams_;
  // (next arrival, function index), earliest first.
  std::priority_queue<std::pair<Micros, size_t>, std::vector<std::pair<Micros, size_t>>,
                      std::greater<>>
      heap_;
  uint64_t next_id_ = 1;
};

// Rates uniform in [0, max_rps] per function (the rest of each spec is kept).
std::vector<FunctionSpec> WithRandomRates(std::vector<FunctionSpec> functions,
                                          double max_rps, uint64_t seed);

struct SteadyParams {
  int initial_concurrency = 1;
  // Concurrency is tuned until this instant, then frozen.
  Micros warmup_us = 5 * kMicrosPerSecond;
  Micros target_latency_us = 100'000;
  Micros control_interval_us = kMicrosPerSecond;
  int max_concurrency = 64;
};

// Closed loop: each function keeps `concurrency` requests in flight and
// reissues on completion. During warmup, once per control interval, a
// function whose mean latency met the target gains one slot; otherwise it
// halves (never below 1).
class SteadySource : public RequestSource {
 public:
  SteadySource(std::vector<FunctionSpec> functions, std::vector<GroupId> groups,
               uint64_t seed, SteadyParams params = {});
  std::optional<Request> NextArrival() override;
  void OnCompletion(const CompletedRequest& done,
                    std::vector<Request>* follow_ups) override;

  int concurrency(size_t function) const { return state_.at(function).concurrency; }

 private:
  struct State {
    Rng demand;
    int concurrency = 1;
    int in_flight = 0;
    Micros interval_start = 0;
    double latency_sum = 0.0;
    int completions = 0;
  };
  Request Make(size_t f, Micros arrival);

  std::vector<FunctionSpec> functions_;
  std::vector<GroupId> groups_;
  SteadyParams params_;
  std::vector<State> state_;
  std::vector<Request> initial_;
  size_t next_initial_ = 0;
  uint64_t next_id_ = 1;
};

struct TraceEvent {
  FunctionId function = 0;
  Micros timestamp_us = 0;
};

// CSV with header `function_id,timestamp_us`. Timestamps must be
// non-decreasing per function; throws ConfigError naming the line otherwise.
std::vector<TraceEvent> ParseTraceCsv(std::istream& in);
std::vector<TraceEvent> LoadTraceCsv(const std::string& path);

// Replays trace events verbatim (stable order by timestamp). Demands are
// sampled from the function's service model; functions beyond `functions`
// are rejected.
class ReplaySource : public RequestSource {
 public:
  ReplaySource(std::vector<TraceEvent> events, std::vector<FunctionSpec> functions,
               std::vector<GroupId> groups, uint64_t seed);
  std::optional<Request> NextArrival() override;

 private:
  std::vector<TraceEvent> events_;
  std::vector<FunctionSpec> functions_;
  std::vector<GroupId> groups_;
  std::vector<Rng> demand_;
  size_t next_ = 0;
};

}  // namespace lagsim

#endif  // LAGSIM_WORKLOADS_H_
