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

#include <map>
#include <sstream>

#include "lagsim/engine.h"
#include "lagsim/workloads.h"

namespace lagsim {
namespace {

constexpr Micros kSec = kMicrosPerSecond;

std::vector<GroupId> Groups(size_t n) {
  std::vector<GroupId> g(n);
  for (size_t i = 0; i < n; ++i) g[i] = static_cast<GroupId>(i + 1);
  return g;
}

std::vector<Request> Drain(RequestSource& src) {
  std::vector<Request> out;
  while (auto r = src.NextArrival()) out.push_back(*r);
  return out;
}

TEST_CASE("service demand models") {
  Rng rng(7);
  const ServiceModel fixed = ServiceModel::Fixed(100'000);
  CHECK(SampleServiceDemand(fixed, rng) == ServiceDemand{1, 100'000});
  const ServiceModel par = ServiceModel::Parallel(2, 50'000);
  for (int i = 0; i < 5; ++i) CHECK(SampleServiceDemand(par, rng) == ServiceDemand{2, 50'000});
  CHECK(par.MeanCpuUs() == doctest::Approx(100'000));

  const ServiceModel mix = ServiceModel::Mix({{0.3, 10'000}, {0.4, 100'000}, {0.3, 1'000'000}});
  CHECK_NOTHROW(mix.Validate());
  // 0.3 * 10 + 0.4 * 100 + 0.3 * 1000 = 343ms.
  CHECK(mix.MeanCpuUs() == doctest::Approx(343'000));
  double sum = 0.0;
  constexpr int kSamples = 10'000;
  for (int i = 0; i < kSamples; ++i) sum += SampleServiceDemand(mix, rng).per_worker_us;
  CHECK(std::abs(sum / kSamples - 343'000.0) <= 0.03 * 343'000.0);
}

TEST_CASE("service model validation") {
  CHECK_THROWS_AS(ServiceModel::Mix({{0.5, 10}, {0.4, 10}}).Validate(), ConfigError);
  CHECK_NOTHROW(ServiceModel::Mix({{0.5, 10}, {0.5 + 1e-12, 10}}).Validate());
  CHECK_THROWS_AS(ServiceModel::Mix({}).Validate(), ConfigError);
  CHECK_THROWS_AS(ServiceModel::Fixed(0).Validate(), ConfigError);
  CHECK_THROWS_AS(ServiceModel::Parallel(0, 10).Validate(), ConfigError);
}

TEST_CASE("population draws equally from bands") {
  const BandProfile p = BandProfile::Default(100'000.0);
  CHECK_NOTHROW(p.Validate());
  for (int b = 1; b < kDemandBands; ++b) CHECK(p.mean_rps[b] >= p.mean_rps[b - 1]);

  auto ten = SynthPopulation(10, p, 1, ServiceModel::Fixed(100'000));
  std::map<int, int> count;
  for (const auto& f : ten) count[f.demand_band]++;
  CHECK(count.size() == 10);
  for (const auto& [band, n] : count) CHECK(n == 1);

  count.clear();
  for (const auto& f : SynthPopulation(120, p, 1, ServiceModel::Fixed(100'000))) {
    count[f.demand_band]++;
    CHECK(f.rate_rps >= 0.75 * p.mean_rps[f.demand_band - 1]);
    CHECK(f.rate_rps <= 1.25 * p.mean_rps[f.demand_band - 1]);
  }
  for (const auto& [band, n] : count) CHECK(n == 12);

  for (int n : {1, 7, 33, 99}) {
    count.clear();
    for (const auto& f : SynthPopulation(n, p, 3, ServiceModel::Fixed(1))) count[f.demand_band]++;
    for (int b = 1; b <= kDemandBands; ++b) CHECK(std::abs(count[b] - n / 10.0) <= 1.0);
  }
  CHECK_THROWS_AS(SynthPopulation(0, p, 1, ServiceModel::Fixed(1)), ConfigError);
}

TEST_CASE("default profile demands full capacity at the anchor density") {
  // 12 cores at density 9: 108 functions, 10.8 per band.
  const double mean_us = 2'000.0;
  const BandProfile p = BandProfile::Default(mean_us, 9.0);
  const double demand = p.Sum() * (108.0 / kDemandBands) * mean_us / kSec;
  CHECK(demand == doctest::Approx(12.0));
}

TEST_CASE("band profile csv") {
  std::stringstream ok("band,mean_rps\n1,1\n2,2\n3,3\n4,4\n5,5\n6,6\n7,7\n8,8\n9,9\n10,100\n");
  const BandProfile p = BandProfile::FromCsv(ok);
  CHECK(p.mean_rps[9] == 100.0);
  std::stringstream bad_header("b,r\n");
  CHECK_THROWS_AS(BandProfile::FromCsv(bad_header), ConfigError);
  std::stringstream missing("band,mean_rps\n1,1\n");
  CHECK_THROWS_AS(BandProfile::FromCsv(missing), ConfigError);
  std::stringstream decreasing("band,mean_rps\n1,5\n2,2\n3,3\n4,4\n5,5\n6,6\n7,7\n8,8\n9,9\n10,10\n");
  CHECK_THROWS_AS(BandProfile::FromCsv(decreasing), ConfigError);
  std::stringstream junk("band,mean_rps\n1,x\n");
  CHECK_THROWS_WITH_AS(BandProfile::FromCsv(junk), doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("random rates aggregate") {
  std::vector<FunctionSpec> fs(120);
  for (int i = 0; i < 120; ++i) {
    fs[i].id = i;
    fs[i].service = ServiceModel::Fixed(1'000);
  }
  fs = WithRandomRates(fs, 5.0, 11);
  PoissonSource src(fs, Groups(fs.size()), 60 * kSec, 11);
  const auto reqs = Drain(src);
  const double rps = reqs.size() / 60.0;
  CHECK(rps == doctest::Approx(300.0).epsilon(0.10));
  for (size_t i = 1; i < reqs.size(); ++i) CHECK(reqs[i].arrival >= reqs[i - 1].arrival);
  CHECK(reqs.back().arrival < 60 * kSec);
}

TEST_CASE("poisson rate and burst mean") {
  std::vector<FunctionSpec> fs(1);
  fs[0].rate_rps = 200.0;
  fs[0].service = ServiceModel::Fixed(1'000);
  PoissonSource plain(fs, Groups(1), 100 * kSec, 5);
  CHECK(Drain(plain).size() == doctest::Approx(20'000).epsilon(0.03));

  // Gamma-modulated segments keep the mean rate, with more dispersion.
  std::vector<FunctionSpec> many(50);
  for (int i = 0; i < 50; ++i) {
    many[i].id = i;
    many[i].rate_rps = 20.0;
    many[i].service = ServiceModel::Fixed(1'000);
  }
  PoissonSource bursty(many, Groups(50), 100 * kSec, 5, BurstParams{kSec, 1.0});
  CHECK(Drain(bursty).size() == doctest::Approx(100'000).epsilon(0.05));
}

TEST_CASE("open-loop streams are deterministic per seed") {
  auto fs = SynthPopulation(30, BandProfile::Default(1'000.0), 4,
                            ServiceModel::Mix({{0.5, 100}, {0.5, 3'000}}));
  PoissonSource a(fs, Groups(30), 5 * kSec, 9, BurstParams{kSec, 1.0});
  PoissonSource b(fs, Groups(30), 5 * kSec, 9, BurstParams{kSec, 1.0});
  const auto ra = Drain(a);
  const auto rb = Drain(b);
  REQUIRE(ra.size() == rb.size());
  for (size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].arrival == rb[i].arrival);
    CHECK(ra[i].function == rb[i].function);
    CHECK(ra[i].per_worker_us == rb[i].per_worker_us);
  }
  PoissonSource c(fs, Groups(30), 5 * kSec, 10, BurstParams{kSec, 1.0});
  const auto rc = Drain(c);
  bool differs = rc.size() != ra.size();
  for (size_t i = 0; !differs && i < ra.size(); ++i) differs = ra[i].arrival != rc[i].arrival;
  CHECK(differs);
}

TEST_CASE("steady closed loop issues back to back") {
  std::vector<FunctionSpec> fs(1);
  fs[0].service = ServiceModel::Fixed(10'000);
  RunConfig cfg;
  cfg.cores = 1;
  cfg.horizon_us = 10 * kSec;
  cfg.switch_cost = {0, 0};
  Engine engine(cfg);
  const GroupId g = engine.AddGroup(kRootGroup, "f0");
  SteadyParams params;
  params.warmup_us = 0;
  SteadySource src(fs, {g}, 1, params);
  const RunMetrics m = engine.Run(src);
  CHECK(m.latency_samples.size() == doctest::Approx(1000).epsilon(0.01));
  CHECK(src.concurrency(0) == 1);
}

TEST_CASE("steady concurrency self-tunes during warmup") {
  std::vector<FunctionSpec> fs(1);
  fs[0].service = ServiceModel::Fixed(10'000);
  RunConfig cfg;
  cfg.cores = 2;
  cfg.horizon_us = 20 * kSec;
  Engine engine(cfg);
  const GroupId g = engine.AddGroup(kRootGroup, "f0");
  SteadyParams params;
  params.warmup_us = 15 * kSec;
  SteadySource src(fs, {g}, 1, params);
  engine.Run(src);
  // Latency stays near 10ms * c / 2 cores, so it grows until the target binds.
  CHECK(src.concurrency(0) > 4);
  CHECK(src.concurrency(0) <= 40);
}

TEST_CASE("trace replay") {
  std::stringstream csv("function_id,timestamp_us\n0,10\n1,15\n0,2000\n");
  auto events = ParseTraceCsv(csv);
  REQUIRE(events.size() == 3);
  std::vector<FunctionSpec> fs(2);
  fs[1].id = 1;
  ReplaySource src(events, fs, Groups(2), 1);
  const auto reqs = Drain(src);
  REQUIRE(reqs.size() == 3);
  CHECK(reqs[0].arrival == 10);
  CHECK(reqs[1].arrival == 15);
  CHECK(reqs[1].function == 1);
  CHECK(reqs[2].arrival == 2000);

  std::stringstream regress("function_id,timestamp_us\n0,10\n1,5\n0,9\n");
  CHECK_THROWS_WITH_AS(ParseTraceCsv(regress), doctest::Contains("line 4"), ConfigError);
  std::stringstream header("fn,ts\n");
  CHECK_THROWS_AS(ParseTraceCsv(header), ConfigError);
  std::stringstream unknown("function_id,timestamp_us\n5,10\n");
  CHECK_THROWS_AS(ReplaySource(ParseTraceCsv(unknown), fs, Groups(2), 1), ConfigError);
}

}  // namespace
}  // namespace lagsim
