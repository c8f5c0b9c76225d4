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

#include <cmath>
#include <random>

#include "lagsim/engine.h"
#include "test_util.h"

namespace lagsim {
namespace {

using testing::CheckIdentity;
using testing::ListSource;
using testing::Req;
using testing::SmallConfig;

constexpr Micros kSec = kMicrosPerSecond;

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.Validate());
  c.horizon_us = 0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = RunConfig{};
  c.policy.params.rr_bandwidth_cap = 1.3;
  CHECK_THROWS_AS(Engine{c}, ConfigError);
}

TEST_CASE("single task completes after demand plus one dispatch") {
  Engine e(SmallConfig(1, PolicyKind::kCfs, kSec));
  ListSource src({Req(1, kRootGroup, 0, 100'000)});
  const RunMetrics m = e.Run(src);
  REQUIRE(m.latency_samples.size() == 1);
  // Idle to a root task: no reinsert, no descent.
  CHECK(m.latency_samples[0].latency == 100'000 + 2);
  CHECK(m.switches == 1);
  CHECK(m.tick_preemptions == 0);
  CheckIdentity(m);
}

TEST_CASE("two always-runnable tasks share one core evenly") {
  Engine e(SmallConfig(1, PolicyKind::kCfs, 10 * kSec));
  const GroupId a = e.AddGroup(kRootGroup, "a");
  const GroupId b = e.AddGroup(kRootGroup, "b");
  ListSource src({Req(1, a, 0, 100 * kSec), Req(2, b, 0, 100 * kSec)});
  const RunMetrics m = e.Run(src);
  const double ea = static_cast<double>(e.scheduler().entity(e.scheduler().group_entity(a, 0)).sum_exec);
  const double eb = static_cast<double>(e.scheduler().entity(e.scheduler().group_entity(b, 0)).sum_exec);
  const double busy = static_cast<double>(m.busy[0]);
  CHECK(ea + eb == doctest::Approx(busy));
  CHECK(std::abs(ea / busy - 0.5) <= 0.01);
  CheckIdentity(m);
}

TEST_CASE("twelve tasks on one core: preempted at every tick") {
  RunConfig c = SmallConfig(1, PolicyKind::kCfs, 18'000);
  c.switch_cost = {0, 0};
  Engine e(c);
  e.set_record_schedule(true);
  std::vector<Request> rs;
  for (int i = 0; i < 12; ++i) rs.push_back(Req(i + 1, kRootGroup, 0, 10 * kSec));
  ListSource src(rs);
  const RunMetrics m = e.Run(src);
  // Share is 9ms / 12 = 750us, below the 4ms tick: each tick switches.
  std::vector<Micros> times;
  for (const DispatchRecord& d : e.schedule()) times.push_back(d.time);
  CHECK(times == std::vector<Micros>{0, 4000, 8000, 12000, 16000});
  CHECK(m.tick_preemptions == 4);
}

TEST_CASE("single runnable task is never tick-preempted") {
  Engine e(SmallConfig(1, PolicyKind::kCfs, kSec));
  ListSource src({Req(1, kRootGroup, 0, 10 * kSec)});
  const RunMetrics m = e.Run(src);
  CHECK(m.switches == 1);
  CHECK(m.tick_preemptions == 0);
}

TEST_CASE("rr quantum expires exactly 100ms after dispatch") {
  RunConfig c = SmallConfig(1, PolicyKind::kRr, 450'000);
  c.switch_cost = {0, 0};
  Engine e(c);
  e.set_record_schedule(true);
  ListSource src({Req(1, kRootGroup, 0, 10 * kSec), Req(2, kRootGroup, 0, 10 * kSec)});
  e.Run(src);
  std::vector<Micros> times;
  for (const DispatchRecord& d : e.schedule()) times.push_back(d.time);
  CHECK(times == std::vector<Micros>{0, 100'000, 200'000, 300'000, 400'000});
}

TEST_CASE("rr bandwidth cap") {
  SUBCASE("one real-time task gets 95 percent") {
    Engine e(SmallConfig(1, PolicyKind::kRr, 10 * kSec));
    ListSource src({Req(1, kRootGroup, 0, 100 * kSec)});
    const RunMetrics m = e.Run(src);
    CHECK(std::abs(static_cast<double>(m.rt_busy) / (10.0 * kSec) - 0.95) <= 0.01);
  }
  SUBCASE("two real-time tasks and a fair task") {
    Engine e(SmallConfig(1, PolicyKind::kCfs, 10 * kSec));
    const GroupId rt = e.AddGroup(kRootGroup, "rt");
    const GroupId fair = e.AddGroup(kRootGroup, "fair");
    e.SetRealTime(rt);
    ListSource src({Req(1, rt, 0, 100 * kSec), Req(2, rt, 0, 100 * kSec),
                    Req(3, fair, 0, 100 * kSec)});
    const RunMetrics m = e.Run(src);
    const double rt_share = static_cast<double>(m.rt_busy) / (10.0 * kSec);
    const double fair_share =
        static_cast<double>(e.scheduler().entity(e.scheduler().group_entity(fair, 0)).sum_exec) /
        (10.0 * kSec);
    CHECK(std::abs(rt_share - 0.95) <= 0.01);
    CHECK(std::abs(fair_share - 0.05) <= 0.01);
    CheckIdentity(m);
  }
}

TEST_CASE("placement decision table") {
  std::vector<CoreView> v(4);
  for (auto& c : v) {
    c.idle = false;
    c.running_fair = true;
    c.nr_running = 2;
  }
  v[3].idle = true;
  v[3].running_fair = false;
  v[3].nr_running = 0;
  for (PolicyKind k : {PolicyKind::kCfs, PolicyKind::kEevdf, PolicyKind::kLags}) {
    CHECK(SelectCoreFair(v, k, 5.0) == 3);
  }
  CHECK(SelectCoreRt(v) == 3);

  std::vector<CoreView> w(3);
  const double credits[] = {9.0, 2.0, 7.0};
  for (int i = 0; i < 3; ++i) {
    w[i].idle = false;
    w[i].running_fair = true;
    w[i].current_credit = credits[i];
    w[i].nr_running = 3 - i;
  }
  CHECK(SelectCoreFair(w, PolicyKind::kLags, 5.0) == 0);
  // Nothing above 10: least loaded (core 2 has 1 runnable).
  CHECK(SelectCoreFair(w, PolicyKind::kLags, 10.0) == 2);
  CHECK(SelectCoreFair(w, PolicyKind::kCfs, 5.0) == 2);
}

// Independent statement of the placement rules, checked over random views.
CoreId OracleSelect(const std::vector<CoreView>& v, PolicyKind k, double credit) {
  std::vector<CoreId> idle, higher;
  for (CoreId c = 0; c < static_cast<CoreId>(v.size()); ++c) {
    if (v[c].idle) idle.push_back(c);
    if (v[c].running_fair && v[c].current_credit > credit) higher.push_back(c);
  }
  if (!idle.empty()) return idle.front();
  if (k == PolicyKind::kLags && !higher.empty()) return higher.front();
  int min_nr = v[0].nr_running;
  for (const CoreView& c : v) min_nr = std::min(min_nr, c.nr_running);
  for (CoreId c = 0;; ++c) {
    if (v[c].nr_running == min_nr) return c;
  }
}

TEST_CASE("placement matches the decision table exhaustively") {
  std::mt19937_64 rng(7);
  const double credit_values[] = {1.0, 5.0, 10.0, kInfiniteCredit};
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<CoreView> v(1 + rng() % 6);
    for (CoreView& c : v) {
      c.idle = rng() % 5 == 0;
      c.running_fair = !c.idle && rng() % 4 != 0;
      c.current_credit = c.running_fair ? credit_values[rng() % 4] : kInfiniteCredit;
      c.nr_running = c.idle ? 0 : 1 + static_cast<int>(rng() % 4);
    }
    const double woken = credit_values[rng() % 4];
    for (PolicyKind k : {PolicyKind::kCfs, PolicyKind::kLags}) {
      CHECK(SelectCoreFair(v, k, woken) == OracleSelect(v, k, woken));
    }
  }
}

TEST_CASE("balance decision table") {
  std::vector<CoreView> v(2);
  v[0].idle = false;
  v[0].nr_running = 4;
  CHECK(FindBusiest(v, 1, 2) == 0);
  v[0].nr_running = 1;
  CHECK(FindBusiest(v, 1, 2) == kNoCore);

  std::vector<PullCandidate> c = {{11, 8.0}, {12, 1.0}, {13, 5.0}};
  CHECK(*ChoosePullTask(c, PolicyKind::kLags) == 1);
  CHECK(*ChoosePullTask(c, PolicyKind::kCfs) == 0);
  std::vector<PullCandidate> unflagged = {{21, kInfiniteCredit}, {20, kInfiniteCredit}};
  CHECK(*ChoosePullTask(unflagged, PolicyKind::kLags) == 1);
  CHECK_FALSE(ChoosePullTask({}, PolicyKind::kCfs).has_value());
}

TEST_CASE("idle core pulls from a loaded core") {
  // Core 1 finishes its short task and pulls one of core 0's queued tasks.
  Engine e(SmallConfig(2, PolicyKind::kCfs, kSec));
  // Placement: 1 -> core 0, 2 -> core 1, 3 -> core 0 (tie, lowest id).
  ListSource src({Req(1, kRootGroup, 0, 10 * kSec), Req(2, kRootGroup, 0, 1000),
                  Req(3, kRootGroup, 0, 10 * kSec)});
  const RunMetrics m = e.Run(src);
  CHECK(m.migrations == 1);
  CHECK(m.work_conservation_violations == 0);
  CheckIdentity(m);
}

TEST_CASE("balanced cores do not migrate") {
  Engine e(SmallConfig(2, PolicyKind::kCfs, kSec));
  ListSource src({Req(1, kRootGroup, 0, 10 * kSec), Req(2, kRootGroup, 0, 10 * kSec),
                  Req(3, kRootGroup, 0, 10 * kSec), Req(4, kRootGroup, 0, 10 * kSec)});
  const RunMetrics m = e.Run(src);
  CHECK(m.migrations == 0);
}

TEST_CASE("tick preemption rule") {
  PolicyParams p;
  CHECK_FALSE(TickPreempt(PolicyKind::kCfs, 1, 1'000'000, p));
  CHECK(TickPreempt(PolicyKind::kCfs, 12, 750, p));
  CHECK_FALSE(TickPreempt(PolicyKind::kCfs, 12, 749, p));
  CHECK(TickPreempt(PolicyKind::kCfs, 2, 3000, p));
  CHECK_FALSE(TickPreempt(PolicyKind::kCfs, 2, 2999, p));
  CHECK(TickPreempt(PolicyKind::kEevdf, 2, 3000, p));
}

TEST_CASE("parallel request completes when all workers do") {
  Engine e(SmallConfig(2, PolicyKind::kCfs, kSec));
  ListSource src({Req(1, kRootGroup, 0, 50'000, 2)});
  const RunMetrics m = e.Run(src);
  REQUIRE(m.latency_samples.size() == 1);
  CHECK(m.latency_samples[0].latency == 50'000 + 2);
  CHECK(m.switches == 2);
}

TEST_CASE("malformed streams are rejected") {
  Engine e(SmallConfig(1, PolicyKind::kCfs, kSec));
  ListSource src({Req(1, kRootGroup, 500, 10), Req(2, kRootGroup, 100, 10)});
  CHECK_THROWS_AS(e.Run(src), SimError);
  Engine f(SmallConfig(1, PolicyKind::kCfs, kSec));
  ListSource bad({Req(1, 99, 0, 10)});
  CHECK_THROWS_AS(f.Run(bad), SimError);
}

TEST_CASE("deeper nesting costs more per switch") {
  auto run = [](int depth) {
    Engine e(SmallConfig(2, PolicyKind::kCfs, 2 * kSec));
    std::vector<GroupId> leaves;
    for (int f = 0; f < 8; ++f) {
      GroupId g = kRootGroup;
      for (int d = 0; d < depth; ++d) g = e.AddGroup(g, "g");
      leaves.push_back(g);
    }
    std::vector<Request> rs;
    std::mt19937_64 rng(3);
    Micros t = 0;
    for (uint64_t i = 1; i <= 2000; ++i) {
      t += static_cast<Micros>(rng() % 1500);
      rs.push_back(Req(i, leaves[rng() % leaves.size()], t, 500 + rng() % 2000));
    }
    ListSource src(rs);
    const RunMetrics m = e.Run(src);
    return static_cast<double>(m.switch_cost_total) / static_cast<double>(m.switches);
  };
  CHECK(run(4) > run(1));
}

}  // namespace
}  // namespace lagsim
