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

#include <string>

#include "lagsim/policy.h"

namespace lagsim {
namespace {

EntityKeyView Task(EntityId id, double vruntime) {
  EntityKeyView v;
  v.id = id;
  v.vruntime = vruntime;
  return v;
}

EntityKeyView Group(EntityId id, double vruntime, double credit) {
  EntityKeyView v;
  v.id = id;
  v.is_group = true;
  v.vruntime = vruntime;
  v.has_credit = true;
  v.credit = credit;
  return v;
}

TEST_CASE("policy names round trip") {
  for (PolicyKind k : {PolicyKind::kCfs, PolicyKind::kEevdf, PolicyKind::kRr,
                       PolicyKind::kLags}) {
    CHECK(ParsePolicyKind(PolicyName(k)) == k);
  }
  CHECK(ParsePolicyKind("lags") == PolicyKind::kLags);
  CHECK_THROWS_AS(ParsePolicyKind("fifo"), ConfigError);
}

TEST_CASE("param validation names the field") {
  PolicyParams p;
  CHECK_NOTHROW(p.Validate());
  p.rr_bandwidth_cap = 1.3;
  try {
    p.Validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("rr_bandwidth_cap") != std::string::npos);
  }
  p = PolicyParams{};
  p.rr_quantum_us = 0;
  CHECK_THROWS_AS(p.Validate(), ConfigError);
}

TEST_CASE("scheduling period") {
  PolicyParams p;
  CHECK(SchedulingPeriod(1, p) == 6000);
  CHECK(SchedulingPeriod(8, p) == 6000);
  CHECK(SchedulingPeriod(12, p) == 9000);
  CHECK(SchedulingPeriod(12, p) / 12 == 750);
}

TEST_CASE("cfs orders by vruntime") {
  const OrderingKey a = ComputeOrderingKey(Task(1, 5000), PolicyKind::kCfs);
  const OrderingKey b = ComputeOrderingKey(Task(2, 3000), PolicyKind::kCfs);
  const OrderingKey c = ComputeOrderingKey(Task(3, 9000), PolicyKind::kCfs);
  CHECK(KeyBefore(b, a));
  CHECK(KeyBefore(a, c));
  CHECK_FALSE(KeyBefore(a, a));
}

TEST_CASE("equal keys break ties by id") {
  const OrderingKey a = ComputeOrderingKey(Task(7, 100), PolicyKind::kCfs);
  const OrderingKey b = ComputeOrderingKey(Task(4, 100), PolicyKind::kCfs);
  CHECK(KeyBefore(b, a));
}

TEST_CASE("lags: lowest credit first") {
  const OrderingKey a = ComputeOrderingKey(Group(1, 0, 7.0), PolicyKind::kLags);
  const OrderingKey b = ComputeOrderingKey(Group(2, 9e9, 3.0), PolicyKind::kLags);
  CHECK(a.basis == KeyBasis::kLoadCredit);
  CHECK(KeyBefore(b, a));
}

TEST_CASE("lags: credit only applies to group entities") {
  EntityKeyView t = Task(1, 10);
  t.has_credit = true;
  t.credit = 1.0;
  CHECK(ComputeOrderingKey(t, PolicyKind::kLags).basis == KeyBasis::kVruntime);
  // Under CFS credits are ignored.
  CHECK(ComputeOrderingKey(Group(2, 5, 1.0), PolicyKind::kCfs).basis ==
        KeyBasis::kVruntime);
}

TEST_CASE("lags: mixed keys compare vruntime") {
  // System group (no credit) vs flagged function group at the same level.
  EntityKeyView sys;
  sys.id = 10;
  sys.is_group = true;
  sys.vruntime = 2000;
  const OrderingKey s = ComputeOrderingKey(sys, PolicyKind::kLags);
  const OrderingKey f1 = ComputeOrderingKey(Group(11, 1000, 50.0), PolicyKind::kLags);
  const OrderingKey f2 = ComputeOrderingKey(Group(12, 3000, 1.0), PolicyKind::kLags);
  CHECK(KeyBefore(f1, s));   // 1000 < 2000 by vruntime
  CHECK(KeyBefore(s, f2));   // 2000 < 3000 by vruntime
  CHECK(KeyBefore(f2, f1));  // both credited: 1.0 < 50.0
}

TEST_CASE("eevdf: shorter slice gets the earlier deadline") {
  // Equal eligibility: same vruntime, lag 0, default weight.
  const double v = 1000.0;
  EntityKeyView a = Task(1, v), b = Task(2, v);
  a.vdeadline = v + 3000.0;
  b.vdeadline = v + 30000.0;
  const OrderingKey ka = ComputeOrderingKey(a, PolicyKind::kEevdf);
  const OrderingKey kb = ComputeOrderingKey(b, PolicyKind::kEevdf);
  CHECK(ka.basis == KeyBasis::kDeadline);
  CHECK(KeyBefore(ka, kb));
}

TEST_CASE("eevdf: ineligible sorts after every eligible") {
  EntityKeyView late = Task(1, 100);
  late.vdeadline = 1.0;
  late.lag = -5.0;
  EntityKeyView ok = Task(2, 200);
  ok.vdeadline = 1e9;
  ok.lag = 0.0;
  CHECK(KeyBefore(ComputeOrderingKey(ok, PolicyKind::kEevdf),
                  ComputeOrderingKey(late, PolicyKind::kEevdf)));
}

TEST_CASE("wakeup preemption") {
  PolicyParams p;
  auto cfs = [](double v, EntityId id) {
    return ComputeOrderingKey(Task(id, v), PolicyKind::kCfs);
  };
  // Inside the 1ms margin.
  CHECK_FALSE(CheckPreemptWakeup(SchedClass::kFair, cfs(10000, 1), SchedClass::kFair,
                                 cfs(9500, 2), p));
  CHECK(CheckPreemptWakeup(SchedClass::kFair, cfs(10000, 1), SchedClass::kFair,
                           cfs(8000, 2), p));
  // RR always preempts fair; fair never preempts RR.
  CHECK(CheckPreemptWakeup(SchedClass::kFair, cfs(0, 1), SchedClass::kRealTime,
                           cfs(1e9, 2), p));
  CHECK_FALSE(CheckPreemptWakeup(SchedClass::kRealTime, cfs(1e9, 1),
                                 SchedClass::kFair, cfs(0, 2), p));
  CHECK_FALSE(CheckPreemptWakeup(SchedClass::kRealTime, cfs(0, 1),
                                 SchedClass::kRealTime, cfs(0, 2), p));
  // LAGS, both credited: no margin.
  const OrderingKey curr = ComputeOrderingKey(Group(1, 0, 9.0), PolicyKind::kLags);
  const OrderingKey woken = ComputeOrderingKey(Group(2, 1e9, 2.0), PolicyKind::kLags);
  CHECK(CheckPreemptWakeup(SchedClass::kFair, curr, SchedClass::kFair, woken, p));
  CHECK_FALSE(CheckPreemptWakeup(SchedClass::kFair, woken, SchedClass::kFair, curr, p));
  const OrderingKey close = ComputeOrderingKey(Group(3, 0, 8.999), PolicyKind::kLags);
  CHECK(CheckPreemptWakeup(SchedClass::kFair, curr, SchedClass::kFair, close, p));
}

}  // namespace
}  // namespace lagsim
