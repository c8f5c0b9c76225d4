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

#include "lagsim/rt_class.h"

namespace lagsim {
namespace {

TEST_CASE("empty queue schedules nothing") {
  RtRunQueue q;
  CHECK_FALSE(q.Schedule(0).has_value());
}

TEST_CASE("fifo with per-task quanta") {
  RtRunQueue q;
  q.Enqueue(1);
  q.Enqueue(2);
  CHECK(q.Schedule(0) == 1u);
  CHECK(q.head_quantum_left() == 100000);
  q.Charge(0, 40000);
  CHECK(q.head_quantum_left() == 60000);
  q.RotateHead();
  CHECK(q.head() == 2u);
  CHECK(q.head_quantum_left() == 100000);
  CHECK(q.Remove(1));
  CHECK_FALSE(q.Remove(1));
  CHECK(q.size() == 1);
}

TEST_CASE("bandwidth cap throttles at 95 percent") {
  RtRunQueue q;
  q.Enqueue(1);
  CHECK(q.BudgetLeft(0) == 950000);
  q.Charge(0, 950000);
  CHECK(q.Throttled(950000));
  CHECK_FALSE(q.Schedule(950000).has_value());
  CHECK(q.NextWindowStart(950000) == 1000000);
  CHECK_FALSE(q.Throttled(1000000));
  CHECK(q.BudgetLeft(1000000) == 950000);
}

TEST_CASE("charge splits across windows") {
  RtRunQueue q;
  q.Enqueue(1);
  q.Charge(900000, 1100000);
  CHECK(q.used_in_window() == 100000);
  CHECK(q.BudgetLeft(1100000) == 850000);
}

TEST_CASE("validation of cap") {
  PolicyParams p;
  p.rr_bandwidth_cap = 1.3;
  CHECK_THROWS_AS(p.Validate(), ConfigError);
}

}  // namespace
}  // namespace lagsim
