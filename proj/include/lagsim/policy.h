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

// Scheduling policies: ordering keys for the fair run queues, wakeup
// preemption predicates and parameters for the round-robin real-time class.

#ifndef LAGSIM_POLICY_H_
#define LAGSIM_POLICY_H_

#include <string>
#include <string_view>

#include "lagsim/types.h"

namespace lagsim {

enum class PolicyKind { kCfs, kEevdf, kRr, kLags };

struct PolicyParams {
  Micros rr_quantum_us = 100'000;
  // Fraction of every rt_period_us the RR class may consume.
  double rr_bandwidth_cap = 0.95;
  Micros rt_period_us = 1'000'000;
  Micros wakeup_granularity_us = 1'000;
  Micros eevdf_base_slice_us = 3'000;
  Micros sched_latency_us = 6'000;
  Micros min_granularity_us = 750;

  // Throws ConfigError naming the offending field.
  void Validate() const;
};

struct Policy {
  PolicyKind kind = PolicyKind::kCfs;
  PolicyParams params;
};

std::string_view PolicyName(PolicyKind kind);
// Accepts CFS, EEVDF, RR and LAGS (case-insensitive).
PolicyKind ParsePolicyKind(std::string_view name);

// max(sched_latency, nr_running * min_granularity).
Micros SchedulingPeriod(int nr_running, const PolicyParams& params);

// What the primary component of an ordering key measures.
enum class KeyBasis {
  kVruntime,      // CFS, and LAGS entities outside function groups
  kDeadline,      // EEVDF, eligible entity
  kEligibleTime,  // EEVDF, not yet eligible: sorts after every eligible one
  kLoadCredit,    // LAGS, entity of a latency-aware group
};

struct OrderingKey {
  KeyBasis basis = KeyBasis::kVruntime;
  double primary = 0.0;
  // Always carried: the fallback when a credit key meets a vruntime key.
  double vruntime = 0.0;
  EntityId id = 0;
};

// The subset of entity state the policies read.
struct EntityKeyView {
  EntityId id = 0;
  bool is_group = false;
  double vruntime = 0.0;
  double vdeadline = 0.0;
  double lag = 0.0;
  // Load Credit of the latency-aware group governing this entity, if any.
  bool has_credit = false;
  double credit = 0.0;
};

OrderingKey ComputeOrderingKey(const EntityKeyView& entity, PolicyKind policy);

// Strict weak "runs before" relation for keys of the same policy. Credit keys
// compare by credit only against other credit keys; a credit key meeting a
// vruntime key falls back to vruntime on both sides.
bool KeyBefore(const OrderingKey& a, const OrderingKey& b);

enum class SchedClass { kFair, kRealTime };

// Whether a woken entity preempts the current one. For fair-class entities
// the two keys must belong to siblings in one run queue.
bool CheckPreemptWakeup(SchedClass curr_class, const OrderingKey& curr,
                        SchedClass woken_class, const OrderingKey& woken,
                        const PolicyParams& params);

}  // namespace lagsim

#endif  // LAGSIM_POLICY_H_
