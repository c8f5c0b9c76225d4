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

#include "lagsim/policy.h"

#include <algorithm>
#include <cctype>

namespace lagsim {

void PolicyParams::Validate() const {
  if (!(rr_bandwidth_cap > 0.0 && rr_bandwidth_cap <= 1.0)) {
    throw ConfigError("rr_bandwidth_cap: must be in (0, 1]");
  }
  if (rr_quantum_us <= 0) throw ConfigError("rr_quantum_us: must be > 0");
  if (rt_period_us <= 0) throw ConfigError("rt_period_us: must be > 0");
  if (wakeup_granularity_us < 0) {
    throw ConfigError("wakeup_granularity_us: must be >= 0");
  }
  if (eevdf_base_slice_us <= 0) {
    throw ConfigError("eevdf_base_slice_us: must be > 0");
  }
  if (sched_latency_us <= 0) throw ConfigError("sched_latency_us: must be > 0");
  if (min_granularity_us <= 0) {
    throw ConfigError("min_granularity_us: must be > 0");
  }
}

std::string_view PolicyName(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kCfs:
      return "CFS";
    case PolicyKind::kEevdf:
      return "EEVDF";
    case PolicyKind::kRr:
      return "RR";
    case PolicyKind::kLags:
      return "LAGS";
  }
  return "?";
}

PolicyKind ParsePolicyKind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (upper == "CFS") return PolicyKind::kCfs;
  if (upper == "EEVDF") return PolicyKind::kEevdf;
  if (upper == "RR") return PolicyKind::kRr;
  if (upper == "LAGS") return PolicyKind::kLags;
  throw ConfigError("policy: unknown policy '" + std::string(name) + "'");
}

Micros SchedulingPeriod(int nr_running, const PolicyParams& params) {
  return std::max(params.sched_latency_us,
                  static_cast<Micros>(nr_running) * params.min_granularity_us);
}

OrderingKey ComputeOrderingKey(const EntityKeyView& entity, PolicyKind policy) {
  OrderingKey key;
  key.vruntime = entity.vruntime;
  key.id = entity.id;
  switch (policy) {
    case PolicyKind::kLags:
      if (entity.is_group && entity.has_credit) {
        key.basis = KeyBasis::kLoadCredit;
        key.primary = entity.credit;
        return key;
      }
      break;
    case PolicyKind::kEevdf:
      if (entity.lag >= 0.0) {
        key.basis = KeyBasis::kDeadline;
        key.primary = entity.vdeadline;
      } else {
        key.basis = KeyBasis::kEligibleTime;
        key.primary = entity.vruntime;
      }
      return key;
    case PolicyKind::kCfs:
    case PolicyKind::kRr:
      break;
  }
  key.basis = KeyBasis::kVruntime;
  key.primary = entity.vruntime;
  return key;
}

namespace {

int Tier(KeyBasis basis) { return basis == KeyBasis::kEligibleTime ? 1 : 0; }

}  // namespace

bool KeyBefore(const OrderingKey& a, const OrderingKey& b) {
  const bool a_credit = a.basis == KeyBasis::kLoadCredit;
  const bool b_credit = b.basis == KeyBasis::kLoadCredit;
  if (a_credit != b_credit) {
    if (a.vruntime != b.vruntime) return a.vruntime < b.vruntime;
    return a.id < b.id;
  }
  if (Tier(a.basis) != Tier(b.basis)) return Tier(a.basis) < Tier(b.basis);
  if (a.primary != b.primary) return a.primary < b.primary;
  return a.id < b.id;
}

bool CheckPreemptWakeup(SchedClass curr_class, const OrderingKey& curr,
                        SchedClass woken_class, const OrderingKey& woken,
                        const PolicyParams& params) {
  if (woken_class != curr_class) return woken_class == SchedClass::kRealTime;
  if (woken_class == SchedClass::kRealTime) return false;

  const double gran = static_cast<double>(params.wakeup_granularity_us);
  const bool curr_credit = curr.basis == KeyBasis::kLoadCredit;
  const bool woken_credit = woken.basis == KeyBasis::kLoadCredit;
  if (curr_credit && woken_credit) return woken.primary < curr.primary;
  if (curr_credit || woken_credit) return curr.vruntime - woken.vruntime > gran;

  if (woken.basis == KeyBasis::kEligibleTime) return false;
  if (woken.basis == KeyBasis::kDeadline) {
    if (curr.basis == KeyBasis::kEligibleTime) return true;
    return curr.primary - woken.primary > gran;
  }
  return curr.primary - woken.primary > gran;
}

}  // namespace lagsim
