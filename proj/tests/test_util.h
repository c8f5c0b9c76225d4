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

#ifndef LAGSIM_TESTS_TEST_UTIL_H_
#define LAGSIM_TESTS_TEST_UTIL_H_

#include <optional>
#include <vector>

#include "lagsim/engine.h"

namespace lagsim::testing {

// Replays a fixed, time-ordered request list.
class ListSource : public RequestSource {
 public:
  explicit ListSource(std::vector<Request> requests) : requests_(std::move(requests)) {}
  std::optional<Request> NextArrival() override {
    if (next_ >= requests_.size()) return std::nullopt;
    return requests_[next_++];
  }

 private:
  std::vector<Request> requests_;
  size_t next_ = 0;
};

inline Request Req(uint64_t id, GroupId group, Micros arrival, Micros demand,
                   int workers = 1) {
  Request r;
  r.id = id;
  r.function = static_cast<FunctionId>(id);
  r.group = group;
  r.arrival = arrival;
  r.per_worker_us = demand;
  r.workers = workers;
  return r;
}

inline RunConfig SmallConfig(int cores, PolicyKind kind, Micros horizon) {
  RunConfig c;
  c.cores = cores;
  c.policy.kind = kind;
  c.horizon_us = horizon;
  return c;
}

inline void CheckIdentity(const RunMetrics& m) {
  for (int c = 0; c < m.cores(); ++c) {
    CHECK(m.busy[c] + m.idle[c] + m.overhead[c] == m.horizon);
  }
}

}  // namespace lagsim::testing

#endif  // LAGSIM_TESTS_TEST_UTIL_H_
