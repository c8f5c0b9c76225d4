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

#ifndef LAGSIM_RT_CLASS_H_
#define LAGSIM_RT_CLASS_H_

#include <cstddef>
#include <deque>
#include <optional>

#include "lagsim/policy.h"
#include "lagsim/types.h"

namespace lagsim {

// Per-core round-robin real-time queue. Every task gets its own quantum; the
// class as a whole may run for at most rr_bandwidth_cap of each rt period
// window (windows are aligned to multiples of rt_period_us), after which it
// is throttled until the next window.
class RtRunQueue {
 public:
  explicit RtRunQueue(PolicyParams params = {});

  // Appends at the tail with a fresh quantum.
  void Enqueue(EntityHandle task);
  // Returns false if the task was not queued.
  bool Remove(EntityHandle task);
  // Quantum expiry: the head moves to the tail with a fresh quantum.
  void RotateHead();

  bool empty() const { return queue_.empty(); }
  size_t size() const { return queue_.size(); }
  EntityHandle head() const;
  Micros head_quantum_left() const;
  bool Contains(EntityHandle task) const;
  // Snapshot of the queue, head first.
  std::deque<EntityHandle> Tasks() const;

  // The head task if the class may run at `now`.
  std::optional<EntityHandle> Schedule(Micros now);

  // Accounts head execution over [start, end).
  void Charge(Micros start, Micros end);
  bool Throttled(Micros now);
  // Runtime left in the current window.
  Micros BudgetLeft(Micros now);
  Micros NextWindowStart(Micros now) const;
  Micros used_in_window() const { return used_; }

 private:
  struct Entry {
    EntityHandle task;
    Micros quantum_left;
  };

  void Roll(Micros now);
  Micros Cap() const;

  PolicyParams params_;
  std::deque<Entry> queue_;
  int64_t window_ = 0;
  Micros used_ = 0;
};

}  // namespace lagsim

#endif  // LAGSIM_RT_CLASS_H_
