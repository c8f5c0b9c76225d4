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

#include "lagsim/rt_class.h"

#include <algorithm>
#include <cmath>

namespace lagsim {

RtRunQueue::RtRunQueue(PolicyParams params) : params_(params) {}

void RtRunQueue::Enqueue(EntityHandle task) {
  queue_.push_back({task, params_.rr_quantum_us});
}

bool RtRunQueue::Remove(EntityHandle task) {
  auto it = std::find_if(queue_.begin(), queue_.end(),
                         [task](const Entry& e) { return e.task == task; });
  if (it == queue_.end()) return false;
  queue_.erase(it);
  return true;
}

void RtRunQueue::RotateHead() {
  if (queue_.empty()) return;
  Entry e = queue_.front();
  queue_.pop_front();
  e.quantum_left = params_.rr_quantum_us;
  queue_.push_back(e);
}

EntityHandle RtRunQueue::head() const {
  return queue_.empty() ? kNoEntity : queue_.front().task;
}

Micros RtRunQueue::head_quantum_left() const {
  return queue_.empty() ? 0 : queue_.front().quantum_left;
}

bool RtRunQueue::Contains(EntityHandle task) const {
  return std::any_of(queue_.begin(), queue_.end(),
                     [task](const Entry& e) { return e.task == task; });
}

std::deque<EntityHandle> RtRunQueue::Tasks() const {
  std::deque<EntityHandle> out;
  for (const Entry& e : queue_) out.push_back(e.task);
  return out;
}

std::optional<EntityHandle> RtRunQueue::Schedule(Micros now) {
  if (queue_.empty() || Throttled(now)) return std::nullopt;
  return queue_.front().task;
}

Micros RtRunQueue::Cap() const {
  return static_cast<Micros>(std::llround(params_.rr_bandwidth_cap *
                                          static_cast<double>(params_.rt_period_us)));
}

void RtRunQueue::Roll(Micros now) {
  const int64_t w = now / params_.rt_period_us;
  if (w != window_) {
    window_ = w;
    used_ = 0;
  }
}

void RtRunQueue::Charge(Micros start, Micros end) {
  while (start < end) {
    Roll(start);
    const Micros window_end = (window_ + 1) * params_.rt_period_us;
    const Micros piece = std::min(end, window_end) - start;
    used_ += piece;
    if (!queue_.empty()) queue_.front().quantum_left -= piece;
    start += piece;
  }
}

bool RtRunQueue::Throttled(Micros now) { return BudgetLeft(now) <= 0; }

Micros RtRunQueue::BudgetLeft(Micros now) {
  Roll(now);
  return std::max<Micros>(0, Cap() - used_);
}

Micros RtRunQueue::NextWindowStart(Micros now) const {
  return (now / params_.rt_period_us + 1) * params_.rt_period_us;
}

}  // namespace lagsim
