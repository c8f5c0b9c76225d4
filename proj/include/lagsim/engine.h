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

// Discrete-event multicore simulation.
//
// Time is integral microseconds. Each core alternates between idle time,
// switch overhead (charged on every dispatch of a task, during which nothing
// progresses) and busy time, so per-core busy + idle + overhead equals the
// horizon exactly. Fair-class preemption happens on ticks and on wakeup;
// completions, RR quantum expiry and RR throttling use exact per-core timers.

#ifndef LAGSIM_ENGINE_H_
#define LAGSIM_ENGINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lagsim/metrics.h"
#include "lagsim/policy.h"
#include "lagsim/rt_class.h"
#include "lagsim/sched_core.h"
#include "lagsim/types.h"

namespace lagsim {

struct SwitchCostModel {
  Micros base_cost_us = 2;
  Micros per_level_cost_us = 3;

  Micros Cost(int reinsert_levels, int descent_levels) const {
    return base_cost_us +
           per_level_cost_us * static_cast<Micros>(reinsert_levels + descent_levels);
  }
};

struct RunConfig {
  int cores = 12;
  Policy policy;
  SwitchCostModel switch_cost;
  Micros tick_us = 4'000;
  Micros horizon_us = 60 * kMicrosPerSecond;
  uint32_t load_credit_window_ticks = 1000;
  uint64_t seed = 1;
  Micros balance_interval_us = 16'000;
  // Minimum runnable tasks on the busiest core for an idle core to pull.
  int imbalance_threshold = 2;

  // Throws ConfigError naming the offending field.
  void Validate() const;
};

struct Request {
  uint64_t id = 0;
  FunctionId function = 0;
  // Group the request's tasks are created in.
  GroupId group = kRootGroup;
  Micros arrival = 0;
  int workers = 1;
  Micros per_worker_us = 0;
};

struct CompletedRequest {
  Request request;
  Micros completion = 0;
};

// Supplies requests to a run. Open-loop arrivals are pulled one at a time in
// time order; closed-loop follow-ups are returned from OnCompletion.
class RequestSource {
 public:
  virtual ~RequestSource() = default;
  virtual std::optional<Request> NextArrival() = 0;
  // Called once per completed request, at its completion time. Requests
  // appended to `follow_ups` must not arrive before `done.completion`.
  virtual void OnCompletion(const CompletedRequest& done,
                            std::vector<Request>* follow_ups) {
    (void)done;
    (void)follow_ups;
  }
};

// One dispatch decision, for schedule comparison.
struct DispatchRecord {
  Micros time = 0;
  CoreId core = 0;
  // Entity id of the dispatched task; 0 when the core went idle.
  EntityId task = 0;
  bool operator==(const DispatchRecord&) const = default;
};

// Inputs of the placement and balancing decisions, one per core.
struct CoreView {
  bool idle = true;
  // Runnable tasks on the core (both classes, running one included).
  int nr_running = 0;
  // Load Credit of the running task's group as of its dispatch; +inf when
  // idle or not in a latency-aware group.
  double current_credit = kInfiniteCredit;
  bool running_fair = false;
  int rt_nr_running = 0;
};

// Core for a waking fair task. CFS, EEVDF and RR pick the first idle core,
// else the least loaded (lowest id on ties). LAGS inserts a step between the
// two: the first core whose current credit exceeds the woken task's.
CoreId SelectCoreFair(std::span<const CoreView> cores, PolicyKind policy,
                      double woken_credit);
// Core for a waking RR task: first idle, else first running a fair task,
// else fewest RR tasks.
CoreId SelectCoreRt(std::span<const CoreView> cores);
// Core with the most runnable tasks other than `dst` (lowest id on ties), or
// kNoCore when none has at least `threshold`.
CoreId FindBusiest(std::span<const CoreView> cores, CoreId dst, int threshold);

struct PullCandidate {
  EntityId id = 0;
  double credit = kInfiniteCredit;
};
// Index of the task an idle core pulls: lowest id, or under LAGS lowest
// credit then lowest id. nullopt for no candidates.
std::optional<size_t> ChoosePullTask(std::span<const PullCandidate> candidates,
                                     PolicyKind policy);

// Whether the running fair task is preempted at a tick, given the number of
// fair tasks on its core and its runtime since dispatch.
bool TickPreempt(PolicyKind policy, int nr_running, Micros ran_since_dispatch,
                 const PolicyParams& params);

class Engine {
 public:
  explicit Engine(RunConfig config);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const RunConfig& config() const { return config_; }
  Scheduler& scheduler() { return sched_; }
  const Scheduler& scheduler() const { return sched_; }

  GroupId AddGroup(GroupId parent, std::string name, bool latency_aware = false);
  // Tasks created directly in `group` run in the RR real-time class.
  void SetRealTime(GroupId group);
  bool IsRealTime(GroupId group) const;

  void set_record_schedule(bool on) { record_schedule_ = on; }
  void set_measure_from(Micros t) { measure_from_ = t; }
  void set_latency_target(Micros t) { latency_target_ = t; }

  // Runs to the horizon. Throws SimError on a malformed request stream
  // (time regression, unknown group, empty demand). May be called once.
  RunMetrics Run(RequestSource& source);

  const std::vector<DispatchRecord>& schedule() const { return schedule_; }

 private:
  enum class EventKind : uint8_t { kCoreTimer, kArrival, kTick, kBalance };

  struct Event {
    Micros time;
    EventKind kind;
    uint64_t seq;
    CoreId core;
    uint64_t token;
    Request request;
    bool from_source;
  };
  struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.kind != b.kind) return a.kind > b.kind;
      return a.seq > b.seq;
    }
  };

  struct TaskInfo {
    uint32_t request_slot = 0;
    Micros remaining = 0;
    bool rt = false;
    // Start of the current wait, or -1 while running or not runnable.
    Micros wait_since = -1;
  };

  struct InFlight {
    Request request;
    int workers_left = 0;
  };

  struct Core {
    EntityHandle current = kNoEntity;
    bool current_rt = false;
    Micros clock = 0;
    Micros overhead_end = 0;
    double cached_credit = kInfiniteCredit;
    std::unique_ptr<RtRunQueue> rt;
    uint64_t token = 0;
    // Completed task awaiting destruction once it is no longer current.
    EntityHandle zombie = kNoEntity;
    // Fair tasks queued on this core, by entity id.
    std::set<std::pair<EntityId, EntityHandle>> fair_tasks;
  };

  void Push(Event e);
  void PushSourceArrival(RequestSource& source);
  void HandleArrival(const Request& r, Micros now);
  void HandleCoreTimer(CoreId c, Micros now);
  void HandleTick(int64_t tick, Micros now);
  void HandleBalance(Micros now);

  void Advance(CoreId c, Micros now);
  void Reschedule(CoreId c, Micros now);
  void ArmTimer(CoreId c, Micros now);
  void CompleteCurrent(CoreId c, Micros now, RequestSource& source);
  bool TryPull(CoreId dst, Micros now);
  void PlaceTask(EntityHandle task, Micros now);
  void Dispatch(CoreId c, EntityHandle next, bool next_rt, int reinsert,
                int descent, Micros now);

  std::vector<CoreView> Views() const;
  CoreView ViewOf(CoreId c) const;
  int Runnable(CoreId c) const;
  TaskInfo& info(EntityHandle h);

  RunConfig config_;
  Scheduler sched_;
  std::vector<Core> cores_;
  std::vector<bool> rt_groups_;
  std::vector<TaskInfo> tasks_;
  std::vector<InFlight> inflight_;
  std::vector<uint32_t> free_inflight_;
  size_t inflight_count_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
  uint64_t seq_ = 0;
  Micros last_source_arrival_ = 0;
  bool ran_ = false;
  bool record_schedule_ = false;
  Micros measure_from_ = 0;
  Micros latency_target_ = kDefaultLatencyTargetUs;
  std::vector<DispatchRecord> schedule_;
  RunMetrics metrics_;
  RequestSource* source_ = nullptr;
};

}  // namespace lagsim

#endif  // LAGSIM_ENGINE_H_
