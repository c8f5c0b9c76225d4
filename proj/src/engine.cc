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

#include "lagsim/engine.h"

#include <algorithm>
#include <utility>

namespace lagsim {

void RunConfig::Validate() const {
  if (cores < 1 || cores > 4096) throw ConfigError("cores: must be in [1, 4096]");
  if (tick_us <= 0) throw ConfigError("tick_us: must be > 0");
  if (horizon_us <= 0) throw ConfigError("horizon_us: must be > 0");
  if (balance_interval_us <= 0) {
    throw ConfigError("balance_interval_us: must be > 0");
  }
  if (imbalance_threshold < 1) {
    throw ConfigError("imbalance_threshold: must be >= 1");
  }
  if (switch_cost.base_cost_us < 0) {
    throw ConfigError("switch_cost.base_cost_us: must be >= 0");
  }
  if (switch_cost.per_level_cost_us < 0) {
    throw ConfigError("switch_cost.per_level_cost_us: must be >= 0");
  }
  policy.params.Validate();
}

CoreId SelectCoreFair(std::span<const CoreView> cores, PolicyKind policy,
                      double woken_credit) {
  for (size_t c = 0; c < cores.size(); ++c) {
    if (cores[c].idle) return static_cast<CoreId>(c);
  }
  if (policy == PolicyKind::kLags) {
    for (size_t c = 0; c < cores.size(); ++c) {
      if (cores[c].running_fair && cores[c].current_credit > woken_credit) {
        return static_cast<CoreId>(c);
      }
    }
  }
  CoreId best = 0;
  for (size_t c = 1; c < cores.size(); ++c) {
    if (cores[c].nr_running < cores[best].nr_running) best = static_cast<CoreId>(c);
  }
  return best;
}

CoreId SelectCoreRt(std::span<const CoreView> cores) {
  for (size_t c = 0; c < cores.size(); ++c) {
    if (cores[c].idle) return static_cast<CoreId>(c);
  }
  for (size_t c = 0; c < cores.size(); ++c) {
    if (cores[c].running_fair) return static_cast<CoreId>(c);
  }
  CoreId best = 0;
  for (size_t c = 1; c < cores.size(); ++c) {
    if (cores[c].rt_nr_running < cores[best].rt_nr_running) {
      best = static_cast<CoreId>(c);
    }
  }
  return best;
}

CoreId FindBusiest(std::span<const CoreView> cores, CoreId dst, int threshold) {
  CoreId best = kNoCore;
  for (size_t c = 0; c < cores.size(); ++c) {
    if (static_cast<CoreId>(c) == dst) continue;
    if (best == kNoCore || cores[c].nr_running > cores[best].nr_running) {
      best = static_cast<CoreId>(c);
    }
  }
  if (best == kNoCore || cores[best].nr_running < threshold) return kNoCore;
  return best;
}

std::optional<size_t> ChoosePullTask(std::span<const PullCandidate> candidates,
                                     PolicyKind policy) {
  if (candidates.empty()) return std::nullopt;
  size_t best = 0;
  for (size_t i = 1; i < candidates.size(); ++i) {
    const PullCandidate& a = candidates[i];
    const PullCandidate& b = candidates[best];
    bool better;
    if (policy == PolicyKind::kLags && a.credit != b.credit) {
      better = a.credit < b.credit;
    } else {
      better = a.id < b.id;
    }
    if (better) best = i;
  }
  return best;
}

bool TickPreempt(PolicyKind policy, int nr_running, Micros ran_since_dispatch,
                 const PolicyParams& params) {
  if (nr_running <= 1) return false;
  switch (policy) {
    case PolicyKind::kEevdf:
      return ran_since_dispatch >= params.eevdf_base_slice_us;
    case PolicyKind::kRr:
      return false;
    case PolicyKind::kCfs:
    case PolicyKind::kLags:
      break;
  }
  return ran_since_dispatch >= SchedulingPeriod(nr_running, params) / nr_running;
}

namespace {

RunConfig Validated(RunConfig config) {
  config.Validate();
  return config;
}

}  // namespace

Engine::Engine(RunConfig config)
    : config_(Validated(std::move(config))),
      sched_(config_.cores, config_.policy, config_.load_credit_window_ticks) {
  cores_.resize(config_.cores);
  for (Core& k : cores_) k.rt = std::make_unique<RtRunQueue>(config_.policy.params);
  rt_groups_.assign(1, false);
}

Engine::~Engine() = default;

GroupId Engine::AddGroup(GroupId parent, std::string name, bool latency_aware) {
  const GroupId g = sched_.CreateGroup(parent, std::move(name), latency_aware);
  rt_groups_.resize(sched_.group_count(), false);
  return g;
}

void Engine::SetRealTime(GroupId group) {
  if (group >= rt_groups_.size()) throw ConfigError("real-time group: unknown group");
  rt_groups_[group] = true;
}

bool Engine::IsRealTime(GroupId group) const {
  return config_.policy.kind == PolicyKind::kRr || rt_groups_.at(group);
}

Engine::TaskInfo& Engine::info(EntityHandle h) {
  if (h >= tasks_.size()) tasks_.resize(h + 1);
  return tasks_[h];
}

void Engine::Push(Event e) {
  e.seq = seq_++;
  events_.push(std::move(e));
}

void Engine::PushSourceArrival(RequestSource& source) {
  std::optional<Request> r = source.NextArrival();
  if (!r) return;
  if (r->arrival < last_source_arrival_) {
    throw SimError("request stream: arrival times must be non-decreasing");
  }
  last_source_arrival_ = r->arrival;
  Event e{};
  e.time = r->arrival;
  e.kind = EventKind::kArrival;
  e.request = *r;
  e.from_source = true;
  Push(std::move(e));
}

int Engine::Runnable(CoreId c) const {
  return sched_.nr_tasks(c) + static_cast<int>(cores_[c].rt->size());
}

CoreView Engine::ViewOf(CoreId c) const {
  const Core& k = cores_[c];
  CoreView v;
  v.idle = k.current == kNoEntity;
  v.nr_running = Runnable(c);
  v.running_fair = k.current != kNoEntity && !k.current_rt;
  v.current_credit = v.running_fair ? k.cached_credit : kInfiniteCredit;
  v.rt_nr_running = static_cast<int>(k.rt->size());
  return v;
}

std::vector<CoreView> Engine::Views() const {
  std::vector<CoreView> out;
  out.reserve(cores_.size());
  for (CoreId c = 0; c < static_cast<CoreId>(cores_.size()); ++c) {
    out.push_back(ViewOf(c));
  }
  return out;
}

void Engine::Advance(CoreId c, Micros now) {
  Core& k = cores_[c];
  if (now <= k.clock) return;
  Micros t = k.clock;
  if (k.overhead_end > t) {
    const Micros e = std::min(now, k.overhead_end);
    metrics_.overhead[c] += e - t;
    t = e;
  }
  if (now > t) {
    const Micros d = now - t;
    if (k.current == kNoEntity) {
      metrics_.idle[c] += d;
    } else {
      metrics_.busy[c] += d;
      TaskInfo& ti = info(k.current);
      ti.remaining -= d;
      if (ti.remaining < 0) throw SimError("engine: task ran past its demand");
      if (k.current_rt) {
        k.rt->Charge(t, now);
        metrics_.rt_busy += d;
      } else {
        sched_.UpdateCurr(c, d);
      }
    }
  }
  k.clock = now;
}

void Engine::ArmTimer(CoreId c, Micros now) {
  Core& k = cores_[c];
  ++k.token;
  Micros when = -1;
  const Micros start = std::max(now, k.overhead_end);
  if (k.current != kNoEntity) {
    when = start + info(k.current).remaining;
    if (k.current_rt) {
      when = std::min(when, start + k.rt->head_quantum_left());
      when = std::min(when, start + k.rt->BudgetLeft(now));
      when = std::min(when, k.rt->NextWindowStart(now));
    } else if (!k.rt->empty()) {
      // Throttled real-time work resumes at the next window.
      when = std::min(when, k.rt->NextWindowStart(now));
    }
  } else if (!k.rt->empty()) {
    when = k.rt->NextWindowStart(now);
  }
  if (when < 0) return;
  Event e{};
  e.time = std::max(when, now);
  e.kind = EventKind::kCoreTimer;
  e.core = c;
  e.token = k.token;
  Push(std::move(e));
}

void Engine::Reschedule(CoreId c, Micros now) {
  Advance(c, now);
  Core& k = cores_[c];
  const EntityHandle prev = k.current;
  const bool prev_rt = k.current_rt;
  const bool prev_rt_queued = prev != kNoEntity && prev_rt && k.rt->Contains(prev);

  EntityHandle next = kNoEntity;
  bool next_rt = false;
  int reinsert = 0;
  int descent = 0;
  if (std::optional<EntityHandle> rt_next = k.rt->Schedule(now)) {
    next = *rt_next;
    next_rt = true;
    if (prev != kNoEntity && !prev_rt) {
      reinsert = sched_.PutPrevTask(c, kNoEntity, now);
    } else if (prev_rt && prev != next && prev_rt_queued) {
      reinsert = 1;
    }
  } else {
    if (prev_rt_queued) reinsert = 1;
    if (std::optional<PickResult> r = sched_.PickNextTask(c, now)) {
      next = r->task;
      reinsert += r->reinsert_levels;
      descent = r->descent_levels;
    }
  }

  if (next != prev || next_rt != prev_rt) {
    if (prev != kNoEntity) {
      const bool still_runnable =
          prev_rt ? prev_rt_queued : sched_.entity(prev).on_rq;
      if (still_runnable) info(prev).wait_since = now;
    }
    Dispatch(c, next, next_rt, reinsert, descent, now);
  } else {
    ArmTimer(c, now);
  }
  if (k.zombie != kNoEntity) {
    sched_.DestroyTask(k.zombie);
    k.zombie = kNoEntity;
  }
}

void Engine::Dispatch(CoreId c, EntityHandle next, bool next_rt, int reinsert,
                      int descent, Micros now) {
  Core& k = cores_[c];
  k.current = next;
  k.current_rt = next_rt;
  if (next == kNoEntity) {
    k.cached_credit = kInfiniteCredit;
    if (record_schedule_) schedule_.push_back({now, c, 0});
    ArmTimer(c, now);
    return;
  }
  const Micros cost = config_.switch_cost.Cost(reinsert, descent);
  k.overhead_end = std::max(now, k.overhead_end) + cost;
  metrics_.switches += 1;
  metrics_.switch_cost_total += cost;
  if (metrics_.switches_by_reinsert.size() <= static_cast<size_t>(reinsert)) {
    metrics_.switches_by_reinsert.resize(reinsert + 1, 0);
  }
  metrics_.switches_by_reinsert[reinsert] += 1;
  TaskInfo& ti = info(next);
  if (ti.wait_since >= 0) {
    metrics_.rq_wait_total += now - ti.wait_since;
    ti.wait_since = -1;
  }
  k.cached_credit = !next_rt && config_.policy.kind == PolicyKind::kLags
                        ? sched_.CreditOfTask(next)
                        : kInfiniteCredit;
  if (record_schedule_) schedule_.push_back({now, c, sched_.entity(next).id});
  ArmTimer(c, now);
}

void Engine::PlaceTask(EntityHandle task, Micros now) {
  const std::vector<CoreView> views = Views();
  if (info(task).rt) {
    const CoreId c = SelectCoreRt(views);
    Core& k = cores_[c];
    k.rt->Enqueue(task);
    if (k.current == kNoEntity) {
      Reschedule(c, now);
    } else if (!k.current_rt && !k.rt->Throttled(now)) {
      metrics_.wakeup_preemptions += 1;
      Reschedule(c, now);
    }
    return;
  }
  const double credit = config_.policy.kind == PolicyKind::kLags
                            ? sched_.CreditOfTask(task)
                            : kInfiniteCredit;
  const CoreId c = SelectCoreFair(views, config_.policy.kind, credit);
  Core& k = cores_[c];
  Advance(c, now);
  sched_.EnqueueTask(task, c);
  k.fair_tasks.insert({sched_.entity(task).id, task});
  if (k.current == kNoEntity) {
    Reschedule(c, now);
  } else if (!k.current_rt && sched_.CheckPreemptWakeup(c, task)) {
    metrics_.wakeup_preemptions += 1;
    Reschedule(c, now);
  }
}

void Engine::HandleArrival(const Request& r, Micros now) {
  if (r.workers < 1) throw SimError("request: workers must be >= 1");
  if (r.per_worker_us <= 0) throw SimError("request: demand must be > 0");
  if (r.group >= sched_.group_count()) throw SimError("request: unknown group");
  metrics_.requests_arrived += 1;
  uint32_t slot;
  if (!free_inflight_.empty()) {
    slot = free_inflight_.back();
    free_inflight_.pop_back();
  } else {
    slot = static_cast<uint32_t>(inflight_.size());
    inflight_.emplace_back();
  }
  inflight_[slot] = InFlight{r, r.workers};
  ++inflight_count_;
  const bool rt = IsRealTime(r.group);
  for (int w = 0; w < r.workers; ++w) {
    const EntityHandle h = sched_.CreateTask(r.group);
    TaskInfo& ti = info(h);
    ti = TaskInfo{};
    ti.request_slot = slot;
    ti.remaining = r.per_worker_us;
    ti.rt = rt;
    ti.wait_since = now;
    PlaceTask(h, now);
  }
}

void Engine::CompleteCurrent(CoreId c, Micros now, RequestSource& source) {
  Core& k = cores_[c];
  const EntityHandle task = k.current;
  TaskInfo& ti = info(task);
  if (k.current_rt) {
    k.rt->Remove(task);
  } else {
    sched_.DequeueTask(task);
    k.fair_tasks.erase({sched_.entity(task).id, task});
  }
  k.zombie = task;
  ti.wait_since = -1;

  InFlight& f = inflight_[ti.request_slot];
  if (--f.workers_left == 0) {
    const Request req = f.request;
    free_inflight_.push_back(ti.request_slot);
    --inflight_count_;
    const Micros latency = now - req.arrival;
    if (req.arrival >= measure_from_) {
      metrics_.latency_samples.push_back({req.function, req.arrival, latency});
      if (latency <= latency_target_) metrics_.completions_within_target += 1;
    }
    std::vector<Request> follow_ups;
    source.OnCompletion(CompletedRequest{req, now}, &follow_ups);
    for (Request& r : follow_ups) {
      if (r.arrival < now) throw SimError("request stream: follow-up in the past");
      Event e{};
      e.time = r.arrival;
      e.kind = EventKind::kArrival;
      e.request = r;
      e.from_source = false;
      Push(std::move(e));
    }
  }
  Reschedule(c, now);
  if (k.current == kNoEntity) TryPull(c, now);
}

void Engine::HandleCoreTimer(CoreId c, Micros now) {
  Advance(c, now);
  Core& k = cores_[c];
  if (k.current != kNoEntity && info(k.current).remaining == 0) {
    CompleteCurrent(c, now, *source_);
    return;
  }
  if (k.current_rt && k.rt->head_quantum_left() <= 0) k.rt->RotateHead();
  Reschedule(c, now);
}

bool Engine::TryPull(CoreId dst, Micros now) {
  const std::vector<CoreView> views = Views();
  const CoreId src = FindBusiest(views, dst, config_.imbalance_threshold);
  if (src == kNoCore) return false;
  Core& b = cores_[src];
  Core& d = cores_[dst];
  Advance(src, now);

  for (EntityHandle h : b.rt->Tasks()) {
    if (b.current_rt && h == b.current) continue;
    b.rt->Remove(h);
    d.rt->Enqueue(h);
    metrics_.migrations += 1;
    Reschedule(dst, now);
    return true;
  }

  EntityHandle pick = kNoEntity;
  if (config_.policy.kind == PolicyKind::kLags) {
    std::vector<PullCandidate> cands;
    std::vector<EntityHandle> handles;
    for (const auto& [id, h] : b.fair_tasks) {
      if (!b.current_rt && h == b.current) continue;
      cands.push_back({id, sched_.CreditOfTask(h)});
      handles.push_back(h);
    }
    if (std::optional<size_t> i = ChoosePullTask(cands, config_.policy.kind)) {
      pick = handles[*i];
    }
  } else {
    for (const auto& [id, h] : b.fair_tasks) {
      if (!b.current_rt && h == b.current) continue;
      pick = h;
      break;
    }
  }
  if (pick == kNoEntity) return false;
  const EntityId id = sched_.entity(pick).id;
  sched_.DequeueTask(pick);
  b.fair_tasks.erase({id, pick});
  Advance(dst, now);
  sched_.EnqueueTask(pick, dst);
  d.fair_tasks.insert({id, pick});
  metrics_.migrations += 1;
  Reschedule(dst, now);
  return true;
}

void Engine::HandleTick(int64_t tick, Micros now) {
  if (config_.policy.kind == PolicyKind::kLags && !sched_.flagged_groups().empty()) {
    sched_.UpdateLoadCredits(tick, now);
  }
  for (CoreId c = 0; c < static_cast<CoreId>(cores_.size()); ++c) {
    Core& k = cores_[c];
    if (k.current == kNoEntity || k.current_rt) continue;
    Advance(c, now);
    const SchedEntity& se = sched_.entity(k.current);
    if (TickPreempt(config_.policy.kind, sched_.nr_tasks(c),
                    se.sum_exec - se.dispatch_exec, config_.policy.params)) {
      metrics_.tick_preemptions += 1;
      Reschedule(c, now);
    }
  }
}

void Engine::HandleBalance(Micros now) {
  for (CoreId c = 0; c < static_cast<CoreId>(cores_.size()); ++c) {
    if (cores_[c].current == kNoEntity) TryPull(c, now);
  }
  bool idle = false;
  int max_runnable = 0;
  for (CoreId c = 0; c < static_cast<CoreId>(cores_.size()); ++c) {
    if (cores_[c].current == kNoEntity) idle = true;
    max_runnable = std::max(max_runnable, Runnable(c));
  }
  if (idle && max_runnable >= config_.imbalance_threshold) {
    // Only a violation if an idle core could have taken work.
    for (CoreId c = 0; c < static_cast<CoreId>(cores_.size()); ++c) {
      if (cores_[c].current != kNoEntity) continue;
      const std::vector<CoreView> views = Views();
      if (FindBusiest(views, c, config_.imbalance_threshold) != kNoCore) {
        metrics_.work_conservation_violations += 1;
        break;
      }
    }
  }
}

RunMetrics Engine::Run(RequestSource& source) {
  if (ran_) throw SimError("engine: Run may be called once");
  ran_ = true;
  source_ = &source;
  const Micros horizon = config_.horizon_us;
  metrics_.busy.assign(cores_.size(), 0);
  metrics_.idle.assign(cores_.size(), 0);
  metrics_.overhead.assign(cores_.size(), 0);
  metrics_.horizon = horizon;
  metrics_.latency_target = latency_target_;
  metrics_.measure_from = measure_from_;

  PushSourceArrival(source);
  Event tick{};
  tick.time = config_.tick_us;
  tick.kind = EventKind::kTick;
  Push(tick);
  Event balance{};
  balance.time = config_.balance_interval_us;
  balance.kind = EventKind::kBalance;
  Push(balance);

  while (!events_.empty()) {
    Event e = events_.top();
    if (e.time >= horizon) break;
    events_.pop();
    metrics_.events += 1;
    switch (e.kind) {
      case EventKind::kCoreTimer:
        if (e.token == cores_[e.core].token) HandleCoreTimer(e.core, e.time);
        break;
      case EventKind::kArrival:
        HandleArrival(e.request, e.time);
        if (e.from_source) PushSourceArrival(source);
        break;
      case EventKind::kTick: {
        HandleTick(e.time / config_.tick_us, e.time);
        e.time += config_.tick_us;
        Push(e);
        break;
      }
      case EventKind::kBalance:
        HandleBalance(e.time);
        e.time += config_.balance_interval_us;
        Push(e);
        break;
    }
  }

  for (CoreId c = 0; c < static_cast<CoreId>(cores_.size()); ++c) {
    Advance(c, horizon);
    for (const auto& [id, h] : cores_[c].fair_tasks) {
      const TaskInfo& ti = tasks_[h];
      if (ti.wait_since >= 0) metrics_.rq_wait_total += horizon - ti.wait_since;
    }
    for (EntityHandle h : cores_[c].rt->Tasks()) {
      const TaskInfo& ti = tasks_[h];
      if (ti.wait_since >= 0) metrics_.rq_wait_total += horizon - ti.wait_since;
    }
  }
  metrics_.requests_incomplete = inflight_count_;
  source_ = nullptr;
  return std::move(metrics_);
}

}  // namespace lagsim
