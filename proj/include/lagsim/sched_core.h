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

// Hierarchical fair-class scheduling: a tree of task groups, each owning one
// ordered run queue per core, with group entities standing in for a group
// inside its parent's queue on that core.
//
// As in the kernel, the entity chain of the task running on a core is held
// out of the trees: every queue on the chain records it as `curr`. Picking a
// new task walks down from the top queue comparing each queue's curr against
// its leftmost entries; switching reinserts only the part of the previous
// chain not shared with the next one.

#ifndef LAGSIM_SCHED_CORE_H_
#define LAGSIM_SCHED_CORE_H_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lagsim/load_tracking.h"
#include "lagsim/policy.h"
#include "lagsim/types.h"

namespace lagsim {

enum class EntityKind : uint8_t { kTask, kGroup };

struct SchedEntity {
  EntityId id = 0;
  EntityKind kind = EntityKind::kTask;
  double weight = kDefaultWeight;
  double vruntime = 0.0;
  double lag = 0.0;
  double vdeadline = 0.0;
  double slice = 3000.0;
  Micros sum_exec = 0;
  // sum_exec when the current EEVDF slice began.
  Micros slice_start_exec = 0;
  // sum_exec when the task was last dispatched.
  Micros dispatch_exec = 0;
  PeltState pelt;
  bool on_rq = false;
  // Group whose queue holds this entity.
  GroupId parent_group = kNoGroup;
  // For kGroup: the group this entity represents.
  GroupId own_group = kNoGroup;
  CoreId core = kNoCore;
  bool alive = false;

  // Position in the tree (valid while in_tree).
  bool in_tree = false;
  bool keyed_by_credit = false;
  double stored_key = 0.0;
};

class Scheduler;

// One ordered queue per (group, core). Group entities of latency-aware
// groups (LAGS only) are kept apart, ordered by Load Credit; everything else
// is ordered by vruntime (CFS, LAGS) or virtual deadline (EEVDF).
class CfsRq {
 public:
  GroupId owner = kNoGroup;
  CoreId core = kNoCore;
  EntityHandle curr = kNoEntity;
  double min_vruntime = 0.0;
  // Entities enqueued at this level, curr included while on_rq.
  int nr_running = 0;
  // Tasks enqueued in this queue and below.
  int h_nr_running = 0;

  bool empty() const { return nr_running == 0; }
  size_t tree_size() const { return fair_.size() + credit_.size(); }

  // Entities in the tree (curr excluded) in pick order.
  std::vector<EntityHandle> Ordered(const Scheduler& sched) const;

 private:
  friend class Scheduler;

  struct Slot {
    double key;
    EntityId id;
    EntityHandle handle;
    bool operator<(const Slot& o) const {
      return key != o.key ? key < o.key : id < o.id;
    }
  };

  std::set<Slot> fair_;
  std::set<Slot> credit_;
  // All tree entities by vruntime, for min_vruntime and EEVDF eligibility.
  std::set<Slot> by_vruntime_;
  // Weighted vruntime over on_rq entities (curr included), EEVDF only.
  double sum_weighted_vruntime_ = 0.0;
  double sum_weight_ = 0.0;
};

struct TaskGroup {
  GroupId id = kNoGroup;
  GroupId parent = kNoGroup;
  std::vector<GroupId> children;
  std::string name;
  bool latency_awareness = false;
  int depth = 0;
  // Nearest latency-aware group among self and ancestors.
  GroupId credit_group = kNoGroup;

  struct PerCore {
    EntityHandle entity = kNoEntity;  // none for the root group
    CfsRq rq;
  };
  std::vector<PerCore> per_core;

  double load_avg = 0.0;
  LoadCreditState credit;
  // Cores whose group entity may carry non-zero load.
  std::vector<CoreId> loaded_cores;
};

struct PickResult {
  EntityHandle task = kNoEntity;
  // Group levels walked through from the top queue to the task.
  int descent_levels = 0;
  // Entities of the previous chain put back into their trees.
  int reinsert_levels = 0;
};

class Scheduler {
 public:
  Scheduler(int cores, Policy policy, uint32_t load_credit_window_ticks = 1000);

  int cores() const { return static_cast<int>(core_current_.size()); }
  const Policy& policy() const { return policy_; }

  // Groups. The root group exists from construction.
  GroupId CreateGroup(GroupId parent, std::string name,
                      bool latency_awareness = false);
  const TaskGroup& group(GroupId id) const { return groups_.at(id); }
  size_t group_count() const { return groups_.size(); }
  const std::vector<GroupId>& flagged_groups() const { return flagged_; }

  // Tasks. A task belongs to one group for its lifetime.
  EntityHandle CreateTask(GroupId group, double weight = kDefaultWeight);
  void DestroyTask(EntityHandle task);

  const SchedEntity& entity(EntityHandle h) const { return entities_.at(h); }
  SchedEntity& mutable_entity(EntityHandle h) { return entities_.at(h); }
  EntityHandle group_entity(GroupId group, CoreId core) const;
  const CfsRq& rq(GroupId group, CoreId core) const;
  const CfsRq& top_rq(CoreId core) const { return rq(kRootGroup, core); }
  // Queue an entity sits in (or would sit in) on its core.
  const CfsRq& rq_of(EntityHandle h) const;

  // Task currently running from the fair class on `core`.
  EntityHandle current(CoreId core) const { return core_current_.at(core); }
  // Runnable fair tasks on the core, running one included.
  int nr_tasks(CoreId core) const { return top_rq(core).h_nr_running; }

  // Enqueues a task on `core` and, transitively, every ancestor group entity
  // that was not yet enqueued. Throws SimError on double enqueue.
  void EnqueueTask(EntityHandle task, CoreId core);
  // Removes a runnable task; ancestors whose queues empty are dequeued too.
  void DequeueTask(EntityHandle task);

  // Charges `delta_exec` to the core's running task and each ancestor group
  // entity. Throws SimError if delta_exec <= 0 or nothing runs on `core`.
  void UpdateCurr(CoreId core, Micros delta_exec);

  // The task the policy would run next on `core` without changing state.
  std::optional<PickResult> SelectNext(CoreId core) const;
  // Selects the next task and makes its chain current, putting back the part
  // of the previous chain it does not share. Returns nullopt (after putting
  // the whole previous chain back) when nothing is runnable.
  std::optional<PickResult> PickNextTask(CoreId core, Micros now);
  // Puts the running chain back into the trees, stopping at the first
  // ancestor that `next` shares. Returns the number of entities reinserted.
  int PutPrevTask(CoreId core, EntityHandle next, Micros now);
  // Makes `task`'s chain current. The task must be runnable on `core`.
  void SetNextTask(CoreId core, EntityHandle task, Micros now);

  // Ordering key of an entity with fresh values.
  OrderingKey KeyOf(EntityHandle h) const;
  EntityKeyView ViewOf(EntityHandle h) const;
  // Whether a task just enqueued on `core` should preempt its current task.
  bool CheckPreemptWakeup(CoreId core, EntityHandle woken) const;

  // Load Credit of the latency-aware group governing a task or group entity;
  // +inf when there is none.
  double CreditOfTask(EntityHandle task) const;
  double CreditOfGroup(GroupId group) const;
  // Overrides a latency-aware group's Load Credit. Entries already queued
  // keep the credit they were inserted with.
  void SetLoadCredit(GroupId group, double credit);

  // Sum of the group's per-core entity loads at `now`.
  double UpdateTgLoadAvg(GroupId group, Micros now);
  // One scheduler tick: refresh load and Load Credit of every flagged group.
  void UpdateLoadCredits(int64_t tick, Micros now);
  // Brings PELT of the running chain up to `now`.
  void UpdatePeltChain(CoreId core, Micros now);

  // Average vruntime over the queue's runnable entities.
  double AvgVruntime(const CfsRq& rq) const;
  // Recomputes lag = avg_vruntime - vruntime for the queue's entities.
  void RefreshLags(GroupId group, CoreId core);

  // Chain of entities from the top queue down to `task` on `core`.
  std::vector<EntityHandle> ChainOf(EntityHandle task, CoreId core) const;

 private:
  CfsRq& mrq(GroupId group, CoreId core) {
    return groups_.at(group).per_core.at(core).rq;
  }
  CfsRq& mrq_of(EntityHandle h);
  EntityHandle AllocEntity();
  bool Running(EntityHandle h) const;
  void SetPeltRunning(EntityHandle h, Micros now, bool was_running);

  void EnqueueEntity(CfsRq& rq, EntityHandle h);
  void DequeueEntity(CfsRq& rq, EntityHandle h);
  void TreeInsert(CfsRq& rq, EntityHandle h);
  void TreeErase(CfsRq& rq, EntityHandle h);
  void UpdateMinVruntime(CfsRq& rq);
  // Best candidate of a queue, curr included.
  EntityHandle PickInRq(const CfsRq& rq) const;
  // Key used for picking: stored credit for tree entries, fresh otherwise.
  OrderingKey PickKey(const CfsRq& rq, EntityHandle h, double avg_vruntime) const;
  void BeginSlice(SchedEntity& se);

  Policy policy_;
  uint32_t window_ticks_;
  std::vector<TaskGroup> groups_;
  std::vector<GroupId> flagged_;
  std::vector<SchedEntity> entities_;
  std::vector<EntityHandle> free_;
  EntityId next_id_ = 1;
  std::vector<EntityHandle> core_current_;
};

}  // namespace lagsim

#endif  // LAGSIM_SCHED_CORE_H_
