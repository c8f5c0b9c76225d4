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

#include "lagsim/sched_core.h"

#include <algorithm>
#include <cmath>

namespace lagsim {

namespace {

// Slack for EEVDF eligibility against floating-point noise in the average.
constexpr double kEligibilityEpsilon = 1e-6;

}  // namespace

std::vector<EntityHandle> CfsRq::Ordered(const Scheduler& sched) const {
  std::vector<EntityHandle> out;
  out.reserve(tree_size());
  auto f = fair_.begin();
  auto c = credit_.begin();
  auto key_of = [&](const Slot& s, bool credit) {
    OrderingKey k;
    k.basis = credit ? KeyBasis::kLoadCredit : KeyBasis::kVruntime;
    k.primary = s.key;
    k.vruntime = sched.entity(s.handle).vruntime;
    k.id = s.id;
    return k;
  };
  while (f != fair_.end() || c != credit_.end()) {
    if (c == credit_.end()) {
      out.push_back((f++)->handle);
    } else if (f == fair_.end()) {
      out.push_back((c++)->handle);
    } else if (KeyBefore(key_of(*c, true), key_of(*f, false))) {
      out.push_back((c++)->handle);
    } else {
      out.push_back((f++)->handle);
    }
  }
  return out;
}

Scheduler::Scheduler(int cores, Policy policy, uint32_t load_credit_window_ticks)
    : policy_(policy), window_ticks_(load_credit_window_ticks) {
  if (cores <= 0) throw ConfigError("cores: must be >= 1");
  policy_.params.Validate();
  core_current_.assign(cores, kNoEntity);
  TaskGroup root;
  root.id = kRootGroup;
  root.name = "/";
  root.per_core.resize(cores);
  for (CoreId c = 0; c < cores; ++c) {
    root.per_core[c].rq.owner = kRootGroup;
    root.per_core[c].rq.core = c;
  }
  root.credit.window_ticks = window_ticks_;
  groups_.push_back(std::move(root));
}

EntityHandle Scheduler::AllocEntity() {
  EntityHandle h;
  if (!free_.empty()) {
    h = free_.back();
    free_.pop_back();
    entities_[h] = SchedEntity{};
  } else {
    h = static_cast<EntityHandle>(entities_.size());
    entities_.emplace_back();
  }
  entities_[h].id = next_id_++;
  entities_[h].alive = true;
  entities_[h].slice = static_cast<double>(policy_.params.eevdf_base_slice_us);
  return h;
}

GroupId Scheduler::CreateGroup(GroupId parent, std::string name,
                               bool latency_awareness) {
  if (parent >= groups_.size()) throw ConfigError("group: unknown parent");
  TaskGroup tg;
  tg.id = static_cast<GroupId>(groups_.size());
  tg.parent = parent;
  tg.name = std::move(name);
  tg.latency_awareness = latency_awareness;
  tg.depth = groups_[parent].depth + 1;
  tg.credit_group = latency_awareness ? tg.id : groups_[parent].credit_group;
  tg.credit.window_ticks = window_ticks_;
  tg.per_core.resize(cores());
  for (CoreId c = 0; c < cores(); ++c) {
    const EntityHandle h = AllocEntity();
    SchedEntity& se = entities_[h];
    se.kind = EntityKind::kGroup;
    se.own_group = tg.id;
    se.parent_group = parent;
    se.core = c;
    tg.per_core[c].entity = h;
    tg.per_core[c].rq.owner = tg.id;
    tg.per_core[c].rq.core = c;
  }
  const GroupId id = tg.id;
  groups_.push_back(std::move(tg));
  groups_[parent].children.push_back(id);
  if (latency_awareness) flagged_.push_back(id);
  return id;
}

EntityHandle Scheduler::CreateTask(GroupId group, double weight) {
  if (group >= groups_.size()) throw ConfigError("task: unknown group");
  if (!(weight > 0.0)) throw ConfigError("task: weight must be > 0");
  const EntityHandle h = AllocEntity();
  SchedEntity& se = entities_[h];
  se.kind = EntityKind::kTask;
  se.weight = weight;
  se.parent_group = group;
  return h;
}

void Scheduler::DestroyTask(EntityHandle task) {
  SchedEntity& se = entities_.at(task);
  if (!se.alive || se.kind != EntityKind::kTask) {
    throw SimError("destroy: not a live task");
  }
  if (se.on_rq) throw SimError("destroy: task still enqueued");
  if (se.core != kNoCore && mrq(se.parent_group, se.core).curr == task) {
    throw SimError("destroy: task still current");
  }
  se.alive = false;
  free_.push_back(task);
}

EntityHandle Scheduler::group_entity(GroupId group, CoreId core) const {
  return groups_.at(group).per_core.at(core).entity;
}

const CfsRq& Scheduler::rq(GroupId group, CoreId core) const {
  return groups_.at(group).per_core.at(core).rq;
}

const CfsRq& Scheduler::rq_of(EntityHandle h) const {
  const SchedEntity& se = entities_.at(h);
  if (se.core == kNoCore) throw SimError("entity has no core");
  return rq(se.parent_group, se.core);
}

CfsRq& Scheduler::mrq_of(EntityHandle h) {
  const SchedEntity& se = entities_.at(h);
  if (se.core == kNoCore) throw SimError("entity has no core");
  return mrq(se.parent_group, se.core);
}

bool Scheduler::Running(EntityHandle h) const {
  const SchedEntity& se = entities_[h];
  return se.core != kNoCore && rq(se.parent_group, se.core).curr == h;
}

void Scheduler::SetPeltRunning(EntityHandle h, Micros now, bool was_running) {
  SchedEntity& se = entities_[h];
  se.pelt = PeltUpdate(se.pelt, now, was_running ? 1.0 : 0.0, se.weight);
  if (!was_running && se.kind == EntityKind::kGroup) {
    auto& loaded = groups_[se.own_group].loaded_cores;
    if (std::find(loaded.begin(), loaded.end(), se.core) == loaded.end()) {
      loaded.push_back(se.core);
    }
  }
}

void Scheduler::BeginSlice(SchedEntity& se) {
  se.vdeadline = se.vruntime + se.slice * kDefaultWeight / se.weight;
  se.slice_start_exec = se.sum_exec;
}

void Scheduler::TreeInsert(CfsRq& q, EntityHandle h) {
  SchedEntity& se = entities_[h];
  const bool by_credit = policy_.kind == PolicyKind::kLags &&
                         se.kind == EntityKind::kGroup &&
                         groups_[se.own_group].credit_group != kNoGroup;
  if (by_credit) {
    se.stored_key = CreditOfGroup(se.own_group);
    q.credit_.insert({se.stored_key, se.id, h});
  } else {
    se.stored_key =
        policy_.kind == PolicyKind::kEevdf ? se.vdeadline : se.vruntime;
    q.fair_.insert({se.stored_key, se.id, h});
  }
  q.by_vruntime_.insert({se.vruntime, se.id, h});
  se.keyed_by_credit = by_credit;
  se.in_tree = true;
}

void Scheduler::TreeErase(CfsRq& q, EntityHandle h) {
  SchedEntity& se = entities_[h];
  if (!se.in_tree) throw SimError("tree erase: entity not in tree");
  auto& tree = se.keyed_by_credit ? q.credit_ : q.fair_;
  if (tree.erase({se.stored_key, se.id, h}) != 1 ||
      q.by_vruntime_.erase({se.vruntime, se.id, h}) != 1) {
    throw SimError("tree erase: stale key");
  }
  se.in_tree = false;
}

void Scheduler::UpdateMinVruntime(CfsRq& q) {
  bool have = false;
  double m = 0.0;
  if (q.curr != kNoEntity && entities_[q.curr].on_rq) {
    m = entities_[q.curr].vruntime;
    have = true;
  }
  if (!q.by_vruntime_.empty()) {
    const double left = q.by_vruntime_.begin()->key;
    m = have ? std::min(m, left) : left;
    have = true;
  }
  if (have) q.min_vruntime = std::max(q.min_vruntime, m);
}

void Scheduler::EnqueueEntity(CfsRq& q, EntityHandle h) {
  SchedEntity& se = entities_[h];
  if (se.on_rq) throw SimError("enqueue: entity already on a run queue");
  const double period = static_cast<double>(
      SchedulingPeriod(q.nr_running + 1, policy_.params));
  // Sleeper normalization: a long-absent entity re-enters half a period
  // behind the queue floor instead of at its stale vruntime.
  if (se.vruntime < q.min_vruntime - period) {
    se.vruntime = q.min_vruntime - period / 2.0;
  }
  BeginSlice(se);
  se.on_rq = true;
  q.nr_running += 1;
  q.sum_weighted_vruntime_ += se.weight * se.vruntime;
  q.sum_weight_ += se.weight;
  if (q.curr != h) TreeInsert(q, h);
}

void Scheduler::DequeueEntity(CfsRq& q, EntityHandle h) {
  SchedEntity& se = entities_[h];
  if (!se.on_rq) throw SimError("dequeue: entity not on a run queue");
  if (policy_.kind == PolicyKind::kEevdf) se.lag = AvgVruntime(q) - se.vruntime;
  se.on_rq = false;
  q.nr_running -= 1;
  q.sum_weighted_vruntime_ -= se.weight * se.vruntime;
  q.sum_weight_ -= se.weight;
  if (q.nr_running == 0) {
    q.sum_weighted_vruntime_ = 0.0;
    q.sum_weight_ = 0.0;
  }
  if (se.in_tree) TreeErase(q, h);
  UpdateMinVruntime(q);
}

void Scheduler::EnqueueTask(EntityHandle task, CoreId core) {
  SchedEntity& se = entities_.at(task);
  if (!se.alive || se.kind != EntityKind::kTask) {
    throw SimError("enqueue: not a live task");
  }
  if (se.on_rq) throw SimError("enqueue: task already on a run queue");
  if (core < 0 || core >= cores()) throw SimError("enqueue: bad core");
  se.core = core;
  EntityHandle h = task;
  GroupId g = se.parent_group;
  while (true) {
    CfsRq& q = mrq(g, core);
    if (!entities_[h].on_rq) EnqueueEntity(q, h);
    q.h_nr_running += 1;
    if (g == kRootGroup) break;
    h = groups_[g].per_core[core].entity;
    g = groups_[g].parent;
  }
}

void Scheduler::DequeueTask(EntityHandle task) {
  const SchedEntity& se = entities_.at(task);
  if (!se.on_rq) throw SimError("dequeue: task not on a run queue");
  const CoreId core = se.core;
  EntityHandle h = task;
  GroupId g = se.parent_group;
  bool dequeue_this = true;
  while (true) {
    CfsRq& q = mrq(g, core);
    if (dequeue_this) DequeueEntity(q, h);
    q.h_nr_running -= 1;
    if (g == kRootGroup) break;
    dequeue_this = q.nr_running == 0;
    h = groups_[g].per_core[core].entity;
    g = groups_[g].parent;
  }
}

void Scheduler::UpdateCurr(CoreId core, Micros delta_exec) {
  if (delta_exec <= 0) throw SimError("update_curr: delta_exec must be > 0");
  EntityHandle h = core_current_.at(core);
  if (h == kNoEntity) throw SimError("update_curr: nothing running on core");
  while (true) {
    SchedEntity& se = entities_[h];
    CfsRq& q = mrq(se.parent_group, core);
    if (q.curr != h) throw SimError("update_curr: entity is not current");
    const double dv = static_cast<double>(delta_exec) * kDefaultWeight / se.weight;
    se.sum_exec += delta_exec;
    se.vruntime += dv;
    if (se.on_rq) q.sum_weighted_vruntime_ += se.weight * dv;
    if (policy_.kind == PolicyKind::kEevdf &&
        static_cast<double>(se.sum_exec - se.slice_start_exec) >= se.slice) {
      BeginSlice(se);
    }
    UpdateMinVruntime(q);
    if (se.parent_group == kRootGroup) break;
    h = groups_[se.parent_group].per_core[core].entity;
  }
}

double Scheduler::AvgVruntime(const CfsRq& q) const {
  if (q.sum_weight_ <= 0.0) return q.min_vruntime;
  return q.sum_weighted_vruntime_ / q.sum_weight_;
}

void Scheduler::RefreshLags(GroupId group, CoreId core) {
  CfsRq& q = mrq(group, core);
  const double avg = AvgVruntime(q);
  for (const auto& slot : q.by_vruntime_) {
    SchedEntity& se = entities_[slot.handle];
    se.lag = avg - se.vruntime;
  }
  if (q.curr != kNoEntity && entities_[q.curr].on_rq) {
    entities_[q.curr].lag = avg - entities_[q.curr].vruntime;
  }
}

double Scheduler::CreditOfGroup(GroupId group) const {
  const GroupId cg = groups_.at(group).credit_group;
  if (cg == kNoGroup) return kInfiniteCredit;
  return groups_[cg].credit.load_avg_ema;
}

void Scheduler::SetLoadCredit(GroupId group, double credit) {
  TaskGroup& tg = groups_.at(group);
  if (!tg.latency_awareness) throw ConfigError("load credit: group not latency-aware");
  tg.credit.load_avg_ema = credit;
}

double Scheduler::CreditOfTask(EntityHandle task) const {
  return CreditOfGroup(entities_.at(task).parent_group);
}

EntityKeyView Scheduler::ViewOf(EntityHandle h) const {
  const SchedEntity& se = entities_.at(h);
  EntityKeyView v;
  v.id = se.id;
  v.is_group = se.kind == EntityKind::kGroup;
  v.vruntime = se.vruntime;
  v.vdeadline = se.vdeadline;
  v.lag = se.lag;
  if (policy_.kind == PolicyKind::kEevdf && se.on_rq) {
    v.lag = AvgVruntime(rq_of(h)) - se.vruntime;
  }
  if (v.is_group && groups_[se.own_group].credit_group != kNoGroup) {
    v.has_credit = true;
    v.credit = CreditOfGroup(se.own_group);
  }
  return v;
}

OrderingKey Scheduler::KeyOf(EntityHandle h) const {
  return ComputeOrderingKey(ViewOf(h), policy_.kind);
}

OrderingKey Scheduler::PickKey(const CfsRq& q, EntityHandle h,
                               double avg_vruntime) const {
  const SchedEntity& se = entities_[h];
  EntityKeyView v;
  v.id = se.id;
  v.is_group = se.kind == EntityKind::kGroup;
  v.vruntime = se.vruntime;
  v.vdeadline = se.vdeadline;
  v.lag = avg_vruntime - se.vruntime + kEligibilityEpsilon;
  if (v.is_group && groups_[se.own_group].credit_group != kNoGroup) {
    v.has_credit = true;
    // Tree entries keep the credit they were inserted with.
    v.credit = (se.in_tree && se.keyed_by_credit) ? se.stored_key
                                                  : CreditOfGroup(se.own_group);
  }
  (void)q;
  return ComputeOrderingKey(v, policy_.kind);
}

EntityHandle Scheduler::PickInRq(const CfsRq& q) const {
  const double avg =
      policy_.kind == PolicyKind::kEevdf ? AvgVruntime(q) : q.min_vruntime;
  EntityHandle cand[3] = {kNoEntity, kNoEntity, kNoEntity};
  if (q.curr != kNoEntity && entities_[q.curr].on_rq) cand[0] = q.curr;
  if (policy_.kind == PolicyKind::kEevdf) {
    // Earliest deadline among eligible entries.
    for (const auto& slot : q.fair_) {
      if (entities_[slot.handle].vruntime <= avg + kEligibilityEpsilon) {
        cand[1] = slot.handle;
        break;
      }
    }
    if (cand[1] == kNoEntity && !q.by_vruntime_.empty()) {
      cand[1] = q.by_vruntime_.begin()->handle;
    }
  } else if (!q.fair_.empty()) {
    cand[1] = q.fair_.begin()->handle;
  }
  if (!q.credit_.empty()) cand[2] = q.credit_.begin()->handle;

  EntityHandle best_credit = kNoEntity, best_other = kNoEntity;
  OrderingKey kc, ko;
  for (EntityHandle h : cand) {
    if (h == kNoEntity) continue;
    const OrderingKey k = PickKey(q, h, avg);
    if (k.basis == KeyBasis::kLoadCredit) {
      if (best_credit == kNoEntity || KeyBefore(k, kc)) {
        best_credit = h;
        kc = k;
      }
    } else if (best_other == kNoEntity || KeyBefore(k, ko)) {
      best_other = h;
      ko = k;
    }
  }
  if (best_credit == kNoEntity) return best_other;
  if (best_other == kNoEntity) return best_credit;
  return KeyBefore(kc, ko) ? best_credit : best_other;
}

std::optional<PickResult> Scheduler::SelectNext(CoreId core) const {
  const CfsRq* q = &top_rq(core);
  PickResult r;
  while (true) {
    const EntityHandle h = PickInRq(*q);
    if (h == kNoEntity) {
      if (r.descent_levels == 0) return std::nullopt;
      throw SimError("pick: group entity with an empty child queue");
    }
    const SchedEntity& se = entities_[h];
    if (se.kind == EntityKind::kTask) {
      r.task = h;
      return r;
    }
    q = &rq(se.own_group, core);
    r.descent_levels += 1;
  }
}

std::vector<EntityHandle> Scheduler::ChainOf(EntityHandle task, CoreId core) const {
  std::vector<EntityHandle> chain;
  EntityHandle h = task;
  GroupId g = entities_.at(task).parent_group;
  chain.push_back(h);
  while (g != kRootGroup) {
    h = groups_[g].per_core[core].entity;
    chain.push_back(h);
    g = groups_[g].parent;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

int Scheduler::PutPrevTask(CoreId core, EntityHandle next, Micros now) {
  const EntityHandle prev = core_current_.at(core);
  if (prev == kNoEntity) return 0;
  std::vector<EntityHandle> keep;
  if (next != kNoEntity) keep = ChainOf(next, core);
  int reinserted = 0;
  EntityHandle h = prev;
  while (true) {
    if (std::find(keep.begin(), keep.end(), h) != keep.end()) break;
    SchedEntity& se = entities_[h];
    CfsRq& q = mrq(se.parent_group, core);
    if (q.curr != h) throw SimError("put_prev: chain entity is not current");
    SetPeltRunning(h, now, true);
    q.curr = kNoEntity;
    if (se.on_rq) {
      TreeInsert(q, h);
      ++reinserted;
    }
    if (se.parent_group == kRootGroup) break;
    h = groups_[se.parent_group].per_core[core].entity;
  }
  core_current_[core] = kNoEntity;
  return reinserted;
}

void Scheduler::SetNextTask(CoreId core, EntityHandle task, Micros now) {
  if (core_current_.at(core) != kNoEntity) {
    throw SimError("set_next: previous task not put back");
  }
  EntityHandle h = task;
  while (true) {
    SchedEntity& se = entities_[h];
    CfsRq& q = mrq(se.parent_group, core);
    if (q.curr == h) break;
    if (!se.on_rq) throw SimError("set_next: entity not runnable");
    if (q.curr != kNoEntity) throw SimError("set_next: queue already has curr");
    TreeErase(q, h);
    SetPeltRunning(h, now, false);
    q.curr = h;
    se.dispatch_exec = se.sum_exec;
    if (se.parent_group == kRootGroup) break;
    h = groups_[se.parent_group].per_core[core].entity;
  }
  core_current_[core] = task;
}

std::optional<PickResult> Scheduler::PickNextTask(CoreId core, Micros now) {
  std::optional<PickResult> sel = SelectNext(core);
  const EntityHandle prev = core_current_.at(core);
  if (!sel) {
    PutPrevTask(core, kNoEntity, now);
    return std::nullopt;
  }
  if (sel->task == prev) return sel;
  sel->reinsert_levels = PutPrevTask(core, sel->task, now);
  SetNextTask(core, sel->task, now);
  return sel;
}

bool Scheduler::CheckPreemptWakeup(CoreId core, EntityHandle woken) const {
  const EntityHandle curr = core_current_.at(core);
  if (curr == kNoEntity) return true;
  if (curr == woken) return false;
  const std::vector<EntityHandle> a = ChainOf(curr, core);
  const std::vector<EntityHandle> b = ChainOf(woken, core);
  size_t i = 0;
  while (i < a.size() && i < b.size() && a[i] == b[i]) ++i;
  if (i >= a.size() || i >= b.size()) return false;
  return lagsim::CheckPreemptWakeup(SchedClass::kFair, KeyOf(a[i]),
                                    SchedClass::kFair, KeyOf(b[i]),
                                    policy_.params);
}

double Scheduler::UpdateTgLoadAvg(GroupId group, Micros now) {
  TaskGroup& tg = groups_.at(group);
  if (group == kRootGroup) return tg.load_avg;
  std::vector<double> loads;
  loads.reserve(tg.loaded_cores.size());
  auto& loaded = tg.loaded_cores;
  for (size_t i = 0; i < loaded.size();) {
    const EntityHandle h = tg.per_core[loaded[i]].entity;
    SchedEntity& se = entities_[h];
    const bool running = Running(h);
    se.pelt = PeltUpdate(se.pelt, now, running ? 1.0 : 0.0, se.weight);
    loads.push_back(se.pelt.load_avg);
    if (!running && se.pelt.load_sum == 0.0) {
      loaded[i] = loaded.back();
      loaded.pop_back();
    } else {
      ++i;
    }
  }
  tg.load_avg = AggregateLoad(loads);
  return tg.load_avg;
}

void Scheduler::UpdateLoadCredits(int64_t tick, Micros now) {
  for (GroupId g : flagged_) {
    TaskGroup& tg = groups_[g];
    UpdateTgLoadAvg(g, now);
    tg.credit = UpdateLoadCredit(tg.credit, tg.load_avg, tick);
  }
}

void Scheduler::UpdatePeltChain(CoreId core, Micros now) {
  EntityHandle h = core_current_.at(core);
  while (h != kNoEntity) {
    SchedEntity& se = entities_[h];
    se.pelt = PeltUpdate(se.pelt, now, 1.0, se.weight);
    if (se.parent_group == kRootGroup) break;
    h = groups_[se.parent_group].per_core[core].entity;
  }
}

}  // namespace lagsim
