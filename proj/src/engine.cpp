#include <mjflow/engine.hpp>

#include <algorithm>
#include <chrono>
#include <thread>

#include <mjflow/interp.hpp>

namespace mjflow {

Engine::Engine(const Config& config, SymbolTable& syms)
    : config_(config), syms_(syms), store_(config, syms) {}

Engine::~Engine() = default;

void Engine::set_program(BoundProgram* prog) {
  prog_ = prog;
  store_.set_program(prog);
}

const MethodPlan* Engine::plan_for(MethodId m) {
  std::lock_guard lock(plans_mu_);
  auto it = plans_.find(m);
  if (it != plans_.end()) return it->second.get();
  const MethodInfo& mi = prog_->methods[m];
  if (!mi.has_body()) return nullptr;
  auto plan = std::make_unique<MethodPlan>(MethodPlan::build(*prog_, *mi.file, mi));
  const MethodPlan* out = plan.get();
  plans_.emplace(m, std::move(plan));
  return out;
}

void Engine::drop_plan(MethodId m) {
  std::lock_guard lock(plans_mu_);
  plans_.erase(m);
}

Call* Engine::call_by_id(CallId id) const {
  std::lock_guard lock(calls_mu_);
  if (id >= calls_.size()) return nullptr;
  return calls_[id].get();
}

size_t Engine::num_live_calls() const {
  std::lock_guard lock(calls_mu_);
  size_t n = 0;
  for (const auto& c : calls_) {
    if (!c->dead) ++n;
  }
  return n;
}

void Engine::for_each_call(const std::function<void(Call*)>& f) const {
  std::lock_guard lock(calls_mu_);
  for (const auto& c : calls_) f(c.get());
}

Call* Engine::get_or_create_call(MethodId method, ContextPolicy policy, uint32_t this_set,
                                 std::vector<uint32_t> arg_sets, int priority, bool* created) {
  CallKey key;
  key.method = method;
  key.policy = policy;
  key.this_set = this_set;
  key.arg_sets = std::move(arg_sets);

  std::lock_guard lock(calls_mu_);
  auto it = calls_by_key_.find(key);
  if (it != calls_by_key_.end() && !it->second->dead) {
    if (created) *created = false;
    Call* c = it->second;
    if (priority < c->priority) c->priority = priority; // inherit caller priority
    return c;
  }
  auto call = std::make_unique<Call>();
  call->id = static_cast<CallId>(calls_.size());
  call->key = key;
  call->method = method;
  call->priority = priority;
  Call* out = call.get();
  calls_.push_back(std::move(call));
  calls_by_key_[key] = out;
  if (created) *created = true;
  return out;
}

void Engine::register_caller(Call* callee, Site site) {
  std::lock_guard lock(callee->mu);
  callee->callers.insert(site);
}

bool Engine::add_invocation(Call* c, const ProgramState& entry) {
  {
    std::lock_guard lock(c->mu);
    ++c->invocations_seen;
  }
  return merge_into_point(c, 0, entry);
}

bool Engine::merge_into_point(Call* c, int ordinal, const ProgramState& candidate) {
  std::lock_guard lock(c->mu);
  if (c->point_states.size() <= static_cast<size_t>(ordinal)) {
    size_t n = c->plan ? c->plan->size() : static_cast<size_t>(ordinal) + 1;
    c->point_states.resize(std::max(n, static_cast<size_t>(ordinal) + 1));
  }
  StateRef& slot = c->point_states[ordinal];
  if (!slot) {
    slot = freeze(candidate);
    return true;
  }
  auto [merged, changed] = merge_states(slot, candidate, store_);
  if (!changed) return false;
  slot = widen(c, ordinal, *slot, merged);
  return true;
}

StateRef Engine::point_state(Call* c, int ordinal) const {
  std::lock_guard lock(c->mu);
  if (static_cast<size_t>(ordinal) >= c->point_states.size()) return nullptr;
  return c->point_states[ordinal];
}

// Per (call, point, slot) growth counters: after 3 growths of the same
// bound direction that bound goes unbounded, guaranteeing termination on
// widening loops while leaving small loops precise.
StateRef Engine::widen(Call* c, int ordinal, const ProgramState& old_state, StateRef merged) {
  constexpr int kGrowthLimit = 3;
  ProgramState out = *merged;
  bool any = false;

  auto widen_slot = [&](const Value* oldv, const Value* newv, uint64_t slot_key) -> const Value* {
    if (!oldv || !newv || newv == oldv) return newv;
    const Constraint& oc = oldv->constraint;
    const Constraint& nc = newv->constraint;
    if (oc.kind != Constraint::Kind::Int || nc.kind != Constraint::Kind::Int) return newv;
    Constraint out_c = nc;
    bool widened = false;
    bool lo_grew = !nc.lo_inf ? (oc.lo_inf ? false : nc.lo < oc.lo) : false;
    if (!oc.lo_inf && nc.lo_inf) lo_grew = false; // already unbounded
    if (lo_grew) {
      int& g = c->growth[(slot_key << 1) | 0];
      if (++g >= kGrowthLimit) {
        out_c.lo_inf = true;
        out_c.lo = 0;
        widened = true;
      }
    }
    bool hi_grew = !nc.hi_inf ? (oc.hi_inf ? false : nc.hi > oc.hi) : false;
    if (hi_grew) {
      int& g = c->growth[(slot_key << 1) | 1];
      if (++g >= kGrowthLimit) {
        out_c.hi_inf = true;
        out_c.hi = 0;
        widened = true;
      }
    }
    if (!widened) return newv;
    any = true;
    Value v = *newv;
    v.constraint = out_c;
    return store_.intern(v);
  };

  uint64_t base = static_cast<uint64_t>(ordinal) << 24;
  for (size_t i = 0; i < out.stack.size(); ++i) {
    const Value* oldv = i < old_state.stack.size() ? old_state.stack[i] : nullptr;
    out.stack[i] = widen_slot(oldv, out.stack[i], base | (1ull << 22) | i);
  }
  for (size_t i = 0; i < out.locals.size(); ++i) {
    const Value* oldv = i < old_state.locals.size() ? old_state.locals[i] : nullptr;
    out.locals[i] = widen_slot(oldv, out.locals[i], base | i);
  }
  for (auto& [fid, v] : out.this_fields) {
    const Value* oldv = old_state.overlay_get(fid);
    v = widen_slot(oldv, v, base | (2ull << 22) | fid);
  }
  if (!any) return merged;
  return freeze(std::move(out));
}

void Engine::queue_call(Call* c, int ordinal) {
  std::lock_guard lock(queue_mu_);
  if (c->dead) return;
  c->pending.insert(ordinal);
  if (!c->queued && !c->running) {
    c->queued = true;
    buckets_[c->priority].push({rng_(), c->id});
    queue_cv_.notify_one();
  }
}

void Engine::queue_site(Site site) {
  Call* c = call_by_id(site.call);
  if (!c || c->dead) return;
  queue_call(c, site.ordinal);
}

void Engine::queue_sites(const std::set<Site>& sites) {
  for (const Site& s : sites) queue_site(s);
}

void Engine::remove_from_queue(Call* c) {
  std::lock_guard lock(queue_mu_);
  c->dead = true;
  c->pending.clear();
  c->queued = false;
}

const Value* Engine::read_global_field(FieldId f, Site reader) {
  std::lock_guard lock(fields_mu_);
  FieldEntry& e = fields_[f];
  e.readers.insert(reader);
  if (e.value) return e.value;
  return store_.default_value(prog_->fields[f].type);
}

bool Engine::write_global_field(FieldId f, const Value* v, Site writer, std::set<Site>* readers) {
  std::lock_guard lock(fields_mu_);
  FieldEntry& e = fields_[f];
  e.writers.insert(writer);
  bool changed;
  if (!e.value) {
    e.value = v;
    changed = true;
  } else {
    const Value* merged = store_.merge(e.value, v);
    changed = merged != e.value;
    e.value = merged;
  }
  if (changed && readers) {
    readers->insert(e.readers.begin(), e.readers.end());
  }
  return changed;
}

void Engine::register_field_reader(FieldId f, Site reader) {
  std::lock_guard lock(fields_mu_);
  fields_[f].readers.insert(reader);
}

void Engine::register_field_writer(FieldId f, Site writer) {
  std::lock_guard lock(fields_mu_);
  fields_[f].writers.insert(writer);
}

const Value* Engine::peek_global_field(FieldId f) const {
  std::lock_guard lock(fields_mu_);
  auto it = fields_.find(f);
  return it == fields_.end() ? nullptr : it->second.value;
}

void Engine::set_global_field_raw(FieldId f, const Value* v) {
  std::lock_guard lock(fields_mu_);
  fields_[f].value = v;
}

void Engine::field_reader_sites(FieldId f, std::set<Site>* out) const {
  std::lock_guard lock(fields_mu_);
  auto it = fields_.find(f);
  if (it == fields_.end()) return;
  out->insert(it->second.readers.begin(), it->second.readers.end());
}

void Engine::field_writer_sites(FieldId f, std::set<Site>* out) const {
  std::lock_guard lock(fields_mu_);
  auto it = fields_.find(f);
  if (it == fields_.end()) return;
  out->insert(it->second.writers.begin(), it->second.writers.end());
}

void Engine::collect_field_ids(std::vector<FieldId>* out) const {
  std::lock_guard lock(fields_mu_);
  for (const auto& [f, e] : fields_) out->push_back(f);
}

void Engine::ensure_class_initialized(ClassId cls, Site site) {
  {
    std::lock_guard lock(init_mu_);
    if (initialized_.count(cls)) return;
    initialized_.insert(cls);
  }
  const ClassInfo& info = prog_->classes[cls];
  if (cls != kObjectClass && info.super != cls) {
    ensure_class_initialized(info.super, site);
  }
  if (info.clinit == kNoMethod) return;
  const MethodInfo& mi = prog_->methods[info.clinit];
  if (!mi.has_body()) return;
  bool created = false;
  Call* c = get_or_create_call(info.clinit, ContextPolicy::Insensitive, 0, {}, 0, &created);
  c->plan = plan_for(info.clinit);
  ProgramState entry;
  entry.locals.resize(mi.slot_types.size());
  for (size_t i = 0; i < mi.slot_types.size(); ++i) {
    entry.locals[i] = store_.default_value(mi.slot_types[i]);
  }
  entry.automata = initial_automata(config_);
  if (add_invocation(c, entry)) queue_call(c, 0);
}

void Engine::mark_class_uninitialized(ClassId cls) {
  std::lock_guard lock(init_mu_);
  initialized_.erase(cls);
}

bool Engine::class_initialized(ClassId cls) const {
  std::lock_guard lock(init_mu_);
  return initialized_.count(cls) > 0;
}

void Engine::note(const std::string& text) {
  std::lock_guard lock(notes_mu_);
  if (noted_.insert(text).second) notes_.push_back(text);
}

void Engine::seed_entries() {
  for (MethodId m : prog_->entry_points) {
    const MethodInfo& mi = prog_->methods[m];
    if (!mi.has_body()) continue;
    bool created = false;
    Call* c = get_or_create_call(m, ContextPolicy::Insensitive, 0, {}, 2, &created);
    c->is_entry = true;
    c->plan = plan_for(m);
    ensure_class_initialized(mi.owner, {c->id, 0});
    ProgramState entry;
    entry.locals.resize(mi.slot_types.size());
    for (size_t i = 0; i < mi.slot_types.size(); ++i) {
      entry.locals[i] = store_.default_value(mi.slot_types[i]);
    }
    entry.automata = initial_automata(config_);
    if (add_invocation(c, entry)) queue_call(c, 0);
  }
}

bool Engine::work_outstanding() const {
  std::lock_guard lock(queue_mu_);
  for (const auto& b : buckets_) {
    if (!b.empty()) return true;
  }
  return in_flight_ > 0;
}

Call* Engine::take_work(std::set<int32_t>* pts) {
  std::unique_lock lock(queue_mu_);
  for (;;) {
    if (suspend_.load() || abort_.load()) return nullptr;
    for (auto& bucket : buckets_) {
      while (!bucket.empty()) {
        QueueItem item = bucket.top();
        Call* c = nullptr;
        {
          // calls_ only grows; reading the pointer needs no call lock
          c = calls_[item.call].get();
        }
        if (c->dead || !c->queued) {
          bucket.pop();
          continue;
        }
        bucket.pop();
        c->queued = false;
        c->running = true;
        *pts = std::move(c->pending);
        c->pending.clear();
        ++in_flight_;
        return c;
      }
    }
    if (in_flight_ == 0) {
      queue_cv_.notify_all();
      return nullptr;
    }
    queue_cv_.wait(lock);
  }
}

void Engine::finish_work(Call* c) {
  std::lock_guard lock(queue_mu_);
  c->running = false;
  --in_flight_;
  if (!c->pending.empty() && !c->dead && !suspend_.load() && !abort_.load()) {
    c->queued = true;
    buckets_[c->priority].push({rng_(), c->id});
    queue_cv_.notify_one();
  }
  if (in_flight_ == 0) queue_cv_.notify_all();
  else queue_cv_.notify_one();
}

void Engine::worker_loop() {
  std::set<int32_t> pts;
  while (Call* c = take_work(&pts)) {
    analyze_call(c, std::move(pts));
    finish_work(c);
    pts.clear();
  }
}

void Engine::analyze_call(Call* c, std::set<int32_t> work) {
  if (!c->plan) {
    c->plan = plan_for(c->method);
    if (!c->plan) return;
  }
  while (!work.empty()) {
    if (suspend_.load() || abort_.load()) break;
    if (steps_.load(std::memory_order_relaxed) > step_budget_) {
      abort_.store(true);
      break;
    }
    auto first = work.begin();
    int ord = *first;
    work.erase(first);
    StateRef st = point_state(c, ord);
    if (!st) continue; // not reached yet; a later merge will re-queue it
    steps_.fetch_add(1, std::memory_order_relaxed);
    {
      std::lock_guard lock(c->mu);
      ++c->steps;
    }
    Interp interp(*this, c);
    StepResult r = interp.step(ord, *st);
    record_errors(*c, ord, std::move(r.problems));
    for (const auto& bp : r.backprops) {
      for (int changed : back_propagate(c, ord, bp)) work.insert(changed);
    }
    for (auto& [ord2, st2] : r.successors) {
      {
        std::lock_guard lock(c->mu);
        if (c->preds.size() <= static_cast<size_t>(ord2)) c->preds.resize(c->plan->size());
        c->preds[ord2].insert(ord);
      }
      if (merge_into_point(c, ord2, st2)) work.insert(ord2);
    }
    for (const Site& site : r.requeue) {
      if (site.call == c->id) {
        work.insert(site.ordinal);
      } else {
        queue_site(site);
      }
    }
    for (Call* callee : r.queue_entries) {
      if (callee == c) {
        work.insert(0);
      } else {
        queue_call(callee, 0);
      }
    }
  }
  if (!work.empty()) {
    // suspended or over budget: preserve the remaining points
    std::lock_guard lock(queue_mu_);
    c->pending.insert(work.begin(), work.end());
  }
}

std::vector<int> Engine::back_propagate(Call* c, int ordinal, const BackPropRequest& req) {
  std::vector<int> changed;
  std::set<int> visited;
  std::vector<int> stack = {ordinal};
  std::set<const Value*> targets;
  {
    StateRef st = point_state(c, ordinal);
    if (!st) return changed;
    const Value* v = nullptr;
    if (req.loc.kind == ValueLoc::Kind::Local) {
      v = st->locals[req.loc.index];
    } else if (req.loc.kind == ValueLoc::Kind::Stack) {
      if (static_cast<size_t>(req.loc.index) >= st->stack.size()) return changed;
      v = st->stack[req.loc.index];
    }
    if (!v || v->constraint.kind != Constraint::Kind::Ref) return changed;
    if (v->constraint.nullness != Nullness::Maybe) return changed;
    targets.insert(v);
    for (Source* s : v->sources->items) s->implied_nonnull.store(true);
    targets.insert(store_.with_nullness(v, Nullness::NonNull));
  }

  while (!stack.empty()) {
    int ord = stack.back();
    stack.pop_back();
    if (!visited.insert(ord).second) continue;
    std::set<int32_t> preds;
    {
      std::lock_guard lock(c->mu);
      if (static_cast<size_t>(ord) < c->preds.size()) preds = c->preds[ord];
    }
    for (int pred : preds) {
      StateRef st = point_state(c, pred);
      if (!st) continue;
      const Value* v = nullptr;
      if (req.loc.kind == ValueLoc::Kind::Local) {
        if (static_cast<size_t>(req.loc.index) >= st->locals.size()) continue;
        v = st->locals[req.loc.index];
      } else {
        if (static_cast<size_t>(req.loc.index) >= st->stack.size()) continue;
        v = st->stack[req.loc.index];
      }
      // the reference's origin changed at this point: stop walking
      if (!v || !targets.count(v)) continue;
      const Value* nn = store_.with_nullness(v, Nullness::NonNull);
      if (nn != v) {
        ProgramState updated = *st;
        if (req.loc.kind == ValueLoc::Kind::Local) {
          updated.locals[req.loc.index] = nn;
        } else {
          updated.stack[req.loc.index] = nn;
        }
        {
          std::lock_guard lock(c->mu);
          c->point_states[pred] = freeze(std::move(updated));
        }
        targets.insert(nn);
        changed.push_back(pred);
      }
      stack.push_back(pred);
    }
  }
  return changed;
}

AnalysisResult Engine::analyze(const EngineOptions& opts) {
  auto start = std::chrono::steady_clock::now();
  suspend_.store(false);
  abort_.store(false);
  step_budget_ = opts.step_budget;
  {
    std::lock_guard lock(queue_mu_);
    rng_.seed(opts.seed ^ 0x9e3779b97f4a7c15ull);
  }
  {
    std::lock_guard lock(calls_mu_);
    if (calls_.empty()) {
      // first run on this engine state
    }
  }
  if (num_live_calls() == 0) seed_entries();

  int n = std::max(1, opts.threads);
  std::vector<std::thread> workers;
  workers.reserve(n);
  for (int i = 0; i < n; ++i) {
    workers.emplace_back([this] { worker_loop(); });
  }
  for (auto& w : workers) w.join();

  AnalysisResult result;
  if (abort_.load()) {
    result.status = AnalysisStatus::BudgetExceeded;
  } else if (suspend_.load()) {
    result.status = AnalysisStatus::Suspended;
  } else {
    result.status = AnalysisStatus::Complete;
    generation_.fetch_add(1);
  }
  result.problems = collect_problems();
  result.steps = steps_.load();
  result.generation = generation_.load();
  result.num_calls = num_live_calls();
  result.num_values = store_.num_values();
  result.num_sources = store_.num_sources();
  {
    std::lock_guard lock(notes_mu_);
    result.notes = notes_;
  }
  {
    std::map<std::string, uint64_t> per_method;
    std::lock_guard lock(calls_mu_);
    for (const auto& c : calls_) {
      if (c->dead || c->steps == 0) continue;
      per_method[prog_->method_signature(c->method)] += c->steps;
    }
    result.method_steps.assign(per_method.begin(), per_method.end());
    std::sort(result.method_steps.begin(), result.method_steps.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
              });
  }
  result.millis =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<Problem> Engine::collect_problems() const {
  std::map<std::string, Problem> by_id;
  std::lock_guard lock(calls_mu_);
  for (const auto& c : calls_) {
    if (c->dead) continue;
    std::lock_guard clock(c->mu);
    for (const auto& errs : c->point_errors) {
      for (const Problem& p : errs) {
        by_id.emplace(p.id, p);
      }
    }
  }
  std::vector<Problem> out;
  out.reserve(by_id.size());
  for (auto& [id, p] : by_id) out.push_back(std::move(p));
  return out;
}

} // namespace mjflow
