#include <mjflow/incremental.hpp>

#include <chrono>

namespace mjflow {

namespace {

// nullptr marks a tombstone: every source of the value was removed, so any
// state still holding it is stale and gets dropped for re-derivation.
using ValueMap = std::unordered_map<const Value*, const Value*>;

const Value* map_value(const ValueMap& m, const Value* v, bool* hit_tombstone) {
  auto it = m.find(v);
  if (it == m.end()) return v;
  if (!it->second) {
    *hit_tombstone = true;
    return v;
  }
  return it->second;
}

} // namespace

UpdateStats IncrementalUpdater::run(Engine& eng, const std::set<MethodId>& dirty_methods,
                                    const std::set<FieldId>& dirty_fields,
                                    const std::set<ClassId>& dirty_classes) {
  UpdateStats stats;
  auto start = std::chrono::steady_clock::now();
  ValueStore& store = eng.store();

  std::set<Site> call_upd;       // caller sites of removed calls
  std::set<Call*> removed_calls; // cumulative UPD

  // The entry-state tombstone check below can force further removals, so the
  // removal + remap cycle repeats until stable. The first round handles the
  // file-dirty calls; later rounds are rare.
  std::set<Call*> to_remove;
  eng.for_each_call([&](Call* c) {
    if (!c->dead && dirty_methods.count(c->method)) to_remove.insert(c);
  });

  while (!to_remove.empty()) {
    // reverse edges: which live calls does each call invoke
    std::unordered_map<CallId, std::vector<Call*>> invoked_by;
    eng.for_each_call([&](Call* c) {
      if (c->dead) return;
      std::lock_guard lock(c->mu);
      for (const Site& s : c->callers) invoked_by[s.call].push_back(c);
    });

    std::vector<Call*> queue(to_remove.begin(), to_remove.end());
    to_remove.clear();
    while (!queue.empty()) {
      Call* c = queue.back();
      queue.pop_back();
      if (c->dead) continue;
      eng.remove_from_queue(c); // marks dead
      removed_calls.insert(c);
      ++stats.calls_removed;
      // detach from callees; orphaned callees are removed too
      auto it = invoked_by.find(c->id);
      if (it != invoked_by.end()) {
        for (Call* callee : it->second) {
          if (callee->dead) continue;
          std::lock_guard lock(callee->mu);
          for (auto sit = callee->callers.begin(); sit != callee->callers.end();) {
            if (sit->call == c->id) {
              sit = callee->callers.erase(sit);
            } else {
              ++sit;
            }
          }
          if (callee->callers.empty() && !callee->is_entry) queue.push_back(callee);
        }
      }
    }

    // caller sites of removed calls (skipping callers that died themselves)
    for (Call* c : removed_calls) {
      std::lock_guard lock(c->mu);
      for (const Site& s : c->callers) {
        Call* caller = eng.call_by_id(s.call);
        if (caller && !caller->dead) call_upd.insert(s);
      }
    }

    // SRCUPD: sources created in removed calls
    for (Call* c : removed_calls) {
      std::lock_guard lock(c->mu);
      for (Source* s : c->created_sources) {
        if (!s->dead) {
          s->dead = true;
          ++stats.sources_removed;
        }
      }
    }
    store.drop_dead_sources();

    // SETUPD: one scan over the interned source sets
    std::unordered_map<const SourceSet*, const SourceSet*> set_map;
    store.for_each_set([&](const SourceSet* set) {
      const SourceSet* nes = store.remove_dead(set);
      if (nes != set) {
        set_map[set] = nes;
        ++stats.sets_remapped;
      }
    });

    // VALUPD: one scan over the interned values
    ValueMap value_map;
    store.for_each_value([&](const Value* v) {
      auto it = set_map.find(v->sources);
      if (it == set_map.end()) return;
      if (it->second->empty() && !v->sources->empty()) {
        value_map[v] = nullptr; // tombstone
      } else {
        value_map[v] = store.with_sources(v, it->second);
      }
      ++stats.values_remapped;
    });

    // rewrite states, fields, arrays, and prototypes through the map
    std::set<Call*> entry_tombstoned;
    eng.for_each_call([&](Call* c) {
      if (c->dead) return;
      std::lock_guard lock(c->mu);
      for (size_t ord = 0; ord < c->point_states.size(); ++ord) {
        StateRef& slot = c->point_states[ord];
        if (!slot) continue;
        bool tomb = false;
        bool changed = false;
        ProgramState next = *slot;
        for (auto& v : next.stack) {
          const Value* nv = map_value(value_map, v, &tomb);
          changed |= nv != v;
          v = nv;
        }
        for (auto& v : next.locals) {
          const Value* nv = map_value(value_map, v, &tomb);
          changed |= nv != v;
          v = nv;
        }
        for (auto& [f, v] : next.this_fields) {
          const Value* nv = map_value(value_map, v, &tomb);
          changed |= nv != v;
          v = nv;
        }
        if (tomb) {
          if (ord == 0) {
            entry_tombstoned.insert(c);
            continue;
          }
          // stale state: drop it and re-derive from the surviving frontier
          slot = nullptr;
          if (ord < c->point_errors.size()) c->point_errors[ord].clear();
          if (ord < c->preds.size()) {
            for (int32_t p : c->preds[ord]) call_upd.insert({c->id, p});
          }
          ++stats.states_dropped;
        } else if (changed) {
          slot = freeze(std::move(next));
          ++stats.states_rewritten;
        }
      }
      // return value / thrown entries
      if (c->return_value) {
        bool tomb = false;
        const Value* nv = map_value(value_map, c->return_value, &tomb);
        if (tomb) {
          c->has_returned = false;
          c->return_value = nullptr;
          c->return_automata.clear();
          // the call re-derives its return when its reached points re-run
          for (size_t ord = 0; ord < c->point_states.size(); ++ord) {
            if (c->point_states[ord]) call_upd.insert({c->id, static_cast<int32_t>(ord)});
          }
        } else if (nv != c->return_value) {
          c->return_value = nv;
        }
      }
      for (auto it = c->thrown.begin(); it != c->thrown.end();) {
        bool tomb = false;
        const Value* nv = map_value(value_map, it->second.value, &tomb);
        if (tomb) {
          it = c->thrown.erase(it);
        } else {
          it->second.value = nv;
          ++it;
        }
      }
    });

    // global field table
    std::vector<FieldId> field_ids;
    eng.collect_field_ids(&field_ids);
    for (FieldId f : field_ids) {
      const Value* v = eng.peek_global_field(f);
      if (!v) continue;
      bool tomb = false;
      const Value* nv = map_value(value_map, v, &tomb);
      if (tomb) {
        eng.set_global_field_raw(f, nullptr);
      } else if (nv != v) {
        eng.set_global_field_raw(f, nv);
      }
    }

    // live sources: fields, elements, prototypes, and their registries
    store.for_each_source([&](Source* s) {
      if (s->dead) return;
      std::lock_guard lock(s->mu);
      auto fix = [&](const Value*& v) {
        if (!v) return;
        bool tomb = false;
        const Value* nv = map_value(value_map, v, &tomb);
        v = tomb ? nullptr : nv;
      };
      for (auto it = s->fields.begin(); it != s->fields.end();) {
        bool tomb = false;
        const Value* nv = map_value(value_map, it->second, &tomb);
        if (tomb) {
          it = s->fields.erase(it);
        } else {
          it->second = nv;
          ++it;
        }
      }
      for (auto it = s->elements.begin(); it != s->elements.end();) {
        bool tomb = false;
        const Value* nv = map_value(value_map, it->second, &tomb);
        if (tomb) {
          it = s->elements.erase(it);
        } else {
          it->second = nv;
          ++it;
        }
      }
      fix(s->general_element);
      fix(s->length);
      if (s->proto) {
        fix(s->proto->element);
        fix(s->proto->key);
        fix(s->proto->value);
      }
      auto prune = [&](std::set<Site>& sites) {
        for (auto it = sites.begin(); it != sites.end();) {
          Call* c = eng.call_by_id(it->call);
          if (!c || c->dead) {
            it = sites.erase(it);
          } else {
            ++it;
          }
        }
      };
      prune(s->readers);
      prune(s->writers);
    });

    // calls whose entry state lost all support are removed outright
    to_remove = std::move(entry_tombstoned);
  }

  // prune dead sites from the global field registries and caller sets
  {
    std::lock_guard lock(eng.fields_mu_);
    for (auto& [f, entry] : eng.fields_) {
      auto prune = [&](std::set<Site>& sites) {
        for (auto it = sites.begin(); it != sites.end();) {
          Call* c = eng.call_by_id(it->call);
          if (!c || c->dead) {
            it = sites.erase(it);
          } else {
            ++it;
          }
        }
      };
      prune(entry.readers);
      prune(entry.writers);
    }
  }
  eng.for_each_call([&](Call* c) {
    if (c->dead) return;
    std::lock_guard lock(c->mu);
    for (auto it = c->callers.begin(); it != c->callers.end();) {
      Call* caller = eng.call_by_id(it->call);
      if (!caller || caller->dead) {
        it = c->callers.erase(it);
      } else {
        ++it;
      }
    }
  });

  // static initializers of changed classes run again
  for (ClassId cls : dirty_classes) {
    eng.mark_class_uninitialized(cls);
  }
  for (ClassId cls : dirty_classes) {
    if (cls < eng.program()->classes.size() && eng.program()->classes[cls].defined &&
        eng.program()->classes[cls].clinit != kNoMethod) {
      eng.ensure_class_initialized(cls, {0, 0});
    }
  }

  // queue caller sites of removed calls and every access to a dirty field
  stats.callers_requeued = call_upd.size();
  for (const Site& s : call_upd) eng.queue_site(s);
  for (FieldId f : dirty_fields) {
    std::set<Site> readers;
    eng.field_reader_sites(f, &readers);
    stats.fields_requeued += readers.size();
    eng.queue_sites(readers);
  }

  // entry points in changed files need fresh calls
  eng.seed_entries();

  stats.remap_millis =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

std::string find_dangling_reference(Engine& eng) {
  ValueStore& store = eng.store();
  auto value_bad = [&](const Value* v) -> bool {
    if (!v) return false;
    for (Source* s : v->sources->items) {
      if (s->dead) return true;
    }
    return false;
  };
  std::string out;
  eng.for_each_call([&](Call* c) {
    if (c->dead || !out.empty()) return;
    std::lock_guard lock(c->mu);
    for (size_t ord = 0; ord < c->point_states.size(); ++ord) {
      const StateRef& st = c->point_states[ord];
      if (!st) continue;
      for (const Value* v : st->stack) {
        if (value_bad(v)) out = "stale stack value in call " + std::to_string(c->id);
      }
      for (const Value* v : st->locals) {
        if (value_bad(v)) out = "stale local value in call " + std::to_string(c->id);
      }
      for (const auto& [f, v] : st->this_fields) {
        if (value_bad(v)) out = "stale overlay value in call " + std::to_string(c->id);
      }
    }
    if (value_bad(c->return_value)) out = "stale return value in call " + std::to_string(c->id);
    for (const auto& [t, e] : c->thrown) {
      if (value_bad(e.value)) out = "stale thrown value in call " + std::to_string(c->id);
    }
  });
  if (!out.empty()) return out;
  store.for_each_source([&](Source* s) {
    if (s->dead || !out.empty()) return;
    std::lock_guard lock(s->mu);
    for (const auto& [f, v] : s->fields) {
      if (value_bad(v)) out = "stale field value in source " + std::to_string(s->id);
    }
    for (const auto& [i, v] : s->elements) {
      if (value_bad(v)) out = "stale element value in source " + std::to_string(s->id);
    }
    if (value_bad(s->general_element)) {
      out = "stale general element in source " + std::to_string(s->id);
    }
    if (s->proto) {
      if (value_bad(s->proto->element) || value_bad(s->proto->key) ||
          value_bad(s->proto->value)) {
        out = "stale prototype value in source " + std::to_string(s->id);
      }
    }
  });
  if (!out.empty()) return out;
  std::vector<FieldId> ids;
  eng.collect_field_ids(&ids);
  for (FieldId f : ids) {
    if (value_bad(eng.peek_global_field(f))) {
      return "stale global field value " + std::to_string(f);
    }
  }
  return "";
}

} // namespace mjflow
