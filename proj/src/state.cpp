#include <mjflow/state.hpp>

#include <algorithm>
#include <stdexcept>

namespace mjflow {

const Value* ProgramState::pop() {
  if (stack.empty()) throw std::logic_error("pop on empty abstract stack");
  const Value* v = stack.back();
  stack.pop_back();
  return v;
}

const Value* ProgramState::top(int depth_from_top) const {
  if (static_cast<size_t>(depth_from_top) >= stack.size()) {
    throw std::logic_error("stack access past bottom");
  }
  return stack[stack.size() - 1 - depth_from_top];
}

const Value* ProgramState::overlay_get(FieldId f) const {
  auto it = std::lower_bound(this_fields.begin(), this_fields.end(), f,
                             [](const auto& p, FieldId x) { return p.first < x; });
  if (it != this_fields.end() && it->first == f) return it->second;
  return nullptr;
}

void ProgramState::overlay_set(FieldId f, const Value* v) {
  auto it = std::lower_bound(this_fields.begin(), this_fields.end(), f,
                             [](const auto& p, FieldId x) { return p.first < x; });
  if (it != this_fields.end() && it->first == f) {
    it->second = v;
  } else {
    this_fields.insert(it, {f, v});
  }
}

StateRef freeze(ProgramState s) { return std::make_shared<const ProgramState>(std::move(s)); }

StateRef push_value(const StateRef& s, const Value* v) {
  ProgramState out = *s;
  out.push(v);
  return freeze(std::move(out));
}

std::pair<StateRef, const Value*> pop_value(const StateRef& s) {
  ProgramState out = *s;
  const Value* v = out.pop();
  return {freeze(std::move(out)), v};
}

StateRef set_local_value(const StateRef& s, int slot, const Value* v) {
  ProgramState out = *s;
  out.set_local(slot, v);
  return freeze(std::move(out));
}

std::pair<StateRef, bool> merge_states(const StateRef& a, const ProgramState& b,
                                       ValueStore& store) {
  const ProgramState& x = *a;
  if (x.stack.size() != b.stack.size() || x.locals.size() != b.locals.size() ||
      x.automata.size() != b.automata.size()) {
    throw std::logic_error("merging states of different shapes");
  }
  ProgramState out;
  out.stack.reserve(x.stack.size());
  out.locals.reserve(x.locals.size());
  bool changed = false;
  for (size_t i = 0; i < x.stack.size(); ++i) {
    const Value* m = store.merge(x.stack[i], b.stack[i]);
    changed |= (m != x.stack[i]);
    out.stack.push_back(m);
  }
  for (size_t i = 0; i < x.locals.size(); ++i) {
    const Value* m = store.merge(x.locals[i], b.locals[i]);
    changed |= (m != x.locals[i]);
    out.locals.push_back(m);
  }
  // intersection of overlay keys; values merge
  size_t i = 0, j = 0;
  while (i < x.this_fields.size() && j < b.this_fields.size()) {
    if (x.this_fields[i].first < b.this_fields[j].first) {
      ++i;
      changed = true;
    } else if (b.this_fields[j].first < x.this_fields[i].first) {
      ++j;
    } else {
      const Value* m = store.merge(x.this_fields[i].second, b.this_fields[j].second);
      changed |= (m != x.this_fields[i].second);
      out.this_fields.push_back({x.this_fields[i].first, m});
      ++i;
      ++j;
    }
  }
  if (i < x.this_fields.size()) changed = true;
  out.automata.resize(x.automata.size());
  for (size_t k = 0; k < x.automata.size(); ++k) {
    out.automata[k] = x.automata[k] | b.automata[k];
    changed |= (out.automata[k] != x.automata[k]);
  }
  if (!changed) return {a, false};
  return {freeze(std::move(out)), true};
}

std::vector<AutomatonErrorHit> apply_event(ProgramState& st, int event, const Config& config) {
  std::vector<AutomatonErrorHit> errors;
  for (size_t ai = 0; ai < config.automata.size(); ++ai) {
    const AutomatonDef& a = config.automata[ai];
    uint64_t bits = st.automata[ai];
    uint64_t next = 0;
    for (size_t s = 0; s < a.states.size(); ++s) {
      if (!(bits & (1ull << s))) continue;
      const auto& tr = a.transition(static_cast<uint8_t>(s), static_cast<size_t>(event));
      if (!tr.present) {
        next |= (1ull << s); // no transition for this event: state unchanged
        continue;
      }
      next |= (1ull << tr.to);
      if (tr.error) {
        errors.push_back({static_cast<int>(ai), static_cast<uint8_t>(s), tr.to, event,
                          &tr.message});
      }
    }
    st.automata[ai] = next;
  }
  return errors;
}

std::vector<uint64_t> initial_automata(const Config& config) {
  std::vector<uint64_t> out(config.automata.size(), 0);
  for (size_t i = 0; i < config.automata.size(); ++i) {
    out[i] = 1ull << config.automata[i].initial;
  }
  return out;
}

} // namespace mjflow
