#include <mjflow/call.hpp>

#include <algorithm>

namespace mjflow {

bool record_return(Call& c, const Value* v, const std::vector<uint64_t>& automata,
                   ValueStore& store) {
  std::lock_guard lock(c.mu);
  bool changed = false;
  if (!c.has_returned) {
    c.has_returned = true;
    c.return_value = v;
    c.return_automata = automata;
    return true;
  }
  const Value* merged = store.merge(c.return_value, v);
  if (merged != c.return_value) {
    c.return_value = merged;
    changed = true;
  }
  if (c.return_automata.size() < automata.size()) c.return_automata.resize(automata.size(), 0);
  for (size_t i = 0; i < automata.size(); ++i) {
    uint64_t next = c.return_automata[i] | automata[i];
    if (next != c.return_automata[i]) {
      c.return_automata[i] = next;
      changed = true;
    }
  }
  return changed;
}

bool record_throw(Call& c, TypeRef type, const Value* v, const std::vector<uint64_t>& automata,
                  ValueStore& store) {
  std::lock_guard lock(c.mu);
  auto [it, inserted] = c.thrown.try_emplace(type);
  if (inserted) {
    it->second.value = v;
    it->second.automata = automata;
    return true;
  }
  bool changed = false;
  const Value* merged = store.merge(it->second.value, v);
  if (merged != it->second.value) {
    it->second.value = merged;
    changed = true;
  }
  if (it->second.automata.size() < automata.size()) {
    it->second.automata.resize(automata.size(), 0);
  }
  for (size_t i = 0; i < automata.size(); ++i) {
    uint64_t next = it->second.automata[i] | automata[i];
    if (next != it->second.automata[i]) {
      it->second.automata[i] = next;
      changed = true;
    }
  }
  return changed;
}

void record_errors(Call& c, int ordinal, std::vector<Problem> fresh) {
  // one evaluation of a point yields its complete error set: replacing the
  // stored set lets re-queued points retire stale problems after an update
  std::lock_guard lock(c.mu);
  if (c.point_errors.size() <= static_cast<size_t>(ordinal)) {
    c.point_errors.resize(ordinal + 1);
  }
  auto& slot = c.point_errors[ordinal];
  std::sort(fresh.begin(), fresh.end(),
            [](const Problem& a, const Problem& b) { return a.id < b.id; });
  fresh.erase(std::unique(fresh.begin(), fresh.end(),
                          [](const Problem& a, const Problem& b) { return a.id == b.id; }),
              fresh.end());
  slot = std::move(fresh);
}

} // namespace mjflow
