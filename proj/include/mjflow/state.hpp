#pragma once

#include <memory>
#include <vector>

#include <mjflow/value.hpp>

namespace mjflow {

struct AutomatonErrorHit {
  int automaton = 0;
  uint8_t from = 0;
  uint8_t to = 0;
  int event = 0;
  const std::string* message = nullptr;
};

// Abstract state at one program point: operand stack, local slots, the
// this-field overlay, and the possible-state set of every configured
// automaton. Stored states are immutable; transfer functions work on copies.
struct ProgramState {
  std::vector<const Value*> stack;
  std::vector<const Value*> locals;
  std::vector<std::pair<FieldId, const Value*>> this_fields; // sorted by field id
  std::vector<uint64_t> automata; // one bit set per possible state

  bool operator==(const ProgramState& o) const {
    return stack == o.stack && locals == o.locals && this_fields == o.this_fields &&
           automata == o.automata;
  }

  void push(const Value* v) { stack.push_back(v); }
  const Value* pop();
  const Value* top(int depth_from_top = 0) const;
  const Value* get_local(int slot) const { return locals[slot]; }
  void set_local(int slot, const Value* v) { locals[slot] = v; }

  const Value* overlay_get(FieldId f) const;
  void overlay_set(FieldId f, const Value* v);
  void overlay_clear() { this_fields.clear(); }
};

using StateRef = std::shared_ptr<const ProgramState>;

StateRef freeze(ProgramState s);

// Persistent update helpers: each returns a new state sharing nothing
// mutable with the input.
StateRef push_value(const StateRef& s, const Value* v);
std::pair<StateRef, const Value*> pop_value(const StateRef& s);
StateRef set_local_value(const StateRef& s, int slot, const Value* v);

// Pointwise merge. Stack/locals shapes must match (an engine bug otherwise,
// reported by exception). this_fields keys missing on either side fall
// through to the underlying field storage, so they are dropped. Returns the
// merged state and whether it differs from `a`.
std::pair<StateRef, bool> merge_states(const StateRef& a, const ProgramState& b, ValueStore& store);

// Applies one named event to every automaton: current states step through
// the transition table, error transitions are reported, states without a
// transition stay. `event` indexes Config::event_names.
std::vector<AutomatonErrorHit> apply_event(ProgramState& st, int event, const Config& config);

// Automata set for a fresh entry point: each automaton starts at its
// initial state.
std::vector<uint64_t> initial_automata(const Config& config);

} // namespace mjflow
