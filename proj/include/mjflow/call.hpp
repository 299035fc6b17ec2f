#pragma once

#include <map>
#include <set>

#include <mjflow/state.hpp>

namespace mjflow {

using CallId = uint32_t;

enum class ProblemKind : uint8_t { Subtype, Automaton };

// Where a suspect value sits at a problem point; seeds backward explanation.
struct ValueLoc {
  enum class Kind : uint8_t { None, Stack, Local } kind = Kind::None;
  int index = 0;
  bool operator==(const ValueLoc&) const = default;
};

struct Problem {
  std::string id; // stable across runs and unrelated edits
  ProblemKind kind = ProblemKind::Subtype;
  std::string name; // lattice or automaton name
  MethodId method = kNoMethod;
  ProgramPoint point;
  int ordinal = -1;
  std::string message;
  std::string severity = "error";
  // explanation seeds
  int lattice = -1;
  uint8_t member = 0;
  ValueLoc loc;
  int automaton = -1;
  uint8_t state = 0;      // error-transition target
  uint8_t from_state = 0; // state the transition left
  int event = -1;
  CallId call = 0; // where recorded; not part of the identity

  bool same_identity(const Problem& o) const { return id == o.id; }
};

// Context-sensitivity key: one Call exists per distinct key. Fingerprints
// are interned source-set ids, so "distinct value of this" is set identity.
struct CallKey {
  MethodId method = kNoMethod;
  ContextPolicy policy = ContextPolicy::Insensitive;
  uint32_t this_set = 0;
  std::vector<uint32_t> arg_sets;

  bool operator==(const CallKey& o) const {
    return method == o.method && policy == o.policy && this_set == o.this_set &&
           arg_sets == o.arg_sets;
  }
};

struct CallKeyHash {
  size_t operator()(const CallKey& k) const {
    size_t h = k.method * 1000003u + static_cast<size_t>(k.policy) * 97 + k.this_set;
    for (uint32_t a : k.arg_sets) h = h * 131 + a;
    return h;
  }
};

class MethodPlan;

// One context-sensitive instance of a method under analysis (or a model
// stub). Point states, recorded errors, created sources, and caller sites
// all live here so that file-level incremental update can discard them
// wholesale.
struct Call {
  CallId id = 0;
  CallKey key;
  MethodId method = kNoMethod;
  const MethodPlan* plan = nullptr;
  int priority = 2; // 0 static-init, 1 constructor, 2 normal; min-inherited
  bool is_entry = false;

  mutable std::mutex mu;
  const Value* return_value = nullptr; // merged over return statements
  std::vector<uint64_t> return_automata;
  bool has_returned = false;
  struct ThrownEntry {
    const Value* value = nullptr;
    std::vector<uint64_t> automata;
  };
  std::map<TypeRef, ThrownEntry> thrown;
  std::vector<StateRef> point_states;         // by ordinal; entry state at 0
  std::vector<std::vector<Problem>> point_errors; // replaced on re-evaluation
  std::set<Site> callers;
  uint64_t invocations_seen = 0;
  std::map<std::pair<int, int>, Source*> created; // (ordinal, tag) -> source
  std::vector<Source*> created_sources;
  std::vector<std::set<int32_t>> preds; // forward edges reversed, by ordinal
  std::map<uint64_t, int> growth;       // widening counters
  uint64_t steps = 0;

  // queue bookkeeping (guarded by the engine queue mutex)
  bool queued = false;
  bool running = false;
  bool dead = false;
  std::set<int32_t> pending;

  Source* created_source(int ordinal, int tag) const {
    std::lock_guard lock(mu);
    auto it = created.find({ordinal, tag});
    return it == created.end() ? nullptr : it->second;
  }
  void remember_source(int ordinal, int tag, Source* s) {
    std::lock_guard lock(mu);
    created.emplace(std::pair<int, int>{ordinal, tag}, s);
    created_sources.push_back(s);
  }
};

// Records a return value (and exit automata) and reports whether anything
// changed; a change re-queues all caller sites.
bool record_return(Call& c, const Value* v, const std::vector<uint64_t>& automata,
                   ValueStore& store);
bool record_throw(Call& c, TypeRef type, const Value* v, const std::vector<uint64_t>& automata,
                  ValueStore& store);
// Deduplicating error sink for one evaluation of one point.
void record_errors(Call& c, int ordinal, std::vector<Problem> fresh);

} // namespace mjflow
