#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <vector>

#include <mjflow/points.hpp>
#include <mjflow/types.hpp>

namespace mjflow {

struct Value;

enum class SourceKind : uint8_t { Allocation, NativeReturn, ParameterModel, Fixed, Mutable };

enum class ProtoKind : uint8_t { List, Map, StringBuilder };

// Simulated internal state of a built-in container / string-builder object.
struct PrototypeState {
  ProtoKind kind;
  const Value* element = nullptr; // List element / StringBuilder content
  const Value* key = nullptr;     // Map key
  const Value* value = nullptr;   // Map value
  // size interval with widening counters
  int64_t size_lo = 0, size_hi = 0;
  bool size_hi_inf = false;
  int size_growth = 0;
};

// A (call id, point ordinal) site registered for re-queueing or used as an
// explanation auxiliary point.
struct Site {
  uint32_t call = 0;
  int32_t ordinal = 0;
  auto operator<=>(const Site&) const = default;
};

// A creation point of an abstract object or value. Identity-stable and
// mutable: field/element contents grow monotonically during a fixpoint.
struct Source {
  uint32_t id = 0;
  SourceKind kind = SourceKind::Allocation;
  bool is_mutable = false;
  TypeRef type = kNoType;
  uint32_t created_call = 0; // 0 = no owning call
  ProgramPoint created_at;
  MethodId created_method = kNoMethod;
  bool dead = false; // set by incremental update
  std::atomic<bool> implied_nonnull{false};

  mutable std::mutex mu;
  std::map<FieldId, const Value*> fields;
  std::map<int64_t, const Value*> elements;
  const Value* general_element = nullptr;
  const Value* length = nullptr; // arrays
  bool any_element_write = false;
  std::unique_ptr<PrototypeState> proto;
  std::map<TypeRef, Source*> mutations; // memoized mutate results
  std::set<Site> readers;               // array/prototype read sites
  std::set<Site> writers;               // content write sites (explanations)
};

// Interned, immutable, sorted set of sources. Pointer identity doubles as
// set identity, which both the call keys and the incremental remap rely on.
struct SourceSet {
  uint32_t id = 0;
  std::vector<Source*> items; // sorted by source id

  bool contains(const Source* s) const {
    for (Source* x : items) {
      if (x == s) return true;
    }
    return false;
  }
  bool empty() const { return items.empty(); }
  size_t size() const { return items.size(); }
};

} // namespace mjflow
