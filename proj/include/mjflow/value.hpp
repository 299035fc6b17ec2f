#pragma once

#include <array>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <mjflow/config.hpp>
#include <mjflow/source.hpp>

namespace mjflow {

constexpr size_t kMaxLattices = 8;
using SubtypeVec = std::array<uint8_t, kMaxLattices>;

enum class Nullness : uint8_t { Null, NonNull, Maybe };

enum class BinOp : uint8_t {
  Add, Sub, Mul, Div, Mod,
  Lt, Le, Gt, Ge, Eq, Ne,
  Concat,
};

enum class UnOp : uint8_t { Neg, Not };

// Actual-value constraint, discriminated by the value's type category.
struct Constraint {
  enum class Kind : uint8_t { None, Int, Boolean, Str, Ref } kind = Kind::None;
  // Int: [lo, hi]; infinities flagged separately
  int64_t lo = 0, hi = 0;
  bool lo_inf = false, hi_inf = false;
  // Boolean
  bool can_true = false, can_false = false;
  // Str: interned constant or any
  uint32_t str = 0;
  bool str_any = false;
  // Ref
  Nullness nullness = Nullness::Maybe;

  bool operator==(const Constraint& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
      case Kind::None: return true;
      case Kind::Int:
        return lo == o.lo && hi == o.hi && lo_inf == o.lo_inf && hi_inf == o.hi_inf;
      case Kind::Boolean: return can_true == o.can_true && can_false == o.can_false;
      case Kind::Str: return str_any == o.str_any && (str_any || str == o.str);
      case Kind::Ref: return nullness == o.nullness;
    }
    return false;
  }
};

// The unit of dataflow: interned and immutable, so structural equality is
// pointer equality.
struct Value {
  uint32_t vid = 0;
  TypeRef type = kNoType;
  Constraint constraint;
  const SourceSet* sources = nullptr;
  SubtypeVec members{};

  bool operator==(const Value& o) const {
    return type == o.type && constraint == o.constraint && sources == o.sources &&
           members == o.members;
  }
};

struct RestrictError {
  int lattice = 0;
  uint8_t from = 0, to = 0;
  const std::string* message = nullptr;
};

struct RestrictOutcome {
  const Value* value = nullptr; // nullptr: nothing survives
  std::vector<RestrictError> errors;
};

class BoundProgram;

// Owns and interns sources, source sets, values, and string constants.
// Thread-safe; everything handed out is immutable except Source contents,
// which support atomic merge-and-report-changed updates.
class ValueStore {
 public:
  ValueStore(const Config& config, SymbolTable& syms);

  void set_program(const BoundProgram* prog) { prog_ = prog; }
  const Config& config() const { return config_; }
  size_t num_lattices() const { return config_.lattices.size(); }

  // ---- strings ----
  uint32_t intern_string(const std::string& s);
  const std::string& string_at(uint32_t id) const;

  // ---- sources ----
  Source* new_source(SourceKind kind, TypeRef type, uint32_t call, ProgramPoint at,
                     MethodId method);
  Source* mutate_source(Source* s, TypeRef target); // nullptr when incompatible
  size_t num_sources() const;

  // ---- source sets ----
  const SourceSet* empty_set();
  const SourceSet* singleton(Source* s);
  const SourceSet* union_sets(const SourceSet* a, const SourceSet* b);
  const SourceSet* intern_set(std::vector<Source*> items); // sorts, dedups

  // ---- default member vectors ----
  SubtypeVec constant_members() const;
  SubtypeVec allocation_members() const;
  SubtypeVec unknown_members() const;

  // ---- value constructors ----
  const Value* void_value();
  const Value* int_const(int64_t v);
  const Value* int_range(int64_t lo, bool lo_inf, int64_t hi, bool hi_inf);
  const Value* int_range_m(int64_t lo, bool lo_inf, int64_t hi, bool hi_inf,
                           const SubtypeVec& members, const SourceSet* sources);
  const Value* bool_value(bool can_true, bool can_false);
  const Value* bool_value_m(bool can_true, bool can_false, const SubtypeVec& members,
                            const SourceSet* sources);
  const Value* string_const(const std::string& s);
  const Value* string_const_m(uint32_t str, const SubtypeVec& members, const SourceSet* sources);
  const Value* string_any(const SubtypeVec& members, const SourceSet* sources);
  const Value* null_value(TypeRef type);
  const Value* ref_value(TypeRef type, Nullness nullness, const SourceSet* sources,
                         const SubtypeVec& members);
  const Value* default_value(TypeRef type); // never-set field / fresh local
  const Value* intern(Value v);

  // ---- operations ----
  const Value* merge(const Value* a, const Value* b);
  RestrictOutcome restrict_value(const Value* v, TypeRef target,
                                 const std::optional<uint8_t>* target_members);
  const Value* binary_op(BinOp op, const Value* a, const Value* b);
  const Value* unary_op(UnOp op, const Value* a);
  const Value* with_nullness(const Value* v, Nullness n);
  const Value* with_constraint(const Value* v, const Constraint& c);
  const Value* with_members(const Value* v, const SubtypeVec& members);
  const Value* with_sources(const Value* v, const SourceSet* sources);

  // ---- source contents (atomic merge with changed flag) ----
  const Value* field_get(Source* s, FieldId f, TypeRef field_type);
  bool field_set(Source* s, FieldId f, const Value* v);
  const Value* array_get(Source* s, const Value* index, TypeRef elem_type);
  bool array_set(Source* s, const Value* index, const Value* v);
  const Value* array_length(Source* s);
  void set_array_length(Source* s, const Value* len);

  // ---- iteration (exclusive phases: incremental update, assertions) ----
  void for_each_source(const std::function<void(Source*)>& f);
  void for_each_set(const std::function<void(const SourceSet*)>& f);
  void for_each_value(const std::function<void(const Value*)>& f);
  size_t num_values() const;
  size_t num_sets() const;

  // incremental remap support: replaces the canonical value/set tables
  const SourceSet* remove_dead(const SourceSet* set);
  void drop_dead_sources();

  // type join used by merge; exposed for tests
  TypeRef join_types(TypeRef a, TypeRef b) const;

 private:
  const Value* intern_locked(Value v);
  uint8_t lattice_merge(int li, uint8_t a, uint8_t b) const {
    return config_.lattices[li].merge(a, b);
  }
  SubtypeVec merge_members(const SubtypeVec& a, const SubtypeVec& b) const;

  const Config& config_;
  SymbolTable& syms_;
  const BoundProgram* prog_ = nullptr;

  mutable std::mutex strings_mu_;
  std::deque<std::string> strings_;
  std::unordered_map<std::string, uint32_t> string_ids_;

  mutable std::mutex sources_mu_;
  std::deque<std::unique_ptr<Source>> sources_;

  mutable std::mutex sets_mu_;
  std::deque<std::unique_ptr<SourceSet>> sets_;
  std::unordered_map<uint64_t, std::vector<SourceSet*>> set_buckets_;
  const SourceSet* empty_set_ = nullptr;

  mutable std::mutex values_mu_;
  std::deque<std::unique_ptr<Value>> values_;
  std::unordered_map<uint64_t, std::vector<Value*>> value_buckets_;
};

} // namespace mjflow
