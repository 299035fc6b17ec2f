#include <mjflow/value.hpp>

#include <algorithm>
#include <cassert>

#include <mjflow/bind.hpp>

namespace mjflow {

namespace {

constexpr size_t kMaxConstString = 200;
constexpr size_t kMaxIndexedElements = 8;

uint64_t mix(uint64_t h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

uint64_t hash_constraint(const Constraint& c) {
  uint64_t h = static_cast<uint64_t>(c.kind);
  switch (c.kind) {
    case Constraint::Kind::None:
      break;
    case Constraint::Kind::Int:
      h = mix(h, static_cast<uint64_t>(c.lo));
      h = mix(h, static_cast<uint64_t>(c.hi));
      h = mix(h, (c.lo_inf ? 1u : 0u) | (c.hi_inf ? 2u : 0u));
      break;
    case Constraint::Kind::Boolean:
      h = mix(h, (c.can_true ? 1u : 0u) | (c.can_false ? 2u : 0u));
      break;
    case Constraint::Kind::Str:
      h = mix(h, c.str_any ? 0xffffffffull : c.str);
      break;
    case Constraint::Kind::Ref:
      h = mix(h, static_cast<uint64_t>(c.nullness));
      break;
  }
  return h;
}

uint64_t hash_value(const Value& v) {
  uint64_t h = v.type;
  h = mix(h, hash_constraint(v.constraint));
  h = mix(h, v.sources ? v.sources->id : 0);
  for (uint8_t m : v.members) h = mix(h, m);
  return h;
}

// Saturating interval endpoints; sign = -1/+1 marks -inf/+inf.
struct Pt {
  int64_t v = 0;
  int sign = 0;
};

Pt add_pt(Pt a, Pt b) {
  if (a.sign) return a;
  if (b.sign) return b;
  __int128 s = static_cast<__int128>(a.v) + b.v;
  if (s > INT64_MAX / 2) return {0, +1};
  if (s < INT64_MIN / 2) return {0, -1};
  return {static_cast<int64_t>(s), 0};
}

Pt neg_pt(Pt a) {
  if (a.sign) return {0, -a.sign};
  return {-a.v, 0};
}

Pt mul_pt(Pt a, Pt b) {
  auto sgn = [](Pt p) { return p.sign ? p.sign : (p.v > 0 ? 1 : (p.v < 0 ? -1 : 0)); };
  if (a.sign || b.sign) {
    int s = sgn(a) * sgn(b);
    return {0, s}; // inf * 0 treated as 0
  }
  __int128 p = static_cast<__int128>(a.v) * b.v;
  if (p > INT64_MAX / 2) return {0, +1};
  if (p < INT64_MIN / 2) return {0, -1};
  return {static_cast<int64_t>(p), 0};
}

Pt div_pt(Pt a, Pt b) {
  if (b.sign) return {0, 0}; // x / ±inf -> 0
  if (a.sign) return {0, a.sign * (b.v > 0 ? 1 : -1)};
  return {a.v / b.v, 0};
}

bool pt_less(Pt a, Pt b) {
  if (a.sign != b.sign) return a.sign < b.sign;
  if (a.sign != 0) return false;
  return a.v < b.v;
}

Pt lo_of(const Constraint& c) { return c.lo_inf ? Pt{0, -1} : Pt{c.lo, 0}; }
Pt hi_of(const Constraint& c) { return c.hi_inf ? Pt{0, +1} : Pt{c.hi, 0}; }

Nullness join_nullness(Nullness a, Nullness b) {
  if (a == b) return a;
  return Nullness::Maybe;
}

} // namespace

ValueStore::ValueStore(const Config& config, SymbolTable& syms) : config_(config), syms_(syms) {
  intern_string(""); // id 0
  auto set = std::make_unique<SourceSet>();
  set->id = 0;
  empty_set_ = set.get();
  set_buckets_[0].push_back(set.get());
  sets_.push_back(std::move(set));
}

uint32_t ValueStore::intern_string(const std::string& s) {
  std::lock_guard lock(strings_mu_);
  auto it = string_ids_.find(s);
  if (it != string_ids_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(strings_.size());
  strings_.push_back(s);
  string_ids_.emplace(s, id);
  return id;
}

const std::string& ValueStore::string_at(uint32_t id) const {
  std::lock_guard lock(strings_mu_);
  return strings_[id];
}

Source* ValueStore::new_source(SourceKind kind, TypeRef type, uint32_t call, ProgramPoint at,
                               MethodId method) {
  std::lock_guard lock(sources_mu_);
  auto src = std::make_unique<Source>();
  src->id = static_cast<uint32_t>(sources_.size());
  src->kind = kind;
  src->type = type;
  src->created_call = call;
  src->created_at = at;
  src->created_method = method;
  TypeKind tk = syms_.type(type).kind;
  src->is_mutable = (kind == SourceKind::Mutable ||
                     (kind == SourceKind::ParameterModel && tk == TypeKind::Class));
  Source* out = src.get();
  sources_.push_back(std::move(src));
  return out;
}

size_t ValueStore::num_sources() const {
  std::lock_guard lock(sources_mu_);
  return sources_.size();
}

Source* ValueStore::mutate_source(Source* s, TypeRef target) {
  if (s->type == target) return s;
  assert(prog_);
  if (prog_->assignable(s->type, target)) return s; // already compatible
  const TypeDesc& td = syms_.type(target);
  if (td.kind != TypeKind::Class && td.kind != TypeKind::Array) return nullptr;
  if (!s->is_mutable) return nullptr;
  if (!prog_->assignable(target, s->type)) return nullptr; // not a known subtype
  {
    std::lock_guard lock(s->mu);
    auto it = s->mutations.find(target);
    if (it != s->mutations.end()) return it->second;
  }
  Source* created =
      new_source(SourceKind::Mutable, target, s->created_call, s->created_at, s->created_method);
  std::lock_guard lock(s->mu);
  auto [it, inserted] = s->mutations.emplace(target, created);
  return it->second; // single winner under the lock
}

const SourceSet* ValueStore::empty_set() { return empty_set_; }

const SourceSet* ValueStore::intern_set(std::vector<Source*> items) {
  std::sort(items.begin(), items.end(),
            [](const Source* a, const Source* b) { return a->id < b->id; });
  items.erase(std::unique(items.begin(), items.end()), items.end());
  uint64_t h = 0;
  for (const Source* s : items) h = mix(h, s->id + 1);
  std::lock_guard lock(sets_mu_);
  auto& bucket = set_buckets_[h];
  for (SourceSet* s : bucket) {
    if (s->items == items) return s;
  }
  auto set = std::make_unique<SourceSet>();
  set->id = static_cast<uint32_t>(sets_.size());
  set->items = std::move(items);
  SourceSet* out = set.get();
  bucket.push_back(out);
  sets_.push_back(std::move(set));
  return out;
}

const SourceSet* ValueStore::singleton(Source* s) { return intern_set({s}); }

const SourceSet* ValueStore::union_sets(const SourceSet* a, const SourceSet* b) {
  if (a == b || b->empty()) return a;
  if (a->empty()) return b;
  std::vector<Source*> items;
  items.reserve(a->size() + b->size());
  items.insert(items.end(), a->items.begin(), a->items.end());
  items.insert(items.end(), b->items.begin(), b->items.end());
  return intern_set(std::move(items));
}

const SourceSet* ValueStore::remove_dead(const SourceSet* set) {
  bool any = false;
  for (Source* s : set->items) {
    if (s->dead) any = true;
  }
  if (!any) return set;
  std::vector<Source*> keep;
  for (Source* s : set->items) {
    if (!s->dead) keep.push_back(s);
  }
  return intern_set(std::move(keep));
}

void ValueStore::drop_dead_sources() {
  std::lock_guard lock(sources_mu_);
  for (auto& s : sources_) {
    if (s->dead) continue;
    std::lock_guard slock(s->mu);
    for (auto it = s->mutations.begin(); it != s->mutations.end();) {
      if (it->second->dead) {
        it = s->mutations.erase(it);
      } else {
        ++it;
      }
    }
  }
}

SubtypeVec ValueStore::constant_members() const {
  SubtypeVec v{};
  for (size_t i = 0; i < num_lattices(); ++i) v[i] = config_.lattices[i].default_constant;
  return v;
}

SubtypeVec ValueStore::allocation_members() const {
  SubtypeVec v{};
  for (size_t i = 0; i < num_lattices(); ++i) v[i] = config_.lattices[i].default_allocation;
  return v;
}

SubtypeVec ValueStore::unknown_members() const {
  SubtypeVec v{};
  for (size_t i = 0; i < num_lattices(); ++i) v[i] = config_.lattices[i].default_unknown;
  return v;
}

const Value* ValueStore::intern(Value v) {
  std::lock_guard lock(values_mu_);
  return intern_locked(std::move(v));
}

const Value* ValueStore::intern_locked(Value v) {
  uint64_t h = hash_value(v);
  auto& bucket = value_buckets_[h];
  for (Value* x : bucket) {
    if (*x == v) return x;
  }
  auto owned = std::make_unique<Value>(std::move(v));
  owned->vid = static_cast<uint32_t>(values_.size());
  Value* out = owned.get();
  bucket.push_back(out);
  values_.push_back(std::move(owned));
  return out;
}

const Value* ValueStore::void_value() {
  Value v;
  v.type = syms_.void_type();
  v.constraint.kind = Constraint::Kind::None;
  v.sources = empty_set_;
  return intern(v);
}

const Value* ValueStore::int_range_m(int64_t lo, bool lo_inf, int64_t hi, bool hi_inf,
                                     const SubtypeVec& members, const SourceSet* sources) {
  Value v;
  v.type = syms_.int_type();
  v.constraint.kind = Constraint::Kind::Int;
  v.constraint.lo = lo_inf ? 0 : lo;
  v.constraint.hi = hi_inf ? 0 : hi;
  v.constraint.lo_inf = lo_inf;
  v.constraint.hi_inf = hi_inf;
  v.sources = sources;
  v.members = members;
  return intern(v);
}

const Value* ValueStore::int_const(int64_t x) {
  return int_range_m(x, false, x, false, constant_members(), empty_set_);
}

const Value* ValueStore::int_range(int64_t lo, bool lo_inf, int64_t hi, bool hi_inf) {
  return int_range_m(lo, lo_inf, hi, hi_inf, constant_members(), empty_set_);
}

const Value* ValueStore::bool_value_m(bool can_true, bool can_false, const SubtypeVec& members,
                                      const SourceSet* sources) {
  Value v;
  v.type = syms_.bool_type();
  v.constraint.kind = Constraint::Kind::Boolean;
  v.constraint.can_true = can_true;
  v.constraint.can_false = can_false;
  v.sources = sources;
  v.members = members;
  return intern(v);
}

const Value* ValueStore::bool_value(bool can_true, bool can_false) {
  return bool_value_m(can_true, can_false, constant_members(), empty_set_);
}

const Value* ValueStore::string_const_m(uint32_t str, const SubtypeVec& members,
                                        const SourceSet* sources) {
  Value v;
  v.type = syms_.string_type();
  v.constraint.kind = Constraint::Kind::Str;
  v.constraint.str = str;
  v.sources = sources;
  v.members = members;
  return intern(v);
}

const Value* ValueStore::string_const(const std::string& s) {
  return string_const_m(intern_string(s), constant_members(), empty_set_);
}

const Value* ValueStore::string_any(const SubtypeVec& members, const SourceSet* sources) {
  Value v;
  v.type = syms_.string_type();
  v.constraint.kind = Constraint::Kind::Str;
  v.constraint.str_any = true;
  v.sources = sources;
  v.members = members;
  return intern(v);
}

const Value* ValueStore::null_value(TypeRef type) {
  Value v;
  v.type = type;
  v.constraint.kind = Constraint::Kind::Ref;
  v.constraint.nullness = Nullness::Null;
  v.sources = empty_set_;
  v.members = allocation_members();
  return intern(v);
}

const Value* ValueStore::ref_value(TypeRef type, Nullness nullness, const SourceSet* sources,
                                   const SubtypeVec& members) {
  Value v;
  v.type = type;
  v.constraint.kind = Constraint::Kind::Ref;
  v.constraint.nullness = nullness;
  v.sources = sources;
  v.members = members;
  return intern(v);
}

const Value* ValueStore::default_value(TypeRef type) {
  switch (syms_.type(type).kind) {
    case TypeKind::Int:
      return int_range_m(0, false, 0, false, allocation_members(), empty_set_);
    case TypeKind::Bool:
      return bool_value_m(false, true, allocation_members(), empty_set_);
    case TypeKind::String:
      return string_const_m(0, allocation_members(), empty_set_);
    case TypeKind::Void:
      return void_value();
    default:
      return null_value(type);
  }
}

const Value* ValueStore::with_nullness(const Value* v, Nullness n) {
  if (v->constraint.kind != Constraint::Kind::Ref || v->constraint.nullness == n) return v;
  Value out = *v;
  out.constraint.nullness = n;
  if (n == Nullness::Null) out.sources = empty_set_;
  return intern(out);
}

const Value* ValueStore::with_constraint(const Value* v, const Constraint& c) {
  if (v->constraint == c) return v;
  Value out = *v;
  out.constraint = c;
  return intern(out);
}

const Value* ValueStore::with_members(const Value* v, const SubtypeVec& members) {
  if (v->members == members) return v;
  Value out = *v;
  out.members = members;
  return intern(out);
}

const Value* ValueStore::with_sources(const Value* v, const SourceSet* sources) {
  if (v->sources == sources) return v;
  Value out = *v;
  out.sources = sources;
  return intern(out);
}

TypeRef ValueStore::join_types(TypeRef a, TypeRef b) const {
  if (a == b) return a;
  const TypeDesc& da = syms_.type(a);
  const TypeDesc& db = syms_.type(b);
  if (da.kind == TypeKind::Null) return b;
  if (db.kind == TypeKind::Null) return a;
  auto object = [&] { return syms_.class_type(kObjectClass); };
  if (da.kind == TypeKind::Class && db.kind == TypeKind::Class) {
    assert(prog_);
    ClassId c = da.cls;
    while (true) {
      if (prog_->is_subclass(db.cls, c)) return syms_.class_type(c);
      if (c == kObjectClass) break;
      c = prog_->classes[c].super;
    }
    return object();
  }
  bool ra = da.kind == TypeKind::Class || da.kind == TypeKind::Array || da.kind == TypeKind::String;
  bool rb = db.kind == TypeKind::Class || db.kind == TypeKind::Array || db.kind == TypeKind::String;
  if (ra && rb) return object();
  assert(false && "merging values of incompatible primitive types");
  return a;
}

SubtypeVec ValueStore::merge_members(const SubtypeVec& a, const SubtypeVec& b) const {
  SubtypeVec out{};
  for (size_t i = 0; i < num_lattices(); ++i) {
    out[i] = lattice_merge(static_cast<int>(i), a[i], b[i]);
  }
  return out;
}

const Value* ValueStore::merge(const Value* a, const Value* b) {
  if (a == b) return a;
  Value v;
  v.type = join_types(a->type, b->type);
  v.sources = union_sets(a->sources, b->sources);
  v.members = merge_members(a->members, b->members);

  const Constraint& ca = a->constraint;
  const Constraint& cb = b->constraint;
  if (ca.kind == cb.kind) {
    switch (ca.kind) {
      case Constraint::Kind::None:
        v.constraint.kind = Constraint::Kind::None;
        break;
      case Constraint::Kind::Int: {
        Pt lo = pt_less(lo_of(ca), lo_of(cb)) ? lo_of(ca) : lo_of(cb);
        Pt hi = pt_less(hi_of(ca), hi_of(cb)) ? hi_of(cb) : hi_of(ca);
        v.constraint.kind = Constraint::Kind::Int;
        v.constraint.lo_inf = lo.sign < 0;
        v.constraint.hi_inf = hi.sign > 0;
        v.constraint.lo = v.constraint.lo_inf ? 0 : lo.v;
        v.constraint.hi = v.constraint.hi_inf ? 0 : hi.v;
        break;
      }
      case Constraint::Kind::Boolean:
        v.constraint.kind = Constraint::Kind::Boolean;
        v.constraint.can_true = ca.can_true || cb.can_true;
        v.constraint.can_false = ca.can_false || cb.can_false;
        break;
      case Constraint::Kind::Str:
        v.constraint.kind = Constraint::Kind::Str;
        if (ca.str_any || cb.str_any || ca.str != cb.str) {
          v.constraint.str_any = true;
        } else {
          v.constraint.str = ca.str;
        }
        break;
      case Constraint::Kind::Ref:
        v.constraint.kind = Constraint::Kind::Ref;
        v.constraint.nullness = join_nullness(ca.nullness, cb.nullness);
        break;
    }
  } else if ((ca.kind == Constraint::Kind::Str && cb.kind == Constraint::Kind::Ref) ||
             (ca.kind == Constraint::Kind::Ref && cb.kind == Constraint::Kind::Str)) {
    // a string flowing together with references (e.g. stored under Object):
    // widen to a reference; strings themselves are never null
    const Constraint& rc = ca.kind == Constraint::Kind::Ref ? ca : cb;
    v.constraint.kind = Constraint::Kind::Ref;
    v.constraint.nullness = join_nullness(rc.nullness, Nullness::NonNull);
    v.type = syms_.class_type(kObjectClass);
  } else {
    assert(false && "merging values with mismatched constraint kinds");
    v.constraint = ca;
  }
  return intern(v);
}

RestrictOutcome ValueStore::restrict_value(const Value* v, TypeRef target,
                                           const std::optional<uint8_t>* target_members) {
  RestrictOutcome out;
  SubtypeVec members = v->members;
  if (target_members) {
    for (size_t li = 0; li < num_lattices(); ++li) {
      if (!target_members[li]) continue;
      uint8_t from = v->members[li];
      uint8_t to = *target_members[li];
      const auto& rule = config_.lattices[li].restrict_rule(from, to);
      if (rule.present) {
        members[li] = rule.result;
        if (rule.error) {
          out.errors.push_back({static_cast<int>(li), from, to, &rule.message});
        }
      }
      // absent rule: the member is kept unchanged
    }
  }

  const TypeDesc& td = syms_.type(target);
  TypeKind vk = syms_.type(v->type).kind;

  if (td.kind == TypeKind::Class || td.kind == TypeKind::Array) {
    if (v->constraint.kind != Constraint::Kind::Ref) {
      out.value = nullptr; // non-reference restricted to a reference type
      return out;
    }
    std::vector<Source*> kept;
    bool dropped = false;
    for (Source* s : v->sources->items) {
      assert(prog_);
      if (prog_->assignable(s->type, target)) {
        kept.push_back(s);
      } else if (Source* m = mutate_source(s, target)) {
        kept.push_back(m);
        dropped = true;
      } else {
        dropped = true;
      }
    }
    const SourceSet* sources = dropped ? intern_set(std::move(kept)) : v->sources;
    if (sources->empty() && v->constraint.nullness == Nullness::NonNull && !v->sources->empty()) {
      out.value = nullptr; // every source incompatible and null impossible
      return out;
    }
    Value nv;
    nv.type = target;
    nv.constraint.kind = Constraint::Kind::Ref;
    nv.constraint.nullness = v->constraint.nullness;
    nv.sources = sources;
    nv.members = members;
    out.value = intern(nv);
    return out;
  }

  switch (td.kind) {
    case TypeKind::String: {
      Value nv;
      nv.type = syms_.string_type();
      nv.constraint.kind = Constraint::Kind::Str;
      if (vk == TypeKind::String) {
        nv.constraint = v->constraint;
      } else {
        // reference down-cast to string drops the null possibility
        nv.constraint.str_any = true;
      }
      nv.sources = v->sources;
      nv.members = members;
      out.value = intern(nv);
      return out;
    }
    default: {
      Value nv = *v;
      nv.members = members;
      out.value = intern(nv);
      return out;
    }
  }
}

const Value* ValueStore::binary_op(BinOp op, const Value* a, const Value* b) {
  const SourceSet* sources = union_sets(a->sources, b->sources);
  OpCategory cat;
  switch (op) {
    case BinOp::Concat: cat = OpCategory::Concat; break;
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge:
    case BinOp::Eq:
    case BinOp::Ne: cat = OpCategory::Compare; break;
    default: cat = OpCategory::Arith; break;
  }
  SubtypeVec members{};
  for (size_t i = 0; i < num_lattices(); ++i) {
    members[i] = config_.lattices[i].op_result(cat, a->members[i], b->members[i]);
  }

  auto int_result = [&](Pt lo, Pt hi) {
    return int_range_m(lo.sign ? 0 : lo.v, lo.sign < 0, hi.sign ? 0 : hi.v, hi.sign > 0, members,
                       sources);
  };
  auto bool_result = [&](bool t, bool f) { return bool_value_m(t, f, members, sources); };

  const Constraint& ca = a->constraint;
  const Constraint& cb = b->constraint;

  switch (op) {
    case BinOp::Add:
      return int_result(add_pt(lo_of(ca), lo_of(cb)), add_pt(hi_of(ca), hi_of(cb)));
    case BinOp::Sub:
      return int_result(add_pt(lo_of(ca), neg_pt(hi_of(cb))), add_pt(hi_of(ca), neg_pt(lo_of(cb))));
    case BinOp::Mul: {
      Pt c[4] = {mul_pt(lo_of(ca), lo_of(cb)), mul_pt(lo_of(ca), hi_of(cb)),
                 mul_pt(hi_of(ca), lo_of(cb)), mul_pt(hi_of(ca), hi_of(cb))};
      Pt lo = c[0], hi = c[0];
      for (int i = 1; i < 4; ++i) {
        if (pt_less(c[i], lo)) lo = c[i];
        if (pt_less(hi, c[i])) hi = c[i];
      }
      return int_result(lo, hi);
    }
    case BinOp::Div: {
      bool zero_in = !(pt_less(hi_of(cb), Pt{0, 0}) || pt_less(Pt{0, 0}, lo_of(cb)));
      if (zero_in) return int_result({0, -1}, {0, +1});
      Pt c[4] = {div_pt(lo_of(ca), lo_of(cb)), div_pt(lo_of(ca), hi_of(cb)),
                 div_pt(hi_of(ca), lo_of(cb)), div_pt(hi_of(ca), hi_of(cb))};
      Pt lo = c[0], hi = c[0];
      for (int i = 1; i < 4; ++i) {
        if (pt_less(c[i], lo)) lo = c[i];
        if (pt_less(hi, c[i])) hi = c[i];
      }
      return int_result(lo, hi);
    }
    case BinOp::Mod: {
      bool zero_in = !(pt_less(hi_of(cb), Pt{0, 0}) || pt_less(Pt{0, 0}, lo_of(cb)));
      if (zero_in || cb.lo_inf || cb.hi_inf) return int_result({0, -1}, {0, +1});
      int64_t mag = std::max(std::llabs(cb.lo), std::llabs(cb.hi));
      Pt lo{-(mag - 1), 0}, hi{mag - 1, 0};
      if (!ca.lo_inf && ca.lo >= 0) lo = {0, 0};
      if (!ca.hi_inf && ca.hi <= 0) hi = {0, 0};
      return int_result(lo, hi);
    }
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: {
      const Constraint* x = &ca;
      const Constraint* y = &cb;
      bool le = (op == BinOp::Le || op == BinOp::Ge);
      if (op == BinOp::Gt || op == BinOp::Ge) std::swap(x, y);
      bool def_true, def_false;
      if (le) {
        def_true = !pt_less(lo_of(*y), hi_of(*x)); // x.hi <= y.lo
        def_false = pt_less(hi_of(*y), lo_of(*x)); // x.lo > y.hi
      } else {
        def_true = pt_less(hi_of(*x), lo_of(*y));   // x.hi < y.lo
        def_false = !pt_less(lo_of(*x), hi_of(*y)); // x.lo >= y.hi
      }
      if (def_true) return bool_result(true, false);
      if (def_false) return bool_result(false, true);
      return bool_result(true, true);
    }
    case BinOp::Eq:
    case BinOp::Ne: {
      bool t = true, f = true; // can be equal / can differ
      if (ca.kind == Constraint::Kind::Int && cb.kind == Constraint::Kind::Int) {
        bool disjoint = pt_less(hi_of(ca), lo_of(cb)) || pt_less(hi_of(cb), lo_of(ca));
        bool singleton = !ca.lo_inf && !ca.hi_inf && !cb.lo_inf && !cb.hi_inf && ca.lo == ca.hi &&
                         cb.lo == cb.hi && ca.lo == cb.lo;
        if (disjoint) t = false;
        if (singleton) f = false;
      } else if (ca.kind == Constraint::Kind::Boolean && cb.kind == Constraint::Kind::Boolean) {
        bool a_known = ca.can_true != ca.can_false;
        bool b_known = cb.can_true != cb.can_false;
        if (a_known && b_known) {
          bool eq = ca.can_true == cb.can_true;
          t = eq;
          f = !eq;
        }
      } else if (ca.kind == Constraint::Kind::Str && cb.kind == Constraint::Kind::Str) {
        if (!ca.str_any && !cb.str_any) {
          bool eq = ca.str == cb.str;
          t = eq;
          f = !eq;
        }
      } else if (ca.kind == Constraint::Kind::Ref && cb.kind == Constraint::Kind::Ref) {
        if (ca.nullness == Nullness::Null && cb.nullness == Nullness::Null) {
          f = false;
        } else if ((ca.nullness == Nullness::Null && cb.nullness == Nullness::NonNull) ||
                   (cb.nullness == Nullness::Null && ca.nullness == Nullness::NonNull)) {
          t = false;
        }
      }
      if (op == BinOp::Ne) std::swap(t, f);
      return bool_result(t, f);
    }
    case BinOp::Concat: {
      auto stringify = [&](const Constraint& c) -> std::optional<std::string> {
        switch (c.kind) {
          case Constraint::Kind::Str:
            if (c.str_any) return std::nullopt;
            return string_at(c.str);
          case Constraint::Kind::Int:
            if (!c.lo_inf && !c.hi_inf && c.lo == c.hi) return std::to_string(c.lo);
            return std::nullopt;
          case Constraint::Kind::Boolean:
            if (c.can_true && !c.can_false) return std::string("true");
            if (!c.can_true && c.can_false) return std::string("false");
            return std::nullopt;
          default:
            return std::nullopt;
        }
      };
      auto l = stringify(ca);
      auto r = stringify(cb);
      if (l && r && l->size() + r->size() <= kMaxConstString) {
        return string_const_m(intern_string(*l + *r), members, sources);
      }
      return string_any(members, sources);
    }
  }
  return void_value();
}

const Value* ValueStore::unary_op(UnOp op, const Value* a) {
  switch (op) {
    case UnOp::Neg: {
      SubtypeVec members{};
      for (size_t i = 0; i < num_lattices(); ++i) {
        members[i] = config_.lattices[i].op_result_unary(OpCategory::Arith, a->members[i]);
      }
      Pt lo = neg_pt(hi_of(a->constraint));
      Pt hi = neg_pt(lo_of(a->constraint));
      return int_range_m(lo.sign ? 0 : lo.v, lo.sign < 0, hi.sign ? 0 : hi.v, hi.sign > 0, members,
                         a->sources);
    }
    case UnOp::Not: {
      SubtypeVec members{};
      for (size_t i = 0; i < num_lattices(); ++i) {
        members[i] = config_.lattices[i].op_result_unary(OpCategory::Logic, a->members[i]);
      }
      return bool_value_m(a->constraint.can_false, a->constraint.can_true, members, a->sources);
    }
  }
  return a;
}

const Value* ValueStore::field_get(Source* s, FieldId f, TypeRef field_type) {
  {
    std::lock_guard lock(s->mu);
    auto it = s->fields.find(f);
    if (it != s->fields.end()) return it->second;
  }
  return default_value(field_type);
}

// Lock order is source mutex before the global intern mutexes, so merging
// while holding a source lock is safe.
bool ValueStore::field_set(Source* s, FieldId f, const Value* v) {
  std::lock_guard lock(s->mu);
  auto [it, inserted] = s->fields.emplace(f, v);
  if (inserted) return true;
  const Value* merged = merge(it->second, v);
  if (merged == it->second) return false;
  it->second = merged;
  return true;
}

const Value* ValueStore::array_get(Source* s, const Value* index, TypeRef elem_type) {
  const Value* dflt = default_value(elem_type);
  const Value* stored = nullptr;
  {
    std::lock_guard lock(s->mu);
    const Constraint& c = index->constraint;
    bool singleton = c.kind == Constraint::Kind::Int && !c.lo_inf && !c.hi_inf && c.lo == c.hi;
    if (singleton) {
      auto it = s->elements.find(c.lo);
      if (it != s->elements.end()) stored = it->second;
    }
    if (!stored && s->general_element) stored = s->general_element;
  }
  return stored ? merge(stored, dflt) : dflt;
}

bool ValueStore::array_set(Source* s, const Value* index, const Value* v) {
  auto merge_into = [&](const Value*& slot, const Value* nv) {
    if (!slot) {
      slot = nv;
      return true;
    }
    const Value* merged = merge(slot, nv);
    if (merged == slot) return false;
    slot = merged;
    return true;
  };

  std::lock_guard lock(s->mu);
  bool changed = false;
  const Constraint& c = index->constraint;
  bool singleton = c.kind == Constraint::Kind::Int && !c.lo_inf && !c.hi_inf && c.lo == c.hi;
  if (singleton && (s->elements.count(c.lo) || s->elements.size() < kMaxIndexedElements)) {
    const Value* slot = s->elements.count(c.lo) ? s->elements[c.lo] : nullptr;
    if (merge_into(slot, v)) {
      s->elements[c.lo] = slot;
      changed = true;
    }
  } else if (!singleton) {
    // an unknown-index write may land on any tracked element
    for (auto& [idx, stored] : s->elements) {
      if (merge_into(stored, v)) changed = true;
    }
  }
  if (merge_into(s->general_element, v)) changed = true;
  s->any_element_write = true;
  return changed;
}

const Value* ValueStore::array_length(Source* s) {
  {
    std::lock_guard lock(s->mu);
    if (s->length) return s->length;
  }
  return int_range(0, false, 0, true);
}

void ValueStore::set_array_length(Source* s, const Value* len) {
  std::lock_guard lock(s->mu);
  s->length = s->length ? merge(s->length, len) : len;
}

// Iteration snapshots the current size: entries interned by the callback
// itself (e.g. remapped sets and values) are not revisited.
void ValueStore::for_each_source(const std::function<void(Source*)>& f) {
  size_t n = sources_.size();
  for (size_t i = 0; i < n; ++i) f(sources_[i].get());
}

void ValueStore::for_each_set(const std::function<void(const SourceSet*)>& f) {
  size_t n = sets_.size();
  for (size_t i = 0; i < n; ++i) f(sets_[i].get());
}

void ValueStore::for_each_value(const std::function<void(const Value*)>& f) {
  size_t n = values_.size();
  for (size_t i = 0; i < n; ++i) f(values_[i].get());
}

size_t ValueStore::num_values() const {
  std::lock_guard lock(values_mu_);
  return values_.size();
}

size_t ValueStore::num_sets() const {
  std::lock_guard lock(sets_mu_);
  return sets_.size();
}

} // namespace mjflow
