#include <mjflow/interp.hpp>

#include <algorithm>
#include <cassert>

namespace mjflow {

namespace {

uint64_t fnv64(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

BinOp bin_op_for(const std::string& op, bool string_concat) {
  if (op == "+") return string_concat ? BinOp::Concat : BinOp::Add;
  if (op == "-") return BinOp::Sub;
  if (op == "*") return BinOp::Mul;
  if (op == "/") return BinOp::Div;
  if (op == "%") return BinOp::Mod;
  if (op == "<") return BinOp::Lt;
  if (op == "<=") return BinOp::Le;
  if (op == ">") return BinOp::Gt;
  if (op == ">=") return BinOp::Ge;
  if (op == "==") return BinOp::Eq;
  return BinOp::Ne;
}

} // namespace

Interp::Interp(Engine& engine, Call* call)
    : eng_(engine),
      call_(call),
      plan_(call->plan),
      file_(call->plan->file),
      method_(&engine.program()->methods[call->method]),
      prog_(engine.program()),
      store_(engine.store()) {}

void Interp::to_point(int ordinal, ProgramState st) {
  result_.successors.emplace_back(ordinal, std::move(st));
}

void Interp::descend(NodeId child, ProgramState st) {
  int ord = plan_->ordinal({child, -1});
  assert(ord >= 0);
  to_point(ord, std::move(st));
}

void Interp::complete(NodeId n, ProgramState st) {
  int ord = plan_->completion_ordinal(n);
  if (ord == MethodPlan::kExitOrdinal) {
    method_exit(std::move(st));
    return;
  }
  to_point(ord, std::move(st));
}

void Interp::method_exit(ProgramState st) {
  // falling off the end: void methods (and constructors) complete here,
  // non-void methods contribute no return value
  if (prog_->syms->type(method_->return_type).kind == TypeKind::Void) {
    if (record_return(*call_, store_.void_value(), st.automata, store_)) {
      std::lock_guard lock(call_->mu);
      for (const Site& s : call_->callers) result_.requeue.push_back(s);
    }
  }
}

std::string Interp::problem_id(ProblemKind kind, const std::string& name,
                               const std::string& detail, ProgramPoint pt) const {
  std::string text = prog_->method_signature(call_->method);
  text += "|";
  text += plan_->point_path(pt);
  text += "|";
  text += kind == ProblemKind::Subtype ? "subtype" : "automaton";
  text += "|";
  text += name;
  text += "|";
  text += detail;
  return hex64(fnv64(text));
}

void Interp::subtype_problems(const RestrictOutcome& rc, ProgramPoint pt, ValueLoc loc) {
  for (const RestrictError& e : rc.errors) {
    const SubtypeLattice& lat = eng_.config().lattices[e.lattice];
    Problem p;
    p.kind = ProblemKind::Subtype;
    p.name = lat.name;
    p.method = call_->method;
    p.point = pt;
    p.ordinal = ord_;
    p.message = *e.message;
    p.lattice = e.lattice;
    p.member = e.from;
    p.loc = loc;
    p.call = call_->id;
    p.id = problem_id(ProblemKind::Subtype, lat.name,
                      lat.values[e.from] + "->" + lat.values[e.to] + ":" + *e.message, pt);
    result_.problems.push_back(std::move(p));
  }
}

void Interp::automaton_problems(const std::vector<AutomatonErrorHit>& hits, ProgramPoint pt) {
  for (const AutomatonErrorHit& h : hits) {
    const AutomatonDef& a = eng_.config().automata[h.automaton];
    Problem p;
    p.kind = ProblemKind::Automaton;
    p.name = a.name;
    p.method = call_->method;
    p.point = pt;
    p.ordinal = ord_;
    p.message = *h.message;
    p.automaton = h.automaton;
    p.state = h.to;
    p.from_state = h.from;
    p.event = h.event;
    p.call = call_->id;
    p.id = problem_id(ProblemKind::Automaton, a.name,
                      eng_.config().event_names[h.event] + ":" + a.states[h.from] + "->" +
                          a.states[h.to] + ":" + *h.message,
                      pt);
    result_.problems.push_back(std::move(p));
  }
}

const Value* Interp::read_instance_field(const Value* base, FieldId f) {
  const FieldInfo& fi = prog_->fields[f];
  const Value* out = nullptr;
  bool arbitrary = base->sources->empty();
  for (Source* s : base->sources->items) {
    const Value* v = store_.field_get(s, f, fi.type);
    out = out ? store_.merge(out, v) : v;
    if (source_is_arbitrary(s)) arbitrary = true;
  }
  if (arbitrary) {
    const Value* g = eng_.read_global_field(f, here());
    out = out ? store_.merge(out, g) : g;
  } else {
    eng_.register_field_reader(f, here());
  }
  return out ? out : store_.default_value(fi.type);
}

void Interp::write_instance_field(const Value* base, FieldId f, const Value* v) {
  std::set<Site> readers;
  bool arbitrary = base->sources->empty();
  for (Source* s : base->sources->items) {
    {
      std::lock_guard lock(s->mu);
      s->writers.insert(here());
    }
    if (store_.field_set(s, f, v)) eng_.field_reader_sites(f, &readers);
    if (source_is_arbitrary(s)) arbitrary = true;
  }
  if (arbitrary) {
    eng_.write_global_field(f, v, here(), &readers);
  } else {
    eng_.register_field_writer(f, here());
  }
  for (const Site& s : readers) result_.requeue.push_back(s);
}

const Value* Interp::read_array_element(const Value* base, const Value* index, TypeRef elem) {
  const Value* out = nullptr;
  for (Source* s : base->sources->items) {
    {
      std::lock_guard lock(s->mu);
      s->readers.insert(here());
    }
    const Value* v = store_.array_get(s, index, elem);
    out = out ? store_.merge(out, v) : v;
  }
  return out ? out : store_.default_value(elem);
}

void Interp::write_array_element(const Value* base, const Value* index, const Value* v) {
  for (Source* s : base->sources->items) {
    std::set<Site> readers;
    {
      std::lock_guard lock(s->mu);
      s->writers.insert(here());
      readers = s->readers;
    }
    if (store_.array_set(s, index, v)) {
      for (const Site& site : readers) result_.requeue.push_back(site);
    }
  }
}

const Value* Interp::operand_value(const ProgramState& st, NodeId n) const {
  const AstNode& an = node(n);
  switch (an.kind) {
    case NodeKind::VarRef: {
      const NodeBinding& b = binding(n);
      if (b.slot >= 0) return st.locals[b.slot];
      return nullptr;
    }
    case NodeKind::IntLit:
      return store_.int_const(an.int_value);
    case NodeKind::NullLit:
      return store_.null_value(prog_->syms->null_type());
    case NodeKind::BoolLit:
      return store_.bool_value(an.flags & kFlagBoolTrue, !(an.flags & kFlagBoolTrue));
    default:
      return nullptr;
  }
}

void Interp::refine_local_nonnull(ProgramState& st, NodeId base_expr) {
  const AstNode& an = node(base_expr);
  if (an.kind != NodeKind::VarRef) return;
  const NodeBinding& b = binding(base_expr);
  if (b.slot < 0) return;
  const Value* v = st.locals[b.slot];
  if (v->constraint.kind != Constraint::Kind::Ref) return;
  if (v->constraint.nullness == Nullness::Maybe) {
    st.locals[b.slot] = store_.with_nullness(v, Nullness::NonNull);
    result_.backprops.push_back({ValueLoc{ValueLoc::Kind::Local, b.slot}});
  }
}

// Branch refinement over the syntactic condition; only local slots are
// refined. Returns false when the branch is infeasible in `st`.
bool Interp::refine(ProgramState& st, NodeId cond, bool branch) {
  const AstNode& cn = node(cond);
  auto local_slot = [&](NodeId n) -> int {
    if (node(n).kind != NodeKind::VarRef) return -1;
    return binding(n).slot;
  };

  auto intersect = [&](int slot, std::optional<int64_t> lo, std::optional<int64_t> hi) -> bool {
    const Value* v = st.locals[slot];
    if (v->constraint.kind != Constraint::Kind::Int) return true;
    Constraint c = v->constraint;
    if (lo) {
      if (!c.lo_inf && *lo < c.lo) {
        // existing bound already tighter
      } else {
        c.lo = *lo;
        c.lo_inf = false;
      }
    }
    if (hi) {
      if (!c.hi_inf && *hi > c.hi) {
        // existing bound already tighter
      } else {
        c.hi = *hi;
        c.hi_inf = false;
      }
    }
    if (!c.lo_inf && !c.hi_inf && c.lo > c.hi) return false;
    st.locals[slot] = store_.with_constraint(v, c);
    return true;
  };

  switch (cn.kind) {
    case NodeKind::Unary:
      if (cn.text == "!") return refine(st, cn.children[0], !branch);
      return true;
    case NodeKind::VarRef: {
      int slot = local_slot(cond);
      if (slot < 0) return true;
      const Value* v = st.locals[slot];
      if (v->constraint.kind != Constraint::Kind::Boolean) return true;
      if (branch && !v->constraint.can_true) return false;
      if (!branch && !v->constraint.can_false) return false;
      Constraint c = v->constraint;
      c.can_true = branch;
      c.can_false = !branch;
      st.locals[slot] = store_.with_constraint(v, c);
      return true;
    }
    case NodeKind::Binary:
      break;
    default:
      return true;
  }

  const std::string& op = cn.text;
  NodeId l = cn.children[0];
  NodeId r = cn.children[1];

  if (op == "&&") {
    if (branch) return refine(st, l, true) && refine(st, r, true);
    return true;
  }
  if (op == "||") {
    if (!branch) return refine(st, l, false) && refine(st, r, false);
    return true;
  }

  if (op == "==" || op == "!=") {
    bool eq = (op == "==") == branch;
    const Value* lv = operand_value(st, l);
    const Value* rv = operand_value(st, r);
    if (!lv || !rv) return true;

    auto handle_null_test = [&](NodeId var, const Value* var_v) -> std::optional<bool> {
      int slot = local_slot(var);
      if (slot < 0) return std::nullopt;
      if (var_v->constraint.kind != Constraint::Kind::Ref) return std::nullopt;
      Nullness n = var_v->constraint.nullness;
      if (eq) {
        if (n == Nullness::NonNull) return false; // cannot be null here
        st.locals[slot] = store_.with_nullness(var_v, Nullness::Null);
      } else {
        if (n == Nullness::Null) return false; // must be null here
        st.locals[slot] = store_.with_nullness(var_v, Nullness::NonNull);
      }
      return true;
    };

    if (node(r).kind == NodeKind::NullLit) {
      auto res = handle_null_test(l, lv);
      if (res) return *res;
      return true;
    }
    if (node(l).kind == NodeKind::NullLit) {
      auto res = handle_null_test(r, rv);
      if (res) return *res;
      return true;
    }

    if (lv->constraint.kind == Constraint::Kind::Int &&
        rv->constraint.kind == Constraint::Kind::Int) {
      int ls = local_slot(l), rs = local_slot(r);
      const Constraint& rc = rv->constraint;
      const Constraint& lc = lv->constraint;
      if (eq) {
        bool ok = true;
        if (ls >= 0) {
          ok = ok && intersect(ls, rc.lo_inf ? std::nullopt : std::optional<int64_t>(rc.lo),
                               rc.hi_inf ? std::nullopt : std::optional<int64_t>(rc.hi));
        }
        if (ok && rs >= 0) {
          ok = ok && intersect(rs, lc.lo_inf ? std::nullopt : std::optional<int64_t>(lc.lo),
                               lc.hi_inf ? std::nullopt : std::optional<int64_t>(lc.hi));
        }
        return ok;
      }
      // not-equal against a known constant shaves matching endpoints
      auto shave = [&](int slot, const Constraint& other) -> bool {
        if (slot < 0) return true;
        if (other.lo_inf || other.hi_inf || other.lo != other.hi) return true;
        int64_t k = other.lo;
        const Value* v = st.locals[slot];
        Constraint c = v->constraint;
        if (c.kind != Constraint::Kind::Int) return true;
        if (!c.lo_inf && !c.hi_inf && c.lo == c.hi && c.lo == k) return false;
        if (!c.lo_inf && c.lo == k) c.lo = k + 1;
        if (!c.hi_inf && c.hi == k) c.hi = k - 1;
        if (!c.lo_inf && !c.hi_inf && c.lo > c.hi) return false;
        st.locals[slot] = store_.with_constraint(v, c);
        return true;
      };
      return shave(ls, rv->constraint) && shave(rs, lv->constraint);
    }
    return true;
  }

  if (op == "<" || op == "<=" || op == ">" || op == ">=") {
    NodeId x = l, y = r;
    bool strict = (op == "<" || op == ">");
    if (op == ">" || op == ">=") std::swap(x, y);
    // now testing x < y (strict) or x <= y
    bool holds = branch;
    const Value* xv = operand_value(st, x);
    const Value* yv = operand_value(st, y);
    if (!xv || !yv) return true;
    if (xv->constraint.kind != Constraint::Kind::Int ||
        yv->constraint.kind != Constraint::Kind::Int) {
      return true;
    }
    int xs = local_slot(x), ys = local_slot(y);
    const Constraint& xc = xv->constraint;
    const Constraint& yc = yv->constraint;
    bool ok = true;
    if (holds) {
      // x < y  (or x <= y)
      if (xs >= 0 && !yc.hi_inf) ok = ok && intersect(xs, std::nullopt, yc.hi - (strict ? 1 : 0));
      if (ok && ys >= 0 && !xc.lo_inf) {
        ok = ok && intersect(ys, xc.lo + (strict ? 1 : 0), std::nullopt);
      }
    } else {
      // x >= y (or x > y)
      if (xs >= 0 && !yc.lo_inf) ok = ok && intersect(xs, yc.lo + (strict ? 0 : 1), std::nullopt);
      if (ok && ys >= 0 && !xc.hi_inf) {
        ok = ok && intersect(ys, std::nullopt, xc.hi - (strict ? 0 : 1));
      }
    }
    return ok;
  }
  return true;
}

// ---- invocation ----

std::vector<const Value*> Interp::restricted_args(MethodId target, const EffectiveModel& em,
                                                  std::vector<const Value*> args, ProgramPoint pt,
                                                  size_t stack_base) {
  const MethodInfo& mi = prog_->methods[target];
  for (size_t i = 0; i < args.size() && i < mi.params.size(); ++i) {
    std::optional<uint8_t> members[kMaxLattices];
    bool any = false;
    for (const AnnotationReq& a : mi.params[i].annotations) {
      members[a.lattice] = a.member;
      any = true;
    }
    for (const ParamRequire& r : em.requires_) {
      if (r.index == static_cast<int>(i)) {
        members[r.lattice] = r.member;
        any = true;
      }
    }
    TypeRef pt_type = mi.params[i].type;
    bool needs_type_restrict =
        args[i]->type != pt_type && prog_->syms->type(pt_type).kind != TypeKind::Void;
    if (!any && !needs_type_restrict) continue;
    RestrictOutcome rc = store_.restrict_value(args[i], pt_type, any ? members : nullptr);
    subtype_problems(rc, pt, {ValueLoc::Kind::Stack, static_cast<int>(stack_base + i)});
    if (rc.value) args[i] = rc.value;
  }
  return args;
}

const Value* Interp::model_return_value(MethodId target, const EffectiveModel& em,
                                        const Value* recv, const std::vector<const Value*>& args,
                                        ProgramPoint pt, int memo_tag) {
  const MethodInfo& mi = prog_->methods[target];
  SymbolTable& syms = *prog_->syms;
  TypeRef rt = mi.return_type;
  if (em.return_type) {
    if (*em.return_type == "int") {
      rt = syms.int_type();
    } else if (*em.return_type == "boolean") {
      rt = syms.bool_type();
    } else if (*em.return_type == "string") {
      rt = syms.string_type();
    } else {
      int cid = syms.find_class(*em.return_type);
      if (cid >= 0 && prog_->classes[cid].defined) {
        rt = syms.class_type(static_cast<ClassId>(cid));
      } else {
        eng_.note("model return_type '" + *em.return_type + "' is not a known type");
      }
    }
  }
  TypeKind rk = syms.type(rt).kind;
  if (rk == TypeKind::Void) return store_.void_value();

  // subtype members: fixed per resource model, else the declaration's own
  // return annotations, else joined from the inputs
  bool have_inputs = recv != nullptr || !args.empty();
  SubtypeVec members = store_.unknown_members();
  const auto& lattices = eng_.config().lattices;
  std::optional<uint8_t> annotated[kMaxLattices];
  for (const AnnotationReq& a : mi.return_annotations) annotated[a.lattice] = a.member;
  for (size_t li = 0; li < lattices.size(); ++li) {
    auto it = em.return_fixed.find(static_cast<int>(li));
    if (it != em.return_fixed.end()) {
      members[li] = it->second;
      continue;
    }
    if (annotated[li]) {
      members[li] = *annotated[li];
      continue;
    }
    if (!have_inputs) continue; // stays default_unknown
    bool first = true;
    uint8_t m = 0;
    auto fold = [&](const Value* v) {
      if (!v) return;
      m = first ? v->members[li] : lattices[li].merge(m, v->members[li]);
      first = false;
    };
    fold(recv);
    for (const Value* a : args) fold(a);
    if (!first) members[li] = m;
  }

  Source* src = call_->created_source(ord_, memo_tag);
  if (!src) {
    SourceKind kind = (rk == TypeKind::Class || rk == TypeKind::Array) ? SourceKind::Mutable
                                                                       : SourceKind::NativeReturn;
    src = store_.new_source(kind, rt, call_->id, pt, call_->method);
    call_->remember_source(ord_, memo_tag, src);
  }
  const SourceSet* set = store_.singleton(src);
  switch (rk) {
    case TypeKind::Int:
      return store_.int_range_m(0, true, 0, true, members, set);
    case TypeKind::Bool:
      return store_.bool_value_m(true, true, members, set);
    case TypeKind::String:
      return store_.string_any(members, set);
    default:
      return store_.ref_value(rt, Nullness::Maybe, set, members);
  }
}

void Interp::run_callbacks(const EffectiveModel& em, const std::vector<const Value*>& args,
                           const ProgramState& st, ProgramPoint pt, int memo_tag) {
  SymbolTable& syms = *prog_->syms;
  int cb_index = 0;
  for (const CallbackSpec& cb : em.callbacks) {
    ++cb_index;
    if (cb.arg_index < 0 || static_cast<size_t>(cb.arg_index) >= args.size()) continue;
    const Value* obj = args[cb.arg_index];
    for (Source* s : obj->sources->items) {
      const TypeDesc& td = syms.type(s->type);
      if (td.kind != TypeKind::Class) continue;
      MethodId m = prog_->find_method(td.cls, cb.method);
      if (m == kNoMethod) continue;
      const MethodInfo& mi = prog_->methods[m];
      if (!mi.has_body() || mi.is_static) continue;
      const SourceSet* recv_set = store_.singleton(s);
      bool created = false;
      Call* callee = eng_.get_or_create_call(m, ContextPolicy::ThisSensitive, recv_set->id, {},
                                             call_->priority, &created);
      if (created || !callee->plan) callee->plan = eng_.plan_for(m);
      eng_.register_caller(callee, here());

      ProgramState entry;
      entry.locals.resize(mi.slot_types.size());
      entry.locals[0] = store_.ref_value(syms.class_type(mi.owner), Nullness::NonNull, recv_set,
                                         store_.allocation_members());
      for (size_t i = 0; i < mi.slot_types.size(); ++i) {
        if (i == 0) continue;
        entry.locals[i] = store_.default_value(mi.slot_types[i]);
      }
      // callback parameters become arbitrary mutable values
      for (size_t p = 0; p < mi.params.size(); ++p) {
        int slot = mi.first_param_slot() + static_cast<int>(p);
        TypeRef ptype = mi.params[p].type;
        TypeKind pk = syms.type(ptype).kind;
        int tag = memo_tag + 100 + cb_index * 16 + static_cast<int>(p);
        Source* psrc = call_->created_source(ord_, tag);
        if (!psrc) {
          psrc = store_.new_source(SourceKind::ParameterModel, ptype, call_->id, pt,
                                   call_->method);
          call_->remember_source(ord_, tag, psrc);
        }
        const SourceSet* pset = store_.singleton(psrc);
        switch (pk) {
          case TypeKind::Int:
            entry.locals[slot] = store_.int_range_m(0, true, 0, true, store_.unknown_members(),
                                                    pset);
            break;
          case TypeKind::Bool:
            entry.locals[slot] =
                store_.bool_value_m(true, true, store_.unknown_members(), pset);
            break;
          case TypeKind::String:
            entry.locals[slot] = store_.string_any(store_.unknown_members(), pset);
            break;
          default:
            entry.locals[slot] =
                store_.ref_value(ptype, Nullness::Maybe, pset, store_.unknown_members());
            break;
        }
      }
      entry.automata = st.automata;
      if (eng_.add_invocation(callee, entry)) result_.queue_entries.push_back(callee);
    }
  }
}

void Interp::dispatch_target(MethodId target, const Value* recv, std::vector<const Value*>& args,
                             ProgramPoint pt, const ProgramState& st, DispatchOutcome& out,
                             int memo_tag) {
  const MethodInfo* mi = &prog_->methods[target];
  SymbolTable& syms = *prog_->syms;
  EffectiveModel em = eng_.config().resolve_model(syms.class_name(mi->owner), mi->name,
                                                  mi->is_native, mi->is_static);
  // replacement: redirect the call to a different method
  if (em.replace) {
    auto dot = em.replace->rfind('.');
    bool redirected = false;
    if (dot != std::string::npos) {
      int cid = syms.find_class(em.replace->substr(0, dot));
      if (cid >= 0 && prog_->classes[cid].defined) {
        MethodId alt = prog_->find_method(static_cast<ClassId>(cid), em.replace->substr(dot + 1));
        if (alt != kNoMethod && prog_->methods[alt].params.size() == args.size()) {
          target = alt;
          mi = &prog_->methods[target];
          if (prog_->methods[alt].is_static) recv = nullptr;
          em = eng_.config().resolve_model(syms.class_name(mi->owner), mi->name, mi->is_native,
                                           mi->is_static);
          redirected = true;
        }
      }
    }
    if (!redirected) {
      eng_.note("replacement target '" + *em.replace + "' not found; call ignored");
    }
  }

  if (em.event) {
    out.events.push_back(*em.event);
  }

  if (mi->builtin && !mi->is_ctor) {
    // prototype-backed built-in container / string-builder method
    if (recv) {
      for (Source* s : recv->sources->items) {
        ensure_proto(s);
        if (!s->proto) continue;
        ProtoOutcome po = proto_call(s, mi->name, args);
        const Value* r = po.ret ? po.ret
                                : store_.ref_value(syms.class_type(mi->owner), Nullness::NonNull,
                                                   store_.singleton(s), recv->members);
        out.ret = out.ret ? store_.merge(out.ret, r) : r;
        if (po.changed) {
          std::set<Site> readers;
          {
            std::lock_guard lock(s->mu);
            readers = s->readers;
          }
          for (const Site& site : readers) result_.requeue.push_back(site);
        }
      }
      if (recv->sources->empty() && syms.type(mi->return_type).kind != TypeKind::Void) {
        const Value* r = store_.default_value(mi->return_type);
        out.ret = out.ret ? store_.merge(out.ret, r) : r;
      }
    }
    if (syms.type(mi->return_type).kind == TypeKind::Void && !out.ret) {
      out.ret = store_.void_value();
    }
    out.have_fallthrough = true;
    out.keep_current_automata = true;
    return;
  }

  if (em.ignore || !mi->has_body()) {
    run_callbacks(em, args, st, pt, memo_tag);
    const Value* r = model_return_value(target, em, recv, args, pt, memo_tag);
    out.ret = out.ret ? store_.merge(out.ret, r) : r;
    out.have_fallthrough = true;
    out.keep_current_automata = true;
    return;
  }

  // analyzed call
  out.any_analyzed = true;
  int cls_prio = mi->is_clinit ? 0 : (mi->is_ctor ? 1 : 2);
  int prio = std::min(cls_prio, call_->priority);
  ContextPolicy policy = em.context;
  if (mi->is_static && policy == ContextPolicy::ThisSensitive) policy = ContextPolicy::Insensitive;
  uint32_t this_set = 0;
  std::vector<uint32_t> arg_sets;
  if (policy == ContextPolicy::ThisSensitive) {
    this_set = recv ? recv->sources->id : 0;
  } else if (policy == ContextPolicy::AllArgs) {
    this_set = recv ? recv->sources->id : 0;
    for (const Value* a : args) arg_sets.push_back(a->sources->id);
  }
  bool created = false;
  Call* callee = eng_.get_or_create_call(target, policy, this_set, std::move(arg_sets), prio,
                                         &created);
  if (created || !callee->plan) callee->plan = eng_.plan_for(target);
  eng_.register_caller(callee, here());
  if (mi->is_static || mi->is_ctor) eng_.ensure_class_initialized(mi->owner, here());

  ProgramState entry;
  entry.locals.resize(mi->slot_types.size());
  for (size_t i = 0; i < mi->slot_types.size(); ++i) {
    entry.locals[i] = store_.default_value(mi->slot_types[i]);
  }
  if (!mi->is_static) {
    entry.locals[0] = recv ? recv
                           : store_.ref_value(syms.class_type(mi->owner), Nullness::NonNull,
                                              store_.empty_set(), store_.allocation_members());
  }
  for (size_t i = 0; i < args.size() && i < mi->params.size(); ++i) {
    entry.locals[mi->first_param_slot() + i] = args[i];
  }
  entry.automata = st.automata;
  if (eng_.add_invocation(callee, entry)) result_.queue_entries.push_back(callee);

  bool returned = false;
  const Value* ret = nullptr;
  std::vector<uint64_t> ret_automata;
  std::map<TypeRef, Call::ThrownEntry> thrown;
  {
    std::lock_guard lock(callee->mu);
    returned = callee->has_returned;
    ret = callee->return_value;
    ret_automata = callee->return_automata;
    thrown = callee->thrown;
  }
  if (returned) {
    out.any_returned = true;
    if (ret) out.ret = out.ret ? store_.merge(out.ret, ret) : ret;
    if (out.returned_automata.size() < ret_automata.size()) {
      out.returned_automata.resize(ret_automata.size(), 0);
    }
    for (size_t i = 0; i < ret_automata.size(); ++i) out.returned_automata[i] |= ret_automata[i];
  }
  for (const auto& [type, entry_t] : thrown) {
    route_exception(pt.node, st, type, entry_t.value, entry_t.automata);
  }
}

void Interp::route_exception(NodeId at_node, const ProgramState& st, TypeRef declared,
                             const Value* exc, const std::vector<uint64_t>& automata) {
  SymbolTable& syms = *prog_->syms;
  std::vector<Source*> remaining(exc->sources->items.begin(), exc->sources->items.end());
  bool sourceless = remaining.empty();
  bool delivered_whole = false;

  auto deliver = [&](NodeId catch_node, const Value* part) {
    const NodeBinding& cb = binding(catch_node);
    int ord = plan_->ordinal({catch_node, -1});
    if (ord < 0 || cb.slot < 0) return;
    ProgramState cs;
    cs.locals = st.locals;
    cs.locals[cb.slot] = part;
    cs.this_fields = st.this_fields;
    cs.automata = automata.empty() ? st.automata : automata;
    to_point(ord, std::move(cs));
  };

  for (NodeId try_node : plan_->try_chain(at_node)) {
    const AstNode& tn = node(try_node);
    for (size_t ci = 1; ci < tn.children.size(); ++ci) {
      NodeId catch_node = tn.children[ci];
      TypeRef clause = binding(catch_node).type;
      if (sourceless) {
        // no allocation information: match by declared type relations
        if (prog_->assignable(declared, clause)) {
          RestrictOutcome rc = store_.restrict_value(exc, clause, nullptr);
          if (rc.value) deliver(catch_node, rc.value);
          delivered_whole = true;
          break;
        }
        if (prog_->assignable(clause, declared)) {
          RestrictOutcome rc = store_.restrict_value(exc, clause, nullptr);
          if (rc.value) deliver(catch_node, rc.value); // may match; keep propagating
        }
        continue;
      }
      std::vector<Source*> matched;
      std::vector<Source*> rest;
      for (Source* s : remaining) {
        if (prog_->assignable(s->type, clause)) {
          matched.push_back(s);
        } else {
          rest.push_back(s);
        }
      }
      if (!matched.empty()) {
        const Value* part = store_.with_sources(exc, store_.intern_set(matched));
        RestrictOutcome rc = store_.restrict_value(part, clause, nullptr);
        if (rc.value) deliver(catch_node, rc.value);
        remaining = std::move(rest);
      }
      if (remaining.empty()) break;
    }
    if (delivered_whole || (!sourceless && remaining.empty())) break;
  }

  bool escapes = sourceless ? !delivered_whole : !remaining.empty();
  if (escapes) {
    const Value* leftover = sourceless ? exc : store_.with_sources(exc, store_.intern_set(remaining));
    TypeRef t = declared;
    if (!sourceless) {
      // narrow the recorded type to the join of the escaping sources
      t = leftover->sources->items.empty() ? declared : leftover->sources->items[0]->type;
      for (Source* s : leftover->sources->items) t = store_.join_types(t, s->type);
    }
    (void)syms;
    if (record_throw(*call_, t, leftover, automata.empty() ? st.automata : automata, store_)) {
      std::lock_guard lock(call_->mu);
      for (const Site& s : call_->callers) result_.requeue.push_back(s);
    }
  }
}

void Interp::do_invocation(NodeId call_node, ProgramPoint pt, ProgramState st) {
  const AstNode& n = node(call_node);
  const NodeBinding& b = binding(call_node);
  SymbolTable& syms = *prog_->syms;

  bool is_super = (n.flags & kFlagSuperCall) != 0;
  bool has_value_base = (n.flags & kFlagHasBase) && b.qual_class == kNoClass && !is_super;
  size_t first_arg = (n.flags & kFlagHasBase) && !is_super ? 1 : 0;
  size_t argc = n.children.size() - first_arg;
  size_t consumed = argc + (has_value_base ? 1 : 0);
  size_t stack_base = st.stack.size() - argc;

  std::vector<const Value*> args(st.stack.end() - argc, st.stack.end());
  const Value* recv = nullptr;

  MethodId direct = b.direct;
  std::vector<MethodId> targets;
  if (direct != kNoMethod) {
    targets.push_back(direct);
    if (!prog_->methods[direct].is_static && !prog_->methods[direct].is_ctor) {
      recv = st.locals.empty() ? nullptr : st.locals[0];
    } else if (is_super || prog_->methods[direct].is_ctor) {
      recv = st.locals.empty() ? nullptr : st.locals[0];
    }
  } else if (has_value_base) {
    recv = st.stack[st.stack.size() - argc - 1];
  } else {
    // bare instance call on this
    recv = st.locals.empty() ? nullptr : st.locals[0];
  }

  DispatchOutcome out;
  out.returned_automata.assign(st.automata.size(), 0);

  if (direct != kNoMethod) {
    std::vector<const Value*> rargs =
        restricted_args(direct, eng_.config().resolve_model(
                                    syms.class_name(prog_->methods[direct].owner),
                                    prog_->methods[direct].name, prog_->methods[direct].is_native,
                                    prog_->methods[direct].is_static),
                        args, pt, stack_base);
    dispatch_target(direct, recv, rargs, pt, st, out, 1);
  } else {
    // virtual dispatch over the receiver's sources
    if (!recv || recv->constraint.kind != Constraint::Kind::Ref) return;
    if (recv->constraint.nullness == Nullness::Null) return; // no successors
    if (has_value_base) {
      NodeId base_node = n.children[0];
      refine_local_nonnull(st, base_node);
    }
    MethodId base_target = b.tgt_begin < b.tgt_end ? prog_->virtual_targets[b.tgt_begin]
                                                   : kNoMethod;
    if (base_target == kNoMethod) return;

    std::map<MethodId, std::vector<Source*>> groups;
    for (Source* s : recv->sources->items) {
      const TypeDesc& td = syms.type(s->type);
      if (td.kind != TypeKind::Class) continue;
      MethodId m = prog_->resolve_virtual(base_target, td.cls);
      groups[m].push_back(s);
    }
    if (groups.empty()) {
      // receiver without allocation information: dispatch across the
      // statically possible targets
      for (uint32_t i = b.tgt_begin; i < b.tgt_end; ++i) {
        groups[prog_->virtual_targets[i]] = {};
      }
    }
    int tag = 1;
    for (auto& [m, sources] : groups) {
      const Value* grecv;
      if (sources.empty()) {
        grecv = store_.with_nullness(recv, Nullness::NonNull);
      } else {
        grecv = store_.ref_value(recv->type, Nullness::NonNull, store_.intern_set(sources),
                                 recv->members);
      }
      std::vector<const Value*> rargs = restricted_args(
          m, eng_.config().resolve_model(syms.class_name(prog_->methods[m].owner),
                                         prog_->methods[m].name, prog_->methods[m].is_native,
                                         prog_->methods[m].is_static),
          args, pt, stack_base);
      dispatch_target(m, grecv, rargs, pt, st, out, tag++);
    }
  }

  if (!out.have_fallthrough && !out.any_returned) return; // no call has returned yet

  ProgramState next = st;
  for (size_t i = 0; i < consumed; ++i) next.pop();
  // automata after the call: model paths keep the caller's set, analyzed
  // paths adopt the callee's exit set
  std::vector<uint64_t> automata(st.automata.size(), 0);
  for (size_t i = 0; i < st.automata.size(); ++i) {
    uint64_t bits = 0;
    if (out.keep_current_automata) bits |= st.automata[i];
    if (i < out.returned_automata.size()) bits |= out.returned_automata[i];
    automata[i] = bits;
  }
  next.automata = std::move(automata);
  for (const std::string& ev : out.events) {
    int id = eng_.config().event_index(ev);
    if (id < 0) {
      eng_.note("event '" + ev + "' is not declared by any automaton");
    } else {
      automaton_problems(apply_event(next, id, eng_.config()), pt);
    }
  }
  if (out.any_analyzed) next.overlay_clear(); // a callee may write this-fields

  next.push(out.ret ? out.ret : store_.void_value());
  complete(call_node, std::move(next));
}

void Interp::do_new_object(NodeId new_node, ProgramPoint pt, ProgramState st) {
  const AstNode& n = node(new_node);
  const NodeBinding& b = binding(new_node);
  SymbolTable& syms = *prog_->syms;
  const TypeDesc& td = syms.type(b.type);
  ClassId cls = td.cls;

  Source* src = call_->created_source(ord_, 0);
  if (!src) {
    src = store_.new_source(SourceKind::Allocation, b.type, call_->id, pt, call_->method);
    call_->remember_source(ord_, 0, src);
  }
  if (prog_->classes[cls].builtin && cls != kObjectClass) ensure_proto(src);
  const Value* obj = store_.ref_value(b.type, Nullness::NonNull, store_.singleton(src),
                                      store_.allocation_members());
  if (!prog_->classes[cls].builtin) eng_.ensure_class_initialized(cls, here());

  size_t argc = n.children.size();
  std::vector<const Value*> args(st.stack.end() - argc, st.stack.end());

  MethodId ctor = b.direct;
  bool ctor_done = false;
  DispatchOutcome out;
  out.returned_automata.assign(st.automata.size(), 0);
  if (ctor == kNoMethod || prog_->methods[ctor].builtin) {
    ctor_done = true;
  } else {
    std::vector<const Value*> rargs = restricted_args(
        ctor, eng_.config().resolve_model(syms.class_name(prog_->methods[ctor].owner),
                                          prog_->methods[ctor].name,
                                          prog_->methods[ctor].is_native,
                                          prog_->methods[ctor].is_static),
        args, pt, st.stack.size() - argc);
    dispatch_target(ctor, obj, rargs, pt, st, out, 1);
    ctor_done = out.any_returned || out.have_fallthrough;
  }
  if (!ctor_done) return; // wait for the constructor to complete

  ProgramState next = st;
  for (size_t i = 0; i < argc; ++i) next.pop();
  std::vector<uint64_t> automata(st.automata.size(), 0);
  for (size_t i = 0; i < st.automata.size(); ++i) {
    uint64_t bits = out.keep_current_automata || ctor == kNoMethod ||
                            prog_->methods[ctor].builtin
                        ? st.automata[i]
                        : 0;
    if (i < out.returned_automata.size()) bits |= out.returned_automata[i];
    if (bits == 0) bits = st.automata[i];
    automata[i] = bits;
  }
  next.automata = std::move(automata);
  if (out.any_analyzed) next.overlay_clear();
  next.push(obj);
  complete(new_node, std::move(next));
}

// ---- main switch ----

StepResult Interp::step(int ordinal, const ProgramState& st) {
  ord_ = ordinal;
  result_ = StepResult{};
  const PointInfo& pi = plan_->info(ordinal);
  ProgramPoint pt = pi.pt;
  const AstNode& n = node(pt.node);
  const NodeBinding& b = binding(pt.node);
  SymbolTable& syms = *prog_->syms;

  switch (n.kind) {
    // ---- leaf expressions ----
    case NodeKind::IntLit: {
      ProgramState s = st;
      s.push(store_.int_const(n.int_value));
      complete(pt.node, std::move(s));
      break;
    }
    case NodeKind::StringLit: {
      ProgramState s = st;
      s.push(store_.string_const(n.text));
      complete(pt.node, std::move(s));
      break;
    }
    case NodeKind::BoolLit: {
      ProgramState s = st;
      bool v = n.flags & kFlagBoolTrue;
      s.push(store_.bool_value(v, !v));
      complete(pt.node, std::move(s));
      break;
    }
    case NodeKind::NullLit: {
      ProgramState s = st;
      s.push(store_.null_value(syms.null_type()));
      complete(pt.node, std::move(s));
      break;
    }
    case NodeKind::This: {
      ProgramState s = st;
      s.push(st.locals[0]);
      complete(pt.node, std::move(s));
      break;
    }
    case NodeKind::VarRef: {
      ProgramState s = st;
      if (b.slot >= 0) {
        s.push(st.locals[b.slot]);
      } else if (b.field != kNoField) {
        const FieldInfo& fi = prog_->fields[b.field];
        if (fi.is_static) {
          eng_.ensure_class_initialized(fi.owner, here());
          s.push(eng_.read_global_field(b.field, here()));
        } else {
          // implicit this.f: prefer the overlay
          if (const Value* ov = st.overlay_get(b.field)) {
            s.push(ov);
          } else {
            s.push(read_instance_field(st.locals[0], b.field));
          }
        }
      } else {
        break; // unbound; unreachable in valid programs
      }
      complete(pt.node, std::move(s));
      break;
    }

    // ---- compound expressions ----
    case NodeKind::FieldGet: {
      // assignment target: after the base, evaluation moves to the rhs
      NodeId parent = plan_->parent(pt.node);
      if (parent != kNoNode && node(parent).kind == NodeKind::AssignStmt &&
          plan_->child_index(pt.node) == 0) {
        if (pt.after == 0) descend(node(parent).children[1], st);
        break;
      }
      if (b.qual_class != kNoClass) {
        // static field read, no base evaluation
        const FieldInfo& fi = prog_->fields[b.field];
        eng_.ensure_class_initialized(fi.owner, here());
        ProgramState s = st;
        s.push(eng_.read_global_field(b.field, here()));
        complete(pt.node, std::move(s));
        break;
      }
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      // after base
      ProgramState s = st;
      const Value* base = s.pop();
      if (b.array_length) {
        if (base->constraint.kind == Constraint::Kind::Ref &&
            base->constraint.nullness == Nullness::Null) {
          break;
        }
        refine_local_nonnull(s, n.children[0]);
        const Value* len = nullptr;
        for (Source* srcp : base->sources->items) {
          const Value* l = store_.array_length(srcp);
          len = len ? store_.merge(len, l) : l;
        }
        s.push(len ? len : store_.int_range(0, false, 0, true));
        complete(pt.node, std::move(s));
        break;
      }
      if (base->constraint.kind == Constraint::Kind::Ref &&
          base->constraint.nullness == Nullness::Null) {
        break; // the base object must be null: no successor
      }
      refine_local_nonnull(s, n.children[0]);
      bool base_is_this = node(n.children[0]).kind == NodeKind::This;
      const Value* v = nullptr;
      if (base_is_this) {
        if (const Value* ov = st.overlay_get(b.field)) v = ov;
      }
      if (!v) v = read_instance_field(base, b.field);
      s.push(v);
      complete(pt.node, std::move(s));
      break;
    }

    case NodeKind::Index: {
      // assignment target: after base and index, evaluation moves to the rhs
      NodeId parent = plan_->parent(pt.node);
      bool lvalue = parent != kNoNode && node(parent).kind == NodeKind::AssignStmt &&
                    plan_->child_index(pt.node) == 0;
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      if (pt.after == 0) {
        descend(n.children[1], st);
        break;
      }
      if (lvalue) {
        descend(node(parent).children[1], st);
        break;
      }
      ProgramState s = st;
      const Value* index = s.pop();
      const Value* base = s.pop();
      if (base->constraint.kind == Constraint::Kind::Ref &&
          base->constraint.nullness == Nullness::Null) {
        break;
      }
      refine_local_nonnull(s, n.children[0]);
      TypeRef elem = syms.type(base->type).kind == TypeKind::Array ? syms.type(base->type).elem
                                                                   : syms.object_type();
      s.push(read_array_element(base, index, elem));
      complete(pt.node, std::move(s));
      break;
    }

    case NodeKind::Unary: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      ProgramState s = st;
      const Value* v = s.pop();
      s.push(store_.unary_op(n.text == "-" ? UnOp::Neg : UnOp::Not, v));
      complete(pt.node, std::move(s));
      break;
    }

    case NodeKind::Cast: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      ProgramState s = st;
      const Value* v = s.pop();
      RestrictOutcome rc = store_.restrict_value(v, b.type, nullptr);
      if (!rc.value) break; // nothing survives the cast
      s.push(rc.value);
      complete(pt.node, std::move(s));
      break;
    }

    case NodeKind::Binary: {
      bool shortcut = n.text == "&&" || n.text == "||";
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      if (pt.after == 0) {
        if (!shortcut) {
          descend(n.children[1], st);
          break;
        }
        ProgramState s = st;
        const Value* l = s.pop();
        bool is_and = n.text == "&&";
        if (is_and) {
          if (l->constraint.can_true) {
            ProgramState t = s;
            if (refine(t, n.children[0], true)) descend(n.children[1], std::move(t));
          }
          if (l->constraint.can_false) {
            ProgramState f = s;
            if (refine(f, n.children[0], false)) {
              f.push(store_.bool_value_m(false, true, l->members, l->sources));
              complete(pt.node, std::move(f));
            }
          }
        } else {
          if (l->constraint.can_false) {
            ProgramState f = s;
            if (refine(f, n.children[0], false)) descend(n.children[1], std::move(f));
          }
          if (l->constraint.can_true) {
            ProgramState t = s;
            if (refine(t, n.children[0], true)) {
              t.push(store_.bool_value_m(true, false, l->members, l->sources));
              complete(pt.node, std::move(t));
            }
          }
        }
        break;
      }
      // after == 1
      ProgramState s = st;
      if (shortcut) {
        // the right operand's value is the result; left was consumed
        complete(pt.node, std::move(s));
        break;
      }
      const Value* r = s.pop();
      const Value* l = s.pop();
      bool concat = n.text == "+" && syms.type(b.type).kind == TypeKind::String;
      s.push(store_.binary_op(bin_op_for(n.text, concat), l, r));
      complete(pt.node, std::move(s));
      break;
    }

    case NodeKind::CallExpr: {
      size_t first_eval;
      if ((n.flags & kFlagHasBase) && !(n.flags & kFlagSuperCall) && b.qual_class != kNoClass) {
        first_eval = 1;
      } else {
        first_eval = 0;
      }
      bool no_children = n.children.size() <= first_eval;
      int last_eval = no_children ? -1 : static_cast<int>(n.children.size()) - 1;
      if (pt.after < 0) {
        if (no_children) {
          do_invocation(pt.node, pt, st);
        } else {
          descend(n.children[first_eval], st);
        }
        break;
      }
      if (pt.after < last_eval) {
        descend(n.children[pt.after + 1], st);
        break;
      }
      do_invocation(pt.node, pt, st);
      break;
    }

    case NodeKind::NewObject: {
      if (pt.after < 0) {
        if (n.children.empty()) {
          do_new_object(pt.node, pt, st);
        } else {
          descend(n.children[0], st);
        }
        break;
      }
      if (pt.after + 1 < static_cast<int>(n.children.size())) {
        descend(n.children[pt.after + 1], st);
        break;
      }
      do_new_object(pt.node, pt, st);
      break;
    }

    case NodeKind::NewArray: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      ProgramState s = st;
      const Value* size = s.pop();
      Source* src = call_->created_source(ord_, 0);
      if (!src) {
        src = store_.new_source(SourceKind::Allocation, b.type, call_->id, pt, call_->method);
        call_->remember_source(ord_, 0, src);
      }
      store_.set_array_length(src, size);
      s.push(store_.ref_value(b.type, Nullness::NonNull, store_.singleton(src),
                              store_.allocation_members()));
      complete(pt.node, std::move(s));
      break;
    }

    // ---- statements ----
    case NodeKind::Block: {
      if (pt.after < 0) {
        if (n.children.empty()) {
          complete(pt.node, st);
        } else {
          descend(n.children[0], st);
        }
        break;
      }
      if (pt.after + 1 < static_cast<int>(n.children.size())) {
        descend(n.children[pt.after + 1], st);
      } else {
        complete(pt.node, st);
      }
      break;
    }

    case NodeKind::VarDeclStmt: {
      if (pt.after < 0) {
        if (n.children.empty()) {
          ProgramState s = st;
          s.set_local(b.slot, store_.default_value(b.type));
          complete(pt.node, std::move(s));
        } else {
          descend(n.children[0], st);
        }
        break;
      }
      ProgramState s = st;
      const Value* v = s.pop();
      s.set_local(b.slot, v);
      complete(pt.node, std::move(s));
      break;
    }

    case NodeKind::ExprStmt: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      ProgramState s = st;
      s.pop();
      complete(pt.node, std::move(s));
      break;
    }

    case NodeKind::AssignStmt: {
      NodeId lv = n.children[0];
      NodeId rhs = n.children[1];
      const AstNode& lvn = node(lv);
      const NodeBinding& lb = binding(lv);
      if (pt.after < 0) {
        if (lvn.kind == NodeKind::FieldGet && lb.qual_class == kNoClass) {
          descend(lvn.children[0], st);
        } else if (lvn.kind == NodeKind::Index) {
          descend(lvn.children[0], st);
        } else {
          descend(rhs, st);
        }
        break;
      }
      // pt.after == 1: the store
      ProgramState s = st;
      const Value* v = s.pop();
      ProgramPoint store_pt = pt;

      if (lvn.kind == NodeKind::VarRef) {
        if (lb.slot >= 0) {
          s.set_local(lb.slot, v);
          complete(pt.node, std::move(s));
          break;
        }
        const FieldInfo& fi = prog_->fields[lb.field];
        std::optional<uint8_t> members[kMaxLattices];
        bool any = false;
        for (const AnnotationReq& a : fi.annotations) {
          members[a.lattice] = a.member;
          any = true;
        }
        if (any) {
          RestrictOutcome rc = store_.restrict_value(v, fi.type, members);
          subtype_problems(rc, store_pt, {ValueLoc::Kind::Stack,
                                          static_cast<int>(s.stack.size())});
          if (rc.value) v = rc.value;
        }
        if (fi.is_static) {
          eng_.ensure_class_initialized(fi.owner, here());
          std::set<Site> readers;
          eng_.write_global_field(lb.field, v, here(), &readers);
          for (const Site& site : readers) result_.requeue.push_back(site);
        } else {
          write_instance_field(st.locals[0], lb.field, v);
          s.overlay_set(lb.field, v);
        }
        complete(pt.node, std::move(s));
        break;
      }
      if (lvn.kind == NodeKind::FieldGet) {
        const FieldInfo& fi = prog_->fields[lb.field];
        std::optional<uint8_t> members[kMaxLattices];
        bool any = false;
        for (const AnnotationReq& a : fi.annotations) {
          members[a.lattice] = a.member;
          any = true;
        }
        if (any) {
          RestrictOutcome rc = store_.restrict_value(v, fi.type, members);
          subtype_problems(rc, store_pt,
                           {ValueLoc::Kind::Stack, static_cast<int>(s.stack.size())});
          if (rc.value) v = rc.value;
        }
        if (lb.qual_class != kNoClass) {
          eng_.ensure_class_initialized(fi.owner, here());
          std::set<Site> readers;
          eng_.write_global_field(lb.field, v, here(), &readers);
          for (const Site& site : readers) result_.requeue.push_back(site);
          complete(pt.node, std::move(s));
          break;
        }
        const Value* base = s.pop();
        if (base->constraint.kind == Constraint::Kind::Ref &&
            base->constraint.nullness == Nullness::Null) {
          break;
        }
        refine_local_nonnull(s, lvn.children[0]);
        write_instance_field(base, lb.field, v);
        if (node(lvn.children[0]).kind == NodeKind::This) s.overlay_set(lb.field, v);
        complete(pt.node, std::move(s));
        break;
      }
      // array element
      {
        const Value* index = s.pop();
        const Value* base = s.pop();
        if (base->constraint.kind == Constraint::Kind::Ref &&
            base->constraint.nullness == Nullness::Null) {
          break;
        }
        refine_local_nonnull(s, lvn.children[0]);
        write_array_element(base, index, v);
        complete(pt.node, std::move(s));
      }
      break;
    }

    case NodeKind::IfStmt: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      if (pt.after == 0) {
        ProgramState s = st;
        const Value* cond = s.pop();
        if (cond->constraint.can_true) {
          ProgramState t = s;
          if (refine(t, n.children[0], true)) descend(n.children[1], std::move(t));
        }
        if (cond->constraint.can_false) {
          ProgramState f = s;
          if (refine(f, n.children[0], false)) {
            if (n.children.size() > 2) {
              descend(n.children[2], std::move(f));
            } else {
              complete(pt.node, std::move(f));
            }
          }
        }
        break;
      }
      complete(pt.node, st);
      break;
    }

    case NodeKind::WhileStmt: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      if (pt.after == 0) {
        ProgramState s = st;
        const Value* cond = s.pop();
        if (cond->constraint.can_true) {
          ProgramState t = s;
          if (refine(t, n.children[0], true)) descend(n.children[1], std::move(t));
        }
        if (cond->constraint.can_false) {
          ProgramState f = s;
          if (refine(f, n.children[0], false)) complete(pt.node, std::move(f));
        }
        break;
      }
      // loop back to re-evaluate the condition
      descend(n.children[0], st);
      break;
    }

    case NodeKind::ReturnStmt: {
      if (pt.after < 0 && !n.children.empty()) {
        descend(n.children[0], st);
        break;
      }
      ProgramState s = st;
      const Value* v;
      if (n.children.empty()) {
        v = store_.void_value();
      } else {
        v = s.pop();
        // return annotations restrict the outgoing value
        std::optional<uint8_t> members[kMaxLattices];
        bool any = false;
        for (const AnnotationReq& a : method_->return_annotations) {
          members[a.lattice] = a.member;
          any = true;
        }
        if (any) {
          RestrictOutcome rc = store_.restrict_value(v, method_->return_type, members);
          subtype_problems(rc, pt, {ValueLoc::Kind::Stack, static_cast<int>(s.stack.size())});
          if (rc.value) v = rc.value;
        }
      }
      if (record_return(*call_, v, s.automata, store_)) {
        std::lock_guard lock(call_->mu);
        for (const Site& site : call_->callers) result_.requeue.push_back(site);
      }
      break; // no successor
    }

    case NodeKind::ThrowStmt: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      ProgramState s = st;
      const Value* exc = s.pop();
      if (exc->constraint.kind == Constraint::Kind::Ref &&
          exc->constraint.nullness == Nullness::Null) {
        break; // throwing a known null is an unmodeled runtime error
      }
      route_exception(pt.node, s, exc->type, exc, s.automata);
      break;
    }

    case NodeKind::TryStmt: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      complete(pt.node, st); // normal block completion or a finished catch
      break;
    }

    case NodeKind::CatchClause: {
      if (pt.after < 0) {
        descend(n.children[0], st);
        break;
      }
      complete(pt.node, st);
      break;
    }

    case NodeKind::EventStmt: {
      ProgramState s = st;
      int id = eng_.config().event_index(n.text);
      if (id < 0) {
        eng_.note("event '" + n.text + "' is not declared by any automaton");
      } else {
        automaton_problems(apply_event(s, id, eng_.config()), pt);
      }
      complete(pt.node, std::move(s));
      break;
    }
  }
  return result_;
}

} // namespace mjflow
