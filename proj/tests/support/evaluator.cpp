#include "support/evaluator.hpp"

#include <stdexcept>

namespace mjflow::test {

namespace {

struct TrapSignal {};
struct CapSignal {};
struct ReturnSignal {
  CVal value;
  bool has_value = false;
};
struct MjThrow {
  CVal value;
};

class Machine {
 public:
  Machine(AnalysisSession& session, const std::map<MethodId, CVal>& natives, uint64_t cap,
          EvalResult& out)
      : session_(session),
        prog_(session.program()),
        config_(session.config()),
        natives_(natives),
        cap_(cap),
        out_(out) {
    for (const auto& a : config_.automata) automata_.push_back(a.initial);
  }

  void run_all_entries() {
    for (MethodId m : prog_.entry_points) {
      ensure_init(prog_.methods[m].owner);
      call_method(m, CVal{}, {});
    }
  }

 private:
  AnalysisSession& session_;
  const BoundProgram& prog_;
  const Config& config_;
  const std::map<MethodId, CVal>& natives_;
  uint64_t cap_;
  EvalResult& out_;

  std::map<FieldId, CVal> globals_;
  std::set<ClassId> inited_;
  std::vector<uint8_t> automata_;

  struct Frame {
    MethodId method = kNoMethod;
    const MethodPlan* plan = nullptr;
    const MjFile* file = nullptr;
    std::vector<CVal> locals;
    std::vector<CVal> stack;
  };

  const NodeBinding& binding(const Frame& f, NodeId n) const {
    return prog_.binding(f.file, n);
  }

  void record(Frame& f, NodeId node, int after) {
    if (++out_.steps > cap_) throw CapSignal{};
    int ord = f.plan->ordinal({node, static_cast<int16_t>(after)});
    if (ord < 0) throw std::logic_error("evaluator visited a point missing from the plan");
    TraceEntry e;
    e.method = f.method;
    e.ordinal = ord;
    e.stack = f.stack;
    e.locals = f.locals;
    e.automata = automata_;
    out_.trace.push_back(std::move(e));
  }

  CVal default_of(TypeRef t) {
    switch (prog_.syms->type(t).kind) {
      case TypeKind::Int: return CVal::of_int(0);
      case TypeKind::Bool: return CVal::of_bool(false);
      case TypeKind::String: return CVal::of_str("");
      default: return CVal{};
    }
  }

  void ensure_init(ClassId cls) {
    if (inited_.count(cls)) return;
    inited_.insert(cls);
    const ClassInfo& info = prog_.classes[cls];
    if (cls != kObjectClass && info.defined) ensure_init(info.super);
    if (info.clinit != kNoMethod && prog_.methods[info.clinit].has_body()) {
      call_method(info.clinit, CVal{}, {});
    }
  }

  CVal call_method(MethodId m, CVal recv, std::vector<CVal> args) {
    const MethodInfo& mi = prog_.methods[m];
    if (!mi.has_body()) {
      auto it = natives_.find(m);
      if (it != natives_.end()) return it->second;
      return default_of(mi.return_type);
    }
    Frame f;
    f.method = m;
    f.plan = session_.engine().plan_for(m);
    if (!f.plan) throw std::logic_error("no plan for called method");
    f.file = f.plan->file;
    f.locals.resize(mi.slot_types.size());
    for (size_t i = 0; i < mi.slot_types.size(); ++i) f.locals[i] = default_of(mi.slot_types[i]);
    if (!mi.is_static) f.locals[0] = recv;
    for (size_t i = 0; i < args.size(); ++i) f.locals[mi.first_param_slot() + i] = args[i];
    try {
      exec_stmt(f, mi.body);
    } catch (ReturnSignal& r) {
      return r.has_value ? r.value : CVal{};
    }
    return CVal{};
  }

  // ---- expressions: evaluate and push; the caller records after-points ----

  void eval_push(Frame& f, NodeId id) {
    const AstNode& n = f.file->node(id);
    record(f, id, -1);
    const NodeBinding& b = binding(f, id);
    switch (n.kind) {
      case NodeKind::IntLit:
        f.stack.push_back(CVal::of_int(n.int_value));
        return;
      case NodeKind::StringLit:
        f.stack.push_back(CVal::of_str(n.text));
        return;
      case NodeKind::BoolLit:
        f.stack.push_back(CVal::of_bool(n.flags & kFlagBoolTrue));
        return;
      case NodeKind::NullLit:
        f.stack.push_back(CVal{});
        return;
      case NodeKind::This:
        f.stack.push_back(f.locals[0]);
        return;
      case NodeKind::VarRef: {
        if (b.slot >= 0) {
          f.stack.push_back(f.locals[b.slot]);
          return;
        }
        const FieldInfo& fi = prog_.fields[b.field];
        if (fi.is_static) {
          ensure_init(fi.owner);
          f.stack.push_back(read_global(b.field));
        } else {
          f.stack.push_back(read_field(f.locals[0], b.field));
        }
        return;
      }
      case NodeKind::FieldGet: {
        if (b.qual_class != kNoClass) {
          ensure_init(prog_.fields[b.field].owner);
          f.stack.push_back(read_global(b.field));
          return;
        }
        eval_push(f, n.children[0]);
        record(f, id, 0);
        CVal base = pop(f);
        if (b.array_length) {
          if (base.kind != CVal::Kind::Arr) throw TrapSignal{};
          f.stack.push_back(CVal::of_int(static_cast<int64_t>(base.arr->items.size())));
          return;
        }
        f.stack.push_back(read_field(base, b.field));
        return;
      }
      case NodeKind::Index: {
        eval_push(f, n.children[0]);
        record(f, id, 0);
        eval_push(f, n.children[1]);
        record(f, id, 1);
        CVal idx = pop(f);
        CVal base = pop(f);
        if (base.kind != CVal::Kind::Arr) throw TrapSignal{};
        if (idx.i < 0 || static_cast<size_t>(idx.i) >= base.arr->items.size()) throw TrapSignal{};
        f.stack.push_back(base.arr->items[idx.i]);
        return;
      }
      case NodeKind::Unary: {
        eval_push(f, n.children[0]);
        record(f, id, 0);
        CVal v = pop(f);
        if (n.text == "!") {
          f.stack.push_back(CVal::of_bool(!v.b));
        } else {
          f.stack.push_back(CVal::of_int(-v.i));
        }
        return;
      }
      case NodeKind::Cast: {
        eval_push(f, n.children[0]);
        record(f, id, 0);
        CVal v = pop(f);
        check_cast(v, b.type);
        f.stack.push_back(std::move(v));
        return;
      }
      case NodeKind::Binary: {
        if (n.text == "&&" || n.text == "||") {
          eval_push(f, n.children[0]);
          record(f, id, 0);
          CVal l = pop(f);
          bool is_and = n.text == "&&";
          if ((is_and && !l.b) || (!is_and && l.b)) {
            f.stack.push_back(CVal::of_bool(l.b));
            return;
          }
          eval_push(f, n.children[1]);
          record(f, id, 1);
          CVal r = pop(f);
          f.stack.push_back(std::move(r));
          return;
        }
        eval_push(f, n.children[0]);
        record(f, id, 0);
        eval_push(f, n.children[1]);
        record(f, id, 1);
        CVal r = pop(f);
        CVal l = pop(f);
        f.stack.push_back(binary(f, id, l, r));
        return;
      }
      case NodeKind::CallExpr: {
        do_call(f, id);
        return;
      }
      case NodeKind::NewObject: {
        for (size_t i = 0; i < n.children.size(); ++i) {
          eval_push(f, n.children[i]);
          record(f, id, static_cast<int>(i));
        }
        std::vector<CVal> args(n.children.size());
        for (size_t i = n.children.size(); i-- > 0;) args[i] = pop(f);
        CVal obj = allocate(b.type);
        MethodId ctor = b.direct;
        if (ctor != kNoMethod && !prog_.methods[ctor].builtin) {
          call_method(ctor, obj, std::move(args));
        }
        f.stack.push_back(std::move(obj));
        return;
      }
      case NodeKind::NewArray: {
        eval_push(f, n.children[0]);
        record(f, id, 0);
        CVal size = pop(f);
        if (size.i < 0 || size.i > 1000000) throw TrapSignal{};
        CVal v;
        v.kind = CVal::Kind::Arr;
        v.arr = std::make_shared<CArr>();
        v.arr->elem = prog_.syms->type(b.type).elem;
        v.arr->items.assign(size.i, default_of(v.arr->elem));
        f.stack.push_back(std::move(v));
        return;
      }
      default:
        throw std::logic_error("statement in expression position");
    }
  }

  CVal pop(Frame& f) {
    CVal v = std::move(f.stack.back());
    f.stack.pop_back();
    return v;
  }

  CVal allocate(TypeRef type) {
    const TypeDesc& td = prog_.syms->type(type);
    CVal v;
    if (td.cls == kListClass) {
      v.kind = CVal::Kind::List;
      v.list = std::make_shared<CList>();
      return v;
    }
    if (td.cls == kMapClass) {
      v.kind = CVal::Kind::Map;
      v.map = std::make_shared<CMap>();
      return v;
    }
    if (td.cls == kStringBuilderClass) {
      v.kind = CVal::Kind::Sb;
      v.sb = std::make_shared<CSb>();
      return v;
    }
    ensure_init(td.cls);
    v.kind = CVal::Kind::Obj;
    v.obj = std::make_shared<CObj>();
    v.obj->cls = td.cls;
    return v;
  }

  void check_cast(const CVal& v, TypeRef target) {
    const TypeDesc& td = prog_.syms->type(target);
    switch (td.kind) {
      case TypeKind::String:
        if (v.kind != CVal::Kind::Str) throw TrapSignal{};
        return;
      case TypeKind::Array:
        if (v.kind != CVal::Kind::Arr && v.kind != CVal::Kind::Null) throw TrapSignal{};
        return;
      case TypeKind::Class: {
        if (v.kind == CVal::Kind::Null) return; // null casts succeed
        if (td.cls == kObjectClass) return;
        if (td.cls == kListClass) {
          if (v.kind != CVal::Kind::List) throw TrapSignal{};
          return;
        }
        if (td.cls == kMapClass) {
          if (v.kind != CVal::Kind::Map) throw TrapSignal{};
          return;
        }
        if (td.cls == kStringBuilderClass) {
          if (v.kind != CVal::Kind::Sb) throw TrapSignal{};
          return;
        }
        if (v.kind != CVal::Kind::Obj || !prog_.is_subclass(v.obj->cls, td.cls)) {
          throw TrapSignal{};
        }
        return;
      }
      default:
        return;
    }
  }

  CVal read_field(const CVal& base, FieldId field) {
    if (base.kind == CVal::Kind::Null) throw TrapSignal{};
    if (base.kind != CVal::Kind::Obj) throw TrapSignal{};
    auto it = base.obj->fields.find(field);
    if (it != base.obj->fields.end()) return it->second;
    return default_of(prog_.fields[field].type);
  }

  CVal read_global(FieldId field) {
    auto it = globals_.find(field);
    if (it != globals_.end()) return it->second;
    return default_of(prog_.fields[field].type);
  }

  std::string stringify(const CVal& v) {
    switch (v.kind) {
      case CVal::Kind::Str: return v.s;
      case CVal::Kind::Int: return std::to_string(v.i);
      case CVal::Kind::Bool: return v.b ? "true" : "false";
      default: return "null";
    }
  }

  CVal binary(Frame& f, NodeId id, const CVal& l, const CVal& r) {
    const AstNode& n = f.file->node(id);
    const NodeBinding& b = binding(f, id);
    const std::string& op = n.text;
    if (op == "+" && prog_.syms->type(b.type).kind == TypeKind::String) {
      return CVal::of_str(stringify(l) + stringify(r));
    }
    auto cmp_eq = [&]() -> bool {
      if (l.kind != r.kind) return false;
      switch (l.kind) {
        case CVal::Kind::Null: return true;
        case CVal::Kind::Int: return l.i == r.i;
        case CVal::Kind::Bool: return l.b == r.b;
        case CVal::Kind::Str: return l.s == r.s;
        case CVal::Kind::Obj: return l.obj == r.obj;
        case CVal::Kind::Arr: return l.arr == r.arr;
        case CVal::Kind::List: return l.list == r.list;
        case CVal::Kind::Map: return l.map == r.map;
        case CVal::Kind::Sb: return l.sb == r.sb;
      }
      return false;
    };
    if (op == "==") return CVal::of_bool(cmp_eq());
    if (op == "!=") return CVal::of_bool(!cmp_eq());
    if (op == "<") return CVal::of_bool(l.i < r.i);
    if (op == "<=") return CVal::of_bool(l.i <= r.i);
    if (op == ">") return CVal::of_bool(l.i > r.i);
    if (op == ">=") return CVal::of_bool(l.i >= r.i);
    if (op == "+") return CVal::of_int(l.i + r.i);
    if (op == "-") return CVal::of_int(l.i - r.i);
    if (op == "*") return CVal::of_int(l.i * r.i);
    if (op == "/") {
      if (r.i == 0) throw TrapSignal{};
      return CVal::of_int(l.i / r.i);
    }
    if (op == "%") {
      if (r.i == 0) throw TrapSignal{};
      return CVal::of_int(l.i % r.i);
    }
    throw std::logic_error("unknown operator " + op);
  }

  CVal proto_invoke(const CVal& recv, const std::string& method, std::vector<CVal> args) {
    switch (recv.kind) {
      case CVal::Kind::List:
        if (method == "add") {
          recv.list->items.push_back(args[0]);
          return CVal{};
        }
        if (method == "get") {
          if (args[0].i < 0 || static_cast<size_t>(args[0].i) >= recv.list->items.size()) {
            throw TrapSignal{};
          }
          return recv.list->items[args[0].i];
        }
        if (method == "size") return CVal::of_int(static_cast<int64_t>(recv.list->items.size()));
        break;
      case CVal::Kind::Map:
        if (method == "put") {
          for (auto& [k, v] : recv.map->entries) {
            if (k.kind == args[0].kind && k.s == args[0].s && k.i == args[0].i &&
                k.obj == args[0].obj) {
              v = args[1];
              return CVal{};
            }
          }
          recv.map->entries.emplace_back(args[0], args[1]);
          return CVal{};
        }
        if (method == "get") {
          for (auto& [k, v] : recv.map->entries) {
            if (k.kind == args[0].kind && k.s == args[0].s && k.i == args[0].i &&
                k.obj == args[0].obj) {
              return v;
            }
          }
          return CVal{};
        }
        if (method == "size") return CVal::of_int(static_cast<int64_t>(recv.map->entries.size()));
        break;
      case CVal::Kind::Sb:
        if (method == "append") {
          recv.sb->text += args[0].s;
          return recv;
        }
        if (method == "toString") return CVal::of_str(recv.sb->text);
        break;
      default:
        break;
    }
    throw std::logic_error("unknown prototype method " + method);
  }

  void do_call(Frame& f, NodeId id) {
    const AstNode& n = f.file->node(id);
    const NodeBinding& b = binding(f, id);
    bool is_super = (n.flags & kFlagSuperCall) != 0;
    bool qual = b.qual_class != kNoClass;
    bool has_value_base = (n.flags & kFlagHasBase) && !is_super && !qual;
    size_t first_arg = (n.flags & kFlagHasBase) && !is_super ? 1 : 0;
    size_t first_eval = qual ? 1 : (has_value_base ? 0 : first_arg);

    for (size_t i = first_eval; i < n.children.size(); ++i) {
      eval_push(f, n.children[i]);
      record(f, id, static_cast<int>(i));
    }
    size_t argc = n.children.size() - first_arg;
    std::vector<CVal> args(argc);
    for (size_t i = argc; i-- > 0;) args[i] = pop(f);
    CVal recv;
    bool have_recv = false;
    if (has_value_base) {
      recv = pop(f);
      have_recv = true;
    }

    MethodId target = b.direct;
    if (target == kNoMethod) {
      if (!have_recv) {
        recv = f.locals[0];
        have_recv = true;
      }
      // virtual dispatch on the dynamic class
      MethodId base = b.tgt_begin < b.tgt_end ? prog_.virtual_targets[b.tgt_begin] : kNoMethod;
      if (base == kNoMethod) throw std::logic_error("unbound call");
      if (recv.kind == CVal::Kind::Null) throw TrapSignal{};
      if (recv.kind == CVal::Kind::Obj) {
        target = prog_.resolve_virtual(base, recv.obj->cls);
      } else {
        target = base; // prototype classes resolve to the built-in methods
      }
    } else if (!prog_.methods[target].is_static) {
      if (!have_recv) {
        recv = f.locals[0];
        have_recv = true;
      }
    }

    const MethodInfo& mi = prog_.methods[target];
    if (mi.builtin && !mi.is_ctor) {
      f.stack.push_back(proto_invoke(recv, mi.name, std::move(args)));
      return;
    }
    if (mi.is_static || mi.is_ctor) ensure_init(mi.owner);
    f.stack.push_back(call_method(target, recv, std::move(args)));
  }

  // ---- statements ----

  void exec_stmt(Frame& f, NodeId id) {
    const AstNode& n = f.file->node(id);
    record(f, id, -1);
    const NodeBinding& b = binding(f, id);
    switch (n.kind) {
      case NodeKind::Block:
        for (size_t i = 0; i < n.children.size(); ++i) {
          exec_stmt(f, n.children[i]);
          record(f, id, static_cast<int>(i));
        }
        return;
      case NodeKind::VarDeclStmt:
        if (n.children.empty()) {
          f.locals[b.slot] = default_of(b.type);
        } else {
          eval_push(f, n.children[0]);
          record(f, id, 0);
          f.locals[b.slot] = pop(f);
        }
        return;
      case NodeKind::ExprStmt:
        eval_push(f, n.children[0]);
        record(f, id, 0);
        pop(f);
        return;
      case NodeKind::AssignStmt: {
        NodeId lv = n.children[0];
        NodeId rhs = n.children[1];
        const AstNode& lvn = f.file->node(lv);
        const NodeBinding& lb = binding(f, lv);
        if (lvn.kind == NodeKind::VarRef) {
          eval_push(f, rhs);
          record(f, id, 1);
          CVal v = pop(f);
          if (lb.slot >= 0) {
            f.locals[lb.slot] = std::move(v);
          } else if (prog_.fields[lb.field].is_static) {
            ensure_init(prog_.fields[lb.field].owner);
            globals_[lb.field] = std::move(v);
          } else {
            if (f.locals[0].kind != CVal::Kind::Obj) throw TrapSignal{};
            f.locals[0].obj->fields[lb.field] = std::move(v);
          }
          return;
        }
        if (lvn.kind == NodeKind::FieldGet) {
          if (lb.qual_class != kNoClass) {
            eval_push(f, rhs);
            record(f, id, 1);
            ensure_init(prog_.fields[lb.field].owner);
            globals_[lb.field] = pop(f);
            return;
          }
          eval_push(f, lvn.children[0]);
          record(f, lv, 0);
          eval_push(f, rhs);
          record(f, id, 1);
          CVal v = pop(f);
          CVal base = pop(f);
          if (base.kind != CVal::Kind::Obj) throw TrapSignal{};
          base.obj->fields[lb.field] = std::move(v);
          return;
        }
        // array element
        eval_push(f, lvn.children[0]);
        record(f, lv, 0);
        eval_push(f, lvn.children[1]);
        record(f, lv, 1);
        eval_push(f, rhs);
        record(f, id, 1);
        CVal v = pop(f);
        CVal idx = pop(f);
        CVal base = pop(f);
        if (base.kind != CVal::Kind::Arr) throw TrapSignal{};
        if (idx.i < 0 || static_cast<size_t>(idx.i) >= base.arr->items.size()) throw TrapSignal{};
        base.arr->items[idx.i] = std::move(v);
        return;
      }
      case NodeKind::IfStmt: {
        eval_push(f, n.children[0]);
        record(f, id, 0);
        CVal cond = pop(f);
        if (cond.b) {
          exec_stmt(f, n.children[1]);
          record(f, id, 1);
        } else if (n.children.size() > 2) {
          exec_stmt(f, n.children[2]);
          record(f, id, 2);
        }
        return;
      }
      case NodeKind::WhileStmt:
        for (;;) {
          eval_push(f, n.children[0]);
          record(f, id, 0);
          CVal cond = pop(f);
          if (!cond.b) return;
          exec_stmt(f, n.children[1]);
          record(f, id, 1);
        }
      case NodeKind::ReturnStmt: {
        ReturnSignal r;
        if (!n.children.empty()) {
          eval_push(f, n.children[0]);
          record(f, id, 0);
          r.value = pop(f);
          r.has_value = true;
        }
        throw r;
      }
      case NodeKind::ThrowStmt: {
        eval_push(f, n.children[0]);
        record(f, id, 0);
        CVal v = pop(f);
        if (v.kind == CVal::Kind::Null) throw TrapSignal{};
        throw MjThrow{std::move(v)};
      }
      case NodeKind::TryStmt: {
        try {
          exec_stmt(f, n.children[0]);
          record(f, id, 0);
        } catch (MjThrow& t) {
          for (size_t ci = 1; ci < n.children.size(); ++ci) {
            NodeId cnode = n.children[ci];
            const NodeBinding& cb = binding(f, cnode);
            TypeRef ct = cb.type;
            ClassId want = prog_.syms->type(ct).cls;
            if (t.value.kind == CVal::Kind::Obj && prog_.is_subclass(t.value.obj->cls, want)) {
              f.stack.clear();
              f.locals[cb.slot] = t.value;
              record(f, cnode, -1);
              exec_stmt(f, f.file->node(cnode).children[0]);
              record(f, cnode, 0);
              record(f, id, static_cast<int>(ci));
              return;
            }
          }
          throw; // no matching clause
        }
        return;
      }
      case NodeKind::EventStmt: {
        int ev = config_.event_index(n.text);
        if (ev >= 0) {
          for (size_t a = 0; a < config_.automata.size(); ++a) {
            const auto& tr = config_.automata[a].transition(automata_[a], ev);
            if (tr.present) automata_[a] = tr.to;
          }
        }
        return;
      }
      default:
        throw std::logic_error("unexpected statement kind");
    }
  }
};

bool value_covers(const Value* v, const CVal& c) {
  const Constraint& k = v->constraint;
  switch (c.kind) {
    case CVal::Kind::Int:
      if (k.kind != Constraint::Kind::Int) return false;
      if (!k.lo_inf && c.i < k.lo) return false;
      if (!k.hi_inf && c.i > k.hi) return false;
      return true;
    case CVal::Kind::Bool:
      if (k.kind != Constraint::Kind::Boolean) return false;
      return c.b ? k.can_true : k.can_false;
    case CVal::Kind::Str:
      if (k.kind == Constraint::Kind::Str) return true; // constants checked separately
      // strings can travel as references under Object
      return k.kind == Constraint::Kind::Ref && k.nullness != Nullness::Null;
    case CVal::Kind::Null:
      return k.kind == Constraint::Kind::Ref && k.nullness != Nullness::NonNull;
    default:
      return k.kind == Constraint::Kind::Ref && k.nullness != Nullness::Null;
  }
}

// string constants must match exactly when the abstract side is a constant
bool string_covers(const Value* v, const CVal& c, const ValueStore& store, AnalysisSession& s) {
  if (c.kind != CVal::Kind::Str || v->constraint.kind != Constraint::Kind::Str) return true;
  if (v->constraint.str_any) return true;
  return s.engine().store().string_at(v->constraint.str) == c.s;
}

} // namespace

EvalResult ConcreteEvaluator::run() {
  EvalResult out;
  Machine machine(session_, natives, step_cap, out);
  try {
    machine.run_all_entries();
    out.completed = true;
  } catch (TrapSignal&) {
    out.trapped = true;
  } catch (CapSignal&) {
  } catch (MjThrow&) {
    out.completed = true; // uncaught exception ends the program
  }
  return out;
}

std::string check_trace_abstracted(AnalysisSession& session, const EvalResult& result) {
  Engine& eng = session.engine();
  for (size_t ti = 0; ti < result.trace.size(); ++ti) {
    const TraceEntry& e = result.trace[ti];
    bool found = false;
    std::string why = "no call analyzed";
    eng.for_each_call([&](Call* c) {
      if (found || c->dead || c->method != e.method) return;
      StateRef st = eng.point_state(c, e.ordinal);
      if (!st) {
        why = "point not reached";
        return;
      }
      if (st->stack.size() != e.stack.size() || st->locals.size() != e.locals.size()) {
        why = "shape mismatch";
        return;
      }
      for (size_t i = 0; i < e.stack.size(); ++i) {
        if (!value_covers(st->stack[i], e.stack[i]) ||
            !string_covers(st->stack[i], e.stack[i], eng.store(), session)) {
          why = "stack slot " + std::to_string(i) + " not covered";
          return;
        }
      }
      for (size_t i = 0; i < e.locals.size(); ++i) {
        if (!value_covers(st->locals[i], e.locals[i]) ||
            !string_covers(st->locals[i], e.locals[i], eng.store(), session)) {
          why = "local slot " + std::to_string(i) + " not covered";
          return;
        }
      }
      for (size_t a = 0; a < e.automata.size(); ++a) {
        if (a >= st->automata.size() || !(st->automata[a] & (1ull << e.automata[a]))) {
          why = "automaton state not covered";
          return;
        }
      }
      found = true;
    });
    if (!found) {
      const MethodInfo& mi = session.program().methods[e.method];
      return "trace entry " + std::to_string(ti) + " at " +
             session.program().method_signature(e.method) + " ordinal " +
             std::to_string(e.ordinal) + " (" + (mi.file ? mi.file->path : "?") +
             "): " + why;
    }
  }
  return "";
}

} // namespace mjflow::test
