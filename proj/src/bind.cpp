#include <mjflow/bind.hpp>

#include <algorithm>
#include <cassert>

namespace mjflow {

bool BoundProgram::is_subclass(ClassId a, ClassId b) const {
  while (true) {
    if (a == b) return true;
    if (a == kObjectClass || a >= classes.size()) return false;
    a = classes[a].super;
  }
}

bool BoundProgram::assignable(TypeRef from, TypeRef to) const {
  if (from == to) return true;
  const TypeDesc& f = syms->type(from);
  const TypeDesc& t = syms->type(to);
  if (f.kind == TypeKind::Null) {
    return t.kind == TypeKind::Class || t.kind == TypeKind::Array;
  }
  if (t.kind == TypeKind::Class) {
    if (f.kind == TypeKind::Class) return is_subclass(f.cls, t.cls);
    // string and arrays sit below Object
    if (f.kind == TypeKind::String || f.kind == TypeKind::Array) return t.cls == kObjectClass;
  }
  return false;
}

MethodId BoundProgram::find_method(ClassId cls, const std::string& name) const {
  ClassId c = cls;
  while (c < classes.size()) {
    const ClassInfo& info = classes[c];
    for (MethodId m : info.methods) {
      if (methods[m].name == name && !methods[m].is_ctor && !methods[m].is_clinit) return m;
    }
    if (c == kObjectClass) break;
    c = info.super;
  }
  return kNoMethod;
}

FieldId BoundProgram::find_field(ClassId cls, const std::string& name) const {
  ClassId c = cls;
  while (c < classes.size()) {
    const ClassInfo& info = classes[c];
    for (FieldId f : info.fields) {
      if (fields[f].name == name) return f;
    }
    if (c == kObjectClass) break;
    c = info.super;
  }
  return kNoField;
}

MethodId BoundProgram::resolve_virtual(MethodId base, ClassId runtime) const {
  const std::string& name = methods[base].name;
  MethodId found = find_method(runtime, name);
  return found == kNoMethod ? base : found;
}

std::string BoundProgram::method_signature(MethodId m) const {
  const MethodInfo& mi = methods[m];
  std::string sig = syms->class_name(mi.owner) + "." + mi.name + "(";
  for (size_t i = 0; i < mi.params.size(); ++i) {
    if (i) sig += ",";
    sig += syms->type_name(mi.params[i].type);
  }
  sig += ")";
  return sig;
}

namespace {

class Binder {
 public:
  Binder(const std::vector<MjFilePtr>& files, SymbolTable& syms, const Config& config,
         DiagList& diags)
      : syms_(syms), config_(config), diags_(diags) {
    prog_.syms = &syms;
    prog_.config = &config;
    prog_.files = files;
  }

  BoundProgram run() {
    declare_builtins();
    declare_classes();
    declare_members();
    collect_entry_points();
    for (const auto& file : prog_.files) {
      bind_file(*file);
    }
    return std::move(prog_);
  }

 private:
  SymbolTable& syms_;
  const Config& config_;
  DiagList& diags_;
  BoundProgram prog_;

  MjFile* cur_file_ = nullptr;
  std::vector<NodeBinding>* cur_bindings_ = nullptr;
  MethodInfo* cur_method_ = nullptr;
  ClassId cur_class_ = kNoClass;
  // scope stack: (name, slot)
  std::vector<std::pair<std::string, int>> scope_;
  std::vector<size_t> scope_marks_;

  void error(SrcSpan span, const std::string& msg) {
    diags_.push_back({DiagPhase::Bind, cur_file_ ? cur_file_->path : "", span.line, span.column,
                      msg});
  }
  void error_at(const MjFile& f, SrcSpan span, const std::string& msg) {
    diags_.push_back({DiagPhase::Bind, f.path, span.line, span.column, msg});
  }
  void config_error(const MjFile& f, SrcSpan span, const std::string& msg) {
    diags_.push_back({DiagPhase::Config, f.path, span.line, span.column, msg});
  }

  ClassInfo& cls(ClassId id) { return prog_.classes[id]; }
  MethodInfo& meth(MethodId id) { return prog_.methods[id]; }
  FieldInfo& field(FieldId id) { return prog_.fields[id]; }

  void ensure_tables() {
    prog_.classes.resize(syms_.num_classes());
    prog_.fields.resize(syms_.num_fields());
    prog_.methods.resize(syms_.num_methods());
  }

  MethodId declare_method(ClassId owner, const std::string& name) {
    MethodId id = syms_.method_id(owner, name);
    ensure_tables();
    MethodInfo& m = prog_.methods[id];
    m = MethodInfo{};
    m.id = id;
    m.owner = owner;
    m.name = name;
    m.defined = true;
    return id;
  }

  void declare_builtins() {
    ensure_tables();
    auto make_class = [&](ClassId id, const std::string& name) -> ClassInfo& {
      ClassInfo& c = prog_.classes[id];
      c = ClassInfo{};
      c.id = id;
      c.name = name;
      c.super = kObjectClass;
      c.defined = true;
      c.builtin = true;
      return c;
    };
    make_class(kObjectClass, "Object");
    ClassInfo& list = make_class(kListClass, "List");
    ClassInfo& map = make_class(kMapClass, "Map");
    ClassInfo& sb = make_class(kStringBuilderClass, "StringBuilder");

    TypeRef object = syms_.object_type();
    TypeRef str = syms_.string_type();
    TypeRef i32 = syms_.int_type();
    TypeRef vd = syms_.void_type();

    auto builtin_method = [&](ClassInfo& owner, const std::string& name, TypeRef ret,
                              std::vector<TypeRef> params, bool ctor = false) {
      MethodId id = declare_method(owner.id, ctor ? "<init>" : name);
      MethodInfo& m = meth(id);
      m.builtin = true;
      m.is_ctor = ctor;
      m.return_type = ret;
      for (size_t i = 0; i < params.size(); ++i) {
        ParamInfo p;
        p.name = "a" + std::to_string(i);
        p.type = params[i];
        m.params.push_back(std::move(p));
      }
      owner.methods.push_back(id);
      if (ctor) owner.ctor = id;
    };

    builtin_method(prog_.classes[kObjectClass], "", vd, {}, /*ctor=*/true);
    builtin_method(list, "", vd, {}, /*ctor=*/true);
    builtin_method(list, "add", vd, {object});
    builtin_method(list, "get", object, {i32});
    builtin_method(list, "size", i32, {});
    builtin_method(map, "", vd, {}, /*ctor=*/true);
    builtin_method(map, "put", vd, {object, object});
    builtin_method(map, "get", object, {object});
    builtin_method(map, "size", i32, {});
    builtin_method(sb, "", vd, {}, /*ctor=*/true);
    builtin_method(sb, "append", syms_.class_type(kStringBuilderClass), {str});
    builtin_method(sb, "toString", str, {});
  }

  void declare_classes() {
    for (const auto& file : prog_.files) {
      for (const auto& c : file->classes) {
        ClassId id = syms_.class_id(c.name);
        ensure_tables();
        ClassInfo& info = prog_.classes[id];
        if (info.defined) {
          error_at(*file, c.span,
                   info.builtin ? "class name '" + c.name + "' is reserved"
                                : "duplicate class '" + c.name + "'");
          continue;
        }
        info = ClassInfo{};
        info.id = id;
        info.name = c.name;
        info.defined = true;
        info.file = file.get();
      }
    }
    // supers after all classes exist
    for (const auto& file : prog_.files) {
      for (const auto& c : file->classes) {
        ClassId id = syms_.class_id(c.name);
        ClassInfo& info = prog_.classes[id];
        if (info.file != file.get()) continue;
        if (c.superclass.empty()) {
          info.super = kObjectClass;
        } else {
          int super = syms_.find_class(c.superclass);
          if (super < 0 || !prog_.classes[super].defined) {
            error_at(*file, c.span, "unknown superclass '" + c.superclass + "'");
            info.super = kObjectClass;
          } else if (prog_.classes[super].builtin && super != kObjectClass) {
            error_at(*file, c.span, "cannot extend built-in class '" + c.superclass + "'");
            info.super = kObjectClass;
          } else {
            info.super = static_cast<ClassId>(super);
          }
        }
      }
    }
    // inheritance cycles
    for (ClassId id = 0; id < prog_.classes.size(); ++id) {
      if (!prog_.classes[id].defined) continue;
      ClassId slow = id, fast = id;
      while (true) {
        if (fast == kObjectClass) break;
        fast = prog_.classes[fast].super;
        if (fast == kObjectClass) break;
        fast = prog_.classes[fast].super;
        slow = prog_.classes[slow].super;
        if (slow == fast) {
          const ClassInfo& info = prog_.classes[id];
          error_at(*info.file, {0, 0}, "inheritance cycle involving '" + info.name + "'");
          prog_.classes[id].super = kObjectClass;
          break;
        }
      }
    }
    for (ClassId id = 0; id < prog_.classes.size(); ++id) {
      if (prog_.classes[id].defined && id != kObjectClass) {
        prog_.classes[prog_.classes[id].super].children.push_back(id);
      }
    }
  }

  TypeRef resolve_type(const MjFile& file, const TypeExpr& te, SrcSpan span) {
    TypeRef base = kNoType;
    switch (te.base) {
      case TypeBase::Int: base = syms_.int_type(); break;
      case TypeBase::Bool: base = syms_.bool_type(); break;
      case TypeBase::String: base = syms_.string_type(); break;
      case TypeBase::Void: base = syms_.void_type(); break;
      case TypeBase::Class: {
        int id = syms_.find_class(te.class_name);
        if (id < 0 || !prog_.classes[id].defined) {
          error_at(file, span, "unknown type '" + te.class_name + "'");
          return syms_.object_type();
        }
        base = syms_.class_type(static_cast<ClassId>(id));
        break;
      }
    }
    for (int i = 0; i < te.dims; ++i) base = syms_.array_type(base);
    return base;
  }

  std::vector<AnnotationReq> resolve_annotations(const MjFile& file,
                                                 const std::vector<AnnotationSrc>& anns) {
    std::vector<AnnotationReq> out;
    for (const auto& a : anns) {
      if (a.name == "Test") continue; // entry-point marker, not a lattice annotation
      auto it = config_.annotations.find(a.name);
      if (it == config_.annotations.end()) {
        config_error(file, a.span, "unknown annotation '@" + a.name + "'");
        continue;
      }
      out.push_back({it->second.first, it->second.second});
    }
    return out;
  }

  void declare_members() {
    for (const auto& file : prog_.files) {
      for (const auto& c : file->classes) {
        ClassId id = syms_.class_id(c.name);
        ClassInfo& info = prog_.classes[id];
        if (info.file != file.get() || info.builtin) continue;

        for (const auto& f : c.fields) {
          if (prog_.find_field(info.super, f.name) != kNoField) {
            error_at(*file, f.span, "field '" + f.name + "' shadows an inherited field");
            continue;
          }
          bool dup = false;
          for (FieldId existing : info.fields) {
            if (field(existing).name == f.name) dup = true;
          }
          if (dup) {
            error_at(*file, f.span, "duplicate field '" + f.name + "'");
            continue;
          }
          FieldId fid = syms_.field_id(id, f.name);
          ensure_tables();
          FieldInfo& fi = prog_.fields[fid];
          fi = FieldInfo{};
          fi.id = fid;
          fi.owner = id;
          fi.name = f.name;
          fi.defined = true;
          fi.is_static = f.is_static;
          fi.type = resolve_type(*file, f.type, f.span);
          fi.annotations = resolve_annotations(*file, f.annotations);
          fi.file = file.get();
          info.fields.push_back(fid);
        }

        for (const auto& m : c.methods) {
          std::string key_name = m.is_ctor ? "<init>" : m.name;
          bool dup = false;
          for (MethodId existing : info.methods) {
            if (meth(existing).name == key_name) dup = true;
          }
          if (dup) {
            error_at(*file, m.span,
                     m.is_ctor ? "a class may declare at most one constructor"
                               : "duplicate method '" + m.name + "' (MJ has no overloading)");
            continue;
          }
          MethodId mid = declare_method(id, key_name);
          MethodInfo& mi = meth(mid);
          mi.is_static = m.is_static;
          mi.is_native = m.is_native;
          mi.is_ctor = m.is_ctor;
          mi.is_clinit = (m.name == "<clinit>");
          mi.is_test = m.is_test();
          mi.file = file.get();
          mi.body = m.body;
          mi.span = m.span;
          mi.return_type = m.is_ctor ? syms_.void_type()
                                     : resolve_type(*file, m.return_type, m.span);
          mi.return_annotations = resolve_annotations(*file, m.annotations);
          for (const auto& p : m.params) {
            ParamInfo pi;
            pi.name = p.name;
            pi.type = resolve_type(*file, p.type, p.span);
            if (syms_.type(pi.type).kind == TypeKind::Void) {
              error_at(*file, p.span, "parameters cannot be void");
            }
            pi.annotations = resolve_annotations(*file, p.annotations);
            mi.params.push_back(std::move(pi));
          }
          if (mi.is_test) {
            if (!mi.is_static || !mi.params.empty()) {
              error_at(*file, m.span, "@Test methods must be static with no parameters");
            }
            if (mi.is_native) {
              error_at(*file, m.span, "@Test methods cannot be native");
            }
          }
          info.methods.push_back(mid);
          if (mi.is_ctor) info.ctor = mid;
          if (mi.is_clinit) info.clinit = mid;
        }
      }
    }

    // override compatibility
    for (ClassId id = 0; id < prog_.classes.size(); ++id) {
      const ClassInfo& info = prog_.classes[id];
      if (!info.defined || info.builtin) continue;
      for (MethodId mid : info.methods) {
        const MethodInfo& mi = meth(mid);
        if (mi.is_ctor || mi.is_clinit) continue;
        MethodId base = prog_.find_method(info.super, mi.name);
        if (base == kNoMethod) continue;
        const MethodInfo& bi = meth(base);
        bool ok = bi.is_static == mi.is_static && bi.return_type == mi.return_type &&
                  bi.params.size() == mi.params.size();
        if (ok) {
          for (size_t i = 0; i < mi.params.size(); ++i) {
            if (mi.params[i].type != bi.params[i].type) ok = false;
          }
        }
        if (!ok) {
          error_at(*mi.file, mi.span,
                   "method '" + mi.name + "' does not match the signature it overrides");
        }
      }
    }
  }

  void collect_entry_points() {
    for (const auto& file : prog_.files) {
      for (const auto& c : file->classes) {
        ClassId id = syms_.class_id(c.name);
        const ClassInfo& info = prog_.classes[id];
        if (info.file != file.get()) continue;
        for (MethodId mid : info.methods) {
          const MethodInfo& mi = meth(mid);
          if (mi.name == "main" && mi.is_static && mi.params.empty() &&
              mi.return_type == syms_.void_type() && mi.has_body()) {
            prog_.entry_points.push_back(mid);
          }
        }
      }
    }
  }

  // ---- body binding ----

  NodeBinding& b(NodeId n) { return (*cur_bindings_)[n]; }
  const AstNode& node(NodeId n) const { return cur_file_->node(n); }

  void bind_file(MjFile& file) {
    cur_file_ = &file;
    auto& vec = prog_.bindings[&file];
    vec.assign(file.nodes.size(), NodeBinding{});
    cur_bindings_ = &vec;
    for (const auto& c : file.classes) {
      ClassId id = syms_.class_id(c.name);
      if (prog_.classes[id].file != &file) continue;
      cur_class_ = id;
      for (MethodId mid : prog_.classes[id].methods) {
        MethodInfo& mi = meth(mid);
        if (mi.file != &file || !mi.has_body()) continue;
        bind_method(mi);
      }
    }
    cur_file_ = nullptr;
    cur_bindings_ = nullptr;
  }

  void bind_method(MethodInfo& mi) {
    cur_method_ = &mi;
    scope_.clear();
    scope_marks_.clear();
    mi.slot_types.clear();
    mi.slot_names.clear();
    if (!mi.is_static) {
      mi.slot_types.push_back(syms_.class_type(mi.owner));
      mi.slot_names.push_back("this");
    }
    for (const auto& p : mi.params) {
      int slot = static_cast<int>(mi.slot_types.size());
      mi.slot_types.push_back(p.type);
      mi.slot_names.push_back(p.name);
      scope_.emplace_back(p.name, slot);
    }
    bind_stmt(mi.body);
    cur_method_ = nullptr;
  }

  int declare_local(const std::string& name, TypeRef type, SrcSpan span) {
    for (auto& [n, s] : scope_) {
      if (n == name) {
        error(span, "variable '" + name + "' is already declared in this scope");
        return s;
      }
    }
    int slot = static_cast<int>(cur_method_->slot_types.size());
    cur_method_->slot_types.push_back(type);
    cur_method_->slot_names.push_back(name);
    scope_.emplace_back(name, slot);
    return slot;
  }

  int lookup_local(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == name) return it->second;
    }
    return -1;
  }

  void push_scope() { scope_marks_.push_back(scope_.size()); }
  void pop_scope() {
    scope_.resize(scope_marks_.back());
    scope_marks_.pop_back();
  }

  void bind_stmt(NodeId id) {
    const AstNode& n = node(id);
    switch (n.kind) {
      case NodeKind::Block: {
        push_scope();
        for (NodeId c : n.children) bind_stmt(c);
        pop_scope();
        return;
      }
      case NodeKind::VarDeclStmt: {
        TypeRef t = resolve_type(*cur_file_, n.type, n.span);
        if (syms_.type(t).kind == TypeKind::Void) {
          error(n.span, "variables cannot be void");
          t = syms_.object_type();
        }
        if (!n.children.empty()) {
          TypeRef vt = bind_expr(n.children[0]);
          check_assignable(vt, t, node(n.children[0]).span, "initializer");
        }
        int slot = declare_local(n.text, t, n.span);
        b(id).slot = static_cast<int16_t>(slot);
        b(id).type = t;
        return;
      }
      case NodeKind::AssignStmt: {
        TypeRef lt = bind_lvalue(n.children[0]);
        TypeRef rt = bind_expr(n.children[1]);
        if (lt != kNoType) {
          check_assignable(rt, lt, node(n.children[1]).span, "assignment");
        }
        return;
      }
      case NodeKind::ExprStmt:
        bind_expr(n.children[0]);
        return;
      case NodeKind::IfStmt: {
        TypeRef ct = bind_expr(n.children[0]);
        require_bool(ct, node(n.children[0]).span);
        bind_stmt(n.children[1]);
        if (n.children.size() > 2) bind_stmt(n.children[2]);
        return;
      }
      case NodeKind::WhileStmt: {
        TypeRef ct = bind_expr(n.children[0]);
        require_bool(ct, node(n.children[0]).span);
        bind_stmt(n.children[1]);
        return;
      }
      case NodeKind::ReturnStmt: {
        TypeRef want = cur_method_->return_type;
        if (n.children.empty()) {
          if (syms_.type(want).kind != TypeKind::Void) {
            error(n.span, "non-void method must return a value");
          }
        } else {
          TypeRef got = bind_expr(n.children[0]);
          if (syms_.type(want).kind == TypeKind::Void) {
            error(n.span, "void method cannot return a value");
          } else {
            check_assignable(got, want, n.span, "return value");
          }
        }
        return;
      }
      case NodeKind::ThrowStmt: {
        TypeRef t = bind_expr(n.children[0]);
        if (syms_.type(t).kind != TypeKind::Class && syms_.type(t).kind != TypeKind::Null) {
          error(n.span, "only class instances can be thrown");
        }
        return;
      }
      case NodeKind::TryStmt: {
        bind_stmt(n.children[0]);
        for (size_t i = 1; i < n.children.size(); ++i) {
          const AstNode& c = node(n.children[i]);
          TypeRef t = resolve_type(*cur_file_, c.type, c.span);
          if (syms_.type(t).kind != TypeKind::Class) {
            error(c.span, "catch requires a class type");
            t = syms_.object_type();
          }
          push_scope();
          int slot = declare_local(c.text, t, c.span);
          b(n.children[i]).slot = static_cast<int16_t>(slot);
          b(n.children[i]).type = t;
          bind_stmt(c.children[0]);
          pop_scope();
        }
        return;
      }
      case NodeKind::EventStmt:
        return;
      default:
        bind_expr(id);
        return;
    }
  }

  void require_bool(TypeRef t, SrcSpan span) {
    if (t != kNoType && syms_.type(t).kind != TypeKind::Bool) {
      error(span, "condition must be boolean");
    }
  }

  void check_assignable(TypeRef from, TypeRef to, SrcSpan span, const char* what) {
    if (from == kNoType || to == kNoType) return;
    if (!prog_.assignable(from, to)) {
      error(span, std::string(what) + " of type " + syms_.type_name(from) +
                      " is not assignable to " + syms_.type_name(to));
    }
  }

  // Returns the declared type of the assignment target.
  TypeRef bind_lvalue(NodeId id) {
    const AstNode& n = node(id);
    switch (n.kind) {
      case NodeKind::VarRef: {
        int slot = lookup_local(n.text);
        if (slot >= 0) {
          b(id).slot = static_cast<int16_t>(slot);
          b(id).type = cur_method_->slot_types[slot];
          return b(id).type;
        }
        FieldId f = prog_.find_field(cur_class_, n.text);
        if (f != kNoField) {
          if (!field(f).is_static && cur_method_->is_static) {
            error(n.span, "cannot access instance field '" + n.text + "' from a static method");
          }
          b(id).field = f;
          b(id).type = field(f).type;
          return b(id).type;
        }
        error(n.span, "undeclared variable '" + n.text + "'");
        return kNoType;
      }
      case NodeKind::FieldGet:
        return bind_field_access(id, /*lvalue=*/true);
      case NodeKind::Index: {
        TypeRef base = bind_expr(n.children[0]);
        TypeRef idx = bind_expr(n.children[1]);
        if (idx != kNoType && syms_.type(idx).kind != TypeKind::Int) {
          error(node(n.children[1]).span, "array index must be int");
        }
        if (base == kNoType) return kNoType;
        if (syms_.type(base).kind != TypeKind::Array) {
          error(n.span, "indexing requires an array");
          return kNoType;
        }
        b(id).type = syms_.type(base).elem;
        return b(id).type;
      }
      default:
        error(n.span, "invalid assignment target");
        return kNoType;
    }
  }

  // True when the base expression of a member access names a class rather
  // than a value.
  bool base_names_class(NodeId base) {
    const AstNode& bn = node(base);
    if (bn.kind != NodeKind::VarRef) return false;
    if (lookup_local(bn.text) >= 0) return false;
    if (prog_.find_field(cur_class_, bn.text) != kNoField) return false;
    int cid = syms_.find_class(bn.text);
    return cid >= 0 && prog_.classes[cid].defined;
  }

  TypeRef bind_field_access(NodeId id, bool lvalue) {
    const AstNode& n = node(id);
    NodeId base = n.children[0];
    if (base_names_class(base)) {
      ClassId cid = static_cast<ClassId>(syms_.find_class(node(base).text));
      b(id).qual_class = cid;
      FieldId f = prog_.find_field(cid, n.text);
      if (f == kNoField) {
        error(n.span, "class '" + node(base).text + "' has no field '" + n.text + "'");
        return kNoType;
      }
      if (!field(f).is_static) {
        error(n.span, "field '" + n.text + "' is not static");
      }
      b(id).field = f;
      b(id).type = field(f).type;
      return b(id).type;
    }

    TypeRef bt = bind_expr(base);
    if (bt == kNoType) return kNoType;
    const TypeDesc& bd = syms_.type(bt);
    if (bd.kind == TypeKind::Array && n.text == "length" && !lvalue) {
      b(id).array_length = true;
      b(id).type = syms_.int_type();
      return b(id).type;
    }
    if (bd.kind != TypeKind::Class) {
      error(n.span, "field access requires an object");
      return kNoType;
    }
    FieldId f = prog_.find_field(bd.cls, n.text);
    if (f == kNoField) {
      error(n.span, "class '" + syms_.class_name(bd.cls) + "' has no field '" + n.text + "'");
      return kNoType;
    }
    if (field(f).is_static) {
      error(n.span, "static field '" + n.text + "' must be accessed through its class");
    }
    b(id).field = f;
    b(id).type = field(f).type;
    return b(id).type;
  }

  std::vector<MethodId> virtual_targets(MethodId basem, ClassId static_cls) {
    std::vector<MethodId> out;
    out.push_back(basem);
    const std::string& name = meth(basem).name;
    // overrides in subclasses of the static receiver type
    std::vector<ClassId> stack = {static_cls};
    while (!stack.empty()) {
      ClassId c = stack.back();
      stack.pop_back();
      for (ClassId child : cls(c).children) {
        stack.push_back(child);
        for (MethodId m : cls(child).methods) {
          if (meth(m).name == name && !meth(m).is_ctor && !meth(m).is_clinit) {
            if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
          }
        }
      }
    }
    return out;
  }

  void check_args(const MethodInfo& mi, const AstNode& n, size_t first_arg) {
    size_t argc = n.children.size() - first_arg;
    if (argc != mi.params.size()) {
      error(n.span, "call to '" + (mi.is_ctor ? syms_.class_name(mi.owner) : mi.name) +
                        "' expects " + std::to_string(mi.params.size()) + " arguments, got " +
                        std::to_string(argc));
      return;
    }
    for (size_t i = 0; i < argc; ++i) {
      TypeRef at = b(n.children[first_arg + i]).type;
      check_assignable(at, mi.params[i].type, node(n.children[first_arg + i]).span, "argument");
    }
  }

  TypeRef bind_call(NodeId id) {
    const AstNode& n = node(id);
    if (n.flags & kFlagSuperCall) {
      for (NodeId a : n.children) bind_expr(a);
      if (!cur_method_->is_ctor) {
        error(n.span, "super(...) is only allowed inside a constructor");
        return syms_.void_type();
      }
      ClassId sup = cls(cur_class_).super;
      MethodId ctor = cls(sup).ctor;
      if (ctor == kNoMethod) {
        // superclass has no constructor yet (pre-normalize); treat as implicit
        if (!n.children.empty()) {
          error(n.span, "superclass constructor takes no arguments");
        }
        return syms_.void_type();
      }
      b(id).direct = ctor;
      check_args(meth(ctor), n, 0);
      b(id).type = syms_.void_type();
      return b(id).type;
    }

    size_t first_arg = 0;
    MethodId target = kNoMethod;
    bool is_virtual = false;
    ClassId recv_cls = kNoClass;

    if (n.flags & kFlagHasBase) {
      first_arg = 1;
      NodeId base = n.children[0];
      if (base_names_class(base)) {
        ClassId cid = static_cast<ClassId>(syms_.find_class(node(base).text));
        b(id).qual_class = cid;
        target = prog_.find_method(cid, n.text);
        if (target == kNoMethod) {
          error(n.span, "class '" + node(base).text + "' has no method '" + n.text + "'");
          return kNoType;
        }
        if (!meth(target).is_static) {
          error(n.span, "method '" + n.text + "' is not static");
          return kNoType;
        }
        b(id).direct = target;
      } else {
        TypeRef bt = bind_expr(base);
        if (bt == kNoType) return kNoType;
        const TypeDesc& bd = syms_.type(bt);
        if (bd.kind != TypeKind::Class) {
          error(n.span, "method call requires an object receiver");
          return kNoType;
        }
        recv_cls = bd.cls;
        target = prog_.find_method(recv_cls, n.text);
        if (target == kNoMethod) {
          error(n.span,
                "class '" + syms_.class_name(recv_cls) + "' has no method '" + n.text + "'");
          return kNoType;
        }
        if (meth(target).is_static) {
          error(n.span, "static method '" + n.text + "' must be called through its class");
          return kNoType;
        }
        is_virtual = true;
      }
    } else {
      // bare call: method of the current class (or a superclass)
      target = prog_.find_method(cur_class_, n.text);
      if (target == kNoMethod) {
        error(n.span, "no method '" + n.text + "' in scope");
        return kNoType;
      }
      if (meth(target).is_static) {
        b(id).direct = target;
      } else {
        if (cur_method_->is_static) {
          error(n.span, "cannot call instance method '" + n.text + "' from a static method");
          return kNoType;
        }
        recv_cls = cur_class_;
        is_virtual = true;
      }
    }

    for (size_t i = first_arg; i < n.children.size(); ++i) bind_expr(n.children[i]);
    check_args(meth(target), n, first_arg);

    if (is_virtual) {
      auto targets = virtual_targets(target, recv_cls);
      b(id).tgt_begin = static_cast<uint32_t>(prog_.virtual_targets.size());
      prog_.virtual_targets.insert(prog_.virtual_targets.end(), targets.begin(), targets.end());
      b(id).tgt_end = static_cast<uint32_t>(prog_.virtual_targets.size());
    }
    b(id).type = meth(target).return_type;
    return b(id).type;
  }

  TypeRef bind_expr(NodeId id) {
    const AstNode& n = node(id);
    switch (n.kind) {
      case NodeKind::IntLit:
        b(id).type = syms_.int_type();
        return b(id).type;
      case NodeKind::StringLit:
        b(id).type = syms_.string_type();
        return b(id).type;
      case NodeKind::BoolLit:
        b(id).type = syms_.bool_type();
        return b(id).type;
      case NodeKind::NullLit:
        b(id).type = syms_.null_type();
        return b(id).type;
      case NodeKind::This:
        if (cur_method_->is_static) {
          error(n.span, "'this' is not available in a static method");
          b(id).type = syms_.object_type();
        } else {
          b(id).type = syms_.class_type(cur_class_);
        }
        return b(id).type;
      case NodeKind::VarRef: {
        int slot = lookup_local(n.text);
        if (slot >= 0) {
          b(id).slot = static_cast<int16_t>(slot);
          b(id).type = cur_method_->slot_types[slot];
          return b(id).type;
        }
        FieldId f = prog_.find_field(cur_class_, n.text);
        if (f != kNoField) {
          if (!field(f).is_static && cur_method_->is_static) {
            error(n.span, "cannot access instance field '" + n.text + "' from a static method");
            return kNoType;
          }
          b(id).field = f;
          b(id).type = field(f).type;
          return b(id).type;
        }
        error(n.span, "undeclared variable '" + n.text + "'");
        return kNoType;
      }
      case NodeKind::FieldGet:
        return bind_field_access(id, /*lvalue=*/false);
      case NodeKind::Index: {
        TypeRef base = bind_expr(n.children[0]);
        TypeRef idx = bind_expr(n.children[1]);
        if (idx != kNoType && syms_.type(idx).kind != TypeKind::Int) {
          error(node(n.children[1]).span, "array index must be int");
        }
        if (base == kNoType) return kNoType;
        if (syms_.type(base).kind != TypeKind::Array) {
          error(n.span, "indexing requires an array");
          return kNoType;
        }
        b(id).type = syms_.type(base).elem;
        return b(id).type;
      }
      case NodeKind::CallExpr:
        return bind_call(id);
      case NodeKind::NewObject: {
        int cid = syms_.find_class(n.text);
        if (cid < 0 || !prog_.classes[cid].defined) {
          error(n.span, "unknown class '" + n.text + "'");
          return kNoType;
        }
        ClassId c = static_cast<ClassId>(cid);
        if (c == kObjectClass) {
          // plain Object allocations are allowed
        }
        for (NodeId a : n.children) bind_expr(a);
        MethodId ctor = cls(c).ctor;
        if (ctor != kNoMethod) {
          b(id).direct = ctor;
          check_args(meth(ctor), n, 0);
        } else if (!n.children.empty()) {
          error(n.span, "class '" + n.text + "' has no constructor taking arguments");
        }
        b(id).type = syms_.class_type(c);
        return b(id).type;
      }
      case NodeKind::NewArray: {
        TypeRef elem = resolve_type(*cur_file_, n.type, n.span);
        if (syms_.type(elem).kind == TypeKind::Void) {
          error(n.span, "cannot allocate an array of void");
          elem = syms_.object_type();
        }
        TypeRef sz = bind_expr(n.children[0]);
        if (sz != kNoType && syms_.type(sz).kind != TypeKind::Int) {
          error(node(n.children[0]).span, "array size must be int");
        }
        b(id).type = syms_.array_type(elem);
        return b(id).type;
      }
      case NodeKind::Cast: {
        TypeRef target = resolve_type(*cur_file_, n.type, n.span);
        TypeRef st = bind_expr(n.children[0]);
        if (st != kNoType) check_cast(st, target, n.span);
        b(id).type = target;
        return target;
      }
      case NodeKind::Unary: {
        TypeRef t = bind_expr(n.children[0]);
        if (n.text == "!") {
          require_bool(t, n.span);
          b(id).type = syms_.bool_type();
        } else {
          if (t != kNoType && syms_.type(t).kind != TypeKind::Int) {
            error(n.span, "unary '-' requires int");
          }
          b(id).type = syms_.int_type();
        }
        return b(id).type;
      }
      case NodeKind::Binary:
        return bind_binary(id);
      default:
        error(n.span, "statement used where an expression is required");
        return kNoType;
    }
  }

  void check_cast(TypeRef from, TypeRef to, SrcSpan span) {
    if (from == to) return;
    const TypeDesc& f = syms_.type(from);
    const TypeDesc& t = syms_.type(to);
    if (prog_.assignable(from, to)) return; // upcast
    if (f.kind == TypeKind::Class && t.kind == TypeKind::Class &&
        prog_.is_subclass(t.cls, f.cls)) {
      return; // downcast
    }
    if (f.kind == TypeKind::Class && f.cls == kObjectClass &&
        (t.kind == TypeKind::String || t.kind == TypeKind::Array)) {
      return; // Object down to string / array
    }
    error(span, "cannot cast " + syms_.type_name(from) + " to " + syms_.type_name(to));
  }

  TypeRef bind_binary(NodeId id) {
    const AstNode& n = node(id);
    TypeRef lt = bind_expr(n.children[0]);
    TypeRef rt = bind_expr(n.children[1]);
    const std::string& op = n.text;
    auto kind_of = [&](TypeRef t) {
      return t == kNoType ? TypeKind::Void : syms_.type(t).kind;
    };
    TypeKind lk = kind_of(lt), rk = kind_of(rt);

    if (op == "&&" || op == "||") {
      require_bool(lt, n.span);
      require_bool(rt, n.span);
      b(id).type = syms_.bool_type();
      return b(id).type;
    }
    if (op == "==" || op == "!=") {
      bool ok = false;
      if (lt == kNoType || rt == kNoType) {
        ok = true; // already reported
      } else if (lk == rk && (lk == TypeKind::Int || lk == TypeKind::Bool ||
                              lk == TypeKind::String)) {
        ok = true;
      } else if (syms_.is_reference(lt) && syms_.is_reference(rt)) {
        ok = true;
      }
      if (!ok) error(n.span, "incomparable operand types for '" + op + "'");
      b(id).type = syms_.bool_type();
      return b(id).type;
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      if ((lt != kNoType && lk != TypeKind::Int) || (rt != kNoType && rk != TypeKind::Int)) {
        error(n.span, "comparison requires int operands");
      }
      b(id).type = syms_.bool_type();
      return b(id).type;
    }
    if (op == "+") {
      if (lk == TypeKind::String || rk == TypeKind::String) {
        auto concat_ok = [&](TypeKind k) {
          return k == TypeKind::String || k == TypeKind::Int || k == TypeKind::Bool;
        };
        if ((lt != kNoType && !concat_ok(lk)) || (rt != kNoType && !concat_ok(rk))) {
          error(n.span, "string concatenation accepts string, int, and boolean operands");
        }
        b(id).type = syms_.string_type();
        return b(id).type;
      }
    }
    if ((lt != kNoType && lk != TypeKind::Int) || (rt != kNoType && rk != TypeKind::Int)) {
      error(n.span, "operator '" + op + "' requires int operands");
    }
    b(id).type = syms_.int_type();
    return b(id).type;
  }
};

} // namespace

BoundProgram bind(const std::vector<MjFilePtr>& files, SymbolTable& syms, const Config& config,
                  DiagList& diags) {
  Binder binder(files, syms, config, diags);
  return binder.run();
}

} // namespace mjflow
