#pragma once

#include <unordered_map>
#include <vector>

#include <mjflow/ast.hpp>
#include <mjflow/config.hpp>
#include <mjflow/types.hpp>

namespace mjflow {

struct AnnotationReq {
  int lattice = 0;
  uint8_t member = 0;
};

struct ParamInfo {
  std::string name;
  TypeRef type = kNoType;
  std::vector<AnnotationReq> annotations;
};

struct MethodInfo {
  MethodId id = kNoMethod;
  ClassId owner = kNoClass;
  std::string name;
  std::vector<ParamInfo> params;
  TypeRef return_type = kNoType;
  std::vector<AnnotationReq> return_annotations;
  bool defined = false;
  bool builtin = false;
  bool is_static = false;
  bool is_native = false;
  bool is_ctor = false;
  bool is_clinit = false;
  bool is_test = false;
  MjFile* file = nullptr;
  NodeId body = kNoNode;
  std::vector<TypeRef> slot_types; // slot 0 = this for instance methods
  std::vector<std::string> slot_names;
  SrcSpan span;

  bool has_body() const { return body != kNoNode; }
  int first_param_slot() const { return is_static ? 0 : 1; }
};

struct FieldInfo {
  FieldId id = kNoField;
  ClassId owner = kNoClass;
  std::string name;
  TypeRef type = kNoType;
  bool defined = false;
  bool is_static = false;
  std::vector<AnnotationReq> annotations;
  MjFile* file = nullptr;
};

struct ClassInfo {
  ClassId id = kNoClass;
  std::string name;
  ClassId super = kObjectClass;
  bool defined = false;
  bool builtin = false;
  MjFile* file = nullptr;
  std::vector<FieldId> fields;   // declared here
  std::vector<MethodId> methods; // declared here
  std::vector<ClassId> children;
  MethodId ctor = kNoMethod;
  MethodId clinit = kNoMethod;
};

// Per-AST-node resolution results.
struct NodeBinding {
  TypeRef type = kNoType;        // static type of the expression
  int16_t slot = -1;             // VarRef bound to a local
  FieldId field = kNoField;      // field access (bare or explicit)
  ClassId qual_class = kNoClass; // base of FieldGet/CallExpr is a class name
  MethodId direct = kNoMethod;   // ctor / static / super target
  uint32_t tgt_begin = 0;        // virtual target slice in virtual_targets
  uint32_t tgt_end = 0;
  bool array_length = false;     // FieldGet is array .length
};

struct BoundProgram {
  SymbolTable* syms = nullptr;
  const Config* config = nullptr;
  std::vector<MjFilePtr> files;

  // indexed by stable ids; ids absent from this program have defined=false
  std::vector<ClassInfo> classes;
  std::vector<FieldInfo> fields;
  std::vector<MethodInfo> methods;
  std::vector<MethodId> entry_points;
  std::vector<MethodId> virtual_targets;
  std::unordered_map<const MjFile*, std::vector<NodeBinding>> bindings;

  const NodeBinding& binding(const MjFile* f, NodeId n) const {
    return bindings.at(f)[n];
  }
  bool is_subclass(ClassId a, ClassId b) const; // a == b or a below b
  bool assignable(TypeRef from, TypeRef to) const;
  // closest declaration of `name` at or above `cls`; kNoMethod if absent
  MethodId find_method(ClassId cls, const std::string& name) const;
  FieldId find_field(ClassId cls, const std::string& name) const;
  MethodId resolve_virtual(MethodId base, ClassId runtime) const;
  std::string method_signature(MethodId m) const;
};

// Resolves every name, types every expression, builds call target sets and
// entry points. `config` supplies annotation names; unknown annotations are
// reported as config diagnostics.
BoundProgram bind(const std::vector<MjFilePtr>& files, SymbolTable& syms, const Config& config,
                  DiagList& diags);

} // namespace mjflow
