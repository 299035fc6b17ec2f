#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <mjflow/diag.hpp>

namespace mjflow {

using NodeId = uint32_t;
constexpr NodeId kNoNode = 0xffffffffu;

struct SrcSpan {
  int line = 0;
  int column = 0;
};

enum class NodeKind : uint8_t {
  // expressions
  IntLit,
  StringLit,
  BoolLit,
  NullLit,
  This,
  VarRef,    // bare identifier; binder decides local / implicit this-field
  FieldGet,  // children [base]; base may bind to a class qualifier
  Index,     // children [base, index]
  CallExpr,  // children [base?, args...]; flags say whether base exists
  NewObject, // children [args...]; class name in text
  NewArray,  // children [size]; element type in `type`
  Cast,      // children [expr]; target in `type`
  Unary,     // children [expr]; op in text ("-" or "!")
  Binary,    // children [lhs, rhs]; op in text
  // statements
  Block,
  VarDeclStmt, // children [init?]; name in text, type in `type`
  AssignStmt,  // children [lvalue, rhs]
  ExprStmt,    // children [expr]
  IfStmt,      // children [cond, then, else?]
  WhileStmt,   // children [cond, body]
  ReturnStmt,  // children [expr?]
  ThrowStmt,   // children [expr]
  TryStmt,     // children [block, catches...]
  CatchClause, // children [body]; var name in text, type in `type`
  EventStmt,   // event name in text
};

enum class TypeBase : uint8_t { Int, Bool, String, Void, Class };

struct TypeExpr {
  TypeBase base = TypeBase::Void;
  std::string class_name; // when base == Class
  int dims = 0;           // array dimensions

  bool operator==(const TypeExpr& o) const {
    return base == o.base && class_name == o.class_name && dims == o.dims;
  }
  std::string to_string() const;
};

// Node flags.
constexpr uint8_t kFlagBoolTrue = 1;   // BoolLit value
constexpr uint8_t kFlagHasBase = 2;    // CallExpr has an explicit base child
constexpr uint8_t kFlagSuperCall = 4;  // CallExpr is super(...) constructor call
constexpr uint8_t kFlagSynthesized = 8;

struct AstNode {
  NodeKind kind = NodeKind::Block;
  uint8_t flags = 0;
  NodeId id = kNoNode;
  SrcSpan span;
  std::vector<NodeId> children;
  int64_t int_value = 0;
  std::string text; // identifier / literal / operator / event name
  TypeExpr type;    // decls, casts, new
};

struct AnnotationSrc {
  std::string name;
  SrcSpan span;
};

struct ParamSrc {
  std::string name;
  TypeExpr type;
  std::vector<AnnotationSrc> annotations;
  SrcSpan span;
};

struct MethodSrc {
  std::string name;
  std::vector<ParamSrc> params;
  TypeExpr return_type;
  std::vector<AnnotationSrc> annotations; // @Test plus return restrictions
  NodeId body = kNoNode;                  // kNoNode iff native
  bool is_static = false;
  bool is_native = false;
  bool is_ctor = false;
  bool synthesized = false;
  SrcSpan span;

  bool is_test() const {
    for (const auto& a : annotations)
      if (a.name == "Test") return true;
    return false;
  }
};

struct FieldSrc {
  std::string name;
  TypeExpr type;
  std::vector<AnnotationSrc> annotations;
  NodeId init = kNoNode;
  bool is_static = false;
  SrcSpan span;
};

struct ClassSrc {
  std::string name;
  std::string superclass; // empty: extends Object
  std::vector<FieldSrc> fields;
  std::vector<MethodSrc> methods;
  std::vector<NodeId> static_blocks; // merged into <clinit> by normalize
  SrcSpan span;
};

struct MjFile {
  std::string path;
  std::vector<AstNode> nodes;
  std::vector<ClassSrc> classes;
  bool normalized = false;
  bool synthetic = false; // generated driver file

  const AstNode& node(NodeId id) const { return nodes[id]; }
  AstNode& node(NodeId id) { return nodes[id]; }

  NodeId make_node(NodeKind kind, SrcSpan span) {
    AstNode n;
    n.kind = kind;
    n.id = static_cast<NodeId>(nodes.size());
    n.span = span;
    nodes.push_back(std::move(n));
    return nodes.back().id;
  }
};

using MjFilePtr = std::shared_ptr<MjFile>;

// Renders the file back to MJ source. Parsing the result yields a
// structurally identical AST (spans aside).
std::string print_file(const MjFile& file);

// Structural equality ignoring source positions. Used by round-trip tests.
bool ast_equal(const MjFile& a, const MjFile& b);

} // namespace mjflow
