#include <mjflow/ast.hpp>

#include <sstream>

namespace mjflow {

std::string TypeExpr::to_string() const {
  std::string s;
  switch (base) {
    case TypeBase::Int: s = "int"; break;
    case TypeBase::Bool: s = "boolean"; break;
    case TypeBase::String: s = "string"; break;
    case TypeBase::Void: s = "void"; break;
    case TypeBase::Class: s = class_name; break;
  }
  for (int i = 0; i < dims; ++i) s += "[]";
  return s;
}

namespace {

int binary_level(const std::string& op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "==" || op == "!=") return 3;
  if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  return 6; // * / %
}

class Printer {
 public:
  explicit Printer(const MjFile& file) : file_(file) {}

  std::string run() {
    for (const auto& cls : file_.classes) {
      print_class(cls);
      out_ << "\n";
    }
    return out_.str();
  }

 private:
  const MjFile& file_;
  std::ostringstream out_;
  int indent_ = 0;

  void nl() {
    out_ << "\n";
    for (int i = 0; i < indent_; ++i) out_ << "  ";
  }

  void print_annotations(const std::vector<AnnotationSrc>& anns, bool inline_form) {
    for (const auto& a : anns) {
      out_ << "@" << a.name;
      if (inline_form) {
        out_ << " ";
      } else {
        nl();
      }
    }
  }

  void print_class(const ClassSrc& cls) {
    out_ << "class " << cls.name;
    if (!cls.superclass.empty()) out_ << " extends " << cls.superclass;
    out_ << " {";
    ++indent_;
    for (const auto& f : cls.fields) {
      nl();
      print_annotations(f.annotations, true);
      if (f.is_static) out_ << "static ";
      out_ << f.type.to_string() << " " << f.name;
      if (f.init != kNoNode) {
        out_ << " = ";
        print_expr(f.init, 0);
      }
      out_ << ";";
    }
    for (NodeId blk : cls.static_blocks) {
      nl();
      out_ << "static ";
      print_stmt(blk);
    }
    for (const auto& m : cls.methods) {
      if (m.synthesized) continue;
      nl();
      print_annotations(m.annotations, true);
      if (m.is_static) out_ << "static ";
      if (m.is_native) out_ << "native ";
      if (!m.is_ctor) out_ << m.return_type.to_string() << " ";
      out_ << m.name << "(";
      bool first = true;
      for (const auto& p : m.params) {
        if (!first) out_ << ", ";
        first = false;
        print_annotations(p.annotations, true);
        out_ << p.type.to_string() << " " << p.name;
      }
      out_ << ")";
      if (m.is_native) {
        out_ << ";";
      } else {
        out_ << " ";
        print_stmt(m.body);
      }
    }
    --indent_;
    nl();
    out_ << "}";
    nl();
  }

  const AstNode& node(NodeId id) const { return file_.node(id); }

  void print_stmt(NodeId id) {
    const AstNode& n = node(id);
    switch (n.kind) {
      case NodeKind::Block: {
        out_ << "{";
        ++indent_;
        for (NodeId c : n.children) {
          nl();
          print_stmt(c);
        }
        --indent_;
        nl();
        out_ << "}";
        return;
      }
      case NodeKind::VarDeclStmt:
        out_ << n.type.to_string() << " " << n.text;
        if (!n.children.empty()) {
          out_ << " = ";
          print_expr(n.children[0], 0);
        }
        out_ << ";";
        return;
      case NodeKind::AssignStmt:
        print_expr(n.children[0], 0);
        out_ << " = ";
        print_expr(n.children[1], 0);
        out_ << ";";
        return;
      case NodeKind::ExprStmt:
        print_expr(n.children[0], 0);
        out_ << ";";
        return;
      case NodeKind::IfStmt:
        out_ << "if (";
        print_expr(n.children[0], 0);
        out_ << ") ";
        print_stmt(n.children[1]);
        if (n.children.size() > 2) {
          out_ << " else ";
          print_stmt(n.children[2]);
        }
        return;
      case NodeKind::WhileStmt:
        out_ << "while (";
        print_expr(n.children[0], 0);
        out_ << ") ";
        print_stmt(n.children[1]);
        return;
      case NodeKind::ReturnStmt:
        out_ << "return";
        if (!n.children.empty()) {
          out_ << " ";
          print_expr(n.children[0], 0);
        }
        out_ << ";";
        return;
      case NodeKind::ThrowStmt:
        out_ << "throw ";
        print_expr(n.children[0], 0);
        out_ << ";";
        return;
      case NodeKind::TryStmt:
        out_ << "try ";
        print_stmt(n.children[0]);
        for (size_t i = 1; i < n.children.size(); ++i) {
          const AstNode& c = node(n.children[i]);
          out_ << " catch (" << c.type.to_string() << " " << c.text << ") ";
          print_stmt(c.children[0]);
        }
        return;
      case NodeKind::EventStmt:
        out_ << "event(";
        print_string_lit(n.text);
        out_ << ");";
        return;
      default:
        // expression used in statement position (should not happen)
        print_expr(id, 0);
        out_ << ";";
        return;
    }
  }

  void print_string_lit(const std::string& s) {
    out_ << '"';
    for (char c : s) {
      switch (c) {
        case '\n': out_ << "\\n"; break;
        case '\t': out_ << "\\t"; break;
        case '\\': out_ << "\\\\"; break;
        case '"': out_ << "\\\""; break;
        default: out_ << c;
      }
    }
    out_ << '"';
  }

  // `min_level`: precedence context; wrap in parens when this expression
  // binds looser than required.
  void print_expr(NodeId id, int min_level) {
    const AstNode& n = node(id);
    switch (n.kind) {
      case NodeKind::IntLit:
        out_ << n.int_value;
        return;
      case NodeKind::StringLit:
        print_string_lit(n.text);
        return;
      case NodeKind::BoolLit:
        out_ << ((n.flags & kFlagBoolTrue) ? "true" : "false");
        return;
      case NodeKind::NullLit:
        out_ << "null";
        return;
      case NodeKind::This:
        out_ << "this";
        return;
      case NodeKind::VarRef:
        out_ << n.text;
        return;
      case NodeKind::FieldGet:
        print_expr(n.children[0], 8);
        out_ << "." << n.text;
        return;
      case NodeKind::Index:
        print_expr(n.children[0], 8);
        out_ << "[";
        print_expr(n.children[1], 0);
        out_ << "]";
        return;
      case NodeKind::CallExpr: {
        size_t first_arg = 0;
        if (n.flags & kFlagSuperCall) {
          out_ << "super";
        } else if (n.flags & kFlagHasBase) {
          print_expr(n.children[0], 8);
          out_ << "." << n.text;
          first_arg = 1;
        } else {
          out_ << n.text;
        }
        out_ << "(";
        for (size_t i = first_arg; i < n.children.size(); ++i) {
          if (i > first_arg) out_ << ", ";
          print_expr(n.children[i], 0);
        }
        out_ << ")";
        return;
      }
      case NodeKind::NewObject: {
        out_ << "new " << n.text << "(";
        for (size_t i = 0; i < n.children.size(); ++i) {
          if (i > 0) out_ << ", ";
          print_expr(n.children[i], 0);
        }
        out_ << ")";
        return;
      }
      case NodeKind::NewArray:
        out_ << "new " << n.type.to_string() << "[";
        print_expr(n.children[0], 0);
        out_ << "]";
        return;
      case NodeKind::Cast:
        if (min_level > 7) out_ << "(";
        out_ << "(" << n.type.to_string() << ") (";
        print_expr(n.children[0], 0);
        out_ << ")";
        if (min_level > 7) out_ << ")";
        return;
      case NodeKind::Unary: {
        if (min_level > 7) out_ << "(";
        out_ << n.text;
        const AstNode& operand = node(n.children[0]);
        if (operand.kind == NodeKind::Unary || operand.kind == NodeKind::Cast) {
          out_ << "(";
          print_expr(n.children[0], 0);
          out_ << ")";
        } else {
          print_expr(n.children[0], 7);
        }
        if (min_level > 7) out_ << ")";
        return;
      }
      case NodeKind::Binary: {
        int level = binary_level(n.text);
        bool wrap = min_level > level;
        if (wrap) out_ << "(";
        print_expr(n.children[0], level);
        out_ << " " << n.text << " ";
        print_expr(n.children[1], level + 1);
        if (wrap) out_ << ")";
        return;
      }
      default:
        out_ << "/*stmt*/";
        return;
    }
  }
};

bool node_equal(const MjFile& fa, NodeId a, const MjFile& fb, NodeId b) {
  if (a == kNoNode || b == kNoNode) return a == b;
  const AstNode& na = fa.node(a);
  const AstNode& nb = fb.node(b);
  if (na.kind != nb.kind || na.flags != nb.flags || na.int_value != nb.int_value ||
      na.text != nb.text || !(na.type == nb.type)) {
    return false;
  }
  if (na.children.size() != nb.children.size()) return false;
  for (size_t i = 0; i < na.children.size(); ++i) {
    if (!node_equal(fa, na.children[i], fb, nb.children[i])) return false;
  }
  return true;
}

bool annotations_equal(const std::vector<AnnotationSrc>& a, const std::vector<AnnotationSrc>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name) return false;
  }
  return true;
}

} // namespace

std::string print_file(const MjFile& file) { return Printer(file).run(); }

bool ast_equal(const MjFile& a, const MjFile& b) {
  if (a.classes.size() != b.classes.size()) return false;
  for (size_t ci = 0; ci < a.classes.size(); ++ci) {
    const ClassSrc& ca = a.classes[ci];
    const ClassSrc& cb = b.classes[ci];
    if (ca.name != cb.name || ca.superclass != cb.superclass) return false;
    if (ca.fields.size() != cb.fields.size() || ca.methods.size() != cb.methods.size() ||
        ca.static_blocks.size() != cb.static_blocks.size()) {
      return false;
    }
    for (size_t i = 0; i < ca.fields.size(); ++i) {
      const FieldSrc& x = ca.fields[i];
      const FieldSrc& y = cb.fields[i];
      if (x.name != y.name || x.is_static != y.is_static || !(x.type == y.type) ||
          !annotations_equal(x.annotations, y.annotations))
        return false;
      if (!node_equal(a, x.init, b, y.init)) return false;
    }
    for (size_t i = 0; i < ca.static_blocks.size(); ++i) {
      if (!node_equal(a, ca.static_blocks[i], b, cb.static_blocks[i])) return false;
    }
    for (size_t i = 0; i < ca.methods.size(); ++i) {
      const MethodSrc& x = ca.methods[i];
      const MethodSrc& y = cb.methods[i];
      if (x.name != y.name || x.is_static != y.is_static || x.is_native != y.is_native ||
          x.is_ctor != y.is_ctor || x.synthesized != y.synthesized ||
          !(x.return_type == y.return_type) || !annotations_equal(x.annotations, y.annotations)) {
        return false;
      }
      if (x.params.size() != y.params.size()) return false;
      for (size_t p = 0; p < x.params.size(); ++p) {
        if (x.params[p].name != y.params[p].name || !(x.params[p].type == y.params[p].type) ||
            !annotations_equal(x.params[p].annotations, y.params[p].annotations)) {
          return false;
        }
      }
      if (!node_equal(a, x.body, b, y.body)) return false;
    }
  }
  return true;
}

} // namespace mjflow
