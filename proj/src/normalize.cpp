#include <mjflow/normalize.hpp>

namespace mjflow {

namespace {

bool starts_with_super_call(const MjFile& file, NodeId body) {
  const AstNode& block = file.node(body);
  if (block.children.empty()) return false;
  const AstNode& first = file.node(block.children[0]);
  if (first.kind != NodeKind::ExprStmt) return false;
  const AstNode& e = file.node(first.children[0]);
  return e.kind == NodeKind::CallExpr && (e.flags & kFlagSuperCall);
}

NodeId make_field_init_assign(MjFile& file, const FieldSrc& f) {
  NodeId lv = file.make_node(NodeKind::VarRef, f.span);
  file.node(lv).text = f.name;
  file.node(lv).flags |= kFlagSynthesized;
  NodeId assign = file.make_node(NodeKind::AssignStmt, f.span);
  file.node(assign).flags |= kFlagSynthesized;
  file.node(assign).children = {lv, f.init};
  return assign;
}

} // namespace

void normalize_file(MjFile& file) {
  for (auto& cls : file.classes) {
    // default constructor
    bool has_ctor = false;
    for (const auto& m : cls.methods) {
      if (m.is_ctor) has_ctor = true;
    }
    if (!has_ctor) {
      MethodSrc ctor;
      ctor.name = cls.name;
      ctor.is_ctor = true;
      ctor.synthesized = true;
      ctor.return_type.base = TypeBase::Void;
      ctor.span = cls.span;
      ctor.body = file.make_node(NodeKind::Block, cls.span);
      file.node(ctor.body).flags |= kFlagSynthesized;
      cls.methods.push_back(std::move(ctor));
    }

    // implicit super() as the first constructor statement
    if (!cls.superclass.empty()) {
      for (auto& m : cls.methods) {
        if (!m.is_ctor || m.body == kNoNode) continue;
        if (starts_with_super_call(file, m.body)) continue;
        NodeId call = file.make_node(NodeKind::CallExpr, m.span);
        file.node(call).flags |= kFlagSuperCall | kFlagSynthesized;
        NodeId stmt = file.make_node(NodeKind::ExprStmt, m.span);
        file.node(stmt).flags |= kFlagSynthesized;
        file.node(stmt).children = {call};
        auto& body = file.node(m.body).children;
        body.insert(body.begin(), stmt);
      }
    }

    // relocate instance field initializers into the constructor, right
    // after the leading super() when present
    std::vector<NodeId> instance_inits;
    std::vector<NodeId> static_inits;
    for (auto& f : cls.fields) {
      if (f.init == kNoNode) continue;
      NodeId assign = make_field_init_assign(file, f);
      (f.is_static ? static_inits : instance_inits).push_back(assign);
      f.init = kNoNode;
    }
    if (!instance_inits.empty()) {
      for (auto& m : cls.methods) {
        if (!m.is_ctor || m.body == kNoNode) continue;
        auto& body = file.node(m.body).children;
        size_t at = starts_with_super_call(file, m.body) ? 1 : 0;
        body.insert(body.begin() + at, instance_inits.begin(), instance_inits.end());
      }
    }

    // merge static initializers into a single method, statements in source
    // order: field initializers first, then the static blocks
    if (!static_inits.empty() || !cls.static_blocks.empty()) {
      std::vector<NodeId> stmts = std::move(static_inits);
      for (NodeId blk : cls.static_blocks) {
        for (NodeId s : file.node(blk).children) stmts.push_back(s);
      }
      cls.static_blocks.clear();

      MethodSrc* clinit = nullptr;
      for (auto& m : cls.methods) {
        if (m.name == "<clinit>") clinit = &m;
      }
      if (!clinit) {
        MethodSrc m;
        m.name = "<clinit>";
        m.is_static = true;
        m.synthesized = true;
        m.return_type.base = TypeBase::Void;
        m.span = cls.span;
        m.body = file.make_node(NodeKind::Block, cls.span);
        file.node(m.body).flags |= kFlagSynthesized;
        cls.methods.push_back(std::move(m));
        clinit = &cls.methods.back();
      }
      auto& body = file.node(clinit->body).children;
      body.insert(body.end(), stmts.begin(), stmts.end());
    }
  }
  file.normalized = true;
}

BoundProgram normalize(BoundProgram program, DiagList& diags) {
  for (const auto& file : program.files) {
    if (!file->normalized) normalize_file(*file);
  }
  return mjflow::bind(program.files, *program.syms, *program.config, diags);
}

std::string synthesize_test_driver(const std::vector<MjFilePtr>& files) {
  std::string calls;
  for (const auto& file : files) {
    if (file->synthetic) continue;
    for (const auto& cls : file->classes) {
      for (const auto& m : cls.methods) {
        if (m.is_test() && m.is_static && !m.is_ctor && m.params.empty()) {
          calls += "    " + cls.name + "." + m.name + "();\n";
        }
      }
    }
  }
  if (calls.empty()) return "";
  std::string out = "class ";
  out += kTestDriverClass;
  out += " {\n  static void main() {\n";
  out += calls;
  out += "  }\n}\n";
  return out;
}

} // namespace mjflow
