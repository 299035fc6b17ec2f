#include <mjflow/points.hpp>

#include <cassert>

namespace mjflow {

class PlanBuilder {
 public:
  PlanBuilder(const BoundProgram& prog, const MjFile& file, const MethodInfo& mi, MethodPlan& plan)
      : prog_(prog), file_(file), plan_(plan) {
    plan_.file = &file;
    plan_.method = mi.id;
    plan_.body = mi.body;
    plan_.parents_.assign(file.nodes.size(), kNoNode);
    plan_.child_index_.assign(file.nodes.size(), -1);
    plan_.try_chain_id_.assign(file.nodes.size(), 0);
    plan_.try_chains_.push_back({}); // id 0: empty chain
  }

  void run() { plan_stmt(plan_.body, kNoNode, -1); }

 private:
  const BoundProgram& prog_;
  const MjFile& file_;
  MethodPlan& plan_;
  std::vector<NodeId> tries_;

  const AstNode& node(NodeId n) const { return file_.node(n); }
  const NodeBinding& binding(NodeId n) const { return prog_.binding(&file_, n); }

  void attach(NodeId n, NodeId parent, int idx) {
    plan_.parents_[n] = parent;
    plan_.child_index_[n] = idx;
    if (tries_.empty()) {
      plan_.try_chain_id_[n] = 0;
    } else {
      // chains are few; reuse the last one when identical
      if (plan_.try_chains_.back() != tries_) plan_.try_chains_.push_back(tries_);
      plan_.try_chain_id_[n] = static_cast<int>(plan_.try_chains_.size()) - 1;
    }
  }

  void point(NodeId n, int16_t after, uint16_t depth) { plan_.add_point(n, after, depth); }

  // Expressions leave one value on the stack; `d` is the depth on entry.
  void plan_expr(NodeId id, NodeId parent, int idx, uint16_t d) {
    attach(id, parent, idx);
    const AstNode& n = node(id);
    switch (n.kind) {
      case NodeKind::IntLit:
      case NodeKind::StringLit:
      case NodeKind::BoolLit:
      case NodeKind::NullLit:
      case NodeKind::This:
      case NodeKind::VarRef:
        point(id, -1, d);
        return;
      case NodeKind::FieldGet: {
        point(id, -1, d);
        if (binding(id).qual_class != kNoClass) {
          attach(n.children[0], id, 0); // class qualifier; never evaluated
          return;
        }
        plan_expr(n.children[0], id, 0, d);
        point(id, 0, d + 1);
        return;
      }
      case NodeKind::Index:
        point(id, -1, d);
        plan_expr(n.children[0], id, 0, d);
        point(id, 0, d + 1);
        plan_expr(n.children[1], id, 1, d + 1);
        point(id, 1, d + 2);
        return;
      case NodeKind::CallExpr: {
        point(id, -1, d);
        uint16_t cur = d;
        size_t first_arg = 0;
        if ((n.flags & kFlagHasBase) && !(n.flags & kFlagSuperCall)) {
          first_arg = 1;
          if (binding(id).qual_class == kNoClass) {
            plan_expr(n.children[0], id, 0, cur);
            point(id, 0, cur + 1);
            ++cur;
          } else {
            attach(n.children[0], id, 0); // class qualifier; never evaluated
          }
        }
        for (size_t i = first_arg; i < n.children.size(); ++i) {
          plan_expr(n.children[i], id, static_cast<int>(i), cur);
          point(id, static_cast<int16_t>(i), cur + 1);
          ++cur;
        }
        return;
      }
      case NodeKind::NewObject: {
        point(id, -1, d);
        uint16_t cur = d;
        for (size_t i = 0; i < n.children.size(); ++i) {
          plan_expr(n.children[i], id, static_cast<int>(i), cur);
          point(id, static_cast<int16_t>(i), cur + 1);
          ++cur;
        }
        return;
      }
      case NodeKind::NewArray:
        point(id, -1, d);
        plan_expr(n.children[0], id, 0, d);
        point(id, 0, d + 1);
        return;
      case NodeKind::Cast:
      case NodeKind::Unary:
        point(id, -1, d);
        plan_expr(n.children[0], id, 0, d);
        point(id, 0, d + 1);
        return;
      case NodeKind::Binary: {
        point(id, -1, d);
        bool shortcut = n.text == "&&" || n.text == "||";
        plan_expr(n.children[0], id, 0, d);
        point(id, 0, d + 1);
        // short-circuit pops the left operand before evaluating the right
        uint16_t rd = shortcut ? d : static_cast<uint16_t>(d + 1);
        plan_expr(n.children[1], id, 1, rd);
        point(id, 1, rd + 1);
        return;
      }
      default:
        assert(false && "statement in expression position");
        return;
    }
  }

  void plan_stmt(NodeId id, NodeId parent, int idx) {
    attach(id, parent, idx);
    const AstNode& n = node(id);
    switch (n.kind) {
      case NodeKind::Block:
        point(id, -1, 0);
        for (size_t i = 0; i < n.children.size(); ++i) {
          plan_stmt(n.children[i], id, static_cast<int>(i));
          point(id, static_cast<int16_t>(i), 0);
        }
        return;
      case NodeKind::VarDeclStmt:
        point(id, -1, 0);
        if (!n.children.empty()) {
          plan_expr(n.children[0], id, 0, 0);
          point(id, 0, 1);
        }
        return;
      case NodeKind::AssignStmt: {
        point(id, -1, 0);
        NodeId lv = n.children[0];
        NodeId rhs = n.children[1];
        const AstNode& lvn = node(lv);
        attach(lv, id, 0);
        uint16_t d = 0;
        if (lvn.kind == NodeKind::FieldGet && binding(lv).qual_class != kNoClass) {
          attach(lvn.children[0], lv, 0); // class qualifier; never evaluated
        } else if (lvn.kind == NodeKind::FieldGet) {
          plan_expr(lvn.children[0], lv, 0, d);
          point(lv, 0, d + 1);
          ++d;
        } else if (lvn.kind == NodeKind::Index) {
          plan_expr(lvn.children[0], lv, 0, d);
          point(lv, 0, d + 1);
          ++d;
          plan_expr(lvn.children[1], lv, 1, d);
          point(lv, 1, d + 1);
          ++d;
        }
        plan_expr(rhs, id, 1, d);
        point(id, 1, d + 1);
        return;
      }
      case NodeKind::ExprStmt:
        point(id, -1, 0);
        plan_expr(n.children[0], id, 0, 0);
        point(id, 0, 1);
        return;
      case NodeKind::IfStmt:
        point(id, -1, 0);
        plan_expr(n.children[0], id, 0, 0);
        point(id, 0, 1);
        plan_stmt(n.children[1], id, 1);
        point(id, 1, 0);
        if (n.children.size() > 2) {
          plan_stmt(n.children[2], id, 2);
          point(id, 2, 0);
        }
        return;
      case NodeKind::WhileStmt:
        point(id, -1, 0);
        plan_expr(n.children[0], id, 0, 0);
        point(id, 0, 1);
        plan_stmt(n.children[1], id, 1);
        point(id, 1, 0);
        return;
      case NodeKind::ReturnStmt:
        point(id, -1, 0);
        if (!n.children.empty()) {
          plan_expr(n.children[0], id, 0, 0);
          point(id, 0, 1);
        }
        return;
      case NodeKind::ThrowStmt:
        point(id, -1, 0);
        plan_expr(n.children[0], id, 0, 0);
        point(id, 0, 1);
        return;
      case NodeKind::TryStmt: {
        point(id, -1, 0);
        tries_.push_back(id);
        plan_stmt(n.children[0], id, 0);
        tries_.pop_back();
        point(id, 0, 0);
        for (size_t i = 1; i < n.children.size(); ++i) {
          plan_stmt(n.children[i], id, static_cast<int>(i));
          point(id, static_cast<int16_t>(i), 0);
        }
        return;
      }
      case NodeKind::CatchClause:
        point(id, -1, 0);
        plan_stmt(n.children[0], id, 0);
        point(id, 0, 0);
        return;
      case NodeKind::EventStmt:
        point(id, -1, 0);
        return;
      default:
        // expression in statement position should not reach the planner
        assert(false && "unexpected statement kind");
        return;
    }
  }
};

MethodPlan MethodPlan::build(const BoundProgram& prog, const MjFile& file, const MethodInfo& mi) {
  MethodPlan plan;
  PlanBuilder builder(prog, file, mi, plan);
  builder.run();
  return plan;
}

int MethodPlan::completion_ordinal(NodeId n) const {
  NodeId p = parents_[n];
  if (p == kNoNode) return kExitOrdinal;
  int idx = child_index_[n];
  int ord = ordinal({p, static_cast<int16_t>(idx)});
  assert(ord >= 0 && "every evaluated child has an after point");
  return ord;
}

const std::vector<NodeId>& MethodPlan::try_chain(NodeId n) const {
  return try_chains_[try_chain_id_[n]];
}

std::string MethodPlan::point_path(ProgramPoint pt) const {
  std::vector<int> rev;
  NodeId n = pt.node;
  while (parents_[n] != kNoNode) {
    rev.push_back(child_index_[n]);
    n = parents_[n];
  }
  std::string path = "m";
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
    path += "." + std::to_string(*it);
  }
  if (pt.after >= 0) path += ":a" + std::to_string(pt.after);
  return path;
}

} // namespace mjflow
