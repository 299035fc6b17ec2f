#pragma once

#include <mjflow/engine.hpp>

namespace mjflow {

// Abstract interpretation of a single program point inside one call: per-node
// transfer functions, invocation dispatch, model handling, and exception
// routing. Stateless between steps; all effects flow through the engine.
class Interp {
 public:
  Interp(Engine& engine, Call* call);

  StepResult step(int ordinal, const ProgramState& st);

 private:
  Engine& eng_;
  Call* call_;
  const MethodPlan* plan_;
  const MjFile* file_;
  const MethodInfo* method_;
  BoundProgram* prog_;
  ValueStore& store_;
  StepResult result_;
  int ord_ = 0;

  const AstNode& node(NodeId n) const { return file_->node(n); }
  const NodeBinding& binding(NodeId n) const { return prog_->binding(file_, n); }
  Site here() const { return {call_->id, ord_}; }

  // successor plumbing
  void to_point(int ordinal, ProgramState st);
  void descend(NodeId child, ProgramState st);
  void complete(NodeId n, ProgramState st);
  void method_exit(ProgramState st);

  // problems
  std::string problem_id(ProblemKind kind, const std::string& name, const std::string& detail,
                         ProgramPoint pt) const;
  void subtype_problems(const RestrictOutcome& rc, ProgramPoint pt, ValueLoc loc);
  void automaton_problems(const std::vector<AutomatonErrorHit>& hits, ProgramPoint pt);

  // field/array helpers
  bool source_is_arbitrary(const Source* s) const { return s->kind != SourceKind::Allocation; }
  const Value* read_instance_field(const Value* base, FieldId f);
  void write_instance_field(const Value* base, FieldId f, const Value* v);
  const Value* read_array_element(const Value* base, const Value* index, TypeRef elem);
  void write_array_element(const Value* base, const Value* index, const Value* v);

  // invocation machinery
  void do_invocation(NodeId call_node, ProgramPoint pt, ProgramState st);
  void do_new_object(NodeId new_node, ProgramPoint pt, ProgramState st);
  struct DispatchOutcome {
    const Value* ret = nullptr;
    bool have_fallthrough = false;      // a model/prototype path falls through
    bool any_returned = false;          // an analyzed callee has returned
    bool any_analyzed = false;
    bool keep_current_automata = false; // model paths keep the caller's set
    std::vector<uint64_t> returned_automata;
    std::vector<std::string> events;    // model-bound events to apply
  };
  // dispatches one resolved target; merges its contribution into `out`
  void dispatch_target(MethodId target, const Value* recv, std::vector<const Value*>& args,
                       ProgramPoint pt, const ProgramState& st, DispatchOutcome& out,
                       int memo_tag);
  const Value* model_return_value(MethodId target, const EffectiveModel& em,
                                  const Value* recv, const std::vector<const Value*>& args,
                                  ProgramPoint pt, int memo_tag);
  void run_callbacks(const EffectiveModel& em, const std::vector<const Value*>& args,
                     const ProgramState& st, ProgramPoint pt, int memo_tag);
  std::vector<const Value*> restricted_args(MethodId target, const EffectiveModel& em,
                                            std::vector<const Value*> args, ProgramPoint pt,
                                            size_t stack_base);
  void route_exception(NodeId at_node, const ProgramState& st, TypeRef declared,
                       const Value* exc, const std::vector<uint64_t>& automata);

  // prototype dispatch (prototypes.cpp)
  struct ProtoOutcome {
    const Value* ret = nullptr; // nullptr: returns the receiver
    bool changed = false;
  };
  ProtoOutcome proto_call(Source* s, const std::string& method,
                          const std::vector<const Value*>& args);
  void ensure_proto(Source* s);

  // branch refinement; false when the branch is infeasible
  bool refine(ProgramState& st, NodeId cond, bool branch);
  const Value* operand_value(const ProgramState& st, NodeId n) const;
  void refine_local_nonnull(ProgramState& st, NodeId base_expr);
};

} // namespace mjflow
