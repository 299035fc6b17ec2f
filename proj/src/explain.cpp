#include <mjflow/explain.hpp>

#include <algorithm>
#include <deque>
#include <map>

#include <mjflow/interp.hpp>

namespace mjflow {

namespace {

struct WorkItem {
  CallId call;
  int ordinal;
  ExplContext ctx;
  int parent; // node id to attach to
  std::string kind;
  std::string desc;
};

class Explainer {
 public:
  Explainer(Engine& eng, size_t cap) : eng_(eng), prog_(*eng.program()), cap_(cap) {
    eng_.for_each_call([&](Call* c) {
      if (c->dead) return;
      std::lock_guard lock(c->mu);
      for (const Site& s : c->callers) callees_[{s.call, s.ordinal}].push_back(c);
    });
  }

  ExplanationGraph run(const Problem& p) {
    Call* c = eng_.call_by_id(p.call);
    graph_.error_id = p.id;

    ExplNode err;
    err.id = 0;
    err.kind = "error";
    err.desc = p.message;
    err.call = p.call;
    err.point = p.point;
    err.ordinal = p.ordinal;
    err.method = p.method;
    graph_.nodes.push_back(err);

    ExplContext ctx;
    if (p.kind == ProblemKind::Subtype) {
      ctx.safety = false;
      ctx.lattice = p.lattice;
      ctx.member = p.member;
      ctx.loc = p.loc;
    } else {
      ctx.safety = true;
      ctx.automaton = p.automaton;
      ctx.state = p.from_state; // walk the state that allowed the transition
    }
    if (!c) {
      graph_.nodes[0].start = true;
      return std::move(graph_);
    }
    expand(c, p.ordinal, ctx, 0);
    drain();

    // a node with no outgoing edges is a starting point
    std::vector<int> outdeg(graph_.nodes.size(), 0);
    for (const ExplEdge& e : graph_.edges) ++outdeg[e.from];
    for (ExplNode& n : graph_.nodes) {
      if (outdeg[n.id] == 0) n.start = true;
    }
    return std::move(graph_);
  }

 private:
  Engine& eng_;
  BoundProgram& prog_;
  size_t cap_;
  ExplanationGraph graph_;
  std::map<std::tuple<CallId, int, ExplContext>, int> visited_;
  std::deque<WorkItem> queue_;
  std::map<std::pair<CallId, int32_t>, std::vector<Call*>> callees_;

  const SubtypeLattice& lattice(const ExplContext& ctx) const {
    return eng_.config().lattices[ctx.lattice];
  }

  void drain() {
    while (!queue_.empty()) {
      WorkItem item = queue_.front();
      queue_.pop_front();
      process(item);
    }
  }

  void enqueue(Call* c, int ordinal, const ExplContext& ctx, int parent, std::string kind,
               std::string desc) {
    queue_.push_back({c->id, ordinal, ctx, parent, std::move(kind), std::move(desc)});
  }

  void edge(int from, int to, const std::string& label) {
    graph_.edges.push_back({from, to, label});
  }

  void process(const WorkItem& item) {
    auto key = std::tuple(item.call, item.ordinal, item.ctx);
    auto it = visited_.find(key);
    if (it != visited_.end()) {
      if (it->second != item.parent) edge(item.parent, it->second, item.kind);
      return;
    }
    Call* c = eng_.call_by_id(item.call);
    if (!c || c->dead || !c->plan) return;

    // plain context flow creates no graph node; the context just moves
    if (item.kind == "flow") {
      visited_[key] = item.parent;
      expand(c, item.ordinal, item.ctx, item.parent);
      return;
    }
    if (graph_.nodes.size() >= cap_) {
      graph_.truncated = true;
      return;
    }
    ExplNode n;
    n.id = static_cast<int>(graph_.nodes.size());
    n.kind = item.kind;
    n.desc = item.desc;
    n.call = item.call;
    n.ordinal = item.ordinal;
    n.point = c->plan->info(item.ordinal).pt;
    n.method = c->method;
    n.ctx = item.ctx;
    graph_.nodes.push_back(n);
    visited_[key] = n.id;
    edge(item.parent, n.id, item.kind);
    expand(c, item.ordinal, item.ctx, n.id);
  }

  // ---- relevance ----

  const Value* value_at(const StateRef& st, const ValueLoc& loc) const {
    if (!st) return nullptr;
    if (loc.kind == ValueLoc::Kind::Stack) {
      if (static_cast<size_t>(loc.index) >= st->stack.size()) return nullptr;
      return st->stack[loc.index];
    }
    if (loc.kind == ValueLoc::Kind::Local) {
      if (static_cast<size_t>(loc.index) >= st->locals.size()) return nullptr;
      return st->locals[loc.index];
    }
    return nullptr;
  }

  bool member_relevant(const ExplContext& ctx, const Value* v) const {
    return v && v->members[ctx.lattice] == ctx.member;
  }

  // an operand can explain the result when it carries the same member or an
  // operation rule turned its member into the result member
  std::optional<uint8_t> operand_member(const ExplContext& ctx, const Value* v,
                                        OpCategory cat) const {
    if (!v) return std::nullopt;
    uint8_t m = v->members[ctx.lattice];
    if (m == ctx.member) return m;
    const SubtypeLattice& lat = lattice(ctx);
    for (const auto& rule : lat.op_rules) {
      if (!rule.any_op && rule.op != cat) continue;
      if (rule.trigger == m && rule.result == ctx.member) return m;
    }
    return std::nullopt;
  }

  // ---- expansion ----

  void expand(Call* c, int ordinal, const ExplContext& ctx, int node) {
    if (graph_.truncated) return;
    if (ordinal == 0) {
      expand_entry(c, ctx, node);
      return;
    }
    std::set<int32_t> preds;
    {
      std::lock_guard lock(c->mu);
      if (static_cast<size_t>(ordinal) < c->preds.size()) preds = c->preds[ordinal];
    }
    for (int32_t p : preds) {
      if (ctx.safety) {
        expand_safety_pred(c, p, ctx, node);
      } else {
        expand_subtype_pred(c, p, ctx, node);
      }
    }
  }

  void expand_entry(Call* c, const ExplContext& ctx, int node) {
    const MethodInfo& mi = prog_.methods[c->method];
    std::set<Site> callers;
    {
      std::lock_guard lock(c->mu);
      callers = c->callers;
    }
    if (callers.empty()) return; // program entry: a start node

    // the entry itself is one node; caller sites hang off it
    if (graph_.nodes.size() >= cap_) {
      graph_.truncated = true;
      return;
    }
    ExplNode entry;
    entry.id = static_cast<int>(graph_.nodes.size());
    entry.kind = "method-entry";
    entry.desc = "entry of " + prog_.method_signature(c->method);
    entry.call = c->id;
    entry.ordinal = 0;
    entry.point = c->plan->info(0).pt;
    entry.method = c->method;
    entry.ctx = ctx;
    graph_.nodes.push_back(entry);
    edge(node, entry.id, "method-entry");
    node = entry.id;

    for (const Site& site : callers) {
      Call* caller = eng_.call_by_id(site.call);
      if (!caller || caller->dead || !caller->plan) continue;
      StateRef st = eng_.point_state(caller, site.ordinal);
      if (!st) continue;

      if (ctx.safety) {
        if (static_cast<size_t>(ctx.automaton) < st->automata.size() &&
            (st->automata[ctx.automaton] & (1ull << ctx.state))) {
          enqueue(caller, site.ordinal, ctx, node, "call",
                  "call of " + prog_.method_signature(c->method));
        }
        continue;
      }

      if (ctx.loc.kind != ValueLoc::Kind::Local) continue;
      // map the parameter slot to the caller's argument position
      const PointInfo& pi = caller->plan->info(site.ordinal);
      const AstNode& cn = caller->plan->file->node(pi.pt.node);
      const NodeBinding& cb = prog_.binding(caller->plan->file, pi.pt.node);
      size_t first_arg = 0;
      bool has_value_base = false;
      if (cn.kind == NodeKind::CallExpr) {
        bool is_super = (cn.flags & kFlagSuperCall) != 0;
        if ((cn.flags & kFlagHasBase) && !is_super) {
          first_arg = 1;
          has_value_base = cb.qual_class == kNoClass;
        }
      }
      size_t argc = cn.children.size() - first_arg;
      if (argc > st->stack.size()) continue;
      size_t base = st->stack.size() - argc;
      ValueLoc from;
      int slot = ctx.loc.index;
      int first_param = mi.first_param_slot();
      if (!mi.is_static && slot == 0) {
        if (has_value_base) {
          from = {ValueLoc::Kind::Stack, static_cast<int>(base) - 1};
        } else {
          from = {ValueLoc::Kind::Local, 0};
        }
      } else if (slot >= first_param &&
                 slot < first_param + static_cast<int>(mi.params.size())) {
        from = {ValueLoc::Kind::Stack, static_cast<int>(base) + (slot - first_param)};
      } else {
        continue; // non-parameter local: defaults at entry, a start
      }
      ExplContext nctx = ctx;
      nctx.loc = from;
      if (member_relevant(nctx, value_at(st, from))) {
        enqueue(caller, site.ordinal, nctx, node, "call",
                "argument in call of " + prog_.method_signature(c->method));
      }
    }
  }

  void expand_safety_pred(Call* c, int pred, const ExplContext& ctx, int node) {
    StateRef st = eng_.point_state(c, pred);
    if (!st || static_cast<size_t>(ctx.automaton) >= st->automata.size()) return;
    uint64_t bits = st->automata[ctx.automaton];
    if (bits & (1ull << ctx.state)) {
      enqueue(c, pred, ctx, node, "flow", "");
      return;
    }
    // the state must have been produced by a transition at this point
    const AutomatonDef& aut = eng_.config().automata[ctx.automaton];
    const PointInfo& pi = c->plan->info(pred);
    const AstNode& n = c->plan->file->node(pi.pt.node);
    int event = -1;
    if (n.kind == NodeKind::EventStmt) {
      event = eng_.config().event_index(n.text);
      if (event < 0) return;
    } else if (n.kind == NodeKind::CallExpr || n.kind == NodeKind::NewObject) {
      event = -2; // a model-bound event may fire here; scan all events
    } else {
      return;
    }
    for (size_t s = 0; s < aut.states.size(); ++s) {
      if (!(bits & (1ull << s))) continue;
      bool hits = false;
      std::string ev_name;
      if (event >= 0) {
        const auto& tr = aut.transition(static_cast<uint8_t>(s), event);
        hits = tr.present && tr.to == ctx.state;
        if (hits) ev_name = eng_.config().event_names[event];
      } else {
        for (size_t e = 0; e < eng_.config().event_names.size(); ++e) {
          const auto& tr = aut.transition(static_cast<uint8_t>(s), e);
          if (tr.present && tr.to == ctx.state) {
            hits = true;
            ev_name = eng_.config().event_names[e];
            break;
          }
        }
      }
      if (!hits) continue;
      if (s == aut.initial) {
        // ground state: record the transition; the walk stops here
        enqueue(c, pred, ctx, node, "event-transition",
                "event '" + ev_name + "' from initial state " + aut.states[s]);
      } else {
        ExplContext nctx = ctx;
        nctx.state = static_cast<uint8_t>(s);
        enqueue(c, pred, nctx, node, "event-transition",
                "event '" + ev_name + "' from state " + aut.states[s]);
      }
    }
  }

  // auxiliary store sites for a field: every recorded write, tracking the
  // stored value on the writer's stack
  void field_store_aux(FieldId f, const ExplContext& ctx, int node) {
    std::set<Site> writers;
    eng_.field_writer_sites(f, &writers);
    aux_stores(writers, ctx, node, "store of field " + prog_.syms->field_key(f));
  }

  void source_store_aux(const Value* base, const ExplContext& ctx, int node,
                        const std::string& what) {
    std::set<Site> writers;
    if (base) {
      for (Source* s : base->sources->items) {
        std::lock_guard lock(s->mu);
        writers.insert(s->writers.begin(), s->writers.end());
      }
    }
    aux_stores(writers, ctx, node, what);
  }

  void aux_stores(const std::set<Site>& writers, const ExplContext& ctx, int node,
                  const std::string& what) {
    for (const Site& w : writers) {
      Call* wc = eng_.call_by_id(w.call);
      if (!wc || wc->dead || !wc->plan) continue;
      StateRef wst = eng_.point_state(wc, w.ordinal);
      if (!wst) continue;
      const PointInfo& pi = wc->plan->info(w.ordinal);
      const AstNode& n = wc->plan->file->node(pi.pt.node);
      // locate the stored value on the writer's stack
      std::vector<int> positions;
      if (n.kind == NodeKind::AssignStmt || n.kind == NodeKind::VarDeclStmt) {
        positions.push_back(static_cast<int>(wst->stack.size()) - 1);
      } else if (n.kind == NodeKind::CallExpr) {
        // prototype mutators: add(v) / put(k,v) / append(s)
        size_t first_arg = (n.flags & kFlagHasBase) ? 1 : 0;
        size_t argc = n.children.size() - first_arg;
        if (argc <= wst->stack.size()) {
          size_t base_pos = wst->stack.size() - argc;
          if (n.text == "add" || n.text == "append") {
            positions.push_back(static_cast<int>(base_pos));
          } else if (n.text == "put" && argc >= 2) {
            positions.push_back(static_cast<int>(base_pos) + 1);
          }
        }
      }
      for (int pos : positions) {
        if (pos < 0) continue;
        ExplContext nctx = ctx;
        nctx.loc = {ValueLoc::Kind::Stack, pos};
        if (member_relevant(nctx, value_at(wst, nctx.loc))) {
          enqueue(wc, w.ordinal, nctx, node, "store", what);
        }
      }
    }
  }

  void expand_subtype_pred(Call* c, int pred, const ExplContext& ctx, int node) {
    StateRef st = eng_.point_state(c, pred);
    if (!st) return;
    const PointInfo& pi = c->plan->info(pred);
    const AstNode& n = c->plan->file->node(pi.pt.node);
    const MjFile* file = c->plan->file;
    const NodeBinding& b = prog_.binding(file, pi.pt.node);
    SymbolTable& syms = *prog_.syms;

    size_t pred_depth = st->stack.size();
    auto same_loc_if_relevant = [&](const char* kind, const std::string& desc) {
      if (member_relevant(ctx, value_at(st, ctx.loc))) {
        enqueue(c, pred, ctx, node, kind, desc);
      }
    };

    switch (n.kind) {
      case NodeKind::IntLit:
      case NodeKind::StringLit:
      case NodeKind::BoolLit:
      case NodeKind::NullLit: {
        if (ctx.loc.kind == ValueLoc::Kind::Stack &&
            ctx.loc.index == static_cast<int>(pred_depth)) {
          // constant origin: the walk stops here
          if (lattice(ctx).default_constant == ctx.member) {
            enqueue(c, pred, ctx, node, "compute", "constant");
          }
          return;
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::This: {
        if (ctx.loc.kind == ValueLoc::Kind::Stack &&
            ctx.loc.index == static_cast<int>(pred_depth)) {
          ExplContext nctx = ctx;
          nctx.loc = {ValueLoc::Kind::Local, 0};
          if (member_relevant(nctx, value_at(st, nctx.loc))) {
            enqueue(c, pred, nctx, node, "load", "load of this");
          }
          return;
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::VarRef: {
        if (ctx.loc.kind == ValueLoc::Kind::Stack &&
            ctx.loc.index == static_cast<int>(pred_depth)) {
          if (b.slot >= 0) {
            ExplContext nctx = ctx;
            nctx.loc = {ValueLoc::Kind::Local, b.slot};
            if (member_relevant(nctx, value_at(st, nctx.loc))) {
              enqueue(c, pred, nctx, node, "load", "load of " + n.text);
            }
          } else if (b.field != kNoField) {
            field_store_aux(b.field, ctx, node);
          }
          return;
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::FieldGet: {
        NodeId parent = c->plan->parent(pi.pt.node);
        if (parent != kNoNode && file->node(parent).kind == NodeKind::AssignStmt &&
            c->plan->child_index(pi.pt.node) == 0) {
          same_loc_if_relevant("flow", ""); // assignment target, not a load
          return;
        }
        bool is_load_completion = (b.qual_class != kNoClass && pi.pt.after < 0) ||
                                  (b.qual_class == kNoClass && pi.pt.after == 0);
        if (is_load_completion) {
          int created = b.qual_class != kNoClass ? static_cast<int>(pred_depth)
                                                 : static_cast<int>(pred_depth) - 1;
          if (ctx.loc.kind == ValueLoc::Kind::Stack && ctx.loc.index == created) {
            if (b.array_length) return;
            field_store_aux(b.field, ctx, node);
            return;
          }
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::Index: {
        NodeId iparent = c->plan->parent(pi.pt.node);
        if (iparent != kNoNode && file->node(iparent).kind == NodeKind::AssignStmt &&
            c->plan->child_index(pi.pt.node) == 0) {
          same_loc_if_relevant("flow", "");
          return;
        }
        if (pi.pt.after == 1 && pred_depth >= 2) {
          int created = static_cast<int>(pred_depth) - 2;
          if (ctx.loc.kind == ValueLoc::Kind::Stack && ctx.loc.index == created) {
            const Value* base = st->stack[pred_depth - 2];
            source_store_aux(base, ctx, node, "store of array element");
            return;
          }
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::Unary:
      case NodeKind::Cast: {
        if (pi.pt.after == 0 && pred_depth >= 1 && ctx.loc.kind == ValueLoc::Kind::Stack &&
            ctx.loc.index == static_cast<int>(pred_depth) - 1) {
          const Value* operand = st->stack[pred_depth - 1];
          if (n.kind == NodeKind::Cast) {
            if (member_relevant(ctx, operand)) enqueue(c, pred, ctx, node, "compute", "cast");
            return;
          }
          OpCategory cat = n.text == "!" ? OpCategory::Logic : OpCategory::Arith;
          if (auto m = operand_member(ctx, operand, cat)) {
            ExplContext nctx = ctx;
            nctx.member = *m;
            enqueue(c, pred, nctx, node, "compute", "operator " + n.text);
          }
          return;
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::Binary: {
        bool shortcut = n.text == "&&" || n.text == "||";
        if (!shortcut && pi.pt.after == 1 && pred_depth >= 2 &&
            ctx.loc.kind == ValueLoc::Kind::Stack &&
            ctx.loc.index == static_cast<int>(pred_depth) - 2) {
          bool concat = n.text == "+" && syms.type(b.type).kind == TypeKind::String;
          OpCategory cat = concat ? OpCategory::Concat
                                  : ((n.text == "+" || n.text == "-" || n.text == "*" ||
                                      n.text == "/" || n.text == "%")
                                         ? OpCategory::Arith
                                         : OpCategory::Compare);
          // both operands are candidate origins; the second operand is the
          // operation's auxiliary point
          const Value* l = st->stack[pred_depth - 2];
          const Value* r = st->stack[pred_depth - 1];
          if (auto m = operand_member(ctx, l, cat)) {
            ExplContext nctx = ctx;
            nctx.member = *m;
            nctx.loc = {ValueLoc::Kind::Stack, static_cast<int>(pred_depth) - 2};
            enqueue(c, pred, nctx, node, "compute", "operator " + n.text);
          }
          if (auto m = operand_member(ctx, r, cat)) {
            ExplContext nctx = ctx;
            nctx.member = *m;
            nctx.loc = {ValueLoc::Kind::Stack, static_cast<int>(pred_depth) - 1};
            enqueue(c, pred, nctx, node, "compute", "operator " + n.text);
          }
          return;
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::AssignStmt: {
        if (pi.pt.after == 1 && pred_depth >= 1) {
          const NodeBinding& lb = prog_.binding(file, n.children[0]);
          const AstNode& lvn = file->node(n.children[0]);
          if (lvn.kind == NodeKind::VarRef && lb.slot >= 0 &&
              ctx.loc.kind == ValueLoc::Kind::Local && ctx.loc.index == lb.slot) {
            ExplContext nctx = ctx;
            nctx.loc = {ValueLoc::Kind::Stack, static_cast<int>(pred_depth) - 1};
            if (member_relevant(nctx, value_at(st, nctx.loc))) {
              enqueue(c, pred, nctx, node, "store", "store into " + lvn.text);
            }
            return;
          }
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::VarDeclStmt: {
        if (pi.pt.after == 0 && pred_depth >= 1 && ctx.loc.kind == ValueLoc::Kind::Local &&
            ctx.loc.index == b.slot) {
          ExplContext nctx = ctx;
          nctx.loc = {ValueLoc::Kind::Stack, static_cast<int>(pred_depth) - 1};
          if (member_relevant(nctx, value_at(st, nctx.loc))) {
            enqueue(c, pred, nctx, node, "store", "store into " + n.text);
          }
          return;
        }
        if (pi.pt.after < 0 && ctx.loc.kind == ValueLoc::Kind::Local &&
            ctx.loc.index == b.slot && n.children.empty()) {
          return; // default-initialized: origin lost, a start
        }
        same_loc_if_relevant("flow", "");
        return;
      }
      case NodeKind::CallExpr:
      case NodeKind::NewObject: {
        if (!invoke_point(n, b, pi.pt)) {
          same_loc_if_relevant("flow", "");
          return;
        }
        expand_call_pred(c, pred, st, n, b, ctx, node);
        return;
      }
      default:
        same_loc_if_relevant("flow", "");
        return;
    }
  }

  bool invoke_point(const AstNode& n, const NodeBinding& b, ProgramPoint pt) const {
    size_t first_eval = 0;
    if (n.kind == NodeKind::CallExpr && (n.flags & kFlagHasBase) &&
        !(n.flags & kFlagSuperCall) && b.qual_class != kNoClass) {
      first_eval = 1;
    }
    bool no_children = n.children.size() <= first_eval;
    if (no_children) return pt.after < 0;
    return pt.after == static_cast<int>(n.children.size()) - 1;
  }

  void expand_call_pred(Call* c, int pred, const StateRef& st, const AstNode& n,
                        const NodeBinding& b, const ExplContext& ctx, int node) {
    SymbolTable& syms = *prog_.syms;
    bool is_new = n.kind == NodeKind::NewObject;
    bool is_super = (n.flags & kFlagSuperCall) != 0;
    size_t first_arg = (!is_new && (n.flags & kFlagHasBase) && !is_super) ? 1 : 0;
    size_t argc = n.children.size() - first_arg;
    bool has_value_base =
        !is_new && (n.flags & kFlagHasBase) && !is_super && b.qual_class == kNoClass;
    size_t consumed = argc + (has_value_base ? 1 : 0);
    if (consumed > st->stack.size()) return;
    size_t base_pos = st->stack.size() - consumed; // result lands here

    if (!(ctx.loc.kind == ValueLoc::Kind::Stack &&
          ctx.loc.index == static_cast<int>(base_pos))) {
      // the call result is not what we track; the location is unchanged
      if (member_relevant(ctx, value_at(st, ctx.loc))) {
        enqueue(c, pred, ctx, node, "flow", "");
      }
      return;
    }

    if (is_new) return; // allocation origin: a start

    // analyzed callees whose return is relevant are entered at their return
    // points; irrelevant calls are ignored
    auto ck = callees_.find({c->id, pred});
    if (ck != callees_.end()) {
      for (Call* callee : ck->second) {
        if (callee->dead || prog_.methods[callee->method].is_ctor) continue;
        const Value* rv;
        {
          std::lock_guard lock(callee->mu);
          rv = callee->has_returned ? callee->return_value : nullptr;
        }
        if (!rv || !member_relevant(ctx, rv)) continue;
        descend_returns(callee, ctx, node);
      }
    }

    // modeled targets act as sources (fixed member) or as operations over
    // their arguments; prototype reads lead to the container's store sites
    MethodId target = b.direct;
    if (target == kNoMethod && b.tgt_begin < b.tgt_end) {
      target = prog_.virtual_targets[b.tgt_begin];
    }
    if (target == kNoMethod) return;
    const MethodInfo& mi = prog_.methods[target];
    EffectiveModel em = eng_.config().resolve_model(syms.class_name(mi.owner), mi.name,
                                                    mi.is_native, mi.is_static);
    if (mi.builtin) {
      const Value* basev = has_value_base ? st->stack[base_pos] : nullptr;
      source_store_aux(basev, ctx, node, "store into " + syms.class_name(mi.owner));
      return;
    }
    if (em.ignore || !mi.has_body()) {
      std::optional<uint8_t> fixed_member;
      auto fixed = em.return_fixed.find(ctx.lattice);
      if (fixed != em.return_fixed.end()) {
        fixed_member = fixed->second;
      } else {
        for (const AnnotationReq& a : mi.return_annotations) {
          if (a.lattice == ctx.lattice) fixed_member = a.member;
        }
      }
      if (fixed_member) {
        if (*fixed_member == ctx.member) {
          enqueue(c, pred, ctx, node, "compute",
                  "value produced by model of " + prog_.method_signature(target));
        }
        return;
      }
      // from-args: each input is an auxiliary operand
      for (size_t i = 0; i < argc; ++i) {
        ExplContext nctx = ctx;
        nctx.loc = {ValueLoc::Kind::Stack,
                    static_cast<int>(base_pos + (has_value_base ? 1 : 0) + i)};
        if (member_relevant(nctx, value_at(st, nctx.loc))) {
          enqueue(c, pred, nctx, node, "compute",
                  "argument of " + prog_.method_signature(target));
        }
      }
      if (has_value_base) {
        ExplContext nctx = ctx;
        nctx.loc = {ValueLoc::Kind::Stack, static_cast<int>(base_pos)};
        if (member_relevant(nctx, value_at(st, nctx.loc))) {
          enqueue(c, pred, nctx, node, "compute",
                  "receiver of " + prog_.method_signature(target));
        }
      }
    }
  }

  void descend_returns(Call* callee, const ExplContext& ctx, int node) {
    if (!callee->plan) return;
    const MethodPlan* plan = callee->plan;
    const MjFile* file = plan->file;
    for (size_t ord = 0; ord < plan->size(); ++ord) {
      const PointInfo& pi = plan->info(static_cast<int>(ord));
      const AstNode& n = file->node(pi.pt.node);
      if (n.kind != NodeKind::ReturnStmt || n.children.empty() || pi.pt.after != 0) continue;
      StateRef st = eng_.point_state(callee, static_cast<int>(ord));
      if (!st || st->stack.empty()) continue;
      ExplContext nctx = ctx;
      nctx.loc = {ValueLoc::Kind::Stack, static_cast<int>(st->stack.size()) - 1};
      if (member_relevant(nctx, value_at(st, nctx.loc))) {
        enqueue(callee, static_cast<int>(ord), nctx, node, "return",
                "return from " + prog_.method_signature(callee->method));
      }
    }
  }
};

} // namespace

ExplainOutcome explain(Engine& engine, const std::string& problem_id,
                       uint64_t expected_generation, size_t node_cap) {
  ExplainOutcome out;
  if (engine.generation() != expected_generation) {
    out.error = "stale analysis result";
    return out;
  }
  std::vector<Problem> problems = engine.collect_problems();
  const Problem* found = nullptr;
  for (const Problem& p : problems) {
    if (p.id == problem_id) found = &p;
  }
  if (!found) {
    out.error = "unknown problem id";
    return out;
  }
  Explainer ex(engine, node_cap);
  out.graph = ex.run(*found);
  out.ok = true;
  return out;
}

PathEnumerator::PathEnumerator(const ExplanationGraph& graph) : graph_(graph) {
  children_.resize(graph.nodes.size());
  for (const ExplEdge& e : graph.edges) children_[e.from].push_back(e.to);
  for (auto& c : children_) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  if (!graph.nodes.empty()) {
    stack_.push_back({0, 0});
  } else {
    done_ = true;
  }
}

bool PathEnumerator::at_leaf() const {
  int n = stack_.back().node;
  if (children_[n].empty()) return true;
  // edges that only close cycles do not extend paths
  for (int ch : children_[n]) {
    bool on_path = false;
    for (const Frame& f : stack_) {
      if (f.node == ch) on_path = true;
    }
    if (!on_path) return false;
  }
  return true;
}

std::optional<std::vector<int>> PathEnumerator::next() {
  while (!done_) {
    if (at_leaf()) {
      std::vector<int> path;
      path.reserve(stack_.size());
      for (const Frame& f : stack_) path.push_back(f.node);
      advance();
      return path;
    }
    Frame& top = stack_.back();
    bool moved = false;
    while (top.child < children_[top.node].size()) {
      int ch = children_[top.node][top.child];
      bool on_path = false;
      for (const Frame& f : stack_) {
        if (f.node == ch) on_path = true;
      }
      if (on_path) {
        ++top.child;
        continue;
      }
      stack_.push_back({ch, 0});
      moved = true;
      break;
    }
    if (!moved) advance();
  }
  return std::nullopt;
}

void PathEnumerator::advance() {
  while (!stack_.empty()) {
    stack_.pop_back();
    if (stack_.empty()) {
      done_ = true;
      return;
    }
    Frame& top = stack_.back();
    ++top.child;
    while (top.child < children_[top.node].size()) {
      int ch = children_[top.node][top.child];
      bool on_path = false;
      for (const Frame& f : stack_) {
        if (f.node == ch) on_path = true;
      }
      if (on_path) {
        ++top.child;
        continue;
      }
      stack_.push_back({ch, 0});
      return;
    }
  }
  done_ = true;
}

} // namespace mjflow
