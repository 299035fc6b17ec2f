#pragma once

#include <map>
#include <memory>

#include "support/corpus.hpp"

namespace mjflow::test {

// A concrete MJ value for the reference evaluator.
struct CVal {
  enum class Kind { Null, Int, Bool, Str, Obj, Arr, List, Map, Sb } kind = Kind::Null;
  int64_t i = 0;
  bool b = false;
  std::string s;
  std::shared_ptr<struct CObj> obj;
  std::shared_ptr<struct CArr> arr;
  std::shared_ptr<struct CList> list;
  std::shared_ptr<struct CMap> map;
  std::shared_ptr<struct CSb> sb;

  static CVal of_int(int64_t v) {
    CVal c;
    c.kind = Kind::Int;
    c.i = v;
    return c;
  }
  static CVal of_bool(bool v) {
    CVal c;
    c.kind = Kind::Bool;
    c.b = v;
    return c;
  }
  static CVal of_str(std::string v) {
    CVal c;
    c.kind = Kind::Str;
    c.s = std::move(v);
    return c;
  }
};

struct CObj {
  ClassId cls = kNoClass;
  std::map<FieldId, CVal> fields;
};
struct CArr {
  TypeRef elem = kNoType;
  std::vector<CVal> items;
};
struct CList {
  std::vector<CVal> items;
};
struct CMap {
  std::vector<std::pair<CVal, CVal>> entries;
};
struct CSb {
  std::string text;
};

struct TraceEntry {
  MethodId method = kNoMethod;
  int ordinal = -1;
  std::vector<CVal> stack;
  std::vector<CVal> locals;
  std::vector<uint8_t> automata; // one concrete state per automaton
};

struct EvalResult {
  bool completed = false; // ran to the end without trap or cap
  bool trapped = false;   // runtime error (null deref, bad cast, ...)
  uint64_t steps = 0;
  std::vector<TraceEntry> trace;
};

// Reference tree-walking interpreter over the bound program. It visits the
// very same program points the plans enumerate, so every concrete snapshot
// lines up with one abstract state shape.
class ConcreteEvaluator {
 public:
  explicit ConcreteEvaluator(AnalysisSession& session) : session_(session) {}

  // concrete return values for native methods (missing entries default to
  // null/0/false/"")
  std::map<MethodId, CVal> natives;
  uint64_t step_cap = 200000;

  EvalResult run();

 private:
  AnalysisSession& session_;
};

// Empty string when every trace entry is abstracted by some fixpoint state
// of the analyzed program; otherwise a description of the first mismatch.
std::string check_trace_abstracted(AnalysisSession& session, const EvalResult& result);

} // namespace mjflow::test
