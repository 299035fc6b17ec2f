#pragma once

#include <optional>

#include <mjflow/engine.hpp>

namespace mjflow {

// What the backward analysis is tracking at one point: either a subtype
// member sitting at a value location, or an automaton state.
struct ExplContext {
  bool safety = false;
  // subtype
  int lattice = 0;
  uint8_t member = 0;
  ValueLoc loc;
  // safety
  int automaton = 0;
  uint8_t state = 0;

  bool operator<(const ExplContext& o) const {
    auto key = [](const ExplContext& c) {
      return std::tuple(c.safety, c.lattice, c.member, static_cast<int>(c.loc.kind), c.loc.index,
                        c.automaton, c.state);
    };
    return key(*this) < key(o);
  }
  bool operator==(const ExplContext& o) const { return !(*this < o) && !(o < *this); }
};

struct ExplNode {
  int id = 0;
  std::string kind; // error, load, store, compute, call, return, method-entry,
                    // event-transition, start
  std::string desc;
  CallId call = 0;
  ProgramPoint point;
  int ordinal = -1;
  MethodId method = kNoMethod;
  bool start = false;
  ExplContext ctx; // for tests
};

struct ExplEdge {
  int from = 0;
  int to = 0;
  std::string label;
};

struct ExplanationGraph {
  std::string error_id;
  std::vector<ExplNode> nodes;
  std::vector<ExplEdge> edges;
  bool truncated = false;
};

struct ExplainOutcome {
  bool ok = false;
  std::string error; // "unknown problem id" / "stale analysis result"
  ExplanationGraph graph;
};

// Backward analysis from a reported problem to its starting points. Read-only
// over the frozen fixpoint; `expected_generation` guards against querying a
// superseded result.
ExplainOutcome explain(Engine& engine, const std::string& problem_id,
                       uint64_t expected_generation, size_t node_cap = 50000);

// Deterministic lazy enumeration of error-to-start paths (node ids, starting
// at the error node). Fork points are nodes with more than one outgoing edge.
class PathEnumerator {
 public:
  explicit PathEnumerator(const ExplanationGraph& graph);
  std::optional<std::vector<int>> next();

 private:
  const ExplanationGraph& graph_;
  std::vector<std::vector<int>> children_;
  struct Frame {
    int node;
    size_t child = 0;
  };
  std::vector<Frame> stack_;
  bool done_ = false;
  void advance();
  bool at_leaf() const;
};

} // namespace mjflow
