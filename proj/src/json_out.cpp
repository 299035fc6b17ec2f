#include <mjflow/json_out.hpp>

#include <json.hpp>

namespace mjflow {

using nlohmann::json;

namespace {

json problem_json(const AnalysisSession& session, const Problem& p) {
  AnalysisSession::Location loc = session.locate(p);
  json j;
  j["id"] = p.id;
  j["kind"] = p.kind == ProblemKind::Subtype ? "subtype" : "automaton";
  j["name"] = p.name;
  j["file"] = loc.file;
  j["line"] = loc.line;
  j["method"] = loc.method;
  j["message"] = p.message;
  j["severity"] = p.severity;
  return j;
}

} // namespace

std::string problem_to_json(const AnalysisSession& session, const Problem& p) {
  return problem_json(session, p).dump();
}

std::string problems_to_json(const AnalysisSession& session, const std::vector<Problem>& ps) {
  json arr = json::array();
  for (const Problem& p : ps) arr.push_back(problem_json(session, p));
  return arr.dump(2);
}

std::string graph_to_json(const AnalysisSession& session, const ExplanationGraph& g) {
  json j;
  j["error_id"] = g.error_id;
  json nodes = json::array();
  for (const ExplNode& n : g.nodes) {
    json nj;
    nj["id"] = n.id;
    nj["kind"] = n.kind;
    Problem fake;
    fake.method = n.method;
    fake.point = n.point;
    AnalysisSession::Location loc = session.locate(fake);
    nj["file"] = loc.file;
    nj["line"] = loc.line;
    nj["method"] = loc.method;
    nj["desc"] = n.desc;
    nj["start"] = n.start;
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const ExplEdge& e : g.edges) {
    json ej;
    ej["from"] = e.from;
    ej["to"] = e.to;
    ej["label"] = e.label;
    edges.push_back(std::move(ej));
  }
  j["edges"] = std::move(edges);
  j["truncated"] = g.truncated;
  return j.dump(2);
}

std::string event_analysis_started() {
  json j;
  j["event"] = "analysis-started";
  return j.dump();
}

std::string event_problems(const AnalysisSession& session, const std::vector<Problem>& added,
                           const std::vector<std::string>& removed_ids, size_t total) {
  json j;
  j["event"] = "problems";
  json add = json::array();
  for (const Problem& p : added) add.push_back(problem_json(session, p));
  j["added"] = std::move(add);
  j["removed"] = removed_ids;
  j["total"] = total;
  return j.dump();
}

std::string event_analysis_done(double millis, bool incremental) {
  json j;
  j["event"] = "analysis-done";
  j["millis"] = millis;
  j["incremental"] = incremental;
  return j.dump();
}

std::string event_deferred(const std::string& reason) {
  json j;
  j["event"] = "deferred";
  j["reason"] = reason;
  return j.dump();
}

} // namespace mjflow
