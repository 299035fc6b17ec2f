#pragma once

#include <string>

#include <mjflow/explain.hpp>
#include <mjflow/project.hpp>

namespace mjflow {

// {id, kind, name, file, line, method, message, severity}
std::string problem_to_json(const AnalysisSession& session, const Problem& p);
std::string problems_to_json(const AnalysisSession& session, const std::vector<Problem>& ps);

// {error_id, nodes:[{id,kind,file,line,method,desc,start}],
//  edges:[{from,to,label}], truncated:bool}
std::string graph_to_json(const AnalysisSession& session, const ExplanationGraph& g);

// NDJSON watch events (one line each, no trailing newline)
std::string event_analysis_started();
std::string event_problems(const AnalysisSession& session, const std::vector<Problem>& added,
                           const std::vector<std::string>& removed_ids, size_t total);
std::string event_analysis_done(double millis, bool incremental);
std::string event_deferred(const std::string& reason);

} // namespace mjflow
