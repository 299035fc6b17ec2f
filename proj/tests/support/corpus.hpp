#pragma once

#include <memory>
#include <string>
#include <vector>

#include <mjflow/json_out.hpp>

namespace mjflow::test {

struct CorpusProject {
  std::vector<SourceText> sources;
  std::vector<std::string> resources;
};

std::string corpus_dir();

// Loads corpus/<name>/*.mj with shared/security.json plus the project's own
// models.json when present; `extra_resources` append after those.
CorpusProject load_corpus(const std::string& name,
                          const std::vector<std::string>& extra_resources = {});

// Builds a ready session; fails the current gtest assertion context on
// frontend or config errors.
std::unique_ptr<AnalysisSession> make_session(const CorpusProject& project);

std::vector<std::string> problem_ids(const std::vector<Problem>& problems);

// Convenience: load + analyze in one go.
struct AnalyzedCorpus {
  std::unique_ptr<AnalysisSession> session;
  AnalysisResult result;
};
AnalyzedCorpus analyze_corpus(const std::string& name, int threads = 2, uint64_t seed = 1,
                              const std::vector<std::string>& extra_resources = {});

// Total program points over all planned methods (used by size-gated oracles).
size_t total_points(AnalysisSession& session);

// Deterministic generator for the large incremental-performance project.
// Returns roughly `kloc` thousand lines split into `files` source files.
std::vector<SourceText> generate_big_project(int files, int classes_per_file);

} // namespace mjflow::test
