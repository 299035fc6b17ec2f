#pragma once

#include <functional>
#include <iosfwd>

#include <mjflow/project.hpp>

namespace mjflow {

struct WatchOptions {
  std::string project_dir;
  std::vector<std::string> resource_paths;
  EngineOptions engine;
  int poll_ms = 300;
  std::ostream* out = nullptr;            // NDJSON event sink (default stdout)
  std::function<bool()> should_stop;      // checked once per poll
};

// Continuous mode: full analysis, then file-watching with incremental
// updates. Emits NDJSON events: analysis-started, problems (added/removed),
// analysis-done, deferred. A change arriving mid-analysis suspends the
// fixpoint and folds into the next update; a resource-file change forces a
// full re-analysis. Returns 0 on clean stop, 1 on a startup error.
int run_watch(const WatchOptions& options);

} // namespace mjflow
