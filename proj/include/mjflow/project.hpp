#pragma once

#include <map>
#include <memory>

#include <mjflow/incremental.hpp>
#include <mjflow/normalize.hpp>

namespace mjflow {

// One source file as fed to the session.
struct SourceText {
  std::string path;
  std::string text;
};

// Lists .mj files under a directory, sorted for deterministic ordering.
std::vector<std::string> find_mj_files(const std::string& dir);
bool read_text_file(const std::string& path, std::string* out);

struct LoadOutcome {
  bool ok = false;
  DiagList diags;
};

struct UpdateOutcome {
  enum class Kind { Updated, Deferred } kind = Kind::Updated;
  DiagList diags;      // frontend errors when deferred
  UpdateStats stats;   // remap statistics when updated
  AnalysisResult result;
};

// Owns the long-lived analysis state: symbol table, engine, current program.
// Full loads reset the engine; file-level updates go through the incremental
// path and keep everything else.
class AnalysisSession {
 public:
  explicit AnalysisSession(Config config);
  ~AnalysisSession();

  // Full (re)load of the whole source set; resets analysis state.
  LoadOutcome load(const std::vector<SourceText>& sources);

  AnalysisResult analyze(const EngineOptions& opts);

  // Incremental path: re-parses the given files from the given texts and
  // applies the file-level update, then resumes the fixpoint. Defers (keeping
  // previous results) when the new texts have frontend errors.
  UpdateOutcome update(const std::vector<SourceText>& dirty, const EngineOptions& opts);

  Engine& engine() { return *engine_; }
  const BoundProgram& program() const { return *program_; }
  const Config& config() const { return config_; }

  // Resolves a problem's location for reporting.
  struct Location {
    std::string file;
    int line = 0;
    std::string method;
  };
  Location locate(const Problem& p) const;

 private:
  bool frontend(std::vector<MjFilePtr> files, DiagList* diags,
                std::unique_ptr<BoundProgram>* out);

  Config config_;
  SymbolTable syms_;
  std::unique_ptr<Engine> engine_;
  std::vector<MjFilePtr> files_; // normalized, including the synthetic driver
  std::unique_ptr<BoundProgram> program_;
  std::string driver_text_;
  MjFilePtr driver_file_;
};

} // namespace mjflow
