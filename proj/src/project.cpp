#include <mjflow/project.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <mjflow/parser.hpp>

namespace mjflow {

namespace fs = std::filesystem;

std::vector<std::string> find_mj_files(const std::string& dir) {
  std::vector<std::string> out;
  std::error_code ec;
  for (fs::recursive_directory_iterator it(dir, ec), end; it != end && !ec; it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".mj") {
      out.push_back(it->path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool read_text_file(const std::string& path, std::string* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  *out = ss.str();
  return true;
}

AnalysisSession::AnalysisSession(Config config) : config_(std::move(config)) {}

AnalysisSession::~AnalysisSession() = default;

bool AnalysisSession::frontend(std::vector<MjFilePtr> files, DiagList* diags,
                               std::unique_ptr<BoundProgram>* out) {
  // synthesized driver for @Test methods; the file object is reused while
  // its text is unchanged so existing driver calls stay valid
  std::string driver = synthesize_test_driver(files);
  if (!driver.empty()) {
    if (driver == driver_text_ && driver_file_) {
      files.push_back(driver_file_);
    } else {
      auto file = parse_file(driver, kTestDriverPath, *diags);
      file->synthetic = true;
      if (!diags->empty()) return false;
      normalize_file(*file);
      driver_file_ = file;
      files.push_back(std::move(file));
    }
  } else {
    driver_file_ = nullptr;
  }
  driver_text_ = driver;
  auto bound = std::make_unique<BoundProgram>(mjflow::bind(files, syms_, config_, *diags));
  if (!diags->empty()) return false;
  *out = std::move(bound);
  files_ = std::move(files);
  return true;
}

LoadOutcome AnalysisSession::load(const std::vector<SourceText>& sources) {
  LoadOutcome outcome;
  std::vector<MjFilePtr> files;
  for (const auto& src : sources) {
    auto file = parse_file(src.text, src.path, outcome.diags);
    if (!outcome.diags.empty()) return outcome;
    normalize_file(*file);
    files.push_back(std::move(file));
  }
  std::unique_ptr<BoundProgram> bound;
  if (!frontend(std::move(files), &outcome.diags, &bound)) return outcome;
  program_ = std::move(bound);
  engine_ = std::make_unique<Engine>(config_, syms_);
  engine_->set_program(program_.get());
  outcome.ok = true;
  return outcome;
}

AnalysisResult AnalysisSession::analyze(const EngineOptions& opts) {
  return engine_->analyze(opts);
}

UpdateOutcome AnalysisSession::update(const std::vector<SourceText>& dirty,
                                      const EngineOptions& opts) {
  UpdateOutcome outcome;

  // re-parse the changed files from their current contents
  std::map<std::string, MjFilePtr> replacements;
  for (const auto& src : dirty) {
    DiagList diags;
    auto file = parse_file(src.text, src.path, diags);
    if (!diags.empty()) {
      outcome.kind = UpdateOutcome::Kind::Deferred;
      outcome.diags = std::move(diags);
      return outcome;
    }
    normalize_file(*file);
    replacements[src.path] = std::move(file);
  }

  // swap in the new files, keeping every unchanged file object (stable node
  // ids keep the kept calls' plans valid)
  std::vector<MjFilePtr> new_files;
  std::set<const MjFile*> dirty_old;
  for (const auto& f : files_) {
    if (f->synthetic) continue; // regenerated below
    auto it = replacements.find(f->path);
    if (it != replacements.end()) {
      dirty_old.insert(f.get());
      new_files.push_back(it->second);
      replacements.erase(it);
    } else {
      new_files.push_back(f);
    }
  }
  for (auto& [path, file] : replacements) new_files.push_back(file); // brand-new files

  // the synthetic driver is dirty when the @Test set changed
  const MjFile* old_driver = nullptr;
  for (const auto& f : files_) {
    if (f->synthetic) old_driver = f.get();
  }
  std::string new_driver_text = synthesize_test_driver(new_files);
  bool driver_dirty = new_driver_text != driver_text_;

  // dirty stable ids computed against the old program
  std::set<MethodId> dirty_methods;
  std::set<FieldId> dirty_fields;
  std::set<ClassId> dirty_classes;
  for (MethodId m = 0; m < program_->methods.size(); ++m) {
    const MethodInfo& mi = program_->methods[m];
    if (!mi.defined || mi.builtin) continue;
    if (dirty_old.count(mi.file) || (driver_dirty && old_driver && mi.file == old_driver)) {
      dirty_methods.insert(m);
    }
  }
  for (FieldId f = 0; f < program_->fields.size(); ++f) {
    const FieldInfo& fi = program_->fields[f];
    if (!fi.defined) continue;
    if (dirty_old.count(fi.file)) dirty_fields.insert(f);
  }
  for (ClassId ci = 0; ci < program_->classes.size(); ++ci) {
    const ClassInfo& info = program_->classes[ci];
    if (!info.defined || info.builtin) continue;
    if (info.file && dirty_old.count(info.file)) dirty_classes.insert(ci);
  }

  // rebind the whole program against the new trees
  DiagList diags;
  std::string saved_driver = driver_text_;
  MjFilePtr saved_driver_file = driver_file_;
  std::vector<MjFilePtr> saved_files = files_;
  std::unique_ptr<BoundProgram> bound;
  if (!frontend(std::move(new_files), &diags, &bound)) {
    files_ = std::move(saved_files);
    driver_text_ = std::move(saved_driver);
    driver_file_ = std::move(saved_driver_file);
    outcome.kind = UpdateOutcome::Kind::Deferred;
    outcome.diags = std::move(diags);
    return outcome;
  }

  // methods vanishing in the rebind count as dirty too
  for (MethodId m = 0; m < program_->methods.size(); ++m) {
    const MethodInfo& mi = program_->methods[m];
    if (!mi.defined || mi.builtin) continue;
    if (m >= bound->methods.size() || !bound->methods[m].defined) dirty_methods.insert(m);
  }

  program_ = std::move(bound);
  engine_->set_program(program_.get());
  for (MethodId m : dirty_methods) engine_->drop_plan(m);

  IncrementalUpdater updater;
  outcome.stats = updater.run(*engine_, dirty_methods, dirty_fields, dirty_classes);
  outcome.result = engine_->analyze(opts);
  outcome.kind = UpdateOutcome::Kind::Updated;
  return outcome;
}

AnalysisSession::Location AnalysisSession::locate(const Problem& p) const {
  Location loc;
  if (p.method == kNoMethod || p.method >= program_->methods.size()) return loc;
  const MethodInfo& mi = program_->methods[p.method];
  loc.method = program_->method_signature(p.method);
  if (mi.file) {
    loc.file = mi.file->path;
    if (p.point.node != kNoNode && p.point.node < mi.file->nodes.size()) {
      loc.line = mi.file->node(p.point.node).span.line;
    }
  }
  return loc;
}

} // namespace mjflow
