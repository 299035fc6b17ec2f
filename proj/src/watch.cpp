#include <mjflow/watch.hpp>

#include <chrono>
#include <filesystem>
#include <future>
#include <iostream>
#include <thread>

#include <mjflow/json_out.hpp>

namespace mjflow {

namespace fs = std::filesystem;

namespace {

struct FileSig {
  int64_t mtime = 0;
  uint64_t size = 0;
  bool exists = false;
  bool operator==(const FileSig&) const = default;
};

FileSig signature(const std::string& path) {
  FileSig sig;
  std::error_code ec;
  auto st = fs::status(path, ec);
  if (ec || !fs::is_regular_file(st)) return sig;
  sig.exists = true;
  sig.size = fs::file_size(path, ec);
  auto t = fs::last_write_time(path, ec);
  sig.mtime = std::chrono::duration_cast<std::chrono::nanoseconds>(t.time_since_epoch()).count();
  return sig;
}

class Watcher {
 public:
  explicit Watcher(const WatchOptions& opts)
      : opts_(opts), out_(opts.out ? *opts.out : std::cout) {}

  int run() {
    if (!reload_config()) return 1;
    scan(/*initial=*/true);
    emit(event_analysis_started());
    if (!full_load()) {
      // wait for the sources to become valid
      while (!stopped()) {
        sleep_poll();
        if (!scan(false)) continue;
        dirty_.clear();
        emit(event_analysis_started());
        if (full_load()) break;
      }
      if (stopped()) return 0;
    }
    run_full(/*incremental=*/false);

    while (!stopped()) {
      sleep_poll();
      scan(false);
      if (!resource_dirty_ && dirty_.empty()) continue;
      if (resource_dirty_) {
        resource_dirty_ = false;
        dirty_.clear();
        emit(event_analysis_started());
        if (!reload_config()) continue;
        if (full_load()) run_full(false);
        continue;
      }
      std::vector<SourceText> texts = take_dirty_texts();
      emit(event_analysis_started());
      run_update(std::move(texts));
    }
    return 0;
  }

 private:
  const WatchOptions& opts_;
  std::ostream& out_;
  Config config_;
  std::unique_ptr<AnalysisSession> session_;
  std::map<std::string, FileSig> sigs_;
  std::map<std::string, FileSig> res_sigs_;
  std::set<std::string> dirty_;
  bool resource_dirty_ = false;
  std::map<std::string, Problem> previous_;

  bool stopped() const { return opts_.should_stop && opts_.should_stop(); }
  void sleep_poll() { std::this_thread::sleep_for(std::chrono::milliseconds(opts_.poll_ms)); }
  void emit(const std::string& line) {
    out_ << line << "\n";
    out_.flush();
  }

  bool reload_config() {
    DiagList diags;
    config_ = load_config(opts_.resource_paths, diags);
    if (!diags.empty()) {
      for (const auto& d : diags) std::cerr << d.to_string() << "\n";
      emit(event_deferred("config-errors"));
      return false;
    }
    session_ = std::make_unique<AnalysisSession>(config_);
    previous_.clear();
    return true;
  }

  // returns true when anything changed since the last scan
  bool scan(bool initial) {
    bool changed = false;
    for (const std::string& path : find_mj_files(opts_.project_dir)) {
      FileSig sig = signature(path);
      auto it = sigs_.find(path);
      if (it == sigs_.end() || !(it->second == sig)) {
        sigs_[path] = sig;
        if (!initial) {
          dirty_.insert(path);
          changed = true;
        }
      }
    }
    // deleted files
    for (auto it = sigs_.begin(); it != sigs_.end();) {
      if (!signature(it->first).exists) {
        if (!initial) {
          dirty_.insert(it->first);
          changed = true;
        }
        it = sigs_.erase(it);
      } else {
        ++it;
      }
    }
    for (const std::string& path : opts_.resource_paths) {
      FileSig sig = signature(path);
      auto it = res_sigs_.find(path);
      if (it == res_sigs_.end() || !(it->second == sig)) {
        res_sigs_[path] = sig;
        if (!initial) {
          resource_dirty_ = true;
          changed = true;
        }
      }
    }
    return changed;
  }

  std::vector<SourceText> take_dirty_texts() {
    std::vector<SourceText> out;
    for (const std::string& path : dirty_) {
      SourceText st;
      st.path = path;
      if (!read_text_file(path, &st.text)) st.text = ""; // deleted: empty file
      out.push_back(std::move(st));
    }
    dirty_.clear();
    return out;
  }

  bool full_load() {
    std::vector<SourceText> sources;
    for (const auto& [path, sig] : sigs_) {
      SourceText st;
      st.path = path;
      if (!read_text_file(path, &st.text)) continue;
      sources.push_back(std::move(st));
    }
    LoadOutcome outcome = session_->load(sources);
    if (!outcome.ok) {
      emit(event_deferred("frontend-errors"));
      return false;
    }
    return true;
  }

  // runs the blocking fixpoint while polling; a change suspends it and folds
  // into the next update
  AnalysisResult analyze_interruptible() {
    auto fut = std::async(std::launch::async, [&] { return session_->analyze(opts_.engine); });
    while (fut.wait_for(std::chrono::milliseconds(opts_.poll_ms)) !=
           std::future_status::ready) {
      if (scan(false) || stopped()) session_->engine().request_suspend();
    }
    return fut.get();
  }

  void run_full(bool incremental) {
    AnalysisResult result = analyze_interruptible();
    while (result.status == AnalysisStatus::Suspended && !stopped()) {
      if (dirty_.empty() && !resource_dirty_) {
        result = analyze_interruptible();
        continue;
      }
      if (resource_dirty_) return; // the outer loop restarts everything
      std::vector<SourceText> texts = take_dirty_texts();
      UpdateOutcome outcome = session_->update(texts, opts_.engine);
      if (outcome.kind == UpdateOutcome::Kind::Deferred) {
        emit(event_deferred("frontend-errors"));
        result = analyze_interruptible(); // finish the suspended fixpoint
      } else {
        result = std::move(outcome.result);
        incremental = true;
      }
    }
    if (result.status != AnalysisStatus::Complete) return;
    report(result, incremental);
  }

  void run_update(std::vector<SourceText> texts) {
    auto fut = std::async(std::launch::async,
                          [&] { return session_->update(texts, opts_.engine); });
    while (fut.wait_for(std::chrono::milliseconds(opts_.poll_ms)) !=
           std::future_status::ready) {
      if (scan(false) || stopped()) session_->engine().request_suspend();
    }
    UpdateOutcome outcome = fut.get();
    if (outcome.kind == UpdateOutcome::Kind::Deferred) {
      emit(event_deferred("frontend-errors"));
      return; // previous problems stand
    }
    if (outcome.result.status == AnalysisStatus::Suspended) {
      // folded into the next update; the outer loop picks up the dirt
      run_full(/*incremental=*/true);
      return;
    }
    if (outcome.result.status != AnalysisStatus::Complete) return;
    report(outcome.result, true);
  }

  void report(const AnalysisResult& result, bool incremental) {
    std::map<std::string, Problem> current;
    for (const Problem& p : result.problems) current.emplace(p.id, p);
    std::vector<Problem> added;
    std::vector<std::string> removed;
    for (const auto& [id, p] : current) {
      if (!previous_.count(id)) added.push_back(p);
    }
    for (const auto& [id, p] : previous_) {
      if (!current.count(id)) removed.push_back(id);
    }
    emit(event_problems(*session_, added, removed, current.size()));
    emit(event_analysis_done(result.millis, incremental));
    previous_ = std::move(current);
  }
};

} // namespace

int run_watch(const WatchOptions& options) {
  Watcher watcher(options);
  return watcher.run();
}

} // namespace mjflow
