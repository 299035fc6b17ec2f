#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <queue>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <mjflow/call.hpp>

namespace mjflow {

struct EngineOptions {
  int threads = 4;
  uint64_t seed = 0;
  uint64_t step_budget = 10000000;
};

enum class AnalysisStatus { Complete, BudgetExceeded, Suspended };

struct AnalysisResult {
  AnalysisStatus status = AnalysisStatus::Complete;
  std::vector<Problem> problems; // sorted by id, unique
  uint64_t steps = 0;
  uint64_t generation = 0;
  double millis = 0;
  size_t num_calls = 0;
  size_t num_values = 0;
  size_t num_sources = 0;
  std::vector<std::pair<std::string, uint64_t>> method_steps; // profile
  std::vector<std::string> notes;
};

struct BackPropRequest {
  ValueLoc loc;
};

struct StepResult {
  std::vector<std::pair<int, ProgramState>> successors;
  std::vector<Problem> problems;
  std::vector<Site> requeue;        // field/array/prototype reader sites
  std::vector<Call*> queue_entries; // callees whose entry state changed
  std::vector<BackPropRequest> backprops;
};

// The fixpoint worklist driver. Owns the value store, the call registry,
// the global field table, and the system work queue. One worker analyzes
// one call at a time; shared structures use merge-and-report-changed
// updates, so results are independent of scheduling.
class Engine {
 public:
  Engine(const Config& config, SymbolTable& syms);
  ~Engine();

  void set_program(BoundProgram* prog);
  BoundProgram* program() const { return prog_; }
  ValueStore& store() { return store_; }
  const Config& config() const { return config_; }

  // Runs (or resumes) the fixpoint to completion, budget stop, or suspend.
  AnalysisResult analyze(const EngineOptions& opts);
  void request_suspend() { suspend_.store(true); }
  bool work_outstanding() const;

  std::vector<Problem> collect_problems() const;
  uint64_t generation() const { return generation_.load(); }

  const MethodPlan* plan_for(MethodId m);
  void drop_plan(MethodId m);

  Call* call_by_id(CallId id) const;
  size_t num_live_calls() const;
  void for_each_call(const std::function<void(Call*)>& f) const;

  Call* get_or_create_call(MethodId method, ContextPolicy policy, uint32_t this_set,
                           std::vector<uint32_t> arg_sets, int priority, bool* created);
  void register_caller(Call* callee, Site site);
  bool add_invocation(Call* c, const ProgramState& entry);
  bool merge_into_point(Call* c, int ordinal, const ProgramState& candidate);
  StateRef point_state(Call* c, int ordinal) const;

  void queue_call(Call* c, int ordinal);
  void queue_site(Site site);
  void queue_sites(const std::set<Site>& sites);
  void remove_from_queue(Call* c); // marks dead; drops pending work

  const Value* read_global_field(FieldId f, Site reader);
  bool write_global_field(FieldId f, const Value* v, Site writer, std::set<Site>* readers);
  void register_field_reader(FieldId f, Site reader);
  void register_field_writer(FieldId f, Site writer);
  const Value* peek_global_field(FieldId f) const;
  void set_global_field_raw(FieldId f, const Value* v); // incremental remap
  void field_reader_sites(FieldId f, std::set<Site>* out) const;
  void field_writer_sites(FieldId f, std::set<Site>* out) const;
  void collect_field_ids(std::vector<FieldId>* out) const;

  void ensure_class_initialized(ClassId cls, Site site);
  void mark_class_uninitialized(ClassId cls);
  bool class_initialized(ClassId cls) const;

  void note(const std::string& text);

  uint64_t steps() const { return steps_.load(); }

 private:
  friend class Interp;
  friend class IncrementalUpdater;
  friend class Explainer;

  struct FieldEntry {
    const Value* value = nullptr;
    std::set<Site> readers;
    std::set<Site> writers;
  };

  void seed_entries();
  void worker_loop();
  Call* take_work(std::set<int32_t>* pts);
  void finish_work(Call* c);
  void analyze_call(Call* c, std::set<int32_t> work);
  StateRef widen(Call* c, int ordinal, const ProgramState& old_state, StateRef merged);
  // walks predecessor states propagating a non-null fact; returns ordinals
  // whose states changed
  std::vector<int> back_propagate(Call* c, int ordinal, const BackPropRequest& req);

  const Config& config_;
  SymbolTable& syms_;
  BoundProgram* prog_ = nullptr;
  ValueStore store_;

  mutable std::mutex plans_mu_;
  std::unordered_map<MethodId, std::unique_ptr<MethodPlan>> plans_;

  mutable std::mutex calls_mu_;
  std::deque<std::unique_ptr<Call>> calls_;
  std::unordered_map<CallKey, Call*, CallKeyHash> calls_by_key_;

  mutable std::mutex fields_mu_;
  std::unordered_map<FieldId, FieldEntry> fields_;

  mutable std::mutex init_mu_;
  std::unordered_set<ClassId> initialized_;

  mutable std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  struct QueueItem {
    uint64_t rank;
    CallId call;
    bool operator>(const QueueItem& o) const { return rank > o.rank; }
  };
  std::array<std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<QueueItem>>, 3>
      buckets_;
  std::mt19937_64 rng_;
  int in_flight_ = 0;

  std::atomic<bool> suspend_{false};
  std::atomic<bool> abort_{false};
  std::atomic<uint64_t> steps_{0};
  uint64_t step_budget_ = 10000000;
  std::atomic<uint64_t> generation_{0};

  mutable std::mutex notes_mu_;
  std::vector<std::string> notes_;
  std::unordered_set<std::string> noted_;
};

} // namespace mjflow
