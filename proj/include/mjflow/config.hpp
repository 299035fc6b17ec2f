#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <mjflow/diag.hpp>

namespace mjflow {

// Operator categories used by per-lattice operation rules.
enum class OpCategory : uint8_t { Concat, Arith, Compare, Logic };

enum class ContextPolicy : uint8_t { Insensitive, ThisSensitive, AllArgs };

struct SubtypeLattice {
  std::string name;
  std::vector<std::string> values;
  uint8_t default_constant = 0;
  uint8_t default_allocation = 0;
  uint8_t default_unknown = 0;

  // n*n join table, symmetric, validated at load.
  std::vector<uint8_t> merge_tbl;

  struct RestrictRule {
    bool present = false;
    bool error = false;
    uint8_t result = 0;
    std::string message;
  };
  // (from, to) -> rule; absent pairs keep `from` unchanged.
  std::vector<RestrictRule> restrict_tbl;

  struct OpRule {
    OpCategory op;
    bool any_op = false;
    uint8_t trigger = 0;
    uint8_t result = 0;
  };
  std::vector<OpRule> op_rules;

  std::unordered_map<std::string, uint8_t> annotation_members;

  size_t size() const { return values.size(); }
  uint8_t merge(uint8_t a, uint8_t b) const { return merge_tbl[a * size() + b]; }
  const RestrictRule& restrict_rule(uint8_t from, uint8_t to) const {
    return restrict_tbl[from * size() + to];
  }
  // Join of operand members, then the first matching operation rule.
  uint8_t op_result(OpCategory op, uint8_t a, uint8_t b) const;
  uint8_t op_result_unary(OpCategory op, uint8_t a) const;
  std::optional<uint8_t> member_index(const std::string& name) const;
};

struct AutomatonDef {
  std::string name;
  std::vector<std::string> states;
  uint8_t initial = 0;

  struct Transition {
    bool present = false;
    bool error = false;
    uint8_t to = 0;
    std::string message;
  };
  // states x events (event ids are config-wide)
  std::vector<Transition> table;
  size_t num_events = 0;

  const Transition& transition(uint8_t state, size_t event) const {
    return table[state * num_events + event];
  }
  std::optional<uint8_t> state_index(const std::string& name) const;
};

struct ParamRequire {
  int index = 0;
  int lattice = 0;
  uint8_t member = 0;
};

struct CallbackSpec {
  int arg_index = 0;
  std::string method;
};

// One entry from a resource file "methods" array.
struct MethodModel {
  enum class Level : uint8_t { Package = 1, Class = 2, Method = 3 };
  Level level = Level::Method;
  std::string cls;    // empty for package level
  std::string method; // empty for class/package level
  int order = 0;      // load position; later wins at equal specificity

  std::optional<bool> ignore;
  std::optional<ContextPolicy> context;
  std::optional<std::string> return_type; // MJ type name override
  // return subtype rule: per-lattice fixed member, or "from args" for the rest
  std::unordered_map<int, uint8_t> return_fixed;
  bool return_specified = false;
  std::vector<ParamRequire> requires_;
  std::vector<CallbackSpec> callbacks;
  std::optional<std::string> event;
  std::optional<std::string> replace; // "Class.method"
};

// Effective handling of one method after model resolution.
struct EffectiveModel {
  bool ignore = false;
  ContextPolicy context = ContextPolicy::Insensitive;
  std::optional<std::string> return_type;
  std::unordered_map<int, uint8_t> return_fixed; // lattice -> member
  std::vector<ParamRequire> requires_;
  std::vector<CallbackSpec> callbacks;
  std::optional<std::string> event;
  std::optional<std::string> replace;
};

struct Config {
  std::vector<SubtypeLattice> lattices;
  std::vector<AutomatonDef> automata;
  std::vector<std::string> event_names; // interned across automata
  std::vector<MethodModel> models;
  // annotation name -> (lattice index, member)
  std::unordered_map<std::string, std::pair<int, uint8_t>> annotations;
  // fingerprint of the loaded texts; a change forces full re-analysis
  uint64_t fingerprint = 0;

  int lattice_index(const std::string& name) const;
  int automaton_index(const std::string& name) const;
  int event_index(const std::string& name) const;

  // Specificity: method > class > package > built-in default; later files
  // override earlier ones at equal specificity. Field-wise composition, so a
  // project file can re-mark a library-ignored method as analyzed without
  // restating the rest of the model.
  EffectiveModel resolve_model(const std::string& cls, const std::string& method,
                               bool is_native, bool is_static) const;
};

// Loads and validates a hierarchy of resource files; engine defaults form the
// implicit first layer. On any diagnostic the config must not be used.
Config load_config(const std::vector<std::string>& paths, DiagList& diags);

// Parses a single resource JSON text into `cfg` (exposed for tests).
void load_config_text(const std::string& text, const std::string& path, Config& cfg,
                      DiagList& diags);

// Validates lattice laws and automaton well-formedness; called by load_config.
void validate_config(Config& cfg, DiagList& diags);

} // namespace mjflow
