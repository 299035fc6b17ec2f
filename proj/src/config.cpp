#include <mjflow/config.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mjflow {

using nlohmann::json;

uint8_t SubtypeLattice::op_result(OpCategory op, uint8_t a, uint8_t b) const {
  for (const auto& r : op_rules) {
    if (!r.any_op && r.op != op) continue;
    if (a == r.trigger || b == r.trigger) return r.result;
  }
  return merge(a, b);
}

uint8_t SubtypeLattice::op_result_unary(OpCategory op, uint8_t a) const {
  for (const auto& r : op_rules) {
    if (!r.any_op && r.op != op) continue;
    if (a == r.trigger) return r.result;
  }
  return a;
}

std::optional<uint8_t> SubtypeLattice::member_index(const std::string& name) const {
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] == name) return static_cast<uint8_t>(i);
  }
  return std::nullopt;
}

std::optional<uint8_t> AutomatonDef::state_index(const std::string& name) const {
  for (size_t i = 0; i < states.size(); ++i) {
    if (states[i] == name) return static_cast<uint8_t>(i);
  }
  return std::nullopt;
}

int Config::lattice_index(const std::string& name) const {
  for (size_t i = 0; i < lattices.size(); ++i) {
    if (lattices[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int Config::automaton_index(const std::string& name) const {
  for (size_t i = 0; i < automata.size(); ++i) {
    if (automata[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int Config::event_index(const std::string& name) const {
  for (size_t i = 0; i < event_names.size(); ++i) {
    if (event_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

EffectiveModel Config::resolve_model(const std::string& cls, const std::string& method,
                                     bool is_native, bool is_static) const {
  // built-in defaults: app methods analyzed (instance ones this-sensitive),
  // native methods ignored with an arbitrary mutable return
  EffectiveModel out;
  out.ignore = is_native;
  if (is_native) {
    out.context = ContextPolicy::Insensitive;
  } else {
    out.context = is_static ? ContextPolicy::Insensitive : ContextPolicy::ThisSensitive;
  }

  // candidates sorted most-specific first, later files first within a level
  std::vector<const MethodModel*> hits;
  for (const auto& m : models) {
    switch (m.level) {
      case MethodModel::Level::Method:
        if (m.cls == cls && m.method == method) hits.push_back(&m);
        break;
      case MethodModel::Level::Class:
        if (m.cls == cls) hits.push_back(&m);
        break;
      case MethodModel::Level::Package:
        hits.push_back(&m);
        break;
    }
  }
  std::sort(hits.begin(), hits.end(), [](const MethodModel* a, const MethodModel* b) {
    if (a->level != b->level) return static_cast<int>(a->level) > static_cast<int>(b->level);
    return a->order > b->order;
  });

  bool mode_set = false, ctx_set = false, ret_set = false, rt_set = false;
  bool req_set = false, cb_set = false, ev_set = false, rep_set = false;
  for (const MethodModel* m : hits) {
    if (!mode_set && m->ignore.has_value()) {
      out.ignore = *m->ignore;
      mode_set = true;
    }
    if (!ctx_set && m->context.has_value()) {
      out.context = *m->context;
      ctx_set = true;
    }
    if (!rt_set && m->return_type.has_value()) {
      out.return_type = m->return_type;
      rt_set = true;
    }
    if (!ret_set && m->return_specified) {
      out.return_fixed = m->return_fixed;
      ret_set = true;
    }
    if (!req_set && !m->requires_.empty()) {
      out.requires_ = m->requires_;
      req_set = true;
    }
    if (!cb_set && !m->callbacks.empty()) {
      out.callbacks = m->callbacks;
      cb_set = true;
    }
    if (!ev_set && m->event.has_value()) {
      out.event = m->event;
      ev_set = true;
    }
    if (!rep_set && m->replace.has_value()) {
      out.replace = m->replace;
      rep_set = true;
    }
  }
  return out;
}

namespace {

struct Loader {
  Config& cfg;
  DiagList& diags;
  std::string path;
  bool ok = true;

  void error(const std::string& pointer, const std::string& msg) {
    diags.push_back({DiagPhase::Config, path + pointer, 0, 0, msg});
    ok = false;
  }

  std::optional<uint8_t> member(const SubtypeLattice& lat, const json& j,
                                const std::string& pointer) {
    if (!j.is_string()) {
      error(pointer, "expected a member name");
      return std::nullopt;
    }
    auto idx = lat.member_index(j.get<std::string>());
    if (!idx) {
      error(pointer, "unknown member '" + j.get<std::string>() + "' of lattice " + lat.name);
      return std::nullopt;
    }
    return idx;
  }

  void load_lattice(const json& j, const std::string& ptr) {
    SubtypeLattice lat;
    if (!j.contains("name") || !j["name"].is_string()) {
      error(ptr, "subtype lattice requires a name");
      return;
    }
    lat.name = j["name"].get<std::string>();
    if (!j.contains("values") || !j["values"].is_array() || j["values"].empty()) {
      error(ptr + "/values", "lattice requires a non-empty values array");
      return;
    }
    for (const auto& v : j["values"]) {
      if (!v.is_string()) {
        error(ptr + "/values", "members must be strings");
        return;
      }
      lat.values.push_back(v.get<std::string>());
    }
    if (lat.values.size() > 16) {
      error(ptr + "/values", "at most 16 members per lattice");
      return;
    }
    for (size_t i = 0; i < lat.values.size(); ++i) {
      for (size_t k = i + 1; k < lat.values.size(); ++k) {
        if (lat.values[i] == lat.values[k]) {
          error(ptr + "/values", "duplicate member '" + lat.values[i] + "'");
        }
      }
    }

    size_t n = lat.values.size();
    lat.merge_tbl.assign(n * n, 0);
    std::vector<bool> have(n * n, false);
    for (size_t i = 0; i < n; ++i) {
      lat.merge_tbl[i * n + i] = static_cast<uint8_t>(i);
      have[i * n + i] = true;
    }
    if (j.contains("merge")) {
      if (!j["merge"].is_object()) {
        error(ptr + "/merge", "merge must map 'A,B' pairs to members");
      } else {
        for (auto it = j["merge"].begin(); it != j["merge"].end(); ++it) {
          std::string key = it.key();
          auto comma = key.find(',');
          if (comma == std::string::npos) {
            error(ptr + "/merge", "merge key '" + key + "' must be 'A,B'");
            continue;
          }
          auto a = lat.member_index(key.substr(0, comma));
          auto b = lat.member_index(key.substr(comma + 1));
          auto r = member(lat, it.value(), ptr + "/merge");
          if (!a || !b || !r) {
            if (!a || !b) error(ptr + "/merge", "unknown member in key '" + key + "'");
            continue;
          }
          size_t ab = *a * n + *b, ba = *b * n + *a;
          if ((have[ab] && lat.merge_tbl[ab] != *r) || (have[ba] && lat.merge_tbl[ba] != *r)) {
            error(ptr + "/merge", "conflicting entries for pair '" + key + "'");
          }
          lat.merge_tbl[ab] = *r;
          lat.merge_tbl[ba] = *r;
          have[ab] = have[ba] = true;
        }
      }
    }
    for (size_t i = 0; i < n; ++i) {
      for (size_t k = 0; k < n; ++k) {
        if (!have[i * n + k]) {
          error(ptr + "/merge",
                "missing merge entry for '" + lat.values[i] + "," + lat.values[k] + "'");
        }
      }
    }

    auto def = [&](const char* key, uint8_t& out) {
      if (!j.contains(key)) {
        error(ptr, std::string("missing ") + key);
        return;
      }
      if (auto m = member(lat, j[key], ptr + "/" + key)) out = *m;
    };
    def("default_constant", lat.default_constant);
    def("default_allocation", lat.default_allocation);
    def("default_unknown", lat.default_unknown);

    lat.restrict_tbl.assign(n * n, {});
    if (j.contains("restrict")) {
      if (!j["restrict"].is_array()) {
        error(ptr + "/restrict", "restrict must be an array");
      } else {
        int i = 0;
        for (const auto& r : j["restrict"]) {
          std::string rptr = ptr + "/restrict/" + std::to_string(i++);
          if (!r.contains("from") || !r.contains("to")) {
            error(rptr, "restrict rule requires from and to");
            continue;
          }
          auto f = member(lat, r["from"], rptr + "/from");
          auto t = member(lat, r["to"], rptr + "/to");
          if (!f || !t) continue;
          SubtypeLattice::RestrictRule rule;
          rule.present = true;
          rule.result = *t;
          if (r.contains("result")) {
            if (auto m = member(lat, r["result"], rptr + "/result")) rule.result = *m;
          }
          if (r.contains("error")) {
            rule.error = true;
            rule.message = r["error"].is_string() ? r["error"].get<std::string>() : "restricted";
          }
          lat.restrict_tbl[*f * n + *t] = std::move(rule);
        }
      }
    }

    if (j.contains("operations")) {
      if (!j["operations"].is_array()) {
        error(ptr + "/operations", "operations must be an array");
      } else {
        int i = 0;
        for (const auto& o : j["operations"]) {
          std::string optr = ptr + "/operations/" + std::to_string(i++);
          SubtypeLattice::OpRule rule;
          std::string op = o.value("op", "");
          if (op == "concat") rule.op = OpCategory::Concat;
          else if (op == "arith") rule.op = OpCategory::Arith;
          else if (op == "compare") rule.op = OpCategory::Compare;
          else if (op == "logic") rule.op = OpCategory::Logic;
          else if (op == "any") rule.any_op = true;
          else {
            error(optr + "/op", "op must be one of concat/arith/compare/logic/any");
            continue;
          }
          auto trig = o.contains("when_any") ? member(lat, o["when_any"], optr + "/when_any")
                                             : std::nullopt;
          auto res = o.contains("result") ? member(lat, o["result"], optr + "/result")
                                          : std::nullopt;
          if (!trig || !res) {
            error(optr, "operation rule requires when_any and result");
            continue;
          }
          rule.trigger = *trig;
          rule.result = *res;
          lat.op_rules.push_back(rule);
        }
      }
    }

    if (j.contains("annotations")) {
      if (!j["annotations"].is_object()) {
        error(ptr + "/annotations", "annotations must map names to members");
      } else {
        for (auto it = j["annotations"].begin(); it != j["annotations"].end(); ++it) {
          if (auto m = member(lat, it.value(), ptr + "/annotations/" + it.key())) {
            lat.annotation_members[it.key()] = *m;
          }
        }
      }
    }

    // same-name lattice in a later file replaces the earlier definition
    int existing = cfg.lattice_index(lat.name);
    if (existing >= 0) {
      cfg.lattices[existing] = std::move(lat);
    } else {
      cfg.lattices.push_back(std::move(lat));
    }
  }

  void load_automaton(const json& j, const std::string& ptr) {
    AutomatonDef a;
    if (!j.contains("name") || !j["name"].is_string()) {
      error(ptr, "automaton requires a name");
      return;
    }
    a.name = j["name"].get<std::string>();
    if (!j.contains("states") || !j["states"].is_array() || j["states"].empty()) {
      error(ptr + "/states", "automaton requires states");
      return;
    }
    for (const auto& s : j["states"]) {
      if (!s.is_string()) {
        error(ptr + "/states", "states must be strings");
        return;
      }
      a.states.push_back(s.get<std::string>());
    }
    if (a.states.size() > 64) {
      error(ptr + "/states", "at most 64 states per automaton");
      return;
    }
    if (!j.contains("initial") || !j["initial"].is_string()) {
      error(ptr, "automaton requires an initial state");
      return;
    }
    auto init = a.state_index(j["initial"].get<std::string>());
    if (!init) {
      error(ptr + "/initial", "initial state is not in states");
      return;
    }
    a.initial = *init;

    struct RawTransition {
      uint8_t from, to;
      std::string event;
      bool err;
      std::string msg;
    };
    std::vector<RawTransition> raw;
    if (j.contains("transitions")) {
      if (!j["transitions"].is_array()) {
        error(ptr + "/transitions", "transitions must be an array");
      } else {
        int i = 0;
        for (const auto& t : j["transitions"]) {
          std::string tptr = ptr + "/transitions/" + std::to_string(i++);
          auto f = t.contains("from") && t["from"].is_string()
                       ? a.state_index(t["from"].get<std::string>())
                       : std::nullopt;
          auto to = t.contains("to") && t["to"].is_string()
                        ? a.state_index(t["to"].get<std::string>())
                        : std::nullopt;
          if (!f || !to || !t.contains("event") || !t["event"].is_string()) {
            error(tptr, "transition requires from/event/to with known states");
            continue;
          }
          RawTransition rt;
          rt.from = *f;
          rt.to = *to;
          rt.event = t["event"].get<std::string>();
          rt.err = t.contains("error");
          if (rt.err) {
            rt.msg = t["error"].is_string() ? t["error"].get<std::string>() : "error transition";
          }
          raw.push_back(std::move(rt));
        }
      }
    }

    for (const auto& rt : raw) {
      if (cfg.event_index(rt.event) < 0) cfg.event_names.push_back(rt.event);
    }
    a.num_events = cfg.event_names.size();
    a.table.assign(a.states.size() * a.num_events, {});
    for (const auto& rt : raw) {
      size_t ev = static_cast<size_t>(cfg.event_index(rt.event));
      auto& cell = a.table[rt.from * a.num_events + ev];
      if (cell.present) {
        error(ptr + "/transitions", "duplicate transition for state '" + a.states[rt.from] +
                                        "' on event '" + rt.event + "'");
      }
      cell.present = true;
      cell.to = rt.to;
      cell.error = rt.err;
      cell.message = rt.msg;
    }

    int existing = cfg.automaton_index(a.name);
    if (existing >= 0) {
      cfg.automata[existing] = std::move(a);
    } else {
      cfg.automata.push_back(std::move(a));
    }
  }

  void load_model(const json& j, const std::string& ptr) {
    MethodModel m;
    m.order = static_cast<int>(cfg.models.size());
    std::string match = j.value("match", "");
    if (match.empty()) {
      error(ptr, "method model requires a match pattern");
      return;
    }
    // MJ has no packages: the last segment is the method (or *), the one
    // before it the class (or *); any prefix segments are ignored.
    std::vector<std::string> segs;
    size_t start = 0;
    for (size_t i = 0; i <= match.size(); ++i) {
      if (i == match.size() || match[i] == '.') {
        segs.push_back(match.substr(start, i - start));
        start = i + 1;
      }
    }
    if (segs.size() == 1) {
      if (segs[0] == "*") {
        m.level = MethodModel::Level::Package;
      } else {
        error(ptr + "/match", "single-segment match must be '*'");
        return;
      }
    } else {
      std::string cls = segs[segs.size() - 2];
      std::string meth = segs[segs.size() - 1];
      if (cls == "*") {
        m.level = MethodModel::Level::Package;
        if (meth != "*") {
          error(ptr + "/match", "'*.<method>' patterns are not supported");
          return;
        }
      } else if (meth == "*") {
        m.level = MethodModel::Level::Class;
        m.cls = cls;
      } else {
        m.level = MethodModel::Level::Method;
        m.cls = cls;
        m.method = meth;
      }
    }

    if (j.contains("mode")) {
      std::string mode = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
      if (mode == "ignore") m.ignore = true;
      else if (mode == "analyze") m.ignore = false;
      else error(ptr + "/mode", "mode must be 'analyze' or 'ignore'");
    }
    if (j.contains("context")) {
      std::string c = j["context"].is_string() ? j["context"].get<std::string>() : "";
      if (c == "none") m.context = ContextPolicy::Insensitive;
      else if (c == "this") m.context = ContextPolicy::ThisSensitive;
      else if (c == "all") m.context = ContextPolicy::AllArgs;
      else error(ptr + "/context", "context must be 'none', 'this', or 'all'");
    }
    if (j.contains("return_type")) {
      if (j["return_type"].is_string()) m.return_type = j["return_type"].get<std::string>();
      else error(ptr + "/return_type", "return_type must be a type name");
    }
    if (j.contains("return")) {
      const json& r = j["return"];
      m.return_specified = true;
      if (r.is_string()) {
        if (r.get<std::string>() != "from_args_merge") {
          error(ptr + "/return", "return must be 'from_args_merge' or a lattice->member map");
        }
        // empty return_fixed means every lattice uses from-args
      } else if (r.is_object()) {
        for (auto it = r.begin(); it != r.end(); ++it) {
          int li = cfg.lattice_index(it.key());
          if (li < 0) {
            error(ptr + "/return/" + it.key(), "unknown lattice '" + it.key() + "'");
            continue;
          }
          if (auto mem = member(cfg.lattices[li], it.value(), ptr + "/return/" + it.key())) {
            m.return_fixed[li] = *mem;
          }
        }
      } else {
        error(ptr + "/return", "return must be 'from_args_merge' or a lattice->member map");
      }
    }
    if (j.contains("params")) {
      if (!j["params"].is_array()) {
        error(ptr + "/params", "params must be an array");
      } else {
        int i = 0;
        for (const auto& p : j["params"]) {
          std::string pptr = ptr + "/params/" + std::to_string(i++);
          int index = p.value("index", -1);
          if (index < 0) {
            error(pptr, "param entry requires a non-negative index");
            continue;
          }
          if (!p.contains("require") || !p["require"].is_object()) {
            error(pptr, "param entry requires a 'require' map");
            continue;
          }
          for (auto it = p["require"].begin(); it != p["require"].end(); ++it) {
            int li = cfg.lattice_index(it.key());
            if (li < 0) {
              error(pptr + "/require/" + it.key(), "unknown lattice '" + it.key() + "'");
              continue;
            }
            if (auto mem = member(cfg.lattices[li], it.value(), pptr + "/require/" + it.key())) {
              m.requires_.push_back({index, li, *mem});
            }
          }
        }
      }
    }
    if (j.contains("callbacks")) {
      if (!j["callbacks"].is_array()) {
        error(ptr + "/callbacks", "callbacks must be an array");
      } else {
        int i = 0;
        for (const auto& c : j["callbacks"]) {
          std::string cptr = ptr + "/callbacks/" + std::to_string(i++);
          int arg = c.value("arg", -1);
          std::string method = c.value("method", "");
          if (arg < 0 || method.empty()) {
            error(cptr, "callback requires arg index and method name");
            continue;
          }
          m.callbacks.push_back({arg, method});
        }
      }
    }
    if (j.contains("event")) {
      if (j["event"].is_string()) m.event = j["event"].get<std::string>();
      else error(ptr + "/event", "event must be a name");
    }
    if (j.contains("replace")) {
      if (j["replace"].is_string()) m.replace = j["replace"].get<std::string>();
      else error(ptr + "/replace", "replace must be 'Class.method'");
    }
    cfg.models.push_back(std::move(m));
  }

  void load(const std::string& text) {
    json root;
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      error("", std::string("invalid JSON: ") + e.what());
      return;
    }
    if (!root.is_object()) {
      error("", "resource file must be a JSON object");
      return;
    }
    if (root.contains("subtypes")) {
      int i = 0;
      for (const auto& l : root["subtypes"]) {
        load_lattice(l, "/subtypes/" + std::to_string(i++));
      }
    }
    if (root.contains("automata")) {
      int i = 0;
      for (const auto& a : root["automata"]) {
        load_automaton(a, "/automata/" + std::to_string(i++));
      }
    }
    if (root.contains("methods")) {
      int i = 0;
      for (const auto& m : root["methods"]) {
        load_model(m, "/methods/" + std::to_string(i++));
      }
    }
    for (auto it = root.begin(); it != root.end(); ++it) {
      if (it.key() != "subtypes" && it.key() != "automata" && it.key() != "methods") {
        error("/" + it.key(), "unknown top-level key");
      }
    }
  }
};

uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

} // namespace

void load_config_text(const std::string& text, const std::string& path, Config& cfg,
                      DiagList& diags) {
  Loader loader{cfg, diags, path};
  loader.load(text);
  cfg.fingerprint = fnv1a(text, cfg.fingerprint ? cfg.fingerprint : 1469598103934665603ull);
}

void validate_config(Config& cfg, DiagList& diags) {
  if (cfg.lattices.size() > 8) {
    diags.push_back({DiagPhase::Config, "", 0, 0, "at most 8 subtype lattices are supported"});
  }
  for (const auto& lat : cfg.lattices) {
    size_t n = lat.size();
    for (size_t a = 0; a < n; ++a) {
      if (lat.merge(a, a) != a) {
        diags.push_back({DiagPhase::Config, lat.name, 0, 0,
                         "merge is not idempotent on '" + lat.values[a] + "'"});
      }
      for (size_t b = 0; b < n; ++b) {
        if (lat.merge(a, b) != lat.merge(b, a)) {
          diags.push_back({DiagPhase::Config, lat.name, 0, 0,
                           "merge is not commutative on '" + lat.values[a] + "," +
                               lat.values[b] + "'"});
        }
        for (size_t c = 0; c < n; ++c) {
          uint8_t l = lat.merge(lat.merge(a, b), c);
          uint8_t r = lat.merge(a, lat.merge(b, c));
          if (l != r) {
            diags.push_back({DiagPhase::Config, lat.name, 0, 0,
                             "merge is not associative on '" + lat.values[a] + "," +
                                 lat.values[b] + "," + lat.values[c] + "'"});
          }
        }
      }
    }
  }

  // annotation names must be unambiguous across lattices
  cfg.annotations.clear();
  for (size_t li = 0; li < cfg.lattices.size(); ++li) {
    for (const auto& [name, mem] : cfg.lattices[li].annotation_members) {
      auto it = cfg.annotations.find(name);
      if (it != cfg.annotations.end() && it->second.first != static_cast<int>(li)) {
        diags.push_back({DiagPhase::Config, cfg.lattices[li].name, 0, 0,
                         "annotation '" + name + "' is claimed by two lattices"});
      }
      cfg.annotations[name] = {static_cast<int>(li), mem};
    }
  }

  // automata tables may predate later event interning; widen them
  for (auto& a : cfg.automata) {
    if (a.num_events != cfg.event_names.size()) {
      std::vector<AutomatonDef::Transition> wide(a.states.size() * cfg.event_names.size());
      for (size_t s = 0; s < a.states.size(); ++s) {
        for (size_t e = 0; e < a.num_events; ++e) {
          wide[s * cfg.event_names.size() + e] = a.table[s * a.num_events + e];
        }
      }
      a.table = std::move(wide);
      a.num_events = cfg.event_names.size();
    }
  }
}

Config load_config(const std::vector<std::string>& paths, DiagList& diags) {
  Config cfg;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) {
      diags.push_back({DiagPhase::Config, p, 0, 0, "cannot open resource file"});
      continue;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    load_config_text(ss.str(), p, cfg, diags);
  }
  validate_config(cfg, diags);
  return cfg;
}

} // namespace mjflow
