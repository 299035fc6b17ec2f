#include <iostream>

#include <CLI11.hpp>

#include <mjflow/json_out.hpp>
#include <mjflow/watch.hpp>

namespace {

using namespace mjflow;

struct CommonArgs {
  std::string project_dir;
  std::vector<std::string> resources;
  int threads = 4;
  uint64_t seed = 0;
  uint64_t step_budget = 10000000;
  std::string format = "text";
  bool profile = false;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("dir", args->project_dir, "project directory with .mj sources")->required();
  cmd->add_option("--resource", args->resources,
                  "resource file (repeatable; later files override earlier ones)");
  cmd->add_option("--threads", args->threads, "analysis worker threads")->default_val(4);
  cmd->add_option("--seed", args->seed, "work-queue tie-break seed");
  cmd->add_option("--step-budget", args->step_budget, "abstract instruction budget");
}

EngineOptions engine_options(const CommonArgs& args) {
  EngineOptions opts;
  opts.threads = args.threads;
  opts.seed = args.seed;
  opts.step_budget = args.step_budget;
  return opts;
}

int load_session(const CommonArgs& args, std::unique_ptr<AnalysisSession>* session) {
  DiagList diags;
  Config config = load_config(args.resources, diags);
  if (!diags.empty()) {
    for (const auto& d : diags) std::cerr << d.to_string() << "\n";
    return 1;
  }
  std::vector<SourceText> sources;
  for (const std::string& path : find_mj_files(args.project_dir)) {
    SourceText st;
    st.path = path;
    if (!read_text_file(path, &st.text)) {
      std::cerr << path << ": cannot read file\n";
      return 1;
    }
    sources.push_back(std::move(st));
  }
  if (sources.empty()) {
    std::cerr << args.project_dir << ": no .mj files found\n";
    return 1;
  }
  *session = std::make_unique<AnalysisSession>(std::move(config));
  LoadOutcome outcome = (*session)->load(sources);
  if (!outcome.ok) {
    for (const auto& d : outcome.diags) std::cerr << d.to_string() << "\n";
    return 1;
  }
  return 0;
}

int cmd_analyze(const CommonArgs& args) {
  std::unique_ptr<AnalysisSession> session;
  if (int rc = load_session(args, &session)) return rc;
  AnalysisResult result = session->analyze(engine_options(args));
  if (result.status == AnalysisStatus::BudgetExceeded) {
    std::cerr << "error: step budget exceeded after " << result.steps
              << " abstract instructions\n";
    return 1;
  }
  for (const std::string& note : result.notes) std::cerr << "note: " << note << "\n";

  if (args.format == "json") {
    std::cout << problems_to_json(*session, result.problems) << "\n";
  } else {
    for (const Problem& p : result.problems) {
      auto loc = session->locate(p);
      std::cout << loc.file << ":" << loc.line << ": " << p.severity << ": " << p.message << " ["
                << p.name << "] (" << p.id << ")\n";
    }
  }
  if (args.profile) {
    std::cout << "steps: " << result.steps << " calls: " << result.num_calls
              << " values: " << result.num_values << " sources: " << result.num_sources << "\n";
    for (const auto& [method, steps] : result.method_steps) {
      std::cout << "  " << steps << "\t" << method << "\n";
    }
  }
  std::cout << result.problems.size() << " problems\n";
  return result.problems.empty() ? 0 : 2;
}

int cmd_watch(const CommonArgs& args, int poll_ms) {
  WatchOptions opts;
  opts.project_dir = args.project_dir;
  opts.resource_paths = args.resources;
  opts.engine = engine_options(args);
  opts.poll_ms = poll_ms;
  return run_watch(opts);
}

int cmd_explain(const CommonArgs& args, const std::string& id, int paths) {
  std::unique_ptr<AnalysisSession> session;
  if (int rc = load_session(args, &session)) return rc;
  AnalysisResult result = session->analyze(engine_options(args));
  if (result.status == AnalysisStatus::BudgetExceeded) {
    std::cerr << "error: step budget exceeded\n";
    return 1;
  }
  ExplainOutcome outcome = explain(session->engine(), id, result.generation);
  if (!outcome.ok) {
    std::cerr << "error: " << outcome.error << "\n";
    return 1;
  }
  std::cout << graph_to_json(*session, outcome.graph) << "\n";
  if (paths > 0) {
    PathEnumerator en(outcome.graph);
    std::vector<int> fanout(outcome.graph.nodes.size(), 0);
    for (const ExplEdge& e : outcome.graph.edges) ++fanout[e.from];
    int shown = 0;
    while (shown < paths) {
      auto path = en.next();
      if (!path) {
        std::cout << "-- no more paths --\n";
        break;
      }
      ++shown;
      std::cout << "path " << shown << ":\n";
      for (int nid : *path) {
        const ExplNode& n = outcome.graph.nodes[nid];
        Problem fake;
        fake.method = n.method;
        fake.point = n.point;
        auto loc = session->locate(fake);
        std::cout << "  [" << n.kind << (fanout[nid] > 1 ? ", fork" : "") << "] " << loc.file
                  << ":" << loc.line << " " << loc.method;
        if (!n.desc.empty()) std::cout << " - " << n.desc;
        if (n.start) std::cout << " (start)";
        std::cout << "\n";
      }
    }
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"mjflow: incremental security flow analysis for MJ programs"};
  app.require_subcommand(1);

  CommonArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "run one full analysis and report problems");
  add_common(analyze, &analyze_args);
  analyze->add_option("--format", analyze_args.format, "output format: text or json")
      ->check(CLI::IsMember({"text", "json"}));
  analyze->add_flag("--profile", analyze_args.profile, "print per-method step counts");

  CommonArgs watch_args;
  int poll_ms = 300;
  CLI::App* watch = app.add_subcommand("watch", "watch the project and re-analyze on changes");
  add_common(watch, &watch_args);
  watch->add_option("--poll-ms", poll_ms, "filesystem polling interval")->default_val(300);

  CommonArgs explain_args;
  std::string problem_id;
  int paths = 0;
  CLI::App* explain_cmd =
      app.add_subcommand("explain", "print the explanation graph for a problem");
  add_common(explain_cmd, &explain_args);
  explain_cmd->add_option("--id", problem_id, "problem id to explain")->required();
  explain_cmd->add_option("--paths", paths, "also print the first K error-to-start paths");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(analyze_args);
    if (watch->parsed()) return cmd_watch(watch_args, poll_ms);
    if (explain_cmd->parsed()) return cmd_explain(explain_args, problem_id, paths);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
