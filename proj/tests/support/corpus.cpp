#include "support/corpus.hpp"

#include <filesystem>

#include <gtest/gtest.h>

namespace mjflow::test {

namespace fs = std::filesystem;

std::string corpus_dir() { return MJFLOW_CORPUS_DIR; }

CorpusProject load_corpus(const std::string& name,
                          const std::vector<std::string>& extra_resources) {
  CorpusProject out;
  std::string dir = corpus_dir() + "/" + name;
  for (const std::string& path : find_mj_files(dir)) {
    SourceText st;
    st.path = path;
    EXPECT_TRUE(read_text_file(path, &st.text)) << path;
    out.sources.push_back(std::move(st));
  }
  EXPECT_FALSE(out.sources.empty()) << "no sources in corpus " << name;
  out.resources.push_back(corpus_dir() + "/shared/security.json");
  std::string models = dir + "/models.json";
  if (fs::exists(models)) out.resources.push_back(models);
  for (const auto& r : extra_resources) out.resources.push_back(r);
  return out;
}

std::unique_ptr<AnalysisSession> make_session(const CorpusProject& project) {
  DiagList diags;
  Config config = load_config(project.resources, diags);
  EXPECT_TRUE(diags.empty()) << (diags.empty() ? "" : diags[0].to_string());
  auto session = std::make_unique<AnalysisSession>(std::move(config));
  LoadOutcome outcome = session->load(project.sources);
  EXPECT_TRUE(outcome.ok) << (outcome.diags.empty() ? "" : outcome.diags[0].to_string());
  return session;
}

std::vector<std::string> problem_ids(const std::vector<Problem>& problems) {
  std::vector<std::string> ids;
  for (const Problem& p : problems) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

AnalyzedCorpus analyze_corpus(const std::string& name, int threads, uint64_t seed,
                              const std::vector<std::string>& extra_resources) {
  AnalyzedCorpus out;
  out.session = make_session(load_corpus(name, extra_resources));
  EngineOptions opts;
  opts.threads = threads;
  opts.seed = seed;
  out.result = out.session->analyze(opts);
  EXPECT_EQ(out.result.status, AnalysisStatus::Complete);
  return out;
}

size_t total_points(AnalysisSession& session) {
  size_t total = 0;
  const BoundProgram& prog = session.program();
  for (MethodId m = 0; m < prog.methods.size(); ++m) {
    const MethodInfo& mi = prog.methods[m];
    if (!mi.defined || mi.builtin || !mi.has_body()) continue;
    const MethodPlan* plan = session.engine().plan_for(m);
    if (plan) total += plan->size();
  }
  return total;
}

std::vector<SourceText> generate_big_project(int files, int classes_per_file) {
  std::vector<SourceText> out;
  int cls = 0;
  for (int f = 0; f < files; ++f) {
    std::string text;
    for (int k = 0; k < classes_per_file; ++k, ++cls) {
      std::string c = std::to_string(cls);
      text += "class Mod" + c + " {\n";
      text += "  string cache;\n";
      text += "  int hits;\n";
      text += "  Mod" + c + "() {\n    cache = \"m" + c + "\";\n    hits = 0;\n  }\n";
      text += "  string produce(string x) {\n    hits = hits + 1;\n    return cache + x;\n  }\n";
      text += "  int weigh(int n) {\n";
      text += "    int total = 0;\n    int i = 0;\n";
      text += "    while (i < n) {\n      total = total + i;\n      i = i + 1;\n    }\n";
      text += "    return total;\n  }\n";
      text += "  void handle() {\n";
      text += "    int w = weigh(" + std::to_string(3 + cls % 5) + ");\n";
      text += "    string q = produce(\"q\" + w);\n";
      if (cls % 17 == 3) {
        text += "    Db.query(q + Http.param());\n"; // seeded taint flow
      } else {
        text += "    Db.query(\"select \" + q);\n";
      }
      text += "  }\n";
      text += "}\n";
    }
    if (f == 0) {
      text += "class Http { static native string param(); }\n";
      text += "class Db { static native void query(string sql); }\n";
      text += "class BigMain {\n  static void main() {\n";
      for (int k = 0; k < files * classes_per_file; ++k) {
        text += "    Mod" + std::to_string(k) + " m" + std::to_string(k) + " = new Mod" +
                std::to_string(k) + "();\n";
        text += "    m" + std::to_string(k) + ".handle();\n";
      }
      text += "  }\n}\n";
    }
    SourceText st;
    st.path = "big/mod" + std::to_string(f) + ".mj";
    st.text = std::move(text);
    out.push_back(std::move(st));
  }
  return out;
}

} // namespace mjflow::test
