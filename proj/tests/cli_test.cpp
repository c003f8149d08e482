#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <sstream>

#include "fixtures.hpp"
#include "json.hpp"
#include "synthetic.hpp"
#include "wtw/evaluation.hpp"

using namespace wtw;
using wtw::testing::slurp;
using wtw::testing::TempDir;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args, const TempDir& dir) {
  const std::string cmd = std::string(WTW_CLI) + " " + args + " 2>" + (dir / "stderr.txt").string();
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

/// Writes the synthetic bitext, gold standard and class tables into `dir`.
wtw::testing::SyntheticData write_fixture(const TempDir& dir, std::size_t segments = 200) {
  auto data = wtw::testing::make_synthetic({.segments = segments, .gold_segments = 30});
  write_bitext(data.bitext, dir / "s.txt", dir / "t.txt");
  std::ostringstream gold;
  for (const auto& [annotator, segs] : data.gold.annotations) {
    for (const auto& [id, links] : segs) {
      for (const auto& l : links) {
        auto pos = [](Position p) { return p == kNullPosition ? std::string("-") : std::to_string(p); };
        gold << annotator << '\t' << id << '\t' << pos(l.src) << '\t' << pos(l.tgt) << '\n';
      }
    }
  }
  dir.write("gold.tsv", gold.str());
  std::string cs, ct;
  for (int i = 0; i < 12; ++i) {
    cs += "f" + std::string(i < 10 ? "0" : "") + std::to_string(i) + "\tF\n";
    ct += "g" + std::string(i < 10 ? "0" : "") + std::to_string(i) + "\tF\n";
  }
  dir.write("cs.tsv", cs + ".\tEOS\n");
  dir.write("ct.tsv", ct + ".\tEOS\n");
  return data;
}

std::string bitext_args(const TempDir& dir) {
  return "--src " + (dir / "s.txt").string() + " --tgt " + (dir / "t.txt").string();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Cli, TrainWritesModelLogAndManifest) {
  TempDir dir;
  write_fixture(dir);
  auto r = run_cli("train --method A " + bitext_args(dir) + " --out " + (dir / "m.tsv").string(), dir);
  ASSERT_EQ(r.exit_code, 0) << slurp(dir / "stderr.txt");
  EXPECT_EQ(slurp(dir / "m.tsv").rfind("#method=A\t", 0), 0u);

  auto log = lines_of(slurp(dir / "m.tsv.convergence.tsv"));
  ASSERT_GE(log.size(), 2u);
  EXPECT_EQ(log[0], "iteration\tdelta");
  EXPECT_EQ(log[1], "1\t1");

  auto manifest = nlohmann::json::parse(slurp(dir / "m.tsv.manifest.json"));
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_EQ(manifest["seed"], 0);
  EXPECT_EQ(manifest["inputs"]["src"]["sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(manifest.contains("toolkit_version"));
  EXPECT_TRUE(manifest.contains("wall_time_seconds"));
  EXPECT_EQ(manifest["convergence"]["iterations"].get<std::size_t>(), log.size() - 1);
  EXPECT_EQ(manifest["config"]["method"], "A");
}

TEST(Cli, MaxItersOneLogsOneIteration) {
  TempDir dir;
  write_fixture(dir);
  auto r = run_cli("train --method B --max-iters 1 " + bitext_args(dir) + " --out " + (dir / "m.tsv").string(),
                   dir);
  ASSERT_EQ(r.exit_code, 0) << slurp(dir / "stderr.txt");
  EXPECT_EQ(lines_of(slurp(dir / "m.tsv.convergence.tsv")).size(), 2u);
  EXPECT_NE(slurp(dir / "m.tsv").find("iterations=1\t"), std::string::npos);
  EXPECT_NE(slurp(dir / "stderr.txt").find("not converged"), std::string::npos);
}

TEST(Cli, ConfigFileIsOverriddenByFlags) {
  TempDir dir;
  write_fixture(dir);
  dir.write("run.cfg", "# training setup\nmethod = B\nmax-iters = 1\n");
  const std::string base = "train --config " + (dir / "run.cfg").string() + " " + bitext_args(dir);
  ASSERT_EQ(run_cli(base + " --out " + (dir / "a.tsv").string(), dir).exit_code, 0);
  EXPECT_EQ(slurp(dir / "a.tsv").rfind("#method=B\titerations=1\t", 0), 0u);
  ASSERT_EQ(run_cli(base + " --max-iters 2 --out " + (dir / "b.tsv").string(), dir).exit_code, 0);
  EXPECT_EQ(slurp(dir / "b.tsv").rfind("#method=B\titerations=2\t", 0), 0u);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  write_fixture(dir);
  const std::string out = " --out " + (dir / "m.tsv").string();
  EXPECT_EQ(run_cli("train --method C " + bitext_args(dir) + out, dir).exit_code, 1);
  EXPECT_EQ(run_cli("train --method Q " + bitext_args(dir) + out, dir).exit_code, 1);
  EXPECT_EQ(run_cli("train --method A", dir).exit_code, 1);
  EXPECT_EQ(run_cli("frobnicate", dir).exit_code, 1);
  EXPECT_EQ(run_cli("train --method A --src " + (dir / "nope").string() + " --tgt " +
                        (dir / "t.txt").string() + out,
                    dir)
                .exit_code,
            2);
  dir.write("empty.txt", "");
  EXPECT_EQ(run_cli("train --method A --src " + (dir / "empty.txt").string() + " --tgt " +
                        (dir / "empty.txt").string() + out,
                    dir)
                .exit_code,
            3);

  ASSERT_EQ(run_cli("train --method A " + bitext_args(dir) + out, dir).exit_code, 0);
  const std::string eval = "evaluate --model " + (dir / "m.tsv").string() + " " + bitext_args(dir);
  EXPECT_EQ(run_cli(eval + " --gold " + (dir / "missing.tsv").string(), dir).exit_code, 2);
  dir.write("bad.tsv", "a1\t1\t0\n");
  EXPECT_EQ(run_cli(eval + " --gold " + (dir / "bad.tsv").string(), dir).exit_code, 2);
  EXPECT_EQ(run_cli(eval + " --gold " + (dir / "gold.tsv").string() + " --open-class-only", dir).exit_code, 1);
  EXPECT_EQ(run_cli(eval + " --gold " + (dir / "gold.tsv").string() + " --task best", dir).exit_code, 1);
}

TEST(Cli, EvaluateMatchesLibrary) {
  TempDir dir;
  auto data = write_fixture(dir);
  ASSERT_EQ(run_cli("train --method C --classes-src " + (dir / "cs.tsv").string() + " --classes-tgt " +
                        (dir / "ct.tsv").string() + " " + bitext_args(dir) + " --out " +
                        (dir / "m.tsv").string(),
                    dir)
                .exit_code,
            0);
  std::ifstream model_in(dir / "m.tsv");
  auto model = read_model(model_in);
  auto bitext = load_bitext(dir / "s.txt", dir / "t.txt");
  auto gold = load_gold(dir / "gold.tsv");

  for (const char* task : {"single-best", "whole-dist"}) {
    auto r = run_cli("evaluate --model " + (dir / "m.tsv").string() + " " + bitext_args(dir) + " --gold " +
                         (dir / "gold.tsv").string() + " --task " + task,
                     dir);
    ASSERT_EQ(r.exit_code, 0) << slurp(dir / "stderr.txt");
    std::ostringstream expected;
    write_evaluation(expected, evaluate(model, bitext, gold, *parse_task(task)));
    EXPECT_EQ(r.out, expected.str());
  }

  auto open = run_cli("evaluate --model " + (dir / "m.tsv").string() + " " + bitext_args(dir) + " --gold " +
                          (dir / "gold.tsv").string() + " --open-class-only --classes-src " +
                          (dir / "cs.tsv").string() + " --classes-tgt " + (dir / "ct.tsv").string() +
                          " --out " + (dir / "report.tsv").string(),
                      dir);
  ASSERT_EQ(open.exit_code, 0) << slurp(dir / "stderr.txt");
  std::ostringstream expected;
  write_evaluation(expected, evaluate(model, bitext, gold, Task::SingleBest, &data.classes));
  EXPECT_EQ(slurp(dir / "report.tsv"), expected.str());
  EXPECT_TRUE(std::filesystem::exists(dir / "report.tsv.manifest.json"));
}

TEST(Cli, PerfectModelScoresOne) {
  TempDir dir;
  auto data = wtw::testing::make_synthetic({.segments = 100, .function_words = 0, .drop_rate = 0,
                                            .insert_rate = 0, .sentence_marks = false});
  write_bitext(data.bitext, dir / "s.txt", dir / "t.txt");
  std::ostringstream gold;
  for (const auto& [id, links] : data.gold.annotations.at("a1")) {
    for (const auto& l : links) gold << "a1\t" << id << '\t' << l.src << '\t' << l.tgt << '\n';
  }
  dir.write("gold.tsv", gold.str());
  PairMap<double> table;
  for (const auto& [s, t] : data.lexicon) {
    auto u = data.bitext.src_vocab().find(s);
    auto v = data.bitext.tgt_vocab().find(t);
    if (u && v) table[pack({*u, *v})] = 1;
  }
  auto model = TranslationModel::from_conditionals(data.bitext.src_vocab_ptr(), data.bitext.tgt_vocab_ptr(),
                                                   table, table, Method::Model1);
  {
    std::ofstream out(dir / "m.tsv");
    write_model(out, model);
  }
  auto r = run_cli("evaluate --model " + (dir / "m.tsv").string() + " " + bitext_args(dir) + " --gold " +
                       (dir / "gold.tsv").string(),
                   dir);
  ASSERT_EQ(r.exit_code, 0) << slurp(dir / "stderr.txt");
  EXPECT_NE(r.out.find("mean\taveraged\t1\t1\t1\n"), std::string::npos) << r.out;
}

TEST(Cli, LexiconMatchesLibrary) {
  TempDir dir;
  write_fixture(dir, 300);
  ASSERT_EQ(run_cli("train --method B " + bitext_args(dir) + " --out " + (dir / "m.tsv").string(), dir).exit_code,
            0);
  std::ifstream model_in(dir / "m.tsv");
  auto model = read_model(model_in);
  auto bitext = load_bitext(dir / "s.txt", dir / "t.txt");
  auto cooc = count_cooc(bitext);

  auto r = run_cli("lexicon --model " + (dir / "m.tsv").string() + " " + bitext_args(dir) + " --min-like 0 --out " +
                       (dir / "lex.tsv").string(),
                   dir);
  ASSERT_EQ(r.exit_code, 0) << slurp(dir / "stderr.txt");
  auto entries = extract_lexicon(model, 0, &bitext, &cooc);
  std::ostringstream lex, plateaus;
  write_lexicon(lex, entries);
  write_plateaus(plateaus, plateau_summary(entries));
  EXPECT_EQ(slurp(dir / "lex.tsv"), lex.str());
  EXPECT_EQ(slurp(dir / "lex.tsv.plateaus.tsv"), plateaus.str());
  EXPECT_EQ(r.out.rfind("entries\t" + std::to_string(entries.size()) + "\nplateaus\t" +
                            std::to_string(plateau_summary(entries).size()) + "\n",
                        0),
            0u);
  EXPECT_NE(r.out.find("recall_combined\t"), std::string::npos);

  ASSERT_EQ(run_cli("lexicon --model " + (dir / "m.tsv").string() + " --min-like 10 --out " +
                        (dir / "strict.tsv").string(),
                    dir)
                .exit_code,
            0);
  std::set<std::string> loose;
  for (const auto& line : lines_of(lex.str())) loose.insert(line.substr(0, line.find('\t', line.find('\t') + 1)));
  for (const auto& line : lines_of(slurp(dir / "strict.tsv"))) {
    EXPECT_TRUE(loose.count(line.substr(0, line.find('\t', line.find('\t') + 1)))) << line;
  }
  ASSERT_EQ(run_cli("lexicon --model " + (dir / "m.tsv").string() + " --min-like 1e9 --out " +
                        (dir / "none.tsv").string(),
                    dir)
                .exit_code,
            0);
  EXPECT_EQ(slurp(dir / "none.tsv"), "");
}

TEST(Cli, AnalyzeMultiRare) {
  TempDir dir;
  auto r = run_cli("analyze multi-rare --gamma 1,2 --p 0.5", dir);
  ASSERT_EQ(r.exit_code, 0) << slurp(dir / "stderr.txt");
  EXPECT_EQ(r.out, "gamma,p,probability\n1,0.5,0\n2,0.5,0.25\n");
  auto manifest = nlohmann::json::parse(slurp(dir / "stderr.txt"));
  EXPECT_EQ(manifest["command"], "analyze multi-rare");
}

TEST(Cli, AnalyzeSingletonsUsesSeed) {
  TempDir dir;
  auto data = write_fixture(dir);
  const std::string cmd = "analyze singletons --corpus " + (dir / "s.txt").string() + " --sizes 100,1000 --trials 3";
  auto a = run_cli(cmd + " --seed 4", dir);
  auto b = run_cli(cmd + " --seed 4", dir);
  ASSERT_EQ(a.exit_code, 0) << slurp(dir / "stderr.txt");
  EXPECT_EQ(a.out, b.out);
  auto lines = lines_of(a.out);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "size,fraction");
  EXPECT_EQ(lines[1].rfind("100,", 0), 0u);
  EXPECT_EQ(run_cli("analyze singletons --corpus " + (dir / "s.txt").string() + " --sizes 100000000", dir).exit_code,
            1);
}

TEST(Cli, HistogramRowsSumToPairCount) {
  TempDir dir;
  auto data = write_fixture(dir, 300);
  auto r = run_cli("analyze link-ratio-histogram " + bitext_args(dir) + " --min-cooc 2 --bins 10", dir);
  ASSERT_EQ(r.exit_code, 0) << slurp(dir / "stderr.txt");
  auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 11u);
  EXPECT_EQ(lines[0], "bin_low,bin_high,pairs");
  std::size_t sum = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) sum += std::stoul(lines[i].substr(lines[i].rfind(',') + 1));
  std::size_t pairs = 0;
  const auto cooc = count_cooc(data.bitext);
  for (const auto& [k, n] : cooc.word_cells()) pairs += n >= 2;
  EXPECT_EQ(sum, pairs);
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  TempDir dir;
  write_fixture(dir, 600);
  for (const char* method : {"A", "B", "model1"}) {
    const std::string base = std::string("train --method ") + method + " --max-iters 4 " + bitext_args(dir);
    ASSERT_EQ(run_cli(base + " --threads 1 --out " + (dir / "one.tsv").string(), dir).exit_code, 0);
    ASSERT_EQ(run_cli(base + " --threads 8 --out " + (dir / "eight.tsv").string(), dir).exit_code, 0);
    EXPECT_EQ(slurp(dir / "one.tsv"), slurp(dir / "eight.tsv")) << method;
    EXPECT_EQ(slurp(dir / "one.tsv.convergence.tsv"), slurp(dir / "eight.tsv.convergence.tsv")) << method;
  }
}
