// wtw: train, evaluate and inspect word-to-word translation models.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wtw/cooc.hpp"
#include "wtw/corpus.hpp"
#include "wtw/estimation.hpp"
#include "wtw/evaluation.hpp"
#include "wtw/model.hpp"

#ifndef WTW_VERSION
#define WTW_VERSION "dev"
#endif

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

/// Bad flag combinations that CLI11 cannot express; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_of(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw wtw::InputError("cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, in.gcount());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw wtw::InputError("cannot write " + path);
  return out;
}

/// Expands `--config FILE` into `--key=value` arguments placed right after
/// the subcommand names, so flags given on the command line win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t used = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      used = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      used = 1;
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) throw wtw::InputError("cannot open config file " + path);
    std::vector<std::string> extra;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw wtw::InputError(path + " line " + std::to_string(line_no) + ": expected key=value");
      }
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
      };
      extra.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + used));
    std::size_t at = 1;
    while (at < args.size() && args[at].rfind("-", 0) != 0) ++at;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
    return args;
  }
  return args;
}

json options_snapshot(const CLI::App& app) {
  json out = json::object();
  for (const auto* opt : app.get_options()) {
    if (opt->get_name() == "--help") continue;
    std::string name = opt->get_name();
    while (!name.empty() && name.front() == '-') name.erase(0, 1);
    const auto& results = opt->results();
    if (results.empty()) {
      out[name] = opt->get_default_str();
    } else if (results.size() == 1) {
      out[name] = results.front();
    } else {
      out[name] = results;
    }
  }
  return out;
}

struct Manifest {
  json doc;
  Clock::time_point start = Clock::now();

  Manifest(std::string command, const std::vector<std::string>& args) {
    doc["command"] = std::move(command);
    doc["arguments"] = json(std::vector<std::string>(args.begin() + 1, args.end()));
    doc["toolkit_version"] = WTW_VERSION;
  }

  void input(const std::string& role, const std::string& path) {
    if (path.empty()) return;
    doc["inputs"][role] = {{"path", path}, {"sha256", sha256_of(path)}};
  }

  void write(const std::string& path) {
    doc["wall_time_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
    if (path.empty()) {
      std::cerr << doc.dump() << '\n';
      return;
    }
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
  }
};

json convergence_json(const wtw::ConvergenceReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"deltas", r.deltas},
          {"warnings", r.warnings}};
}

std::optional<wtw::ClassMaps> load_class_maps(const std::string& src, const std::string& tgt) {
  if (src.empty() && tgt.empty()) return std::nullopt;
  wtw::ClassMaps maps;
  if (!src.empty()) maps.src = wtw::load_classes(src);
  if (!tgt.empty()) maps.tgt = wtw::load_classes(tgt);
  return maps;
}

wtw::TranslationModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw wtw::InputError("cannot open model file " + path);
  return wtw::read_model(in);
}

std::vector<std::string> read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw wtw::InputError("cannot open " + path);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

int run(int argc, char** argv) {
  std::vector<std::string> args = expand_config(std::vector<std::string>(argv, argv + argc));

  CLI::App app{"Word-to-word translation models from parallel text"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", WTW_VERSION);

  std::string src, tgt, out, classes_src, classes_tgt, model_path, gold_path, manifest_path;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto common_bitext = [&](CLI::App* sub, bool required) {
    auto* s = sub->add_option("--src", src, "Source half, one segment per line");
    auto* t = sub->add_option("--tgt", tgt, "Target half, one segment per line");
    if (required) {
      s->required();
      t->required();
    }
  };
  auto common_run = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--manifest", manifest_path, "Run manifest path (default: <out>.manifest.json)");
    sub->add_option("--config", "key=value file; flags override it");
  };

  // train
  auto* train = app.add_subcommand("train", "Estimate a translation model");
  std::string method_text = "A";
  wtw::TrainConfig cfg;
  bool no_smoothing = false;
  common_bitext(train, true);
  train->add_option("--method", method_text, "A, B, C or model1")->capture_default_str();
  train->add_option("--out", out, "Model file")->required();
  train->add_option("--max-iters", cfg.max_iters)->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--threshold", cfg.convergence_threshold, "Stop when 1 - Dice falls below this")
      ->capture_default_str();
  train->add_option("--min-class-mass", cfg.min_class_mass)->capture_default_str();
  train->add_flag("--no-smoothing", no_smoothing, "Skip Good-Turing smoothing of the initial counts");
  train->add_option("--classes-src", classes_src, "Source word classes (Method C)");
  train->add_option("--classes-tgt", classes_tgt, "Target word classes (Method C)");
  common_run(train);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a model against gold-standard links");
  std::string task_text = "single-best";
  bool open_class_only = false;
  common_bitext(evaluate, true);
  evaluate->add_option("--model", model_path)->required();
  evaluate->add_option("--gold", gold_path)->required();
  evaluate->add_option("--task", task_text, "single-best or whole-dist")->capture_default_str();
  evaluate->add_flag("--open-class-only", open_class_only);
  evaluate->add_option("--classes-src", classes_src);
  evaluate->add_option("--classes-tgt", classes_tgt);
  evaluate->add_option("--out", out, "Report file (default: stdout)");
  common_run(evaluate);

  // lexicon
  auto* lexicon = app.add_subcommand("lexicon", "Extract a translation lexicon");
  double min_like = -std::numeric_limits<double>::infinity();
  common_bitext(lexicon, false);
  lexicon->add_option("--model", model_path)->required();
  lexicon->add_option("--min-like", min_like, "Drop entries scoring below this");
  lexicon->add_option("--out", out, "Lexicon file")->required();
  common_run(lexicon);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Sparse-data and link statistics");
  analyze->require_subcommand(1);
  auto* singletons = analyze->add_subcommand("singletons", "Share of singleton tokens by sample size");
  std::string corpus;
  std::vector<std::size_t> sizes;
  int trials = 10;
  int frequency = 1;
  singletons->add_option("--corpus", corpus, "Whitespace-tokenized text")->required();
  singletons->add_option("--sizes", sizes, "Sample sizes")->required()->delimiter(',');
  singletons->add_option("--trials", trials)->capture_default_str()->check(CLI::PositiveNumber);
  singletons->add_option("--frequency", frequency, "Count types of this frequency")->capture_default_str();
  singletons->add_option("--out", out, "CSV file (default: stdout)");
  common_run(singletons);

  auto* multi_rare = analyze->add_subcommand("multi-rare", "Chance of more than one rare co-occurring word");
  std::vector<int> gammas;
  std::vector<double> ps;
  multi_rare->add_option("--gamma", gammas)->required()->delimiter(',')->check(CLI::NonNegativeNumber);
  multi_rare->add_option("--p", ps)->required()->delimiter(',')->check(CLI::Range(0.0, 1.0));
  multi_rare->add_option("--out", out, "CSV file (default: stdout)");
  common_run(multi_rare);

  auto* histogram = analyze->add_subcommand("link-ratio-histogram", "links/cooc distribution after training");
  int hist_iters = 1;
  double min_cooc = 5;
  std::size_t bins = 10;
  std::string hist_method = "A";
  common_bitext(histogram, true);
  histogram->add_option("--method", hist_method)->capture_default_str();
  histogram->add_option("--iterations", hist_iters)->capture_default_str()->check(CLI::PositiveNumber);
  histogram->add_option("--min-cooc", min_cooc)->capture_default_str();
  histogram->add_option("--bins", bins)->capture_default_str()->check(CLI::PositiveNumber);
  histogram->add_option("--classes-src", classes_src);
  histogram->add_option("--classes-tgt", classes_tgt);
  histogram->add_option("--out", out, "CSV file (default: stdout)");
  common_run(histogram);

  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  auto manifest_target = [&] {
    if (!manifest_path.empty()) return manifest_path;
    return out.empty() ? std::string() : out + ".manifest.json";
  };

  if (train->parsed()) {
    auto method = wtw::parse_method(method_text);
    if (!method) throw UsageError("unknown method '" + method_text + "'");
    if (*method == wtw::Method::C && (classes_src.empty() || classes_tgt.empty())) {
      throw UsageError("--method C needs --classes-src and --classes-tgt");
    }
    cfg.method = *method;
    cfg.smoothing = !no_smoothing;
    cfg.threads = threads;
    Manifest manifest("train", args);
    manifest.doc["config"] = options_snapshot(*train);
    manifest.doc["seed"] = seed;
    manifest.input("src", src);
    manifest.input("tgt", tgt);
    manifest.input("classes_src", classes_src);
    manifest.input("classes_tgt", classes_tgt);

    auto bitext = wtw::load_bitext(src, tgt);
    auto classes = load_class_maps(classes_src, classes_tgt);
    auto result = wtw::train(bitext, cfg, classes);
    {
      auto model_out = open_out(out);
      wtw::write_model(model_out, result.model);
    }
    {
      auto log = open_out(out + ".convergence.tsv");
      log << "iteration\tdelta\n";
      for (std::size_t i = 0; i < result.report.deltas.size(); ++i) {
        log << i + 1 << '\t' << wtw::format_double(result.report.deltas[i]) << '\n';
      }
    }
    for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
    manifest.doc["convergence"] = convergence_json(result.report);
    manifest.doc["outputs"] = {{"model", out}, {"convergence_log", out + ".convergence.tsv"}};
    manifest.write(manifest_target());
    return 0;
  }

  if (evaluate->parsed()) {
    auto task = wtw::parse_task(task_text);
    if (!task) throw UsageError("unknown task '" + task_text + "'");
    if (open_class_only && (classes_src.empty() || classes_tgt.empty())) {
      throw UsageError("--open-class-only needs --classes-src and --classes-tgt");
    }
    Manifest manifest("evaluate", args);
    manifest.doc["config"] = options_snapshot(*evaluate);
    manifest.doc["seed"] = seed;
    manifest.input("model", model_path);
    manifest.input("src", src);
    manifest.input("tgt", tgt);
    manifest.input("gold", gold_path);

    auto model = load_model(model_path);
    auto bitext = wtw::load_bitext(src, tgt);
    auto gold = wtw::load_gold(gold_path);
    auto classes = load_class_maps(classes_src, classes_tgt);
    auto report = wtw::evaluate(model, bitext, gold, *task, open_class_only ? &*classes : nullptr);
    if (out.empty()) {
      wtw::write_evaluation(std::cout, report);
    } else {
      auto o = open_out(out);
      wtw::write_evaluation(o, report);
    }
    manifest.write(manifest_target());
    return 0;
  }

  if (lexicon->parsed()) {
    Manifest manifest("lexicon", args);
    manifest.doc["config"] = options_snapshot(*lexicon);
    manifest.doc["seed"] = seed;
    manifest.input("model", model_path);
    manifest.input("src", src);
    manifest.input("tgt", tgt);

    auto model = load_model(model_path);
    std::optional<wtw::Bitext> bitext;
    std::optional<wtw::CoocTable> cooc;
    if (!src.empty() && !tgt.empty()) {
      bitext = wtw::load_bitext(src, tgt);
      cooc = wtw::count_cooc(*bitext, threads);
    }
    auto entries = wtw::extract_lexicon(model, min_like, bitext ? &*bitext : nullptr,
                                        cooc ? &*cooc : nullptr);
    auto plateaus = wtw::plateau_summary(entries);
    {
      auto o = open_out(out);
      wtw::write_lexicon(o, entries);
    }
    {
      auto o = open_out(out + ".plateaus.tsv");
      wtw::write_plateaus(o, plateaus);
    }
    std::cout << "entries\t" << entries.size() << '\n' << "plateaus\t" << plateaus.size() << '\n';
    for (const auto& p : wtw::longest_plateaus(plateaus, 3)) {
      std::cout << "plateau\tlinks=" << wtw::format_double(p.links) << "\tcooc=" << wtw::format_double(p.cooc)
                << "\tcount=" << p.count << "\tcutoff_like=" << wtw::format_double(p.like)
                << "\tentries_through=" << p.end_rank << '\n';
    }
    if (bitext) {
      auto r = wtw::recall_by_type(entries, *bitext);
      std::cout << "recall_src\t" << r.src_covered << '/' << r.src_types << '\t'
                << wtw::format_double(r.src_percent()) << "%\n"
                << "recall_tgt\t" << r.tgt_covered << '/' << r.tgt_types << '\t'
                << wtw::format_double(r.tgt_percent()) << "%\n"
                << "recall_combined\t" << r.src_covered + r.tgt_covered << '/'
                << r.src_types + r.tgt_types << '\t' << wtw::format_double(r.combined_percent()) << "%\n";
    }
    manifest.doc["outputs"] = {{"lexicon", out}, {"plateaus", out + ".plateaus.tsv"}};
    manifest.write(manifest_target());
    return 0;
  }

  // analyze subcommands write CSV to --out or stdout.
  std::ostringstream csv;
  std::string which;
  Manifest manifest("analyze", args);
  manifest.doc["seed"] = seed;
  if (singletons->parsed()) {
    which = "singletons";
    manifest.doc["config"] = options_snapshot(*singletons);
    manifest.input("corpus", corpus);
    auto rows = wtw::singleton_fraction(read_tokens(corpus), sizes, trials, seed, frequency);
    csv << "size,fraction\n";
    for (const auto& r : rows) csv << r.size << ',' << wtw::format_double(r.fraction) << '\n';
  } else if (multi_rare->parsed()) {
    which = "multi-rare";
    manifest.doc["config"] = options_snapshot(*multi_rare);
    csv << "gamma,p,probability\n";
    for (int g : gammas) {
      for (double p : ps) {
        csv << g << ',' << wtw::format_double(p) << ',' << wtw::format_double(wtw::prob_multi_rare(g, p)) << '\n';
      }
    }
  } else if (histogram->parsed()) {
    which = "link-ratio-histogram";
    auto method = wtw::parse_method(hist_method);
    if (!method || *method == wtw::Method::Model1) {
      throw UsageError("--method must be A, B or C for a link histogram");
    }
    if (*method == wtw::Method::C && (classes_src.empty() || classes_tgt.empty())) {
      throw UsageError("--method C needs --classes-src and --classes-tgt");
    }
    manifest.doc["config"] = options_snapshot(*histogram);
    manifest.input("src", src);
    manifest.input("tgt", tgt);
    wtw::TrainConfig hc;
    hc.method = *method;
    hc.max_iters = hist_iters;
    hc.threads = threads;
    auto bitext = wtw::load_bitext(src, tgt);
    auto result = wtw::train(bitext, hc, load_class_maps(classes_src, classes_tgt));
    auto counts = wtw::link_ratio_histogram(result.links, result.cooc, min_cooc, bins);
    csv << "bin_low,bin_high,pairs\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
      csv << wtw::format_double(static_cast<double>(i) / static_cast<double>(bins)) << ','
          << wtw::format_double(static_cast<double>(i + 1) / static_cast<double>(bins)) << ',' << counts[i]
          << '\n';
    }
    manifest.doc["convergence"] = convergence_json(result.report);
  }
  manifest.doc["command"] = "analyze " + which;
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    auto o = open_out(out);
    o << csv.str();
  }
  manifest.write(manifest_target());
  return 0;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const wtw::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const wtw::EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
