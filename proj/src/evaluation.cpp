#include "wtw/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace wtw {
namespace {

EvalReport mean_of(const std::vector<EvalReport>& reports, EvalDirection direction) {
  EvalReport out;
  out.direction = direction;
  if (reports.empty()) return out;
  for (const auto& r : reports) {
    out.precision += r.precision;
    out.recall += r.recall;
    out.dice += r.dice;
  }
  const double n = static_cast<double>(reports.size());
  out.precision /= n;
  out.recall /= n;
  out.dice /= n;
  return out;
}

/// Keeps entries whose conditioning and partner words pass `keep`, then
/// renormalizes each conditioning word's row.
PairMap<double> filter_conditional(const PairMap<double>& table, bool rows_are_src,
                                   const std::function<bool(WordPair)>& keep) {
  std::vector<std::uint64_t> keys;
  for (const auto& [k, p] : table) {
    if (p > 0 && keep(unpack(k))) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  auto row_of = [rows_are_src](std::uint64_t k) {
    return rows_are_src ? unpack(k).src : unpack(k).tgt;
  };
  std::unordered_map<WordId, double> sums;
  for (auto k : keys) sums[row_of(k)] += table.at(k);
  PairMap<double> out;
  for (auto k : keys) out.emplace(k, table.at(k) / sums.at(row_of(k)));
  return out;
}

std::optional<std::string> partner_text(const Vocabulary& vocab, WordId w) {
  if (w == kNullWord) return std::nullopt;
  return std::string(vocab.word(w));
}

void write_report_row(std::ostream& out, const std::string& who, const EvalReport& r) {
  out << who << '\t' << to_string(r.direction) << '\t' << format_double(r.precision) << '\t'
      << format_double(r.recall) << '\t' << format_double(r.dice) << '\n';
}

bool lexicon_order(const LexiconEntry& l, const LexiconEntry& r) {
  if (l.like != r.like) return l.like > r.like;
  if (l.u != r.u) return l.u < r.u;
  return l.v < r.v;
}

}  // namespace

std::string_view to_string(EvalDirection d) {
  switch (d) {
    case EvalDirection::SrcToTgt: return "src->tgt";
    case EvalDirection::TgtToSrc: return "tgt->src";
    case EvalDirection::Averaged: return "averaged";
  }
  return "?";
}

double dice_of(double precision, double recall) {
  if (precision + recall == 0) return 0.0;
  return 2 * precision * recall / (precision + recall);
}

double fuzzy_size(const FuzzyLinkSet& s) {
  double total = 0;
  for (const auto& [t, w] : s) total += w;
  return total;
}

double fuzzy_intersection(const FuzzyLinkSet& x, const FuzzyLinkSet& y) {
  const auto& small = x.size() <= y.size() ? x : y;
  const auto& large = x.size() <= y.size() ? y : x;
  double total = 0;
  for (const auto& [t, w] : small) {
    auto it = large.find(t);
    if (it != large.end()) total += std::min(w, it->second);
  }
  return total;
}

EvalReport precision_recall(const FuzzyLinkSet& test, const FuzzyLinkSet& gold) {
  const double x = fuzzy_size(test);
  const double y = fuzzy_size(gold);
  if (x <= 0) throw MetricError("precision undefined: the test link set is empty");
  if (y <= 0) throw MetricError("recall undefined: the gold link set is empty");
  const double shared = fuzzy_intersection(test, gold);
  EvalReport r;
  r.precision = shared / x;
  r.recall = shared / y;
  r.dice = dice_of(r.precision, r.recall);
  return r;
}

std::optional<Task> parse_task(std::string_view text) {
  if (text == "single-best") return Task::SingleBest;
  if (text == "whole-dist" || text == "whole-distribution") return Task::WholeDistribution;
  return std::nullopt;
}

FuzzyLinkSet predict(const TranslationModel& model, const Bitext& bitext,
                     const std::vector<std::string>& segments, Direction direction, Task task,
                     const WordClassMap* input_classes) {
  const bool fwd = direction == Direction::SrcToTgt;
  const Vocabulary& in_vocab = fwd ? bitext.src_vocab() : bitext.tgt_vocab();
  const Vocabulary& model_in = fwd ? model.src_vocab() : model.tgt_vocab();
  const Vocabulary& model_out = fwd ? model.tgt_vocab() : model.src_vocab();

  FuzzyLinkSet out;
  for (const auto& id : segments) {
    auto idx = bitext.find(id);
    if (!idx) continue;
    const auto& seg = bitext.pairs()[*idx];
    const auto& input = fwd ? seg.src : seg.tgt;
    for (std::size_t i = 0; i < input.size(); ++i) {
      const auto word = in_vocab.word(input[i]);
      if (input_classes && input_classes->of(word) != WordClass::C) continue;
      LinkToken token{id, static_cast<Position>(i), std::nullopt};
      auto known = model_in.find(word);
      static const std::vector<Translation> kUnseen;
      const auto& dist = !known ? kUnseen
                         : fwd  ? model.translations_of_src(*known)
                                : model.translations_of_tgt(*known);
      if (dist.empty()) {
        out[token] = 1.0;
        continue;
      }
      if (task == Task::SingleBest) {
        // dist is sorted by partner id with NULL last, so the first maximum
        // is the lexicographically smallest.
        const Translation* best = &dist.front();
        for (const auto& t : dist) {
          if (t.prob > best->prob) best = &t;
        }
        token.partner = partner_text(model_out, best->word);
        out[token] = 1.0;
      } else {
        for (const auto& t : dist) {
          if (t.prob <= 0) continue;
          token.partner = partner_text(model_out, t.word);
          out[token] = std::min(1.0, t.prob);
        }
      }
    }
  }
  return out;
}

FuzzyLinkSet predict_single_best(const TranslationModel& model, const Bitext& bitext,
                                 const std::vector<std::string>& segments, Direction direction) {
  return predict(model, bitext, segments, direction, Task::SingleBest);
}

FuzzyLinkSet predict_whole_distribution(const TranslationModel& model, const Bitext& bitext,
                                        const std::vector<std::string>& segments,
                                        Direction direction) {
  return predict(model, bitext, segments, direction, Task::WholeDistribution);
}

TranslationModel filter_open_class(const TranslationModel& model, const ClassMaps& classes) {
  const auto& src = model.src_vocab();
  const auto& tgt = model.tgt_vocab();
  std::vector<bool> src_open(src.size());
  std::vector<bool> tgt_open(tgt.size());
  for (WordId u = 0; u < src.size(); ++u) src_open[u] = classes.src.of(src.word(u)) == WordClass::C;
  for (WordId v = 0; v < tgt.size(); ++v) tgt_open[v] = classes.tgt.of(tgt.word(v)) == WordClass::C;
  auto keep = [&](WordPair p) {
    return (p.src == kNullWord || src_open[p.src]) && (p.tgt == kNullWord || tgt_open[p.tgt]);
  };
  auto out = TranslationModel::from_conditionals(
      model.src_vocab_ptr(), model.tgt_vocab_ptr(),
      filter_conditional(model.tgt_given_src_table(), true, keep),
      filter_conditional(model.src_given_tgt_table(), false, keep), model.method());
  out.iterations = model.iterations;
  out.converged = model.converged;
  return out;
}

GoldStandard filter_open_class(const GoldStandard& gold, const Bitext& bitext,
                               const ClassMaps& classes) {
  GoldStandard out;
  for (const auto& [annotator, segments] : gold.annotations) {
    auto& kept_segments = out.annotations[annotator];
    for (const auto& [id, links] : segments) {
      auto idx = bitext.find(id);
      if (!idx) continue;
      const auto& seg = bitext.pairs()[*idx];
      auto& kept = kept_segments[id];
      for (const auto& l : links) {
        const bool src_ok = l.src == kNullPosition ||
                            classes.src.of(bitext.src_vocab().word(seg.src[l.src])) == WordClass::C;
        const bool tgt_ok = l.tgt == kNullPosition ||
                            classes.tgt.of(bitext.tgt_vocab().word(seg.tgt[l.tgt])) == WordClass::C;
        if (src_ok && tgt_ok) kept.insert(l);
      }
    }
  }
  return out;
}

FuzzyLinkSet gold_link_tokens(const std::map<std::string, std::set<GoldLink>>& segments,
                              const Bitext& bitext, Direction direction) {
  const bool fwd = direction == Direction::SrcToTgt;
  FuzzyLinkSet out;
  for (const auto& [id, links] : segments) {
    auto idx = bitext.find(id);
    if (!idx) continue;
    const auto& seg = bitext.pairs()[*idx];
    for (const auto& l : links) {
      const Position in = fwd ? l.src : l.tgt;
      const Position partner = fwd ? l.tgt : l.src;
      if (in == kNullPosition) continue;
      std::optional<std::string> type;
      if (partner != kNullPosition) {
        type = std::string(fwd ? bitext.tgt_vocab().word(seg.tgt[partner])
                               : bitext.src_vocab().word(seg.src[partner]));
      }
      out[{id, in, std::move(type)}] = 1.0;
    }
  }
  return out;
}

Evaluation evaluate(const TranslationModel& model, const Bitext& bitext, const GoldStandard& gold,
                    Task task, const ClassMaps* open_class) {
  gold.validate(bitext);
  bool any_segment = false;
  for (const auto& [annotator, segments] : gold.annotations) any_segment |= !segments.empty();
  if (!any_segment) throw InputError("gold standard shares no segment with the bitext");

  std::optional<TranslationModel> filtered_model;
  std::optional<GoldStandard> filtered_gold;
  if (open_class) {
    filtered_model = filter_open_class(model, *open_class);
    filtered_gold = filter_open_class(gold, bitext, *open_class);
  }
  const auto& m = filtered_model ? *filtered_model : model;
  const auto& g = filtered_gold ? *filtered_gold : gold;

  Evaluation e;
  std::vector<EvalReport> fwd_all, bwd_all, avg_all;
  for (const auto& [annotator, segments] : g.annotations) {
    std::vector<std::string> ids;
    for (const auto& [id, links] : segments) ids.push_back(id);
    AnnotatorReport r;
    r.annotator = annotator;
    r.src_to_tgt = precision_recall(
        predict(m, bitext, ids, Direction::SrcToTgt, task, open_class ? &open_class->src : nullptr),
        gold_link_tokens(segments, bitext, Direction::SrcToTgt));
    r.src_to_tgt.direction = EvalDirection::SrcToTgt;
    r.tgt_to_src = precision_recall(
        predict(m, bitext, ids, Direction::TgtToSrc, task, open_class ? &open_class->tgt : nullptr),
        gold_link_tokens(segments, bitext, Direction::TgtToSrc));
    r.tgt_to_src.direction = EvalDirection::TgtToSrc;
    r.averaged = mean_of({r.src_to_tgt, r.tgt_to_src}, EvalDirection::Averaged);
    fwd_all.push_back(r.src_to_tgt);
    bwd_all.push_back(r.tgt_to_src);
    avg_all.push_back(r.averaged);
    e.annotators.push_back(std::move(r));
  }
  e.src_to_tgt = mean_of(fwd_all, EvalDirection::SrcToTgt);
  e.tgt_to_src = mean_of(bwd_all, EvalDirection::TgtToSrc);
  e.averaged = mean_of(avg_all, EvalDirection::Averaged);
  return e;
}

void write_evaluation(std::ostream& out, const Evaluation& e) {
  out << "annotator\tdirection\tprecision\trecall\tdice\n";
  for (const auto& r : e.annotators) {
    write_report_row(out, r.annotator, r.src_to_tgt);
    write_report_row(out, r.annotator, r.tgt_to_src);
    write_report_row(out, r.annotator, r.averaged);
  }
  write_report_row(out, "mean", e.src_to_tgt);
  write_report_row(out, "mean", e.tgt_to_src);
  write_report_row(out, "mean", e.averaged);
}

std::vector<LexiconEntry> extract_lexicon(const TranslationModel& model, double min_like,
                                          const Bitext* bitext, const CoocTable* cooc) {
  std::vector<LexiconEntry> out;
  for (const auto& [key, like] : model.like) {
    const auto p = unpack(key);
    if (p.src == kNullWord || p.tgt == kNullWord || like < min_like) continue;
    LexiconEntry e{std::string(model.src_vocab().word(p.src)),
                   std::string(model.tgt_vocab().word(p.tgt)), like, 0, 0};
    if (auto it = model.links.find(key); it != model.links.end()) e.links = it->second;
    if (bitext && cooc) {
      auto u = bitext->src_vocab().find(e.u);
      auto v = bitext->tgt_vocab().find(e.v);
      if (u && v) e.cooc = cooc->count({*u, *v});
    }
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), lexicon_order);
  return out;
}

std::vector<LexiconEntry> extract_lexicon(const LikelihoodTable& like, const LinkCounts& links,
                                          const CoocTable& cooc, const Vocabulary& src,
                                          const Vocabulary& tgt, double min_like) {
  std::vector<LexiconEntry> out;
  for (const auto& [key, score] : like.scores()) {
    const auto p = unpack(key);
    if (p.src == kNullWord || p.tgt == kNullWord || score < min_like) continue;
    out.push_back({std::string(src.word(p.src)), std::string(tgt.word(p.tgt)), score, links.get(p),
                   cooc.count(p)});
  }
  std::sort(out.begin(), out.end(), lexicon_order);
  return out;
}

std::vector<Plateau> plateau_summary(const std::vector<LexiconEntry>& lexicon) {
  std::vector<Plateau> out;
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    const auto& e = lexicon[i];
    if (out.empty() || out.back().links != e.links || out.back().cooc != e.cooc) {
      out.push_back({e.links, e.cooc, e.like, 0, 0});
    }
    ++out.back().count;
    out.back().end_rank = i + 1;
  }
  return out;
}

std::vector<Plateau> longest_plateaus(const std::vector<Plateau>& plateaus, std::size_t n) {
  std::vector<Plateau> out = plateaus;
  std::stable_sort(out.begin(), out.end(),
                   [](const Plateau& l, const Plateau& r) { return l.count > r.count; });
  if (out.size() > n) out.resize(n);
  return out;
}

void write_lexicon(std::ostream& out, const std::vector<LexiconEntry>& lexicon) {
  for (const auto& e : lexicon) {
    out << e.u << '\t' << e.v << '\t' << format_double(e.like) << '\t' << format_double(e.links)
        << '\t' << format_double(e.cooc) << '\n';
  }
}

void write_plateaus(std::ostream& out, const std::vector<Plateau>& plateaus) {
  out << "links\tcooc\tlike\tcount\tend_rank\n";
  for (const auto& p : plateaus) {
    out << format_double(p.links) << '\t' << format_double(p.cooc) << '\t' << format_double(p.like)
        << '\t' << p.count << '\t' << p.end_rank << '\n';
  }
}

double TypeRecall::src_percent() const {
  return src_types == 0 ? 0.0 : 100.0 * static_cast<double>(src_covered) / static_cast<double>(src_types);
}

double TypeRecall::tgt_percent() const {
  return tgt_types == 0 ? 0.0 : 100.0 * static_cast<double>(tgt_covered) / static_cast<double>(tgt_types);
}

double TypeRecall::combined_percent() const {
  const auto types = src_types + tgt_types;
  return types == 0 ? 0.0
                    : 100.0 * static_cast<double>(src_covered + tgt_covered) / static_cast<double>(types);
}

TypeRecall recall_by_type(const std::vector<LexiconEntry>& lexicon, const Bitext& bitext) {
  std::unordered_set<std::string> src_seen, tgt_seen;
  for (const auto& e : lexicon) {
    if (bitext.src_vocab().find(e.u)) src_seen.insert(e.u);
    if (bitext.tgt_vocab().find(e.v)) tgt_seen.insert(e.v);
  }
  return {src_seen.size(), bitext.src_vocab().size(), tgt_seen.size(), bitext.tgt_vocab().size()};
}

double prob_multi_rare(int gamma, double p) {
  if (gamma <= 1 || p <= 0) return 0.0;
  if (p >= 1) return 1.0;
  const double g = gamma;
  const double none = std::pow(1 - p, g);
  const double one = g * p * std::pow(1 - p, g - 1);
  return std::max(0.0, 1 - none - one);
}

std::vector<SingletonRow> singleton_fraction(const std::vector<std::string>& tokens,
                                             const std::vector<std::size_t>& sizes, int trials,
                                             std::uint64_t seed, int frequency) {
  if (trials < 1) throw std::invalid_argument("singleton_fraction: trials must be at least 1");
  // Work on type ids; the strings are only needed once.
  std::unordered_map<std::string_view, std::uint32_t> ids;
  std::vector<std::uint32_t> typed;
  typed.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto [it, added] = ids.emplace(t, static_cast<std::uint32_t>(ids.size()));
    typed.push_back(it->second);
  }

  std::mt19937_64 rng(seed);
  std::vector<SingletonRow> out;
  std::vector<std::uint32_t> pool;
  std::vector<std::uint32_t> counts(ids.size());
  for (auto size : sizes) {
    if (size == 0 || size > tokens.size()) {
      throw std::invalid_argument("singleton_fraction: sample size " + std::to_string(size) +
                                  " outside 1.." + std::to_string(tokens.size()));
    }
    double sum = 0;
    for (int trial = 0; trial < trials; ++trial) {
      pool = typed;
      for (std::size_t i = 0; i < size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = 0; i < size; ++i) ++counts[pool[i]];
      std::size_t hits = 0;
      for (std::size_t i = 0; i < size; ++i) {
        if (counts[pool[i]] == static_cast<std::uint32_t>(frequency)) ++hits;
      }
      sum += static_cast<double>(hits) / static_cast<double>(size);
    }
    out.push_back({size, sum / trials});
  }
  return out;
}

std::vector<std::size_t> link_ratio_histogram(const LinkCounts& links, const CoocTable& cooc,
                                              double min_cooc, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("link_ratio_histogram: bins must be positive");
  std::vector<std::size_t> out(bins, 0);
  for (const auto& [key, n] : cooc.word_cells()) {
    if (n < min_cooc || n <= 0) continue;
    const double ratio = links.get(unpack(key)) / n;
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::floor(ratio * static_cast<double>(bins))));
    ++out[bin];
  }
  return out;
}

}  // namespace wtw
