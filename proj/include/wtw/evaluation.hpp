#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wtw/corpus.hpp"
#include "wtw/estimation.hpp"
#include "wtw/model.hpp"

namespace wtw {

/// A link from one input token to a partner word type (nullopt is NULL).
/// Model output names partners by type only, so gold links are reduced to
/// the same form before scoring.
struct LinkToken {
  std::string segment;
  Position input = kNullPosition;
  std::optional<std::string> partner;

  friend auto operator<=>(const LinkToken&, const LinkToken&) = default;
};

/// Link token -> weight in (0, 1]. Crisp sets have every weight 1.
using FuzzyLinkSet = std::map<LinkToken, double>;

/// Thrown when precision or recall has an empty denominator.
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EvalDirection { SrcToTgt, TgtToSrc, Averaged };
std::string_view to_string(EvalDirection d);

struct EvalReport {
  double precision = 0;
  double recall = 0;
  double dice = 0;
  EvalDirection direction = EvalDirection::SrcToTgt;
};

/// Harmonic mean of precision and recall; 0 when both are 0.
double dice_of(double precision, double recall);

/// |X n Y| sums min(weight_X, weight_Y) over shared tokens. Throws
/// MetricError naming the empty side.
EvalReport precision_recall(const FuzzyLinkSet& test, const FuzzyLinkSet& gold);

/// Sum of weights.
double fuzzy_size(const FuzzyLinkSet& s);
double fuzzy_intersection(const FuzzyLinkSet& x, const FuzzyLinkSet& y);

enum class Task { SingleBest, WholeDistribution };
std::optional<Task> parse_task(std::string_view text);

/// Links every token on the `direction`'s input side of the listed segments.
/// Words the model has never seen are linked to NULL. With `input_classes`,
/// only open-class (C) input tokens are linked.
FuzzyLinkSet predict(const TranslationModel& model, const Bitext& bitext,
                     const std::vector<std::string>& segments, Direction direction, Task task,
                     const WordClassMap* input_classes = nullptr);

/// argmax partner; ties go to the lexicographically smallest word, NULL last.
FuzzyLinkSet predict_single_best(const TranslationModel& model, const Bitext& bitext,
                                 const std::vector<std::string>& segments, Direction direction);

/// Every partner with positive probability, weighted by it.
FuzzyLinkSet predict_whole_distribution(const TranslationModel& model, const Bitext& bitext,
                                        const std::vector<std::string>& segments,
                                        Direction direction);

/// Drops every entry involving a closed-class word (anything other than C;
/// NULL stays) and renormalizes both conditionals. The result has no joint.
TranslationModel filter_open_class(const TranslationModel& model, const ClassMaps& classes);

/// Drops gold links where one or both linked words are closed-class.
GoldStandard filter_open_class(const GoldStandard& gold, const Bitext& bitext,
                               const ClassMaps& classes);

/// One annotator's links in the typed form, for one direction.
FuzzyLinkSet gold_link_tokens(const std::map<std::string, std::set<GoldLink>>& segments,
                              const Bitext& bitext, Direction direction);

struct AnnotatorReport {
  std::string annotator;
  EvalReport src_to_tgt;
  EvalReport tgt_to_src;
  EvalReport averaged;
};

struct Evaluation {
  std::vector<AnnotatorReport> annotators;
  /// Means over annotators.
  EvalReport src_to_tgt;
  EvalReport tgt_to_src;
  EvalReport averaged;
};

/// Scores the model against every annotator separately in both directions.
/// With `open_class`, closed-class words are removed from model, gold and
/// input first. Throws InputError when the gold standard shares no segment
/// with the bitext.
Evaluation evaluate(const TranslationModel& model, const Bitext& bitext, const GoldStandard& gold,
                    Task task, const ClassMaps* open_class = nullptr);

void write_evaluation(std::ostream& out, const Evaluation& e);

struct LexiconEntry {
  std::string u;
  std::string v;
  double like = 0;
  double links = 0;
  double cooc = 0;
};

/// Non-NULL pairs with like >= min_like, descending like then (u, v).
/// Link and co-occurrence counts are looked up by word, so `cooc` may come
/// from a bitext with a different vocabulary than the model's.
std::vector<LexiconEntry> extract_lexicon(const TranslationModel& model, double min_like,
                                          const Bitext* bitext = nullptr,
                                          const CoocTable* cooc = nullptr);

/// Same, straight from a training run.
std::vector<LexiconEntry> extract_lexicon(const LikelihoodTable& like, const LinkCounts& links,
                                          const CoocTable& cooc, const Vocabulary& src,
                                          const Vocabulary& tgt, double min_like);

/// A run of consecutive lexicon entries with the same (links, cooc).
struct Plateau {
  double links = 0;
  double cooc = 0;
  double like = 0;
  std::size_t count = 0;
  /// Number of lexicon entries up to and including this run.
  std::size_t end_rank = 0;
};

std::vector<Plateau> plateau_summary(const std::vector<LexiconEntry>& lexicon);
/// The `n` longest runs, longest first (ties by position).
std::vector<Plateau> longest_plateaus(const std::vector<Plateau>& plateaus, std::size_t n);

void write_lexicon(std::ostream& out, const std::vector<LexiconEntry>& lexicon);
void write_plateaus(std::ostream& out, const std::vector<Plateau>& plateaus);

struct TypeRecall {
  std::size_t src_covered = 0;
  std::size_t src_types = 0;
  std::size_t tgt_covered = 0;
  std::size_t tgt_types = 0;

  double src_percent() const;
  double tgt_percent() const;
  double combined_percent() const;
};

TypeRecall recall_by_type(const std::vector<LexiconEntry>& lexicon, const Bitext& bitext);

/// 1 - B(0|gamma,p) - B(1|gamma,p); exactly 0 for gamma <= 1.
double prob_multi_rare(int gamma, double p);

struct SingletonRow {
  std::size_t size = 0;
  double fraction = 0;
};

/// For each sample size, the mean over `trials` random samples (without
/// replacement) of the share of sampled tokens whose type occurs exactly
/// `frequency` times in the sample.
std::vector<SingletonRow> singleton_fraction(const std::vector<std::string>& tokens,
                                             const std::vector<std::size_t>& sizes, int trials,
                                             std::uint64_t seed, int frequency = 1);

/// Counts of word pairs with cooc >= min_cooc by links/cooc ratio; bin i
/// holds ratios in [i/bins, (i+1)/bins), the last bin includes 1.
std::vector<std::size_t> link_ratio_histogram(const LinkCounts& links, const CoocTable& cooc,
                                              double min_cooc = 5, std::size_t bins = 10);

}  // namespace wtw
