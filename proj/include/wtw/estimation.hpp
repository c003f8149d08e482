#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wtw/cooc.hpp"
#include "wtw/corpus.hpp"
#include "wtw/likelihood.hpp"
#include "wtw/linking.hpp"
#include "wtw/model.hpp"

namespace wtw {

/// Settings for the (lambda+, lambda-) search.
struct HillClimbSettings {
  double grid_step = 0.05;
  double min_step = 1e-6;
};

struct TrainConfig {
  Method method = Method::A;
  int max_iters = 30;
  double convergence_threshold = 1e-4;
  bool smoothing = true;
  HillClimbSettings hill_climb;
  /// Link classes with less co-occurrence mass use the global parameters.
  double min_class_mass = 100;
  /// Model 1: add a NULL token to every conditioning segment.
  bool model1_null = true;
  unsigned threads = 1;

  /// Throws std::invalid_argument on non-positive thresholds or max_iters < 1.
  void validate() const;
};

/// One point on the accepted hill-climbing path.
struct ClimbStep {
  double lambda_plus;
  double lambda_minus;
  double objective;
};

/// Link counts paired with the co-occurrence count they are drawn from.
struct LinkObservation {
  double links;
  double cooc;
};

/// sum over observations of log[tau B(k|n,l+) + (1-tau) B(k|n,l-)], with the
/// binomial coefficients dropped (they do not depend on the parameters) and
/// tau = (lambda - l-)/(l+ - l-). Observations are (k, n, multiplicity).
double mixture_log_likelihood(const std::map<std::pair<double, double>, double>& grouped,
                              double lambda, double lambda_plus, double lambda_minus);

/// Maximum-likelihood (lambda+, lambda-) from raw link observations.
/// Coarse grid over the region 1 > l+ > lambda > l- > 0, then coordinate
/// ascent with step halving. Throws EstimationError when lambda is not in
/// (0, 1) or no grid point lies in the region.
AuxParams estimate_aux_from(const std::vector<LinkObservation>& observations,
                            const HillClimbSettings& settings = {},
                            std::vector<ClimbStep>* path = nullptr);

/// Runs estimate_aux_from over every co-occurring pair, NULL cells included.
AuxParams estimate_aux(const LinkCounts& links, const CoocTable& cooc, const TrainConfig& cfg,
                       std::vector<ClimbStep>* path = nullptr);

/// Class of each word on both sides.
struct ClassLookup {
  std::vector<WordClass> src;
  std::vector<WordClass> tgt;

  static ClassLookup build(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                           const WordClassMap& src_classes, const WordClassMap& tgt_classes);
  LinkClassKey key(WordPair p) const;
};

/// Per-class parameters plus the global fallback.
struct ClassedAux {
  AuxParams global;
  std::map<LinkClassKey, AuxParams> per_class;

  const AuxParams& for_key(const LinkClassKey& key) const;
  /// Global entry first, then classes in key order.
  std::vector<AuxParams> all() const;
};

/// Estimates the global parameters and one set per link class holding at
/// least cfg.min_class_mass co-occurrences. A class whose own estimate fails
/// falls back to the global set.
ClassedAux estimate_class_aux(const LinkCounts& links, const CoocTable& cooc,
                              const ClassLookup& classes, const TrainConfig& cfg);

/// like = log B(links|cooc,l+) - log B(links|cooc,l-) for every pair with
/// cooc > 0, NULL cells included. Throws std::logic_error if links > cooc.
LikelihoodTable method_b_likelihoods(const LinkCounts& links, const CoocTable& cooc,
                                     const AuxParams& aux);

/// Method C variant: each pair uses the parameters of its link class.
LikelihoodTable method_b_likelihoods(const LinkCounts& links, const CoocTable& cooc,
                                     const ClassedAux& aux, const ClassLookup& classes);

/// trans(u, v) = links(u, v) / K. Throws EstimationError when K = 0.
TranslationModel normalize_links(const LinkCounts& links, std::shared_ptr<const Vocabulary> src,
                                 std::shared_ptr<const Vocabulary> tgt, Method method);

/// like(u, v) = log trans(u, v) for pairs with trans > 0.
LikelihoodTable loglike_from_model(const TranslationModel& model);

/// 2 sum min(p, q) / (sum p + sum q) over the union of keys.
double fuzzy_dice(const PairMap<double>& p, const PairMap<double>& q);

/// 1 - fuzzy_dice of the joint tables (the conditional tables for models
/// without a joint).
double model_delta(const TranslationModel& prev, const TranslationModel& curr);

bool converged(const TranslationModel& prev, const TranslationModel& curr, double threshold);

struct ConvergenceReport {
  /// delta after each iteration; the first iteration has nothing to compare
  /// with and records 1.
  std::vector<double> deltas;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
};

struct TrainResult {
  TranslationModel model;
  ConvergenceReport report;
  /// Raw co-occurrence counts of the training bitext.
  CoocTable cooc;
  /// Link counts of the final iteration (A/B/C only).
  LinkCounts links;
};

/// Word classes for Method C.
struct ClassMaps {
  WordClassMap src;
  WordClassMap tgt;
};

/// Runs the configured method to convergence or cfg.max_iters. Method C
/// needs `classes`.
TrainResult train(const Bitext& bitext, const TrainConfig& cfg,
                  const std::optional<ClassMaps>& classes = std::nullopt);

/// One direction of Model 1. The table is keyed (source word, target word)
/// whichever side is conditioned on.
struct Model1Direction {
  PairMap<double> table;
  ConvergenceReport report;
  /// Training log-likelihood before each M step's table is used, one entry
  /// per iteration.
  std::vector<double> log_likelihoods;
};

enum class Direction { SrcToTgt, TgtToSrc };

/// EM training of Model 1 conditioned on the `direction`'s input side.
/// NULL sits on the conditioning side.
Model1Direction model1_direction(const Bitext& bitext, Direction direction, const TrainConfig& cfg);

/// Training-data log-likelihood of a Model 1 table keyed (source, target)
/// for the given direction.
double model1_log_likelihood(const Bitext& bitext, Direction direction, const PairMap<double>& table,
                             bool with_null);

/// Both directions, combined into a model without a joint table.
TrainResult model1_train(const Bitext& bitext, const TrainConfig& cfg);

}  // namespace wtw
