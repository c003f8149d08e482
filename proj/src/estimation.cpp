#include "wtw/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "parallel.hpp"

namespace wtw {
namespace {

double xlogy(double x, double y) { return x == 0 ? 0.0 : x * std::log(y); }

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::vector<std::uint64_t> sorted_keys(const PairMap<double>& m) {
  std::vector<std::uint64_t> keys;
  keys.reserve(m.size());
  for (const auto& [k, x] : m) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

using Grouped = std::map<std::pair<double, double>, double>;

/// Search coordinates: x = (l+ - lambda)/(1 - lambda), y = l- / lambda.
/// The open unit square maps onto the region 1 > l+ > lambda > l- > 0.
struct RegionPoint {
  double x;
  double y;
};

double plus_of(double lambda, double x) { return lambda + (1 - lambda) * x; }
double minus_of(double lambda, double y) { return lambda * y; }

/// Calls fn(pair, links, cooc) for every co-occurring pair, NULL cells
/// included, in key order.
template <typename Fn>
void for_each_observation(const LinkCounts& links, const CoocTable& cooc, Fn&& fn) {
  for (const auto& pair : cooc.sorted_pairs()) fn(pair, links.get(pair), cooc.count(pair));
}

}  // namespace

void TrainConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(convergence_threshold > 0)) throw std::invalid_argument("convergence threshold must be positive");
  if (!(hill_climb.grid_step > 0 && hill_climb.grid_step < 1)) {
    throw std::invalid_argument("hill-climb grid step must be in (0, 1)");
  }
  if (!(hill_climb.min_step > 0)) throw std::invalid_argument("hill-climb min step must be positive");
  if (min_class_mass < 0) throw std::invalid_argument("min class mass must be non-negative");
}

double mixture_log_likelihood(const Grouped& grouped, double lambda, double lambda_plus,
                              double lambda_minus) {
  const double tau = (lambda - lambda_minus) / (lambda_plus - lambda_minus);
  const double log_tau = std::log(tau);
  const double log_rest = std::log1p(-tau);
  double total = 0;
  for (const auto& [kn, mult] : grouped) {
    const auto [k, n] = kn;
    const double plus = log_tau + xlogy(k, lambda_plus) + xlogy(n - k, 1 - lambda_plus);
    const double minus = log_rest + xlogy(k, lambda_minus) + xlogy(n - k, 1 - lambda_minus);
    total += mult * log_sum_exp(plus, minus);
  }
  return total;
}

AuxParams estimate_aux_from(const std::vector<LinkObservation>& observations,
                            const HillClimbSettings& settings, std::vector<ClimbStep>* path) {
  Grouped grouped;
  double k_total = 0;
  double n_total = 0;
  for (const auto& o : observations) {
    if (o.cooc <= 0) continue;
    grouped[{o.links, o.cooc}] += 1;
    k_total += o.links;
    n_total += o.cooc;
  }
  if (n_total <= 0) throw EstimationError("aux estimation: no co-occurrences");
  const double lambda = k_total / n_total;
  if (!(lambda > 0 && lambda < 1)) {
    throw EstimationError("aux estimation: K/N = " + std::to_string(lambda) +
                          " leaves no room for 1 > lambda+ > lambda > lambda- > 0");
  }

  auto objective = [&](RegionPoint p) {
    return mixture_log_likelihood(grouped, lambda, plus_of(lambda, p.x), minus_of(lambda, p.y));
  };
  auto inside = [&](RegionPoint p) {
    AuxParams a;
    a.lambda_plus = plus_of(lambda, p.x);
    a.lambda_minus = minus_of(lambda, p.y);
    a.lambda = lambda;
    return p.x > 0 && p.x < 1 && p.y > 0 && p.y < 1 && a.in_region();
  };

  // Coarse grid, wide enough to step over the small local maxima.
  std::optional<RegionPoint> best;
  double best_value = -std::numeric_limits<double>::infinity();
  const int cells = static_cast<int>(std::round(1.0 / settings.grid_step));
  for (int i = 1; i < cells; ++i) {
    for (int j = 1; j < cells; ++j) {
      RegionPoint p{i * settings.grid_step, j * settings.grid_step};
      if (!inside(p)) continue;
      const double v = objective(p);
      if (v > best_value) {
        best_value = v;
        best = p;
      }
    }
  }
  if (!best) throw EstimationError("aux estimation: no grid point inside the parameter region");

  auto record = [&](RegionPoint p, double v) {
    if (path) path->push_back({plus_of(lambda, p.x), minus_of(lambda, p.y), v});
  };
  RegionPoint cur = *best;
  record(cur, best_value);
  for (double step = settings.grid_step / 2; step >= settings.min_step; step /= 2) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (RegionPoint cand : {RegionPoint{cur.x + step, cur.y}, RegionPoint{cur.x - step, cur.y},
                               RegionPoint{cur.x, cur.y + step}, RegionPoint{cur.x, cur.y - step}}) {
        if (!inside(cand)) continue;
        const double v = objective(cand);
        if (v > best_value) {
          best_value = v;
          cur = cand;
          record(cur, v);
          moved = true;
          break;
        }
      }
    }
  }

  AuxParams out;
  out.lambda = lambda;
  out.lambda_plus = plus_of(lambda, cur.x);
  out.lambda_minus = minus_of(lambda, cur.y);
  out.tau = (lambda - out.lambda_minus) / (out.lambda_plus - out.lambda_minus);
  return out;
}

AuxParams estimate_aux(const LinkCounts& links, const CoocTable& cooc, const TrainConfig& cfg,
                       std::vector<ClimbStep>* path) {
  std::vector<LinkObservation> obs;
  for_each_observation(links, cooc, [&](WordPair, double k, double n) { obs.push_back({k, n}); });
  return estimate_aux_from(obs, cfg.hill_climb, path);
}

ClassLookup ClassLookup::build(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                               const WordClassMap& src_classes, const WordClassMap& tgt_classes) {
  ClassLookup out;
  out.src.reserve(src_vocab.size());
  out.tgt.reserve(tgt_vocab.size());
  for (const auto& w : src_vocab.words()) out.src.push_back(src_classes.of(w));
  for (const auto& w : tgt_vocab.words()) out.tgt.push_back(tgt_classes.of(w));
  return out;
}

LinkClassKey ClassLookup::key(WordPair p) const {
  return {p.src == kNullWord ? WordClass::NU : src.at(p.src),
          p.tgt == kNullWord ? WordClass::NU : tgt.at(p.tgt)};
}

const AuxParams& ClassedAux::for_key(const LinkClassKey& key) const {
  auto it = per_class.find(key);
  return it == per_class.end() ? global : it->second;
}

std::vector<AuxParams> ClassedAux::all() const {
  std::vector<AuxParams> out{global};
  for (const auto& [key, aux] : per_class) out.push_back(aux);
  return out;
}

ClassedAux estimate_class_aux(const LinkCounts& links, const CoocTable& cooc,
                              const ClassLookup& classes, const TrainConfig& cfg) {
  ClassedAux out;
  out.global = estimate_aux(links, cooc, cfg);
  std::map<LinkClassKey, std::vector<LinkObservation>> by_class;
  std::map<LinkClassKey, double> mass;
  for_each_observation(links, cooc, [&](WordPair p, double k, double n) {
    const auto key = classes.key(p);
    by_class[key].push_back({k, n});
    mass[key] += n;
  });
  for (const auto& [key, obs] : by_class) {
    if (mass[key] < cfg.min_class_mass) continue;
    try {
      AuxParams aux = estimate_aux_from(obs, cfg.hill_climb);
      aux.link_class = key;
      out.per_class.emplace(key, aux);
    } catch (const EstimationError&) {
      // Degenerate class (all or none of its pairs linked): global fallback.
    }
  }
  return out;
}

namespace {

double log_ratio(double k, double n, const AuxParams& aux) {
  return xlogy(k, aux.lambda_plus / aux.lambda_minus) +
         xlogy(n - k, (1 - aux.lambda_plus) / (1 - aux.lambda_minus));
}

template <typename AuxFor>
LikelihoodTable ratio_likelihoods(const LinkCounts& links, const CoocTable& cooc, AuxFor&& aux_for) {
  LikelihoodTable like;
  for_each_observation(links, cooc, [&](WordPair p, double k, double n) {
    if (k > n + 1e-9) {
      throw std::logic_error("links exceed co-occurrences for pair (" + std::to_string(p.src) +
                             ", " + std::to_string(p.tgt) + ")");
    }
    like.set(p, log_ratio(k, n, aux_for(p)));
  });
  return like;
}

}  // namespace

LikelihoodTable method_b_likelihoods(const LinkCounts& links, const CoocTable& cooc,
                                     const AuxParams& aux) {
  return ratio_likelihoods(links, cooc, [&](WordPair) -> const AuxParams& { return aux; });
}

LikelihoodTable method_b_likelihoods(const LinkCounts& links, const CoocTable& cooc,
                                     const ClassedAux& aux, const ClassLookup& classes) {
  return ratio_likelihoods(links, cooc, [&](WordPair p) -> const AuxParams& {
    return aux.for_key(classes.key(p));
  });
}

TranslationModel normalize_links(const LinkCounts& links, std::shared_ptr<const Vocabulary> src,
                                 std::shared_ptr<const Vocabulary> tgt, Method method) {
  const double k = links.total();
  if (!(k > 0)) throw EstimationError("cannot normalize: no links");
  PairMap<double> joint;
  joint.reserve(links.counts().size());
  for (const auto& [key, n] : links.counts()) {
    if (n > 0) joint.emplace(key, n / k);
  }
  auto model = TranslationModel::from_joint(std::move(src), std::move(tgt), std::move(joint), method);
  model.link_total = k;
  model.links = links.counts();
  return model;
}

LikelihoodTable loglike_from_model(const TranslationModel& model) {
  LikelihoodTable like;
  for (const auto& [key, p] : model.joint_table()) {
    if (p > 0) like.set(unpack(key), std::log(p));
  }
  return like;
}

double fuzzy_dice(const PairMap<double>& p, const PairMap<double>& q) {
  double shared = 0;
  double sum_p = 0;
  double sum_q = 0;
  for (auto k : sorted_keys(p)) {
    const double x = p.at(k);
    sum_p += x;
    auto it = q.find(k);
    if (it != q.end()) shared += std::min(x, it->second);
  }
  for (auto k : sorted_keys(q)) sum_q += q.at(k);
  if (sum_p + sum_q == 0) return 1.0;
  return 2 * shared / (sum_p + sum_q);
}

double model_delta(const TranslationModel& prev, const TranslationModel& curr) {
  if (prev.has_joint() && curr.has_joint()) return 1 - fuzzy_dice(prev.joint_table(), curr.joint_table());
  return 1 - fuzzy_dice(prev.tgt_given_src_table(), curr.tgt_given_src_table());
}

bool converged(const TranslationModel& prev, const TranslationModel& curr, double threshold) {
  return model_delta(prev, curr) < threshold;
}

TrainResult train(const Bitext& bitext, const TrainConfig& cfg,
                  const std::optional<ClassMaps>& classes) {
  cfg.validate();
  if (bitext.empty()) throw EstimationError("cannot train on an empty bitext");
  if (cfg.method == Method::Model1) return model1_train(bitext, cfg);
  if (cfg.method == Method::C && !classes) {
    throw std::invalid_argument("Method C needs word class maps");
  }

  TrainResult result;
  result.cooc = count_cooc(bitext, cfg.threads);
  auto& report = result.report;

  LikelihoodTable like;
  if (cfg.smoothing) {
    auto smoothed = sgt_smooth(result.cooc);
    if (smoothed.warning) report.warnings.push_back(*smoothed.warning);
    like = init_likelihoods(smoothed.table);
  } else {
    like = init_likelihoods(result.cooc);
  }

  std::optional<ClassLookup> lookup;
  if (cfg.method == Method::C) {
    lookup = ClassLookup::build(bitext.src_vocab(), bitext.tgt_vocab(), classes->src, classes->tgt);
  }

  std::vector<AuxParams> aux;
  // Step 3: new like(u, v) from the current link counts.
  auto reestimate = [&](const TranslationModel& model, const LinkCounts& links) {
    switch (cfg.method) {
      case Method::A:
        aux.clear();
        return loglike_from_model(model);
      case Method::B: {
        auto global = estimate_aux(links, result.cooc, cfg);
        aux = {global};
        return method_b_likelihoods(links, result.cooc, global);
      }
      case Method::C: {
        auto classed = estimate_class_aux(links, result.cooc, *lookup, cfg);
        aux = classed.all();
        return method_b_likelihoods(links, result.cooc, classed, *lookup);
      }
      case Method::Model1: break;
    }
    throw std::logic_error("unreachable");
  };

  std::optional<TranslationModel> prev;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    result.links = link_bitext(bitext, like, cfg.threads);
    result.links.check_within(result.cooc);
    auto model = normalize_links(result.links, bitext.src_vocab_ptr(), bitext.tgt_vocab_ptr(), cfg.method);
    const double delta = prev ? model_delta(*prev, model) : 1.0;
    report.deltas.push_back(delta);
    report.iterations = it;
    const bool done = prev && delta < cfg.convergence_threshold;
    like = reestimate(model, result.links);
    prev = std::move(model);
    if (done) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged) {
    report.warnings.push_back("not converged after " + std::to_string(cfg.max_iters) + " iterations");
  }

  TranslationModel model = std::move(*prev);
  model.iterations = report.iterations;
  model.converged = report.converged;
  model.aux = aux;
  model.like = like.scores();
  result.model = std::move(model);
  return result;
}

double model1_log_likelihood(const Bitext& bitext, Direction direction, const PairMap<double>& table,
                             bool with_null) {
  double total = 0;
  for (const auto& seg : bitext.pairs()) {
    const auto& cond = direction == Direction::SrcToTgt ? seg.src : seg.tgt;
    const auto& pred = direction == Direction::SrcToTgt ? seg.tgt : seg.src;
    const double slots = static_cast<double>(cond.size()) + (with_null ? 1.0 : 0.0);
    for (WordId p : pred) {
      double sum = 0;
      auto prob = [&](WordId c) {
        const WordPair key = direction == Direction::SrcToTgt ? WordPair{c, p} : WordPair{p, c};
        auto it = table.find(pack(key));
        return it == table.end() ? 0.0 : it->second;
      };
      for (WordId c : cond) sum += prob(c);
      if (with_null) sum += prob(kNullWord);
      total += std::log(sum / slots);
    }
  }
  return total;
}

Model1Direction model1_direction(const Bitext& bitext, Direction direction, const TrainConfig& cfg) {
  const bool fwd = direction == Direction::SrcToTgt;
  auto key_of = [fwd](WordId cond, WordId pred) {
    return pack(fwd ? WordPair{cond, pred} : WordPair{pred, cond});
  };
  auto cond_of = [fwd](std::uint64_t key) { return fwd ? unpack(key).src : unpack(key).tgt; };

  struct Side {
    std::vector<std::pair<WordId, double>> cond;
    std::vector<std::pair<WordId, double>> pred;
  };
  auto counted = [](const std::vector<WordId>& ids) {
    std::map<WordId, double> m;
    for (WordId w : ids) m[w] += 1;
    return std::vector<std::pair<WordId, double>>(m.begin(), m.end());
  };
  std::vector<Side> segments;
  segments.reserve(bitext.size());
  for (const auto& seg : bitext.pairs()) {
    Side s{counted(fwd ? seg.src : seg.tgt), counted(fwd ? seg.tgt : seg.src)};
    if (cfg.model1_null) s.cond.emplace_back(kNullWord, 1.0);
    segments.push_back(std::move(s));
  }

  // Uniform start over every co-occurring (conditioning, predicted) pair.
  const double uniform =
      1.0 / static_cast<double>(fwd ? bitext.tgt_vocab().size() : bitext.src_vocab().size());
  PairMap<double> table;
  for (const auto& s : segments) {
    for (const auto& [c, ec] : s.cond) {
      for (const auto& [p, fp] : s.pred) table[key_of(c, p)] = uniform;
    }
  }

  Model1Direction out;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    struct Partial {
      PairMap<double> counts;
      double log_likelihood = 0;
    };
    auto partials = detail::map_blocks<Partial>(
        segments.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
          Partial part;
          for (std::size_t i = begin; i < end; ++i) {
            const auto& s = segments[i];
            double slots = 0;
            for (const auto& [c, ec] : s.cond) slots += ec;
            for (const auto& [p, fp] : s.pred) {
              double denom = 0;
              for (const auto& [c, ec] : s.cond) denom += ec * table.at(key_of(c, p));
              part.log_likelihood += fp * std::log(denom / slots);
              for (const auto& [c, ec] : s.cond) {
                part.counts[key_of(c, p)] += table.at(key_of(c, p)) / denom * ec * fp;
              }
            }
          }
          return part;
        });
    PairMap<double> counts;
    double log_likelihood = 0;
    for (const auto& part : partials) {
      log_likelihood += part.log_likelihood;
      for (auto k : sorted_keys(part.counts)) counts[k] += part.counts.at(k);
    }
    out.log_likelihoods.push_back(log_likelihood);

    // M step: normalize over the predicted words of each conditioning word.
    auto keys = sorted_keys(counts);
    std::unordered_map<WordId, double> row;
    for (auto k : keys) row[cond_of(k)] += counts.at(k);
    PairMap<double> next;
    next.reserve(counts.size());
    for (auto k : keys) next.emplace(k, counts.at(k) / row.at(cond_of(k)));

    const double delta = 1 - fuzzy_dice(table, next);
    out.report.deltas.push_back(delta);
    out.report.iterations = it;
    table = std::move(next);
    if (delta < cfg.convergence_threshold) {
      out.report.converged = true;
      break;
    }
  }
  if (!out.report.converged) {
    out.report.warnings.push_back("Model 1 " + std::string(fwd ? "source->target" : "target->source") +
                                  " not converged after " + std::to_string(cfg.max_iters) +
                                  " iterations");
  }
  out.table = std::move(table);
  return out;
}

TrainResult model1_train(const Bitext& bitext, const TrainConfig& cfg) {
  cfg.validate();
  if (bitext.empty()) throw EstimationError("cannot train on an empty bitext");
  auto fwd = model1_direction(bitext, Direction::SrcToTgt, cfg);
  auto bwd = model1_direction(bitext, Direction::TgtToSrc, cfg);

  TrainResult result;
  result.cooc = count_cooc(bitext, cfg.threads);
  auto& report = result.report;
  // The combined log follows the slower direction; the faster one is padded
  // with its final delta.
  const std::size_t n = std::max(fwd.report.deltas.size(), bwd.report.deltas.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < fwd.report.deltas.size() ? fwd.report.deltas[i] : fwd.report.deltas.back();
    const double b = i < bwd.report.deltas.size() ? bwd.report.deltas[i] : bwd.report.deltas.back();
    report.deltas.push_back(std::max(a, b));
  }
  report.iterations = static_cast<int>(n);
  report.converged = fwd.report.converged && bwd.report.converged;
  for (auto* r : {&fwd.report, &bwd.report}) {
    report.warnings.insert(report.warnings.end(), r->warnings.begin(), r->warnings.end());
  }

  result.model = TranslationModel::from_conditionals(bitext.src_vocab_ptr(), bitext.tgt_vocab_ptr(),
                                                     std::move(fwd.table), std::move(bwd.table),
                                                     Method::Model1);
  result.model.iterations = report.iterations;
  result.model.converged = report.converged;
  return result;
}

}  // namespace wtw
