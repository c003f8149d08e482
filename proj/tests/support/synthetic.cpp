#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace wtw::testing {
namespace {

std::string numbered(char prefix, std::size_t i, int width = 4) {
  std::string digits = std::to_string(i);
  return prefix + std::string(width - std::min<int>(width, static_cast<int>(digits.size())), '0') + digits;
}

/// A source token and, if it survives translation, its target word.
struct Generated {
  std::string src;
  std::optional<std::string> tgt;
};

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };

  // Target spellings are a shuffled copy, so id order differs across sides.
  std::vector<std::size_t> perm(cfg.lexicon);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> content_src, content_tgt;
  for (std::size_t i = 0; i < cfg.lexicon; ++i) {
    content_src.push_back(numbered('s', i));
    content_tgt.push_back(numbered('t', perm[i]));
  }
  std::vector<std::string> func_src, func_tgt;
  for (std::size_t i = 0; i < cfg.function_words; ++i) {
    func_src.push_back(numbered('f', i, 2));
    func_tgt.push_back(numbered('g', i, 2));
  }
  std::vector<std::string> inserts;
  for (std::size_t i = 0; i < cfg.insert_types; ++i) inserts.push_back(numbered('x', i, 2));

  std::vector<double> weights(cfg.lexicon);
  for (std::size_t i = 0; i < cfg.lexicon; ++i) weights[i] = 1.0 / std::pow(i + 1.0, cfg.zipf_exponent);
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> content_len(cfg.min_content, cfg.max_content);
  std::uniform_int_distribution<std::size_t> func_len(0, cfg.max_function);
  std::uniform_int_distribution<std::size_t> func_pick(0, cfg.function_words - 1);
  std::vector<double> insert_weights;
  for (std::size_t i = 0; i < inserts.size(); ++i) insert_weights.push_back(1.0 / (i + 1.0));
  std::discrete_distribution<std::size_t> insert_pick(insert_weights.begin(), insert_weights.end());

  auto generate = [&] {
    std::vector<Generated> out;
    for (std::size_t n = content_len(rng); n > 0; --n) {
      const auto i = zipf(rng);
      out.push_back({content_src[i], chance(cfg.drop_rate) ? std::nullopt
                                                           : std::optional<std::string>(content_tgt[i])});
    }
    if (cfg.function_words > 0) {
      for (std::size_t n = func_len(rng); n > 0; --n) {
        const auto i = func_pick(rng);
        std::optional<std::string> t;
        if (chance(cfg.function_fidelity)) {
          t = func_tgt[i];
        } else if (!chance(cfg.function_drop)) {
          t = func_tgt[func_pick(rng)];
        }
        out.push_back({func_src[i], t});
      }
    }
    std::shuffle(out.begin(), out.end(), rng);
    if (cfg.sentence_marks) out.push_back({".", std::string(".")});
    return out;
  };

  SyntheticData data;
  for (std::size_t i = 0; i < cfg.lexicon; ++i) data.lexicon.emplace_back(content_src[i], content_tgt[i]);
  for (std::size_t i = 0; i < cfg.function_words; ++i) data.lexicon.emplace_back(func_src[i], func_tgt[i]);

  std::vector<TokenizedPair> pairs;
  auto& gold = data.gold.annotations["a1"];
  for (std::size_t s = 0; s < cfg.segments; ++s) {
    const bool noisy = chance(cfg.noise_rate);
    data.noisy.push_back(noisy);
    auto gen = generate();

    TokenizedPair pair;
    pair.id = std::to_string(s + 1);
    // Target tokens with the source position they translate (-1: none).
    std::vector<std::pair<std::string, Position>> tgt;
    for (std::size_t i = 0; i < gen.size(); ++i) {
      pair.src.push_back(gen[i].src);
      if (!noisy && gen[i].tgt) tgt.emplace_back(*gen[i].tgt, static_cast<Position>(i));
    }
    if (noisy) {
      for (const auto& g : generate()) {
        if (g.tgt) tgt.emplace_back(*g.tgt, kNullPosition);
      }
    }
    for (std::size_t n = 0; n < cfg.max_inserts; ++n) {
      if (chance(cfg.insert_rate)) tgt.emplace_back(inserts[insert_pick(rng)], kNullPosition);
    }
    // Keep the sentence mark last, shuffle the rest.
    const bool mark_last = cfg.sentence_marks && !tgt.empty() && tgt.back().first == "." && !noisy;
    std::shuffle(tgt.begin(), tgt.end() - (mark_last ? 1 : 0), rng);
    if (tgt.empty()) tgt.emplace_back(inserts[insert_pick(rng)], kNullPosition);
    for (const auto& [w, from] : tgt) pair.tgt.push_back(w);

    if (!noisy && gold.size() < cfg.gold_segments) {
      auto& links = gold[pair.id];
      std::vector<bool> src_linked(pair.src.size(), false);
      for (std::size_t j = 0; j < tgt.size(); ++j) {
        const Position from = tgt[j].second;
        links.insert({from, static_cast<Position>(j)});
        if (from != kNullPosition) src_linked[from] = true;
      }
      for (std::size_t i = 0; i < pair.src.size(); ++i) {
        if (!src_linked[i]) links.insert({static_cast<Position>(i), kNullPosition});
      }
    }
    pairs.push_back(std::move(pair));
  }
  data.bitext = Bitext::from_tokens(pairs);

  for (const auto& w : func_src) data.classes.src.set(w, WordClass::F);
  for (const auto& w : func_tgt) data.classes.tgt.set(w, WordClass::F);
  if (cfg.sentence_marks) {
    data.classes.src.set(".", WordClass::EOS);
    data.classes.tgt.set(".", WordClass::EOS);
  }
  return data;
}

}  // namespace wtw::testing
