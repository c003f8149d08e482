#include "wtw/likelihood.hpp"

#include <cmath>

namespace wtw {

void LikelihoodTable::set(WordPair p, double score) {
  if (!std::isfinite(score)) throw std::invalid_argument("likelihood scores must be finite");
  scores_[pack(p)] = score;
}

LikelihoodTable LikelihoodTable::scaled(double factor) const {
  LikelihoodTable out;
  out.scores_.reserve(scores_.size());
  for (const auto& [k, s] : scores_) out.scores_.emplace(k, s * factor);
  return out;
}

}  // namespace wtw
