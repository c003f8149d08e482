#pragma once

#include <optional>
#include <vector>

#include "wtw/types.hpp"

namespace wtw {

/// Current like(u, v) scores. Pairs without an entry cannot be linked.
class LikelihoodTable {
 public:
  std::optional<double> get(WordPair p) const {
    auto it = scores_.find(pack(p));
    if (it == scores_.end()) return std::nullopt;
    return it->second;
  }

  /// Throws std::invalid_argument for non-finite scores.
  void set(WordPair p, double score);

  bool contains(WordPair p) const { return scores_.count(pack(p)) != 0; }
  std::size_t size() const { return scores_.size(); }
  bool empty() const { return scores_.empty(); }
  const PairMap<double>& scores() const { return scores_; }

  /// Every entry multiplied by `factor`.
  LikelihoodTable scaled(double factor) const;

 private:
  PairMap<double> scores_;
};

}  // namespace wtw
