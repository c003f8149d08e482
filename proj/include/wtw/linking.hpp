#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "wtw/corpus.hpp"
#include "wtw/likelihood.hpp"
#include "wtw/model.hpp"
#include "wtw/types.hpp"

namespace wtw {

class CoocTable;

/// A link token between positions of one segment pair; either side may be
/// kNullPosition.
struct Link {
  Position src = kNullPosition;
  Position tgt = kNullPosition;

  friend auto operator<=>(const Link&, const Link&) = default;
};

/// One-to-one, NULL-padded mapping between the tokens of a segment pair.
/// Kept sorted, so two assignments compare equal iff they are the same set.
using Assignment = std::vector<Link>;

/// Type-level link counts over a bitext.
class LinkCounts {
 public:
  void add(WordPair p, double n);
  void merge(const LinkCounts& other);

  double get(WordPair p) const {
    auto it = counts_.find(pack(p));
    return it == counts_.end() ? 0.0 : it->second;
  }
  /// K, the total number of links (NULL links included).
  double total() const { return total_; }
  const PairMap<double>& counts() const { return counts_; }

  /// Throws std::logic_error naming the first pair with links > cooc.
  void check_within(const CoocTable& cooc) const;

 private:
  PairMap<double> counts_;
  double total_ = 0;
};

/// Competitive linking: candidate type pairs are taken in descending like
/// order (ties by ascending (u, v), NULL last) and each links every
/// still-unlinked co-occurring token pair, leftmost tokens first. Tokens
/// left over at the end are linked to NULL.
Assignment link_segment(const SegmentPair& pair, const LikelihoodTable& like);

/// Sum of the type-level counts of every segment's assignment.
LinkCounts link_bitext(const Bitext& bitext, const LikelihoodTable& like, unsigned threads = 1);

/// Counts contributed by one assignment.
void add_assignment(LinkCounts& counts, const SegmentPair& pair, const Assignment& assignment);

/// Sum of like(u, v) over an assignment; nullopt if some link has no entry.
std::optional<double> assignment_score(const SegmentPair& pair, const Assignment& assignment,
                                       const LikelihoodTable& like);

/// Largest segment (source plus target tokens) the enumeration oracle accepts.
inline constexpr std::size_t kOracleMaxTokens = 12;

/// Exhaustive search for the assignment maximizing the sum of like(u, v).
/// Pairs without an entry are not allowed. Throws std::length_error above
/// kOracleMaxTokens, std::invalid_argument if no assignment is admissible.
Assignment viterbi_oracle(const SegmentPair& pair, const LikelihoodTable& like);

/// Size distribution Z(b).
using SizeDistribution = std::map<std::size_t, double>;

struct AssignmentLogProb {
  double value = 0;
  /// First pair with zero probability when value is -infinity.
  std::optional<WordPair> zero_pair;
};

/// log Z(b) + log b! + sum of log trans(u, v) over the assignment.
AssignmentLogProb assignment_log_prob(const SegmentPair& pair, const Assignment& assignment,
                                      const TranslationModel& model, const SizeDistribution& sizes);

/// `segId TAB srcPos TAB tgtPos` lines, `-` for NULL.
void write_link_dump(std::ostream& out, const SegmentPair& pair, const Assignment& assignment);

}  // namespace wtw
