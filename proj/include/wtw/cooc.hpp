#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wtw/corpus.hpp"
#include "wtw/likelihood.hpp"
#include "wtw/types.hpp"

namespace wtw {

/// 2x2 contingency table for a word pair (u, v):
///            u      not u
///   v        a      b
///   not v    c      d
struct ContingencyCells {
  double a = 0;
  double b = 0;
  double c = 0;
  double d = 0;

  double total() const { return a + b + c + d; }
};

/// Boundary-based co-occurrence counts, with NULL cells
/// cooc(u, NULL) = e(u) and cooc(NULL, v) = f(v).
class CoocTable {
 public:
  CoocTable() = default;
  CoocTable(std::size_t src_types, std::size_t tgt_types);

  /// Count for any pair, NULL cells included; 0 for pairs that never co-occur.
  double count(WordPair p) const;

  /// Non-NULL cells only.
  const PairMap<double>& word_cells() const { return cells_; }

  double row_total(WordId u) const;
  double col_total(WordId v) const;
  /// N, the sum over every cell including the NULL row and column.
  double total() const { return total_; }

  std::size_t src_types() const { return null_row_.size(); }
  std::size_t tgt_types() const { return null_col_.size(); }

  ContingencyCells contingency(WordPair p) const;

  /// Every pair with a positive count, NULL cells included, in key order.
  std::vector<WordPair> sorted_pairs() const;

  void set(WordPair p, double value);
  void add(WordPair p, double value);
  void recompute_marginals();

 private:
  PairMap<double> cells_;
  std::vector<double> null_row_;  // cooc(u, NULL)
  std::vector<double> null_col_;  // cooc(NULL, v)
  std::vector<double> row_totals_;
  std::vector<double> col_totals_;
  double total_ = 0;
};

/// cooc(u, v) = sum over segments of min(count of u in U_i, count of v in V_i).
CoocTable count_cooc(const Bitext& bitext, unsigned threads = 1);

struct SmoothingResult {
  CoocTable table;
  bool applied = false;
  std::optional<std::string> warning;
};

/// Simple Good-Turing smoothing (Gale & Sampson) of the non-NULL cells.
/// Each count r becomes N * (1 - N_1/N) * r* / sum(N_r r*).
SmoothingResult sgt_smooth(const CoocTable& table);

/// Smoothed value r* for every distinct count r in `counts`, before
/// renormalization. Exposed for testing; requires at least two distinct
/// positive counts.
std::vector<std::pair<double, double>> good_turing_estimates(const std::vector<double>& counts);

/// Log-likelihood ratio statistic G^2. Requires a+b > 0, c+d > 0 and
/// non-negative cells; throws std::domain_error otherwise.
double g2_score(const ContingencyCells& cells);

/// like(u, v) = G^2(u, v) for every co-occurring word pair; every NULL pair
/// gets an epsilon below all positive scores.
LikelihoodTable init_likelihoods(const CoocTable& table);

/// The NULL initialization value for a given table.
double null_epsilon(double smallest_positive_g2);

/// `u TAB v TAB cooc TAB g2`, descending G^2 then (u, v).
void write_cooc_dump(std::ostream& out, const CoocTable& table, const Vocabulary& src,
                     const Vocabulary& tgt);

}  // namespace wtw
