#include "wtw/cooc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "parallel.hpp"

namespace wtw {
namespace {

/// Distinct types of one segment side with their within-segment counts.
std::vector<std::pair<WordId, std::uint32_t>> type_counts(std::vector<WordId> ids) {
  std::sort(ids.begin(), ids.end());
  std::vector<std::pair<WordId, std::uint32_t>> out;
  for (WordId w : ids) {
    if (!out.empty() && out.back().first == w) {
      ++out.back().second;
    } else {
      out.emplace_back(w, 1);
    }
  }
  return out;
}

double xlogy(double x, double y) { return x == 0 ? 0.0 : x * std::log(y); }

/// log of p^k (1-p)^(n-k); binomial coefficients are omitted.
double binomial_kernel(double k, double n, double p) { return xlogy(k, p) + xlogy(n - k, 1 - p); }

}  // namespace

CoocTable::CoocTable(std::size_t src_types, std::size_t tgt_types)
    : null_row_(src_types, 0.0),
      null_col_(tgt_types, 0.0),
      row_totals_(src_types, 0.0),
      col_totals_(tgt_types, 0.0) {}

double CoocTable::count(WordPair p) const {
  if (p.src == kNullWord && p.tgt == kNullWord) return 0;
  if (p.tgt == kNullWord) return null_row_.at(p.src);
  if (p.src == kNullWord) return null_col_.at(p.tgt);
  auto it = cells_.find(pack(p));
  return it == cells_.end() ? 0.0 : it->second;
}

double CoocTable::row_total(WordId u) const {
  if (u == kNullWord) {
    double s = 0;
    for (double x : null_col_) s += x;
    return s;
  }
  return row_totals_.at(u);
}

double CoocTable::col_total(WordId v) const {
  if (v == kNullWord) {
    double s = 0;
    for (double x : null_row_) s += x;
    return s;
  }
  return col_totals_.at(v);
}

void CoocTable::set(WordPair p, double value) {
  if (p.src == kNullWord && p.tgt == kNullWord) throw std::invalid_argument("NULL-NULL cell");
  if (p.tgt == kNullWord) {
    null_row_.at(p.src) = value;
  } else if (p.src == kNullWord) {
    null_col_.at(p.tgt) = value;
  } else if (value == 0) {
    cells_.erase(pack(p));
  } else {
    cells_[pack(p)] = value;
  }
}

void CoocTable::add(WordPair p, double value) { set(p, count(p) + value); }

void CoocTable::recompute_marginals() {
  std::fill(row_totals_.begin(), row_totals_.end(), 0.0);
  std::fill(col_totals_.begin(), col_totals_.end(), 0.0);
  // Summing in key order keeps the totals independent of hash-map layout.
  std::vector<std::uint64_t> keys;
  keys.reserve(cells_.size());
  for (const auto& [k, x] : cells_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  total_ = 0;
  for (auto k : keys) {
    const double x = cells_.at(k);
    auto p = unpack(k);
    row_totals_[p.src] += x;
    col_totals_[p.tgt] += x;
    total_ += x;
  }
  for (std::size_t u = 0; u < null_row_.size(); ++u) {
    row_totals_[u] += null_row_[u];
    total_ += null_row_[u];
  }
  for (std::size_t v = 0; v < null_col_.size(); ++v) {
    col_totals_[v] += null_col_[v];
    total_ += null_col_[v];
  }
}

ContingencyCells CoocTable::contingency(WordPair p) const {
  ContingencyCells cells;
  cells.a = count(p);
  cells.b = std::max(0.0, col_total(p.tgt) - cells.a);
  cells.c = std::max(0.0, row_total(p.src) - cells.a);
  cells.d = std::max(0.0, total_ - cells.a - cells.b - cells.c);
  return cells;
}

std::vector<WordPair> CoocTable::sorted_pairs() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(cells_.size() + null_row_.size() + null_col_.size());
  for (const auto& [k, x] : cells_) {
    if (x > 0) keys.push_back(k);
  }
  for (std::size_t u = 0; u < null_row_.size(); ++u) {
    if (null_row_[u] > 0) keys.push_back(pack({static_cast<WordId>(u), kNullWord}));
  }
  for (std::size_t v = 0; v < null_col_.size(); ++v) {
    if (null_col_[v] > 0) keys.push_back(pack({kNullWord, static_cast<WordId>(v)}));
  }
  std::sort(keys.begin(), keys.end());
  std::vector<WordPair> out;
  out.reserve(keys.size());
  for (auto k : keys) out.push_back(unpack(k));
  return out;
}

CoocTable count_cooc(const Bitext& bitext, unsigned threads) {
  const auto& pairs = bitext.pairs();
  auto partials = detail::map_blocks<PairMap<double>>(
      pairs.size(), threads, [&](std::size_t begin, std::size_t end) {
        PairMap<double> local;
        for (std::size_t i = begin; i < end; ++i) {
          auto us = type_counts(pairs[i].src);
          auto vs = type_counts(pairs[i].tgt);
          for (const auto& [u, cu] : us) {
            for (const auto& [v, cv] : vs) local[pack({u, v})] += std::min(cu, cv);
          }
        }
        return local;
      });
  CoocTable table(bitext.src_vocab().size(), bitext.tgt_vocab().size());
  for (const auto& part : partials) {
    for (const auto& [k, x] : part) table.add(unpack(k), x);
  }
  for (WordId u = 0; u < bitext.src_vocab().size(); ++u) {
    table.set({u, kNullWord}, static_cast<double>(bitext.src_vocab().frequency(u)));
  }
  for (WordId v = 0; v < bitext.tgt_vocab().size(); ++v) {
    table.set({kNullWord, v}, static_cast<double>(bitext.tgt_vocab().frequency(v)));
  }
  table.recompute_marginals();
  return table;
}

std::vector<std::pair<double, double>> good_turing_estimates(const std::vector<double>& counts) {
  std::map<double, double> freq_of_freq;
  for (double r : counts) {
    if (r > 0) freq_of_freq[r] += 1;
  }
  if (freq_of_freq.size() < 2) {
    throw std::invalid_argument("Good-Turing needs at least two distinct counts");
  }
  std::vector<double> rs;
  std::vector<double> nr;
  for (const auto& [r, n] : freq_of_freq) {
    rs.push_back(r);
    nr.push_back(n);
  }
  const std::size_t m = rs.size();

  // Averaging transform Z_r = N_r / (0.5 (t - q)), then a least-squares
  // line through (log r, log Z_r).
  std::vector<double> log_r(m);
  std::vector<double> log_z(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double q = i == 0 ? 0.0 : rs[i - 1];
    const double t = i + 1 < m ? rs[i + 1] : 2 * rs[i] - q;
    log_r[i] = std::log(rs[i]);
    log_z[i] = std::log(nr[i] / (0.5 * (t - q)));
  }
  double mean_x = 0;
  double mean_y = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mean_x += log_r[i];
    mean_y += log_z[i];
  }
  mean_x /= static_cast<double>(m);
  mean_y /= static_cast<double>(m);
  double sxy = 0;
  double sxx = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += (log_r[i] - mean_x) * (log_z[i] - mean_y);
    sxx += (log_r[i] - mean_x) * (log_r[i] - mean_x);
  }
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_x;
  auto smoothed_nr = [&](double r) { return std::exp(intercept + slope * std::log(r)); };

  std::vector<std::pair<double, double>> out;
  bool use_fit = false;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = rs[i];
    const double fitted = (r + 1) * smoothed_nr(r + 1) / smoothed_nr(r);
    if (!use_fit) {
      const bool has_next = i + 1 < m && rs[i + 1] == r + 1;
      if (!has_next) {
        use_fit = true;
      } else {
        const double n_r = nr[i];
        const double n_next = nr[i + 1];
        const double turing = (r + 1) * n_next / n_r;
        const double sd = std::sqrt((r + 1) * (r + 1) * (n_next / (n_r * n_r)) * (1 + n_next / n_r));
        if (std::abs(turing - fitted) <= 1.96 * sd) {
          use_fit = true;
        } else {
          out.emplace_back(r, turing);
          continue;
        }
      }
    }
    out.emplace_back(r, fitted);
  }
  return out;
}

SmoothingResult sgt_smooth(const CoocTable& table) {
  SmoothingResult result{table, false, std::nullopt};
  std::vector<double> counts;
  counts.reserve(table.word_cells().size());
  for (const auto& [k, x] : table.word_cells()) {
    if (x > 0) counts.push_back(x);
  }
  if (counts.empty()) return result;
  std::map<double, std::size_t> distinct;
  for (double r : counts) ++distinct[r];
  if (distinct.size() < 2) {
    result.warning = "Good-Turing smoothing skipped: fewer than two distinct co-occurrence counts";
    return result;
  }
  for (const auto& [r, n] : distinct) {
    if (r != std::floor(r)) throw std::invalid_argument("Good-Turing smoothing needs integer counts");
  }

  auto estimates = good_turing_estimates(counts);
  double total = 0;
  double renorm = 0;
  for (const auto& [r, r_star] : estimates) {
    const double n_r = static_cast<double>(distinct.at(r));
    total += n_r * r;
    renorm += n_r * r_star;
  }
  auto ones = distinct.find(1.0);
  const double unseen_mass = ones == distinct.end() ? 0.0 : static_cast<double>(ones->second) / total;
  std::map<double, double> replacement;
  for (const auto& [r, r_star] : estimates) {
    replacement[r] = total * (1 - unseen_mass) * r_star / renorm;
  }

  for (const auto& [k, x] : table.word_cells()) {
    if (x > 0) result.table.set(unpack(k), replacement.at(x));
  }
  result.table.recompute_marginals();
  result.applied = true;
  return result;
}

double g2_score(const ContingencyCells& cells) {
  const auto [a, b, c, d] = cells;
  if (a < 0 || b < 0 || c < 0 || d < 0) throw std::domain_error("G2: negative contingency cell");
  if (a + b <= 0 || c + d <= 0) throw std::domain_error("G2: empty row in contingency table");
  // ad = bc is independence.
  if (a * d == b * c) return 0.0;
  const double n = a + b + c + d;
  const double p1 = a / (a + b);
  const double p2 = c / (c + d);
  const double p = (a + c) / n;
  const double g2 = 2 * (binomial_kernel(a, a + b, p1) + binomial_kernel(c, c + d, p2) -
                         binomial_kernel(a, a + b, p) - binomial_kernel(c, c + d, p));
  return std::max(0.0, g2);
}

double null_epsilon(double smallest_positive_g2) {
  constexpr double kFloor = 1e-30;
  if (!(smallest_positive_g2 > 0) || !std::isfinite(smallest_positive_g2)) return kFloor;
  return std::max(kFloor, 1e-6 * smallest_positive_g2);
}

LikelihoodTable init_likelihoods(const CoocTable& table) {
  LikelihoodTable like;
  double smallest = std::numeric_limits<double>::infinity();
  for (const auto& [k, x] : table.word_cells()) {
    if (x <= 0) continue;
    auto cells = table.contingency(unpack(k));
    const double g2 = (cells.a + cells.b > 0 && cells.c + cells.d > 0) ? g2_score(cells) : 0.0;
    like.set(unpack(k), g2);
    if (g2 > 0) smallest = std::min(smallest, g2);
  }
  const double eps = null_epsilon(smallest);
  for (WordId u = 0; u < table.src_types(); ++u) like.set({u, kNullWord}, eps);
  for (WordId v = 0; v < table.tgt_types(); ++v) like.set({kNullWord, v}, eps);
  return like;
}

void write_cooc_dump(std::ostream& out, const CoocTable& table, const Vocabulary& src,
                     const Vocabulary& tgt) {
  struct Row {
    WordPair pair;
    double cooc;
    double g2;
  };
  std::vector<Row> rows;
  for (const auto& [k, x] : table.word_cells()) {
    auto cells = table.contingency(unpack(k));
    const double g2 = (cells.a + cells.b > 0 && cells.c + cells.d > 0) ? g2_score(cells) : 0.0;
    rows.push_back({unpack(k), x, g2});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& l, const Row& r) {
    if (l.g2 != r.g2) return l.g2 > r.g2;
    return l.pair < r.pair;
  });
  for (const auto& r : rows) {
    out << src.word(r.pair.src) << '\t' << tgt.word(r.pair.tgt) << '\t' << r.cooc << '\t' << r.g2
        << '\n';
  }
}

}  // namespace wtw
