#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "wtw/cooc.hpp"

using namespace wtw;
using wtw::testing::bitext_of;

namespace {

WordPair pair_of(const Bitext& b, const std::string& u, const std::string& v) {
  return {u == "-" ? kNullWord : *b.src_vocab().find(u), v == "-" ? kNullWord : *b.tgt_vocab().find(v)};
}

double g2(double a, double b, double c, double d) { return g2_score({a, b, c, d}); }

}  // namespace

TEST(CountCooc, SmallestCase) {
  auto b = bitext_of({{"a", "x"}});
  auto t = count_cooc(b);
  EXPECT_EQ(t.count(pair_of(b, "a", "x")), 1);
  EXPECT_EQ(t.count(pair_of(b, "a", "-")), 1);
  EXPECT_EQ(t.count(pair_of(b, "-", "x")), 1);
  EXPECT_EQ(t.total(), 3);
}

TEST(CountCooc, MinRuleForRepeatedTokens) {
  auto b = bitext_of({{"a a", "x"}});
  auto t = count_cooc(b);
  EXPECT_EQ(t.count(pair_of(b, "a", "x")), 1);
  EXPECT_EQ(t.count(pair_of(b, "a", "-")), 2);

  auto b2 = bitext_of({{"a a b", "x x x"}});
  auto t2 = count_cooc(b2);
  EXPECT_EQ(t2.count(pair_of(b2, "a", "x")), 2);
  EXPECT_EQ(t2.count(pair_of(b2, "b", "x")), 1);
}

TEST(CountCooc, Additivity) {
  auto b = bitext_of({{"a", "x"}, {"a", "x"}});
  EXPECT_EQ(count_cooc(b).count(pair_of(b, "a", "x")), 2);

  wtw::testing::SyntheticConfig cfg;
  cfg.segments = 120;
  auto data = wtw::testing::make_synthetic(cfg);
  auto tokens = data.bitext.to_tokens();
  std::vector<TokenizedPair> first(tokens.begin(), tokens.begin() + 60);
  std::vector<TokenizedPair> second(tokens.begin() + 60, tokens.end());
  auto whole = count_cooc(data.bitext);
  auto b1 = Bitext::from_tokens(first);
  auto b2 = Bitext::from_tokens(second);
  auto t1 = count_cooc(b1);
  auto t2 = count_cooc(b2);
  auto lookup = [](const Bitext& bx, const CoocTable& t, const std::string& u, const std::string& v) {
    auto su = bx.src_vocab().find(u);
    auto tv = bx.tgt_vocab().find(v);
    if (!su || !tv) return 0.0;
    return t.count({*su, *tv});
  };
  for (const auto& [k, n] : whole.word_cells()) {
    auto p = unpack(k);
    const std::string u(data.bitext.src_vocab().word(p.src));
    const std::string v(data.bitext.tgt_vocab().word(p.tgt));
    ASSERT_EQ(n, lookup(b1, t1, u, v) + lookup(b2, t2, u, v)) << u << " " << v;
  }
  EXPECT_EQ(whole.total(), t1.total() + t2.total());
}

TEST(CountCooc, MarginalsAndThreads) {
  wtw::testing::SyntheticConfig cfg;
  cfg.segments = 300;
  auto data = wtw::testing::make_synthetic(cfg);
  auto t = count_cooc(data.bitext);
  auto t4 = count_cooc(data.bitext, 4);
  EXPECT_EQ(t.word_cells(), t4.word_cells());

  std::vector<double> rows(t.src_types()), cols(t.tgt_types());
  double total = 0;
  for (const auto& [k, n] : t.word_cells()) {
    auto p = unpack(k);
    rows[p.src] += n;
    cols[p.tgt] += n;
    total += n;
  }
  for (WordId u = 0; u < t.src_types(); ++u) {
    const double e = data.bitext.src_vocab().frequency(u);
    EXPECT_EQ(t.count({u, kNullWord}), e);
    EXPECT_DOUBLE_EQ(t.row_total(u), rows[u] + e);
    total += e;
  }
  for (WordId v = 0; v < t.tgt_types(); ++v) {
    const double f = data.bitext.tgt_vocab().frequency(v);
    EXPECT_EQ(t.count({kNullWord, v}), f);
    EXPECT_DOUBLE_EQ(t.col_total(v), cols[v] + f);
    total += f;
  }
  EXPECT_DOUBLE_EQ(t.total(), total);

  auto pairs = t.sorted_pairs();
  EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end()));
  auto cells = t.contingency(pairs.front());
  EXPECT_DOUBLE_EQ(cells.total(), t.total());
}

// Reference values from a separately coded Gale-Sampson run.
TEST(GoodTuring, FrozenEstimatesSmallTable) {
  auto est = good_turing_estimates({1, 1, 1, 1, 2, 2, 3, 4, 6, 10});
  const std::vector<std::pair<double, double>> expected = {
      {1, 0.8190397367964058}, {2, 1.7795764736719677}, {3, 2.7614651539185746},
      {4, 3.7510290392841728}, {6, 5.7394586761679385}, {10, 9.729244740026656}};
  ASSERT_EQ(est.size(), expected.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    EXPECT_EQ(est[i].first, expected[i].first);
    EXPECT_NEAR(est[i].second, expected[i].second, 1e-9) << "r=" << est[i].first;
  }
}

TEST(GoodTuring, FrozenEstimatesZipfTable) {
  std::vector<double> counts;
  counts.insert(counts.end(), 20, 1);
  counts.insert(counts.end(), 8, 2);
  counts.insert(counts.end(), 4, 3);
  counts.insert(counts.end(), 3, 4);
  counts.insert(counts.end(), 2, 5);
  counts.insert(counts.end(), {7, 9, 12});
  auto est = good_turing_estimates(counts);
  const std::vector<std::pair<double, double>> expected = {
      {1, 0.5729140951213716}, {2, 1.443847844327221},  {3, 2.380780346235145},
      {4, 3.3433528017894245}, {5, 4.318562622390455},  {7, 6.287748673315503},
      {9, 8.26934985459576},   {12, 11.252424184279487}};
  ASSERT_EQ(est.size(), expected.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    EXPECT_NEAR(est[i].second, expected[i].second, 1e-9) << "r=" << est[i].first;
  }
  EXPECT_LT(est[0].second, 1.0);
}

TEST(GoodTuring, NeedsTwoDistinctCounts) {
  EXPECT_THROW(good_turing_estimates({3, 3, 3}), std::invalid_argument);
}

TEST(SgtSmooth, SmoothsWordCellsOnly) {
  wtw::testing::SyntheticConfig cfg;
  cfg.segments = 200;
  auto data = wtw::testing::make_synthetic(cfg);
  auto raw = count_cooc(data.bitext);
  auto s = sgt_smooth(raw);
  ASSERT_TRUE(s.applied);
  EXPECT_FALSE(s.warning.has_value());
  bool saw_singleton = false;
  for (const auto& [k, n] : raw.word_cells()) {
    const double smoothed = s.table.count(unpack(k));
    EXPECT_GT(smoothed, 0);
    if (n == 1) {
      saw_singleton = true;
      EXPECT_LT(smoothed, 1.0);
    }
  }
  EXPECT_TRUE(saw_singleton);
  for (WordId u = 0; u < raw.src_types(); ++u) {
    EXPECT_EQ(s.table.count({u, kNullWord}), raw.count({u, kNullWord}));
  }
  double total = 0;
  for (const auto& p : s.table.sorted_pairs()) total += s.table.count(p);
  EXPECT_NEAR(s.table.total(), total, 1e-6 * total);
}

TEST(SgtSmooth, DegenerateInputs) {
  CoocTable empty;
  auto e = sgt_smooth(empty);
  EXPECT_FALSE(e.applied);
  EXPECT_FALSE(e.warning.has_value());

  auto b = bitext_of({{"a", "x"}, {"b", "y"}});
  auto flat = sgt_smooth(count_cooc(b));
  EXPECT_FALSE(flat.applied);
  ASSERT_TRUE(flat.warning.has_value());
  EXPECT_EQ(flat.table.count(pair_of(b, "a", "x")), 1);
  EXPECT_TRUE(std::isfinite(flat.table.total()));
  EXPECT_GT(flat.table.total(), 0);
}

TEST(G2, Examples) {
  EXPECT_EQ(g2(10, 10, 10, 10), 0.0);
  EXPECT_NEAR(g2(10, 0, 0, 10), 40 * std::log(2.0), 1e-12);
  EXPECT_NEAR(g2(5, 5, 5, 85), wtw::testing::g2_binomial_oracle(5, 5, 5, 85), 1e-9);
}

TEST(G2, DomainErrors) {
  EXPECT_THROW(g2(0, 0, 1, 1), std::domain_error);
  EXPECT_THROW(g2(1, 1, 0, 0), std::domain_error);
  EXPECT_THROW(g2(-1, 2, 1, 1), std::domain_error);
}

TEST(G2, SymmetryAndMutualInformation) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> cell(0, 60);
  for (int i = 0; i < 500; ++i) {
    const double a = cell(rng), b = cell(rng), c = cell(rng), d = cell(rng);
    if (a + b == 0 || c + d == 0) continue;
    const double g = g2(a, b, c, d);
    EXPECT_GE(g, 0);
    if (b + d > 0 && a + c > 0) EXPECT_NEAR(g, g2(d, c, b, a), 1e-9);
    const double mi = wtw::testing::g2_mutual_information(a, b, c, d);
    EXPECT_NEAR(g, mi, 1e-6 * std::max(1.0, mi));
  }
}

TEST(G2, MonotoneInAAbovePooledRate) {
  for (double b = 0; b <= 20; b += 4) {
    for (double c = 1; c <= 20; c += 4) {
      for (double d = 1; d <= 40; d += 7) {
        for (double a = 0; a < 40; a += 1) {
          if (a + b == 0) continue;
          if (a / (a + b) < (a + c) / (a + b + c + d)) continue;
          EXPECT_GE(g2(a + 1, b, c, d), g2(a, b, c, d) - 1e-9) << a << ' ' << b << ' ' << c << ' ' << d;
        }
      }
    }
  }
}

TEST(InitLikelihoods, ScoresAndNullEpsilon) {
  auto b = bitext_of({{"a b", "x y"}, {"a c", "x z"}, {"b", "y"}, {"c d", "z w"}});
  auto t = count_cooc(b);
  auto like = init_likelihoods(t);
  EXPECT_GT(*like.get(pair_of(b, "a", "x")), 0);
  EXPECT_FALSE(like.contains(pair_of(b, "a", "w")));

  double min_positive = INFINITY;
  for (const auto& [k, s] : like.scores()) {
    auto p = unpack(k);
    if (p.src != kNullWord && p.tgt != kNullWord && s > 0) min_positive = std::min(min_positive, s);
  }
  const double eps = null_epsilon(min_positive);
  EXPECT_DOUBLE_EQ(eps, std::max(1e-30, 1e-6 * min_positive));
  for (WordId u = 0; u < b.src_vocab().size(); ++u) EXPECT_EQ(*like.get({u, kNullWord}), eps);
  for (WordId v = 0; v < b.tgt_vocab().size(); ++v) EXPECT_EQ(*like.get({kNullWord, v}), eps);
  for (const auto& [k, s] : like.scores()) {
    auto p = unpack(k);
    if (p.src != kNullWord && p.tgt != kNullWord && s > 0) EXPECT_LT(eps, s);
  }
  EXPECT_EQ(null_epsilon(1e-40), 1e-30);
}

TEST(CoocDump, SortedByScore) {
  auto b = bitext_of({{"a b", "x y"}, {"a", "x"}});
  std::ostringstream out;
  write_cooc_dump(out, count_cooc(b), b.src_vocab(), b.tgt_vocab());
  std::istringstream in(out.str());
  std::string line;
  double prev = INFINITY;
  int rows = 0;
  while (std::getline(in, line)) {
    auto f = wtw::testing::words(line);
    ASSERT_EQ(f.size(), 4u) << line;
    const double g = std::stod(f[3]);
    EXPECT_LE(g, prev);
    prev = g;
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}
