#include "wtw/linking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "wtw/cooc.hpp"

namespace wtw {
namespace {

/// Positions of each distinct type on one side, ascending.
struct TypeSlots {
  WordId word;
  std::vector<Position> positions;
  std::size_t next = 0;  // first position not yet linked
};

std::vector<TypeSlots> slots_of(const std::vector<WordId>& side) {
  std::vector<std::pair<WordId, Position>> tagged;
  tagged.reserve(side.size());
  for (std::size_t i = 0; i < side.size(); ++i) tagged.emplace_back(side[i], static_cast<Position>(i));
  std::sort(tagged.begin(), tagged.end());
  std::vector<TypeSlots> out;
  for (const auto& [w, pos] : tagged) {
    if (out.empty() || out.back().word != w) out.push_back({w, {}, 0});
    out.back().positions.push_back(pos);
  }
  return out;
}

struct Candidate {
  double score;
  WordPair pair;
  std::size_t src_slot;
  std::size_t tgt_slot;
};

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

WordPair pair_at(const SegmentPair& seg, const Link& l) {
  return {l.src == kNullPosition ? kNullWord : seg.src[l.src],
          l.tgt == kNullPosition ? kNullWord : seg.tgt[l.tgt]};
}

std::string position_text(Position p) {
  return p == kNullPosition ? std::string(kNullText) : std::to_string(p);
}

}  // namespace

void LinkCounts::add(WordPair p, double n) {
  counts_[pack(p)] += n;
  total_ += n;
}

void LinkCounts::merge(const LinkCounts& other) {
  for (const auto& [k, n] : other.counts_) counts_[k] += n;
  total_ += other.total_;
}

void LinkCounts::check_within(const CoocTable& cooc) const {
  for (const auto& [k, n] : counts_) {
    const auto p = unpack(k);
    if (n > cooc.count(p) + 1e-9) {
      throw std::logic_error("links(" + std::to_string(p.src) + ", " + std::to_string(p.tgt) +
                             ") = " + std::to_string(n) + " exceeds cooc " +
                             std::to_string(cooc.count(p)));
    }
  }
}

Assignment link_segment(const SegmentPair& seg, const LikelihoodTable& like) {
  auto us = slots_of(seg.src);
  auto vs = slots_of(seg.tgt);

  std::vector<Candidate> candidates;
  candidates.reserve(us.size() * vs.size() + us.size() + vs.size());
  for (std::size_t i = 0; i < us.size(); ++i) {
    for (std::size_t j = 0; j < vs.size(); ++j) {
      WordPair p{us[i].word, vs[j].word};
      if (auto s = like.get(p)) candidates.push_back({*s, p, i, j});
    }
    WordPair p{us[i].word, kNullWord};
    if (auto s = like.get(p)) candidates.push_back({*s, p, i, kNoSlot});
  }
  for (std::size_t j = 0; j < vs.size(); ++j) {
    WordPair p{kNullWord, vs[j].word};
    if (auto s = like.get(p)) candidates.push_back({*s, p, kNoSlot, j});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& l, const Candidate& r) {
    if (l.score != r.score) return l.score > r.score;
    return l.pair < r.pair;
  });

  Assignment out;
  out.reserve(seg.src.size() + seg.tgt.size());
  for (const auto& c : candidates) {
    if (c.tgt_slot == kNoSlot) {
      auto& u = us[c.src_slot];
      for (; u.next < u.positions.size(); ++u.next) out.push_back({u.positions[u.next], kNullPosition});
    } else if (c.src_slot == kNoSlot) {
      auto& v = vs[c.tgt_slot];
      for (; v.next < v.positions.size(); ++v.next) out.push_back({kNullPosition, v.positions[v.next]});
    } else {
      auto& u = us[c.src_slot];
      auto& v = vs[c.tgt_slot];
      for (; u.next < u.positions.size() && v.next < v.positions.size(); ++u.next, ++v.next) {
        out.push_back({u.positions[u.next], v.positions[v.next]});
      }
    }
  }
  for (auto& u : us) {
    for (; u.next < u.positions.size(); ++u.next) out.push_back({u.positions[u.next], kNullPosition});
  }
  for (auto& v : vs) {
    for (; v.next < v.positions.size(); ++v.next) out.push_back({kNullPosition, v.positions[v.next]});
  }
  std::sort(out.begin(), out.end());
  return out;
}

void add_assignment(LinkCounts& counts, const SegmentPair& seg, const Assignment& assignment) {
  for (const auto& l : assignment) counts.add(pair_at(seg, l), 1.0);
}

LinkCounts link_bitext(const Bitext& bitext, const LikelihoodTable& like, unsigned threads) {
  const auto& pairs = bitext.pairs();
  auto partials = detail::map_blocks<LinkCounts>(
      pairs.size(), threads, [&](std::size_t begin, std::size_t end) {
        LinkCounts local;
        for (std::size_t i = begin; i < end; ++i) add_assignment(local, pairs[i], link_segment(pairs[i], like));
        return local;
      });
  LinkCounts total;
  for (const auto& part : partials) total.merge(part);
  return total;
}

std::optional<double> assignment_score(const SegmentPair& seg, const Assignment& assignment,
                                       const LikelihoodTable& like) {
  double total = 0;
  for (const auto& l : assignment) {
    auto s = like.get(pair_at(seg, l));
    if (!s) return std::nullopt;
    total += *s;
  }
  return total;
}

Assignment viterbi_oracle(const SegmentPair& seg, const LikelihoodTable& like) {
  const std::size_t m = seg.src.size();
  const std::size_t n = seg.tgt.size();
  if (m + n > kOracleMaxTokens) {
    throw std::length_error("viterbi_oracle: segment " + seg.id + " has " + std::to_string(m + n) +
                            " tokens, limit is " + std::to_string(kOracleMaxTokens));
  }
  constexpr double kBlocked = -std::numeric_limits<double>::infinity();
  auto score = [&](WordPair p) { return like.get(p).value_or(kBlocked); };

  // Scores for src i to tgt j (j == n means NULL) and for tgt j to NULL.
  std::vector<std::vector<double>> to_tgt(m, std::vector<double>(n + 1));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) to_tgt[i][j] = score({seg.src[i], seg.tgt[j]});
    to_tgt[i][n] = score({seg.src[i], kNullWord});
  }
  std::vector<double> tgt_null(n);
  for (std::size_t j = 0; j < n; ++j) tgt_null[j] = score({kNullWord, seg.tgt[j]});

  double best = kBlocked;
  std::vector<std::size_t> best_choice;
  std::vector<std::size_t> choice(m);
  std::vector<bool> used(n, false);

  auto recurse = [&](auto&& self, std::size_t i, double acc) -> void {
    if (acc == kBlocked) return;
    if (i == m) {
      double total = acc;
      for (std::size_t j = 0; j < n; ++j) {
        if (!used[j]) total += tgt_null[j];
      }
      if (total > best) {
        best = total;
        best_choice = choice;
      }
      return;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j] || to_tgt[i][j] == kBlocked) continue;
      used[j] = true;
      choice[i] = j;
      self(self, i + 1, acc + to_tgt[i][j]);
      used[j] = false;
    }
    choice[i] = n;
    self(self, i + 1, acc + to_tgt[i][n]);
  };
  recurse(recurse, 0, 0.0);

  if (best == kBlocked) {
    throw std::invalid_argument("viterbi_oracle: no admissible assignment for segment " + seg.id);
  }
  Assignment out;
  std::vector<bool> taken(n, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (best_choice[i] == n) {
      out.push_back({static_cast<Position>(i), kNullPosition});
    } else {
      taken[best_choice[i]] = true;
      out.push_back({static_cast<Position>(i), static_cast<Position>(best_choice[i])});
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!taken[j]) out.push_back({kNullPosition, static_cast<Position>(j)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

AssignmentLogProb assignment_log_prob(const SegmentPair& seg, const Assignment& assignment,
                                      const TranslationModel& model, const SizeDistribution& sizes) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::size_t b = assignment.size();
  auto z = sizes.find(b);
  if (z == sizes.end() || z->second <= 0) return {kNegInf, std::nullopt};
  AssignmentLogProb result{std::log(z->second) + std::lgamma(static_cast<double>(b) + 1.0),
                           std::nullopt};
  for (const auto& l : assignment) {
    const auto p = pair_at(seg, l);
    const double t = model.joint(p);
    if (t <= 0) return {kNegInf, p};
    result.value += std::log(t);
  }
  return result;
}

void write_link_dump(std::ostream& out, const SegmentPair& seg, const Assignment& assignment) {
  for (const auto& l : assignment) {
    out << seg.id << '\t' << position_text(l.src) << '\t' << position_text(l.tgt) << '\n';
  }
}

}  // namespace wtw
