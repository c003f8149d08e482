#include "wtw/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace wtw {
namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view chomp(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

Position parse_position(std::string_view field, const std::string& where) {
  if (field == kNullText) return kNullPosition;
  Position value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || value < 0) {
    throw InputError(where + ": bad position '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

Vocabulary Vocabulary::from_counts(const std::map<std::string, std::uint64_t>& counts) {
  Vocabulary v;
  v.words_.reserve(counts.size());
  v.freq_.reserve(counts.size());
  for (const auto& [word, n] : counts) {
    v.index_.emplace(word, static_cast<WordId>(v.words_.size()));
    v.words_.push_back(word);
    v.freq_.push_back(n);
    v.tokens_ += n;
  }
  return v;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string_view Vocabulary::word(WordId id) const {
  if (id == kNullWord) return kNullText;
  return words_.at(id);
}

Bitext Bitext::from_tokens(const std::vector<TokenizedPair>& pairs) {
  std::map<std::string, std::uint64_t> src_counts;
  std::map<std::string, std::uint64_t> tgt_counts;
  Bitext b;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.src.empty() || p.tgt.empty()) {
      throw InputError("segment " + p.id + ": empty " + (p.src.empty() ? "source" : "target") +
                       " side");
    }
    if (!b.by_id_.emplace(p.id, i).second) throw InputError("duplicate segment id " + p.id);
    for (const auto& w : p.src) {
      if (w.empty()) throw InputError("segment " + p.id + ": empty token");
      ++src_counts[w];
    }
    for (const auto& w : p.tgt) {
      if (w.empty()) throw InputError("segment " + p.id + ": empty token");
      ++tgt_counts[w];
    }
  }
  auto src = std::make_shared<Vocabulary>(Vocabulary::from_counts(src_counts));
  auto tgt = std::make_shared<Vocabulary>(Vocabulary::from_counts(tgt_counts));
  b.pairs_.reserve(pairs.size());
  for (const auto& p : pairs) {
    SegmentPair seg{p.id, {}, {}};
    seg.src.reserve(p.src.size());
    seg.tgt.reserve(p.tgt.size());
    for (const auto& w : p.src) seg.src.push_back(*src->find(w));
    for (const auto& w : p.tgt) seg.tgt.push_back(*tgt->find(w));
    b.pairs_.push_back(std::move(seg));
  }
  b.src_vocab_ = std::move(src);
  b.tgt_vocab_ = std::move(tgt);
  return b;
}

std::optional<std::size_t> Bitext::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenizedPair> Bitext::to_tokens() const {
  std::vector<TokenizedPair> out;
  out.reserve(pairs_.size());
  for (const auto& seg : pairs_) {
    TokenizedPair p{seg.id, {}, {}};
    for (WordId w : seg.src) p.src.emplace_back(src_vocab_->word(w));
    for (WordId w : seg.tgt) p.tgt.emplace_back(tgt_vocab_->word(w));
    out.push_back(std::move(p));
  }
  return out;
}

Bitext Bitext::prefix(std::size_t n) const {
  auto tokens = to_tokens();
  tokens.resize(std::min(n, tokens.size()));
  return from_tokens(tokens);
}

Bitext load_bitext(const std::filesystem::path& src, const std::filesystem::path& tgt) {
  auto src_lines = read_lines(src);
  auto tgt_lines = read_lines(tgt);
  if (src_lines.size() != tgt_lines.size()) {
    throw InputError("line count mismatch: " + src.string() + " has " +
                     std::to_string(src_lines.size()) + " lines, " + tgt.string() + " has " +
                     std::to_string(tgt_lines.size()));
  }
  std::vector<TokenizedPair> pairs;
  pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    pairs.push_back({std::to_string(i + 1), split_ws(src_lines[i]), split_ws(tgt_lines[i])});
  }
  return Bitext::from_tokens(pairs);
}

void write_bitext(const Bitext& bitext, const std::filesystem::path& src,
                  const std::filesystem::path& tgt) {
  std::ofstream s(src);
  std::ofstream t(tgt);
  if (!s || !t) throw InputError("cannot write bitext to " + src.string() + ", " + tgt.string());
  auto write_side = [](std::ostream& out, const std::vector<WordId>& ids, const Vocabulary& v) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out << ' ';
      out << v.word(ids[i]);
    }
    out << '\n';
  };
  for (const auto& seg : bitext.pairs()) {
    write_side(s, seg.src, bitext.src_vocab());
    write_side(t, seg.tgt, bitext.tgt_vocab());
  }
}

void GoldStandard::validate(const Bitext& bitext) const {
  for (const auto& [annotator, segments] : annotations) {
    for (const auto& [seg_id, links] : segments) {
      auto idx = bitext.find(seg_id);
      if (!idx) throw InputError("gold segment " + seg_id + " not in bitext");
      const auto& seg = bitext.pairs()[*idx];
      for (const auto& link : links) {
        if (link.src >= static_cast<Position>(seg.src.size())) {
          throw InputError("gold segment " + seg_id + ": source position " +
                           std::to_string(link.src) + " out of range");
        }
        if (link.tgt >= static_cast<Position>(seg.tgt.size())) {
          throw InputError("gold segment " + seg_id + ": target position " +
                           std::to_string(link.tgt) + " out of range");
        }
      }
    }
  }
}

std::size_t GoldStandard::link_count() const {
  std::size_t n = 0;
  for (const auto& [a, segs] : annotations) {
    for (const auto& [s, links] : segs) n += links.size();
  }
  return n;
}

GoldStandard load_gold(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  GoldStandard gold;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = chomp(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    auto fields = split_tabs(line);
    if (fields.size() != 4) throw InputError(where + ": expected 4 tab-separated fields");
    GoldLink link{parse_position(fields[2], where), parse_position(fields[3], where)};
    if (link.src == kNullPosition && link.tgt == kNullPosition) {
      throw InputError(where + ": both positions are NULL");
    }
    gold.annotations[std::string(fields[0])][std::string(fields[1])].insert(link);
  }
  return gold;
}

std::string_view to_string(WordClass c) {
  switch (c) {
    case WordClass::EOS: return "EOS";
    case WordClass::EOP: return "EOP";
    case WordClass::SCM: return "SCM";
    case WordClass::SYM: return "SYM";
    case WordClass::NU: return "NU";
    case WordClass::C: return "C";
    case WordClass::F: return "F";
  }
  return "?";
}

std::optional<WordClass> parse_word_class(std::string_view code) {
  for (auto c : {WordClass::EOS, WordClass::EOP, WordClass::SCM, WordClass::SYM, WordClass::NU,
                 WordClass::C, WordClass::F}) {
    if (to_string(c) == code) return c;
  }
  return std::nullopt;
}

WordClass WordClassMap::of(std::string_view word) const {
  auto it = classes_.find(word);
  return it == classes_.end() ? WordClass::C : it->second;
}

void WordClassMap::set(std::string word, WordClass c) {
  if (c == WordClass::NU) throw std::invalid_argument("class NU is reserved for NULL");
  classes_[std::move(word)] = c;
}

WordClassMap load_classes(const std::filesystem::path& path, WordClassMap defaults) {
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = chomp(lines[i]);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    auto fields = split_tabs(line);
    if (fields.size() != 2) throw InputError(where + ": expected word TAB class");
    auto c = parse_word_class(fields[1]);
    if (!c || *c == WordClass::NU) {
      throw InputError(where + ": unknown class code '" + std::string(fields[1]) + "'");
    }
    defaults.set(std::string(fields[0]), *c);
  }
  return defaults;
}

}  // namespace wtw
