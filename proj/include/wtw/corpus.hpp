#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wtw/types.hpp"

namespace wtw {

/// Word types of one half of a bitext with their token frequencies.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds a vocabulary whose ids follow the lexicographic order of the keys.
  static Vocabulary from_counts(const std::map<std::string, std::uint64_t>& counts);

  std::optional<WordId> find(std::string_view word) const;

  /// Surface string of `id`; kNullText for the NULL word.
  std::string_view word(WordId id) const;

  /// Total token frequency; 0 for NULL.
  std::uint64_t frequency(WordId id) const { return id == kNullWord ? 0 : freq_.at(id); }

  std::size_t size() const { return words_.size(); }
  std::uint64_t token_count() const { return tokens_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> freq_;
  std::unordered_map<std::string, WordId> index_;
  std::uint64_t tokens_ = 0;
};

struct SegmentPair {
  std::string id;
  std::vector<WordId> src;
  std::vector<WordId> tgt;
};

/// Raw tokenized segment pair, used to assemble a Bitext in memory.
struct TokenizedPair {
  std::string id;
  std::vector<std::string> src;
  std::vector<std::string> tgt;
};

/// Segment-aligned parallel text. Immutable once built.
class Bitext {
 public:
  /// Throws InputError on an empty side, an empty token or a duplicate id.
  static Bitext from_tokens(const std::vector<TokenizedPair>& pairs);

  const std::vector<SegmentPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  const Vocabulary& src_vocab() const { return *src_vocab_; }
  const Vocabulary& tgt_vocab() const { return *tgt_vocab_; }
  std::shared_ptr<const Vocabulary> src_vocab_ptr() const { return src_vocab_; }
  std::shared_ptr<const Vocabulary> tgt_vocab_ptr() const { return tgt_vocab_; }

  /// Index of the segment with the given id.
  std::optional<std::size_t> find(std::string_view id) const;

  /// The first `n` segments, with vocabularies recounted over them.
  Bitext prefix(std::size_t n) const;

  std::vector<TokenizedPair> to_tokens() const;

 private:
  std::vector<SegmentPair> pairs_;
  std::shared_ptr<const Vocabulary> src_vocab_;
  std::shared_ptr<const Vocabulary> tgt_vocab_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads two parallel files, one segment per line. Segment ids are the
/// 1-based line numbers.
Bitext load_bitext(const std::filesystem::path& src, const std::filesystem::path& tgt);

/// Writes both halves back in the format load_bitext reads.
void write_bitext(const Bitext& bitext, const std::filesystem::path& src,
                  const std::filesystem::path& tgt);

/// Token position within one side of a segment, or kNullPosition.
using Position = std::int32_t;
inline constexpr Position kNullPosition = -1;

struct GoldLink {
  Position src = kNullPosition;
  Position tgt = kNullPosition;

  friend auto operator<=>(const GoldLink&, const GoldLink&) = default;
};

/// Hand-annotated link tokens, kept separately per annotator.
struct GoldStandard {
  /// annotator -> segment id -> links
  std::map<std::string, std::map<std::string, std::set<GoldLink>>> annotations;

  /// Throws InputError naming the segment and position of the first link
  /// that does not fit the segment it refers to.
  void validate(const Bitext& bitext) const;

  std::size_t link_count() const;
};

/// Parses `annotator TAB segment TAB srcPos TAB tgtPos` records. `-` marks
/// NULL, `#` starts a comment line.
GoldStandard load_gold(const std::filesystem::path& path);

enum class WordClass : std::uint8_t { EOS, EOP, SCM, SYM, NU, C, F };

std::string_view to_string(WordClass c);
std::optional<WordClass> parse_word_class(std::string_view code);

/// Table lookup from word type to class. NULL is always NU; words not in
/// the table are C.
class WordClassMap {
 public:
  WordClass of(std::string_view word) const;
  WordClass of_null() const { return WordClass::NU; }

  /// NU is reserved for NULL and rejected here.
  void set(std::string word, WordClass c);
  std::size_t size() const { return classes_.size(); }

 private:
  std::map<std::string, WordClass, std::less<>> classes_;
};

/// Reads `word TAB class` records over `defaults`.
WordClassMap load_classes(const std::filesystem::path& path, WordClassMap defaults = {});

}  // namespace wtw
