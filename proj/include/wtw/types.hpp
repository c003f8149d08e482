#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

namespace wtw {

/// Index of a word type within one side's vocabulary. Vocabularies assign
/// ids in lexicographic order of the surface strings, so comparing ids
/// compares words.
using WordId = std::uint32_t;

/// The NULL word. Sorts after every real word.
inline constexpr WordId kNullWord = std::numeric_limits<WordId>::max();

/// How NULL is rendered in every text file the toolkit reads or writes.
inline constexpr std::string_view kNullText = "-";

/// An ordered (source type, target type) pair. Either side may be NULL,
/// but not both.
struct WordPair {
  WordId src = kNullWord;
  WordId tgt = kNullWord;

  friend constexpr auto operator<=>(const WordPair&, const WordPair&) = default;
};

constexpr std::uint64_t pack(WordPair p) {
  return (static_cast<std::uint64_t>(p.src) << 32) | p.tgt;
}

constexpr WordPair unpack(std::uint64_t key) {
  return {static_cast<WordId>(key >> 32), static_cast<WordId>(key & 0xFFFFFFFFu)};
}

/// Sparse table over word pairs, keyed by pack(pair). Numeric key order is
/// the (src, tgt) lexicographic order with NULL last.
template <typename T>
using PairMap = std::unordered_map<std::uint64_t, T>;

/// Malformed or unreadable input file. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter estimation could not proceed (degenerate linking, empty model).
/// The CLI maps this to exit code 3.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wtw
