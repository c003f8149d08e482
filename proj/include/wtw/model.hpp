#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wtw/corpus.hpp"
#include "wtw/types.hpp"

namespace wtw {

enum class Method { A, B, C, Model1 };

std::string_view to_string(Method m);
/// Accepts A, B, C, model1 (case-insensitive).
std::optional<Method> parse_method(std::string_view text);

struct LinkClassKey {
  WordClass src = WordClass::C;
  WordClass tgt = WordClass::C;

  friend auto operator<=>(const LinkClassKey&, const LinkClassKey&) = default;
};

std::string to_string(const LinkClassKey& key);

/// Parameters of the two-binomial noise model.
struct AuxParams {
  double lambda_plus = 0;   ///< rate at which co-occurring translations get linked
  double lambda_minus = 0;  ///< rate at which co-occurring non-translations get linked
  double lambda = 0;        ///< K / N
  double tau = 0;           ///< share of co-occurring pairs that are translations
  std::optional<LinkClassKey> link_class;

  /// 1 > lambda+ > lambda > lambda- > 0.
  bool in_region() const {
    return 1 > lambda_plus && lambda_plus > lambda && lambda > lambda_minus && lambda_minus > 0;
  }
};

/// One (partner, probability) entry of a conditional distribution.
struct Translation {
  WordId word = kNullWord;
  double prob = 0;
};

/// A word-to-word translation model: a joint distribution trans(u, v) with
/// the two conditionals derived from it, or (for Model 1) two independently
/// trained conditionals.
class TranslationModel {
 public:
  TranslationModel() = default;

  /// Joint model; conditionals are derived by normalizing rows and columns.
  static TranslationModel from_joint(std::shared_ptr<const Vocabulary> src,
                                     std::shared_ptr<const Vocabulary> tgt, PairMap<double> joint,
                                     Method method);

  /// Directional model pair: `tgt_given_src` holds trans(v | u) keyed (u, v),
  /// `src_given_tgt` holds trans(u | v) keyed (u, v).
  static TranslationModel from_conditionals(std::shared_ptr<const Vocabulary> src,
                                            std::shared_ptr<const Vocabulary> tgt,
                                            PairMap<double> tgt_given_src,
                                            PairMap<double> src_given_tgt, Method method);

  Method method() const { return method_; }
  bool has_joint() const { return has_joint_; }

  double joint(WordPair p) const { return lookup(joint_, p); }
  double tgt_given_src(WordPair p) const { return lookup(tgt_given_src_, p); }
  double src_given_tgt(WordPair p) const { return lookup(src_given_tgt_, p); }

  /// trans(. | u) sorted by partner id; empty for unknown words.
  const std::vector<Translation>& translations_of_src(WordId u) const;
  /// trans(. | v) sorted by partner id; empty for unknown words.
  const std::vector<Translation>& translations_of_tgt(WordId v) const;

  const PairMap<double>& joint_table() const { return joint_; }
  const PairMap<double>& tgt_given_src_table() const { return tgt_given_src_; }
  const PairMap<double>& src_given_tgt_table() const { return src_given_tgt_; }

  const Vocabulary& src_vocab() const { return *src_vocab_; }
  const Vocabulary& tgt_vocab() const { return *tgt_vocab_; }
  std::shared_ptr<const Vocabulary> src_vocab_ptr() const { return src_vocab_; }
  std::shared_ptr<const Vocabulary> tgt_vocab_ptr() const { return tgt_vocab_; }

  /// Every pair present in any of the tables, in key order.
  std::vector<WordPair> pairs() const;

  // Training metadata carried into the model file.
  int iterations = 0;
  bool converged = false;
  double link_total = 0;  ///< K of the links the joint was normalized from
  std::vector<AuxParams> aux;
  PairMap<double> like;  ///< final like(u, v) per pair
  PairMap<double> links;  ///< final links(u, v) per pair

 private:
  static double lookup(const PairMap<double>& m, WordPair p) {
    auto it = m.find(pack(p));
    return it == m.end() ? 0.0 : it->second;
  }
  void build_index();

  Method method_ = Method::A;
  bool has_joint_ = false;
  std::shared_ptr<const Vocabulary> src_vocab_;
  std::shared_ptr<const Vocabulary> tgt_vocab_;
  PairMap<double> joint_;
  PairMap<double> tgt_given_src_;
  PairMap<double> src_given_tgt_;
  // Index kNullWord lives in the last slot.
  std::vector<std::vector<Translation>> by_src_;
  std::vector<std::vector<Translation>> by_tgt_;
};

/// Model file: two header lines (`#method=...` and one `#aux` line per
/// parameter set), a column header, then
/// `u TAB v TAB trans_joint TAB trans_v_given_u TAB trans_u_given_v TAB like`
/// rows in key order. NULL is `-`; absent values are `NA`.
void write_model(std::ostream& out, const TranslationModel& model);
TranslationModel read_model(std::istream& in);

/// Shortest round-trip decimal representation.
std::string format_double(double x);

}  // namespace wtw
