#include "wtw/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace wtw {
namespace {

const std::vector<Translation> kNoTranslations;

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

double parse_double(std::string_view text, const std::string& where) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError(where + ": bad number '" + std::string(text) + "'");
  }
  return value;
}

/// Parses `key=value` fields into a map.
std::map<std::string, std::string, std::less<>> parse_fields(
    const std::vector<std::string_view>& fields, std::size_t first) {
  std::map<std::string, std::string, std::less<>> out;
  for (std::size_t i = first; i < fields.size(); ++i) {
    auto eq = fields[i].find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(std::string(fields[i].substr(0, eq)), std::string(fields[i].substr(eq + 1)));
  }
  return out;
}

std::optional<LinkClassKey> parse_class_key(std::string_view text) {
  if (text == "*") return std::nullopt;
  auto dash = text.find('-');
  if (dash == std::string_view::npos) throw InputError("bad link class '" + std::string(text) + "'");
  auto s = parse_word_class(text.substr(0, dash));
  auto t = parse_word_class(text.substr(dash + 1));
  if (!s || !t) throw InputError("bad link class '" + std::string(text) + "'");
  return LinkClassKey{*s, *t};
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::A: return "A";
    case Method::B: return "B";
    case Method::C: return "C";
    case Method::Model1: return "model1";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view text) {
  std::string lower;
  for (char ch : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (lower == "a") return Method::A;
  if (lower == "b") return Method::B;
  if (lower == "c") return Method::C;
  if (lower == "model1" || lower == "1") return Method::Model1;
  return std::nullopt;
}

std::string to_string(const LinkClassKey& key) {
  return std::string(to_string(key.src)) + "-" + std::string(to_string(key.tgt));
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

TranslationModel TranslationModel::from_joint(std::shared_ptr<const Vocabulary> src,
                                              std::shared_ptr<const Vocabulary> tgt,
                                              PairMap<double> joint, Method method) {
  TranslationModel m;
  m.method_ = method;
  m.has_joint_ = true;
  m.src_vocab_ = std::move(src);
  m.tgt_vocab_ = std::move(tgt);
  m.joint_ = std::move(joint);

  // Row and column sums in key order, so the result does not depend on the
  // hash map's iteration order.
  std::vector<std::uint64_t> keys;
  keys.reserve(m.joint_.size());
  for (const auto& [k, p] : m.joint_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::unordered_map<WordId, double> row;
  std::unordered_map<WordId, double> col;
  for (auto k : keys) {
    auto pair = unpack(k);
    row[pair.src] += m.joint_.at(k);
    col[pair.tgt] += m.joint_.at(k);
  }
  for (auto k : keys) {
    auto pair = unpack(k);
    const double p = m.joint_.at(k);
    if (p <= 0) continue;
    m.tgt_given_src_[k] = p / row.at(pair.src);
    m.src_given_tgt_[k] = p / col.at(pair.tgt);
  }
  m.build_index();
  return m;
}

TranslationModel TranslationModel::from_conditionals(std::shared_ptr<const Vocabulary> src,
                                                     std::shared_ptr<const Vocabulary> tgt,
                                                     PairMap<double> tgt_given_src,
                                                     PairMap<double> src_given_tgt, Method method) {
  TranslationModel m;
  m.method_ = method;
  m.has_joint_ = false;
  m.src_vocab_ = std::move(src);
  m.tgt_vocab_ = std::move(tgt);
  m.tgt_given_src_ = std::move(tgt_given_src);
  m.src_given_tgt_ = std::move(src_given_tgt);
  m.build_index();
  return m;
}

void TranslationModel::build_index() {
  by_src_.assign(src_vocab_->size() + 1, {});
  by_tgt_.assign(tgt_vocab_->size() + 1, {});
  auto slot = [](WordId w, std::size_t size) { return w == kNullWord ? size : w; };
  for (const auto& [k, p] : tgt_given_src_) {
    auto pair = unpack(k);
    if (p > 0) by_src_[slot(pair.src, src_vocab_->size())].push_back({pair.tgt, p});
  }
  for (const auto& [k, p] : src_given_tgt_) {
    auto pair = unpack(k);
    if (p > 0) by_tgt_[slot(pair.tgt, tgt_vocab_->size())].push_back({pair.src, p});
  }
  auto by_word = [](const Translation& l, const Translation& r) { return l.word < r.word; };
  for (auto& list : by_src_) std::sort(list.begin(), list.end(), by_word);
  for (auto& list : by_tgt_) std::sort(list.begin(), list.end(), by_word);
}

const std::vector<Translation>& TranslationModel::translations_of_src(WordId u) const {
  const std::size_t idx = u == kNullWord ? src_vocab_->size() : u;
  return idx < by_src_.size() ? by_src_[idx] : kNoTranslations;
}

const std::vector<Translation>& TranslationModel::translations_of_tgt(WordId v) const {
  const std::size_t idx = v == kNullWord ? tgt_vocab_->size() : v;
  return idx < by_tgt_.size() ? by_tgt_[idx] : kNoTranslations;
}

std::vector<WordPair> TranslationModel::pairs() const {
  std::vector<std::uint64_t> keys;
  for (const auto* table : {&joint_, &tgt_given_src_, &src_given_tgt_, &like}) {
    for (const auto& [k, p] : *table) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<WordPair> out;
  out.reserve(keys.size());
  for (auto k : keys) out.push_back(unpack(k));
  return out;
}

void write_model(std::ostream& out, const TranslationModel& model) {
  out << "#method=" << to_string(model.method()) << "\titerations=" << model.iterations
      << "\tconverged=" << (model.converged ? 1 : 0) << "\tlinks=" << format_double(model.link_total)
      << '\n';
  for (const auto& aux : model.aux) {
    out << "#aux\tclass=" << (aux.link_class ? to_string(*aux.link_class) : std::string("*"))
        << "\tlambda_plus=" << format_double(aux.lambda_plus)
        << "\tlambda_minus=" << format_double(aux.lambda_minus)
        << "\tlambda=" << format_double(aux.lambda) << "\ttau=" << format_double(aux.tau) << '\n';
  }
  out << "u\tv\ttrans_joint\ttrans_v_given_u\ttrans_u_given_v\tlike\n";
  auto cell = [](const PairMap<double>& table, std::uint64_t key, bool present) -> std::string {
    if (!present) return "NA";
    auto it = table.find(key);
    return format_double(it == table.end() ? 0.0 : it->second);
  };
  for (const auto& pair : model.pairs()) {
    const auto key = pack(pair);
    out << model.src_vocab().word(pair.src) << '\t' << model.tgt_vocab().word(pair.tgt) << '\t'
        << cell(model.joint_table(), key, model.has_joint()) << '\t'
        << cell(model.tgt_given_src_table(), key, true) << '\t'
        << cell(model.src_given_tgt_table(), key, true) << '\t'
        << cell(model.like, key, model.like.count(key) != 0) << '\n';
  }
}

TranslationModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("#method=", 0) != 0) {
    throw InputError("model file: missing #method header");
  }
  auto header = parse_fields(split_tabs(line.substr(1)), 0);
  auto method = parse_method(header["method"]);
  if (!method) throw InputError("model file: unknown method '" + header["method"] + "'");

  std::vector<AuxParams> aux;
  struct Row {
    std::string u, v;
    std::optional<double> joint, fwd, bwd, like;
  };
  std::vector<Row> rows;
  std::map<std::string, std::uint64_t> src_words;
  std::map<std::string, std::uint64_t> tgt_words;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "model file line " + std::to_string(line_no);
    auto fields = split_tabs(line);
    if (fields[0] == "#aux") {
      auto kv = parse_fields(fields, 1);
      AuxParams a;
      a.link_class = parse_class_key(kv["class"]);
      a.lambda_plus = parse_double(kv["lambda_plus"], where);
      a.lambda_minus = parse_double(kv["lambda_minus"], where);
      a.lambda = parse_double(kv["lambda"], where);
      a.tau = parse_double(kv["tau"], where);
      aux.push_back(a);
      continue;
    }
    if (fields[0] == "u" && fields.size() > 1 && fields[1] == "v") continue;
    if (fields.size() != 6) throw InputError(where + ": expected 6 columns");
    auto opt = [&](std::string_view f) -> std::optional<double> {
      if (f == "NA") return std::nullopt;
      return parse_double(f, where);
    };
    Row r{std::string(fields[0]), std::string(fields[1]), opt(fields[2]), opt(fields[3]),
          opt(fields[4]), opt(fields[5])};
    if (r.u == kNullText && r.v == kNullText) throw InputError(where + ": NULL-NULL pair");
    if (r.u != kNullText) src_words.emplace(r.u, 0);
    if (r.v != kNullText) tgt_words.emplace(r.v, 0);
    rows.push_back(std::move(r));
  }

  auto src = std::make_shared<Vocabulary>(Vocabulary::from_counts(src_words));
  auto tgt = std::make_shared<Vocabulary>(Vocabulary::from_counts(tgt_words));
  PairMap<double> joint, fwd, bwd, like;
  bool has_joint = false;
  for (const auto& r : rows) {
    WordPair p{r.u == kNullText ? kNullWord : *src->find(r.u),
               r.v == kNullText ? kNullWord : *tgt->find(r.v)};
    const auto key = pack(p);
    if (r.joint) {
      has_joint = true;
      if (*r.joint > 0) joint[key] = *r.joint;
    }
    if (r.fwd && *r.fwd > 0) fwd[key] = *r.fwd;
    if (r.bwd && *r.bwd > 0) bwd[key] = *r.bwd;
    if (r.like) like[key] = *r.like;
  }

  TranslationModel model;
  if (has_joint) {
    model = TranslationModel::from_joint(src, tgt, std::move(joint), *method);
  } else {
    model = TranslationModel::from_conditionals(src, tgt, std::move(fwd), std::move(bwd), *method);
  }
  model.iterations = header.count("iterations") ? std::stoi(header["iterations"]) : 0;
  model.converged = header["converged"] == "1";
  model.link_total = header.count("links") ? parse_double(header["links"], "model header") : 0.0;
  model.aux = std::move(aux);
  model.like = std::move(like);
  if (model.has_joint()) {
    for (const auto& [k, p] : model.joint_table()) {
      model.links[k] = std::round(p * model.link_total);
    }
  }
  return model;
}

}  // namespace wtw
