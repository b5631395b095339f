#pragma once

// Word-importance scores (WIS): the interchange record, per-sentence
// normalization, occlusion scoring against a loss oracle, and the
// explainability score S_exp (mean normalized weight of the RLF token).

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rlfkit/corpus.hpp"
#include "rlfkit/detect.hpp"
#include "rlfkit/error.hpp"
#include "rlfkit/jsonl.hpp"
#include "rlfkit/pipeline.hpp"
#include "rlfkit/text.hpp"

namespace rlfkit {

struct WisRecord {
  std::string sentence_id;
  std::string model_id;
  std::vector<std::string> tokens;
  std::vector<double> raw_scores;
  std::size_t rlf_index = 0;
  std::optional<SentimentLabel> label;
};

/// Throws ValidationError naming the first broken invariant.
inline void validate(const WisRecord& r) {
  if (r.tokens.empty()) throw ValidationError("no tokens");
  if (r.tokens.size() != r.raw_scores.size())
    throw ValidationError(std::to_string(r.tokens.size()) + " tokens but " + std::to_string(r.raw_scores.size()) +
                          " scores");
  if (r.rlf_index >= r.tokens.size())
    throw ValidationError("rlf_index " + std::to_string(r.rlf_index) + " out of range");
  for (std::size_t i = 0; i < r.raw_scores.size(); ++i) {
    const double v = r.raw_scores[i];
    if (!std::isfinite(v) || v < 0.0)
      throw ValidationError("score " + std::to_string(i) + " is not a finite non-negative number");
  }
}

struct NormalizedWis {
  std::vector<double> scores;
};

/// Min-max scaling followed by L1 normalization. All-equal input maps to the uniform 1/n.
inline NormalizedWis normalize_wis(std::span<const double> raw) {
  if (raw.empty()) throw DomainError("cannot normalize an empty score vector");
  double lo = raw[0], hi = raw[0];
  for (double v : raw) {
    if (!std::isfinite(v)) throw DomainError("score vector contains NaN or infinity");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  NormalizedWis out;
  out.scores.resize(raw.size());
  if (hi == lo) {
    std::fill(out.scores.begin(), out.scores.end(), 1.0 / static_cast<double>(raw.size()));
    return out;
  }
  const double range = hi - lo;
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.scores[i] = (raw[i] - lo) / range;
    sum += out.scores[i];
  }
  for (double& v : out.scores) v /= sum;
  return out;
}

// ---------------------------------------------------------------------------
// Occlusion

/// Anything that scores a token sequence against a gold label with a non-negative loss.
template <class O>
concept LossOracle = requires(O& o, const std::vector<std::string>& tokens, SentimentLabel y) {
  { o.evaluate(tokens, y) } -> std::convertible_to<double>;
};

/// Type-erased oracle around a callable.
class FunctionOracle {
 public:
  using Fn = std::function<double(const std::vector<std::string>&, SentimentLabel)>;
  explicit FunctionOracle(Fn fn) : fn_(std::move(fn)) {}
  double evaluate(const std::vector<std::string>& tokens, SentimentLabel y) const { return fn_(tokens, y); }

 private:
  Fn fn_;
};

class OracleError : public Error {
 public:
  /// token_index is empty for the baseline (full-sentence) call.
  OracleError(const std::string& what, std::optional<std::size_t> token_index)
      : Error(what), token_index_(token_index) {}
  std::optional<std::size_t> token_index() const noexcept { return token_index_; }

 private:
  std::optional<std::size_t> token_index_;
};

/// Tokens with position i removed.
inline std::vector<std::string> occlude(const std::vector<std::string>& tokens, std::size_t i) {
  std::vector<std::string> out;
  out.reserve(tokens.size() - 1);
  for (std::size_t k = 0; k < tokens.size(); ++k)
    if (k != i) out.push_back(tokens[k]);
  return out;
}

/// Text an oracle sees after removing token i: remaining tokens joined by single spaces.
inline std::string occluded_text(const std::vector<std::string>& tokens, std::size_t i) {
  return text::join(occlude(tokens, i));
}

/// score_i = |L(tokens, y) - L(tokens without token i, y)|; one baseline call plus one per token.
template <LossOracle O>
std::vector<double> occlusion_wis(const std::vector<std::string>& tokens, SentimentLabel label, O& oracle) {
  if (tokens.size() < 2) throw DomainError("occlusion needs at least two tokens");
  auto call = [&](const std::vector<std::string>& t, std::optional<std::size_t> idx) {
    double loss;
    try {
      loss = static_cast<double>(oracle.evaluate(t, label));
    } catch (const std::exception& e) {
      throw OracleError(std::string("oracle failed") +
                            (idx ? " with token " + std::to_string(*idx) + " removed" : " on the full sentence") +
                            ": " + e.what(),
                        idx);
    }
    if (!std::isfinite(loss) || loss < 0.0)
      throw OracleError("oracle returned a loss that is not finite and non-negative", idx);
    return loss;
  };
  const double base = call(tokens, std::nullopt);
  std::vector<double> scores(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) scores[i] = std::abs(base - call(occlude(tokens, i), i));
  return scores;
}

// ---------------------------------------------------------------------------
// RLF token alignment

class AlignmentError : public Error {
 public:
  AlignmentError(std::vector<std::string> tokens, std::string surface)
      : Error("cannot align '" + surface + "' within [" + text::join(tokens, ", ") + "]"),
        tokens_(std::move(tokens)),
        surface_(std::move(surface)) {}
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& surface() const noexcept { return surface_; }

 private:
  std::vector<std::string> tokens_;
  std::string surface_;
};

namespace detail {

inline std::string_view strip_trailing_punct(std::string_view s) {
  std::size_t e = s.size();
  while (e > 0 && !detail::is_alnum(s[e - 1]) && !text::is_utf8_continuation(s[e - 1]) &&
         static_cast<unsigned char>(s[e - 1]) < 0x80)
    --e;
  return s.substr(0, e);
}

}  // namespace detail

/// Index of the first token equal to the span's surface, else the first equal
/// after stripping trailing punctuation from both.
inline std::size_t align_rlf_index(const std::vector<std::string>& tokens, const RlfSpan& span) {
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == span.surface) return i;
  const auto want = detail::strip_trailing_punct(span.surface);
  if (!want.empty()) {
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (detail::strip_trailing_punct(tokens[i]) == want) return i;
  }
  throw AlignmentError(tokens, span.surface);
}

/// One WisRecord per span of `record` (multi-RLF sentences contribute once per lengthened word).
inline std::vector<WisRecord> wis_records_for(const RlfSentenceRecord& record, const std::string& model_id,
                                              const std::vector<std::string>& tokens,
                                              const std::vector<double>& raw_scores) {
  std::vector<WisRecord> out;
  for (const auto& span : record.spans) {
    WisRecord w;
    w.sentence_id = record.id();
    w.model_id = model_id;
    w.tokens = tokens;
    w.raw_scores = raw_scores;
    w.rlf_index = (span.word_index < tokens.size() && tokens[span.word_index] == span.surface)
                      ? span.word_index
                      : align_rlf_index(tokens, span);
    w.label = record.label;
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// S_exp

/// Style of each (sentence_id, token index) pair, built from extraction records.
using StyleIndex = std::map<std::pair<std::string, std::size_t>, RlfStyle>;

inline StyleIndex style_index(const std::vector<RlfSentenceRecord>& records) {
  StyleIndex idx;
  for (const auto& r : records)
    for (const auto& s : r.spans) idx[{r.id(), s.word_index}] = s.style;
  return idx;
}

struct StyleStat {
  double s_exp = 0.0;
  std::size_t n = 0;
};

struct RejectedRecord {
  std::string sentence_id;
  std::string reason;
};

struct ExplainabilityReport {
  std::string model_id;
  double s_exp = 0.0;
  std::size_t n_records = 0;
  double std_dev = 0.0;  // population standard deviation of the per-record values
  std::map<std::string, StyleStat> per_style;
  std::vector<RejectedRecord> rejected;
};

/// Normalized WIS weight at the RLF token of one record.
inline double rlf_weight(const WisRecord& r) { return normalize_wis(r.raw_scores).scores[r.rlf_index]; }

/// Mean normalized RLF weight over valid records. Invalid records are excluded
/// and listed in `rejected`. model_id is "*" when records mix models.
inline ExplainabilityReport s_exp(const std::vector<WisRecord>& records, const StyleIndex* styles = nullptr) {
  ExplainabilityReport rep;
  std::vector<double> values;
  std::map<std::string, std::pair<double, std::size_t>> style_sums;
  for (const auto& r : records) {
    try {
      validate(r);
    } catch (const ValidationError& e) {
      rep.rejected.push_back({r.sentence_id, e.what()});
      continue;
    }
    if (values.empty()) rep.model_id = r.model_id;
    else if (rep.model_id != r.model_id) rep.model_id = "*";
    const double v = rlf_weight(r);
    values.push_back(v);
    if (styles) {
      auto it = styles->find({r.sentence_id, r.rlf_index});
      if (it != styles->end()) {
        auto& acc = style_sums[std::string(style_name(it->second))];
        acc.first += v;
        ++acc.second;
      }
    }
  }
  if (values.empty()) throw DomainError("no valid WIS records to score");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  rep.s_exp = mean;
  rep.n_records = values.size();
  rep.std_dev = std::sqrt(ss / n);
  for (const auto& [style, acc] : style_sums) rep.per_style[style] = {acc.first / static_cast<double>(acc.second), acc.second};
  return rep;
}

/// One report per model_id, in model_id order.
inline std::map<std::string, ExplainabilityReport> s_exp_by_model(const std::vector<WisRecord>& records,
                                                                  const StyleIndex* styles = nullptr) {
  std::map<std::string, std::vector<WisRecord>> groups;
  for (const auto& r : records) groups[r.model_id].push_back(r);
  std::map<std::string, ExplainabilityReport> out;
  for (const auto& [model, group] : groups) {
    auto rep = s_exp(group, styles);
    rep.model_id = model;
    out.emplace(model, std::move(rep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON mapping (WIS interchange: {sentence_id, model_id, tokens, raw_scores, rlf_index, label?})

inline ordered_json to_json(const WisRecord& r) {
  ordered_json j;
  j["sentence_id"] = r.sentence_id;
  j["model_id"] = r.model_id;
  j["tokens"] = r.tokens;
  j["raw_scores"] = r.raw_scores;
  j["rlf_index"] = r.rlf_index;
  if (r.label) j["label"] = r.label->value();
  return j;
}

/// Structural parse only; invariants are checked by validate().
inline WisRecord wis_from_json(const json& j) {
  WisRecord r;
  r.sentence_id = field::string(j, "sentence_id");
  r.model_id = field::string(j, "model_id");
  const auto& toks = field::required(j, "tokens");
  const auto& scores = field::required(j, "raw_scores");
  if (!toks.is_array() || !scores.is_array()) throw ParseError("tokens and raw_scores must be arrays");
  for (const auto& t : toks) {
    if (!t.is_string()) throw ParseError("token is not a string");
    r.tokens.push_back(t.get<std::string>());
  }
  for (const auto& s : scores) {
    if (!s.is_number()) throw ParseError("score is not a number");
    r.raw_scores.push_back(s.get<double>());
  }
  const auto idx = field::integer(j, "rlf_index");
  if (idx < 0) throw ParseError("negative rlf_index");
  r.rlf_index = static_cast<std::size_t>(idx);
  if (field::has(j, "label")) r.label = SentimentLabel::from_int(field::integer(j, "label"));
  return r;
}

inline std::vector<WisRecord> load_wis(const std::string& path, LoadSummary* summary = nullptr) {
  return read_records<WisRecord>(path, wis_from_json, summary);
}

inline void write_wis(const std::string& path, const std::vector<WisRecord>& records) {
  JsonlWriter w(path);
  for (const auto& r : records) w.write(to_json(r));
}

}  // namespace rlfkit
