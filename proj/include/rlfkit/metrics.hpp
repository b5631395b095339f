#pragma once

// Evaluation arithmetic: accuracy, macro F1, length-binned accuracy,
// document/sentence label confusion, Krippendorff's alpha (nominal),
// Pearson correlation and dataset summary statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rlfkit/corpus.hpp"
#include "rlfkit/detect.hpp"
#include "rlfkit/error.hpp"
#include "rlfkit/jsonl.hpp"
#include "rlfkit/pipeline.hpp"

namespace rlfkit {

enum class SentenceGroup { RLF, NoRLF };

inline std::string_view group_name(SentenceGroup g) noexcept { return g == SentenceGroup::RLF ? "RLF" : "NoRLF"; }

inline SentenceGroup parse_group(std::string_view s) {
  if (s == "RLF") return SentenceGroup::RLF;
  if (s == "NoRLF") return SentenceGroup::NoRLF;
  throw ParseError("unknown group '" + std::string(s) + "'");
}

struct PredictionRecord {
  std::string sentence_id;
  SentenceGroup group = SentenceGroup::RLF;
  Domain domain;
  std::size_t char_len = 0;
  SentimentLabel label = SentimentLabel::negative();
  SentimentLabel prediction = SentimentLabel::negative();
};

inline double accuracy(std::span<const PredictionRecord> preds) {
  if (preds.empty()) throw DomainError("accuracy of an empty prediction set");
  std::size_t correct = 0;
  for (const auto& p : preds) correct += p.label == p.prediction ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

/// Binary confusion counts with class 1 as the positive class.
struct BinaryConfusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline BinaryConfusion binary_confusion(std::span<const PredictionRecord> preds) {
  BinaryConfusion c;
  for (const auto& p : preds) {
    const bool y = p.label.is_positive(), yhat = p.prediction.is_positive();
    if (y && yhat) ++c.tp;
    else if (!y && yhat) ++c.fp;
    else if (y && !yhat) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace detail {

inline double f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace detail

/// Unweighted mean of the F1 of classes 1 and 0. A class with no support in
/// either labels or predictions contributes 0 and is still averaged.
inline double macro_f1(std::span<const PredictionRecord> preds) {
  if (preds.empty()) throw DomainError("macro F1 of an empty prediction set");
  const auto c = binary_confusion(preds);
  return (detail::f1(c.tp, c.fp, c.fn) + detail::f1(c.tn, c.fn, c.fp)) / 2.0;
}

struct LengthBin {
  std::size_t bin_start = 0;
  std::size_t bin_end = 0;  // exclusive
  SentenceGroup group = SentenceGroup::RLF;
  double acc = 0.0;
  std::size_t n = 0;
};

struct LengthBinning {
  std::vector<LengthBin> bins;          // ordered by bin, then group
  double fraction_within_80 = 0.0;      // share of sentences with char_len <= 80
};

inline constexpr std::size_t kDefaultBinWidth = 10;
inline constexpr std::size_t kCoverageLength = 80;

inline LengthBinning length_binned_accuracy(std::span<const PredictionRecord> preds,
                                            long long bin_width = static_cast<long long>(kDefaultBinWidth)) {
  if (bin_width <= 0) throw ConfigError("bin width must be positive");
  if (preds.empty()) throw DomainError("length binning of an empty prediction set");
  const auto w = static_cast<std::size_t>(bin_width);
  std::map<std::pair<std::size_t, int>, std::pair<std::size_t, std::size_t>> acc;  // (bin, group) -> (correct, n)
  std::size_t within = 0;
  for (const auto& p : preds) {
    auto& a = acc[{p.char_len / w, static_cast<int>(p.group)}];
    a.first += p.label == p.prediction ? 1 : 0;
    ++a.second;
    within += p.char_len <= kCoverageLength ? 1 : 0;
  }
  LengthBinning out;
  for (const auto& [key, a] : acc) {
    out.bins.push_back({key.first * w, (key.first + 1) * w, static_cast<SentenceGroup>(key.second),
                        static_cast<double>(a.first) / static_cast<double>(a.second), a.second});
  }
  out.fraction_within_80 = static_cast<double>(within) / static_cast<double>(preds.size());
  return out;
}

// ---------------------------------------------------------------------------
// Document vs sentence label agreement

struct DocSentenceLabels {
  SentimentLabel doc_label;
  SentimentLabel sentence_label;
};

/// PP = positive document with positive sentence, PN, NP, NN likewise.
struct DocSentenceConfusion {
  std::uint64_t pp = 0, pn = 0, np = 0, nn = 0;
  friend bool operator==(const DocSentenceConfusion&, const DocSentenceConfusion&) = default;
};

inline DocSentenceConfusion doc_sentence_confusion(std::span<const DocSentenceLabels> rows) {
  DocSentenceConfusion c;
  for (const auto& r : rows) {
    if (r.doc_label.is_positive()) (r.sentence_label.is_positive() ? c.pp : c.pn)++;
    else (r.sentence_label.is_positive() ? c.np : c.nn)++;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Krippendorff's alpha

/// Items x annotators grid of optional integer codes.
class AnnotationTable {
 public:
  void set(const std::string& item, const std::string& annotator, int code) {
    values_[{index_of(items_, item_idx_, item), index_of(annotators_, annotator_idx_, annotator)}] = code;
  }

  const std::vector<std::string>& items() const noexcept { return items_; }
  const std::vector<std::string>& annotators() const noexcept { return annotators_; }

  std::optional<int> value(std::size_t item, std::size_t annotator) const {
    auto it = values_.find({item, annotator});
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  /// Codes of one item across annotators (missing cells omitted).
  std::vector<int> codes(std::size_t item) const {
    std::vector<int> out;
    for (std::size_t a = 0; a < annotators_.size(); ++a)
      if (auto v = value(item, a)) out.push_back(*v);
    return out;
  }

 private:
  static std::size_t index_of(std::vector<std::string>& names, std::map<std::string, std::size_t>& idx,
                              const std::string& name) {
    auto [it, inserted] = idx.emplace(name, names.size());
    if (inserted) names.push_back(name);
    return it->second;
  }

  std::vector<std::string> items_, annotators_;
  std::map<std::string, std::size_t> item_idx_, annotator_idx_;
  std::map<std::pair<std::size_t, std::size_t>, int> values_;
};

/// Nominal alpha = 1 - D_o / D_e from the coincidence matrix. Items with fewer
/// than two codes are not pairable and are skipped. Throws UndefinedStatistic
/// when nothing is pairable or when only one code value occurs (D_e = 0).
inline double krippendorff_alpha(const AnnotationTable& table) {
  if (table.annotators().size() < 2) throw UndefinedStatistic("alpha needs at least two annotators");
  std::map<std::pair<int, int>, double> coincidence;
  for (std::size_t u = 0; u < table.items().size(); ++u) {
    const auto codes = table.codes(u);
    const std::size_t m = codes.size();
    if (m < 2) continue;
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) coincidence[{codes[i], codes[j]}] += w;
  }
  if (coincidence.empty()) throw UndefinedStatistic("alpha undefined: no item has two or more codes");
  std::map<int, double> marginal;
  double n = 0.0, disagree = 0.0;
  for (const auto& [ck, o] : coincidence) {
    marginal[ck.first] += o;
    n += o;
    if (ck.first != ck.second) disagree += o;
  }
  double expected = 0.0;
  for (const auto& [c, nc] : marginal)
    for (const auto& [k, nk] : marginal)
      if (c != k) expected += nc * nk;
  if (expected == 0.0) throw UndefinedStatistic("alpha undefined: a single code value occurs");
  return 1.0 - (n - 1.0) * disagree / expected;
}

inline std::optional<double> try_krippendorff_alpha(const AnnotationTable& table) {
  try {
    return krippendorff_alpha(table);
  } catch (const UndefinedStatistic&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Pearson correlation

inline double pearson_corr(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson_corr: vectors differ in length");
  if (xs.size() < 2) throw DomainError("pearson_corr needs at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson_corr undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Dataset summary

struct SummaryRow {
  std::string domain;  // "ALL" for the overall row
  std::uint64_t documents = 0;
  std::uint64_t rlf_documents = 0;
  double rlf_ratio_pct = 0.0;
  std::uint64_t samples = 0;
  double positive_pct = 0.0;
  std::string label_distribution;  // "78/22(%)"
  std::uint64_t unique_rlf_words = 0;
  std::uint64_t unique_roots = 0;
  std::uint64_t letter_spans = 0;
  std::uint64_t punctuation_spans = 0;
};

struct DatasetSummary {
  std::vector<SummaryRow> domains;
  SummaryRow overall;
};

/// Percentages rounded to integers and forced to sum to 100.
inline std::string format_label_distribution(std::uint64_t positive, std::uint64_t total) {
  if (total == 0) return "0/0(%)";
  const auto pos = static_cast<long long>(std::llround(100.0 * static_cast<double>(positive) / static_cast<double>(total)));
  return std::to_string(pos) + "/" + std::to_string(100 - pos) + "(%)";
}

/// Per-domain and overall statistics. `documents_per_domain` is the size of
/// the source corpus per domain; unique words and roots are case-folded.
inline DatasetSummary dataset_summary(const std::vector<RlfSentenceRecord>& records,
                                      const std::map<std::string, std::uint64_t>& documents_per_domain) {
  struct Acc {
    std::set<std::string> docs, words, roots;
    std::uint64_t samples = 0, positive = 0, letter = 0, punct = 0;
  };
  std::map<std::string, Acc> per;
  Acc all;
  for (const auto& r : records) {
    for (Acc* a : {&per[r.domain.name()], &all}) {
      a->docs.insert(r.doc_id);
      ++a->samples;
      a->positive += r.label.is_positive() ? 1 : 0;
      for (const auto& s : r.spans) {
        a->words.insert(text::to_lower(s.surface));
        a->roots.insert(text::to_lower(s.root));
        (s.style == RlfStyle::Letter ? a->letter : a->punct)++;
      }
    }
  }
  std::uint64_t total_docs = 0;
  for (const auto& [d, n] : documents_per_domain) total_docs += n;

  auto row = [](const std::string& name, const Acc& a, std::uint64_t docs) {
    if (docs == 0) throw UndefinedStatistic("RLF ratio undefined for '" + name + "': zero documents");
    SummaryRow r;
    r.domain = name;
    r.documents = docs;
    r.rlf_documents = a.docs.size();
    r.rlf_ratio_pct = 100.0 * static_cast<double>(a.docs.size()) / static_cast<double>(docs);
    r.samples = a.samples;
    r.positive_pct = a.samples ? 100.0 * static_cast<double>(a.positive) / static_cast<double>(a.samples) : 0.0;
    r.label_distribution = format_label_distribution(a.positive, a.samples);
    r.unique_rlf_words = a.words.size();
    r.unique_roots = a.roots.size();
    r.letter_spans = a.letter;
    r.punctuation_spans = a.punct;
    return r;
  };

  DatasetSummary out;
  std::set<std::string> names;
  for (const auto& [d, n] : documents_per_domain) names.insert(d);
  for (const auto& [d, a] : per) names.insert(d);
  for (const auto& d : names) {
    auto it = documents_per_domain.find(d);
    out.domains.push_back(row(d, per[d], it == documents_per_domain.end() ? 0 : it->second));
  }
  out.overall = row("ALL", all, total_docs);
  return out;
}

inline std::map<std::string, std::uint64_t> documents_per_domain(const ExtractionReport& rep) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [d, c] : rep.per_domain) out[d] = c.documents;
  return out;
}

// ---------------------------------------------------------------------------
// JSON mapping

inline PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord p;
  p.sentence_id = field::string(j, "sentence_id");
  p.group = parse_group(field::string(j, "group"));
  p.domain = Domain::parse(field::has(j, "domain") ? field::string(j, "domain") : std::string("Other"));
  p.char_len = static_cast<std::size_t>(field::integer(j, "char_len"));
  p.label = SentimentLabel::from_int(field::integer(j, "label"));
  p.prediction = SentimentLabel::from_int(field::integer(j, "prediction"));
  return p;
}

inline ordered_json to_json(const PredictionRecord& p) {
  ordered_json j;
  j["sentence_id"] = p.sentence_id;
  j["group"] = group_name(p.group);
  j["domain"] = p.domain.name();
  j["char_len"] = p.char_len;
  j["label"] = p.label.value();
  j["prediction"] = p.prediction.value();
  return j;
}

inline DocSentenceLabels doc_sentence_from_json(const json& j) {
  return {SentimentLabel::from_int(field::integer(j, "doc_label")),
          SentimentLabel::from_int(field::integer(j, "sentence_label"))};
}

inline ordered_json to_json(const SummaryRow& r) {
  ordered_json j;
  j["domain"] = r.domain;
  j["documents"] = r.documents;
  j["rlf_documents"] = r.rlf_documents;
  j["rlf_ratio_pct"] = r.rlf_ratio_pct;
  j["samples"] = r.samples;
  j["label_distribution"] = r.label_distribution;
  j["unique_rlf_words"] = r.unique_rlf_words;
  j["unique_roots"] = r.unique_roots;
  j["letter_spans"] = r.letter_spans;
  j["punctuation_spans"] = r.punctuation_spans;
  return j;
}

}  // namespace rlfkit
