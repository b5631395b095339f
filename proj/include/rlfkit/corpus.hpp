#pragma once

// Domain types shared by every stage, plus the document record format:
// one JSON object per line, {id, domain, text, rating?, label?}.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "rlfkit/error.hpp"
#include "rlfkit/jsonl.hpp"
#include "rlfkit/text.hpp"

namespace rlfkit {

/// Binary document polarity: 1 positive, 0 negative.
class SentimentLabel {
 public:
  static constexpr SentimentLabel positive() noexcept { return SentimentLabel(1); }
  static constexpr SentimentLabel negative() noexcept { return SentimentLabel(0); }

  static SentimentLabel from_int(long long v) {
    if (v != 0 && v != 1) throw DomainError("sentiment label must be 0 or 1, got " + std::to_string(v));
    return SentimentLabel(static_cast<int>(v));
  }

  constexpr int value() const noexcept { return value_; }
  constexpr bool is_positive() const noexcept { return value_ == 1; }

  friend constexpr bool operator==(SentimentLabel, SentimentLabel) noexcept = default;

 private:
  constexpr explicit SentimentLabel(int v) noexcept : value_(v) {}
  int value_;
};

/// Star rating to polarity: 1-2 negative, 4-5 positive, 3 neutral (none).
inline std::optional<SentimentLabel> map_rating_to_label(long long rating) {
  if (rating < 1 || rating > 5) throw DomainError("rating must be in 1..5, got " + std::to_string(rating));
  if (rating <= 2) return SentimentLabel::negative();
  if (rating >= 4) return SentimentLabel::positive();
  return std::nullopt;
}

/// Source domain of a document. Names outside the known set are kept verbatim.
class Domain {
 public:
  enum class Kind { Books, Electronics, Restaurants, SocialMedia, Hotels, Other };

  Domain() = default;
  explicit Domain(Kind k) : kind_(k) {}

  static Domain other(std::string name) {
    Domain d(Kind::Other);
    d.other_ = std::move(name);
    return d;
  }

  static Domain parse(std::string_view name) {
    const std::string lower = text::to_lower(name);
    for (std::size_t i = 0; i < known_names().size(); ++i) {
      if (lower == text::to_lower(known_names()[i])) return Domain(static_cast<Kind>(i));
    }
    return other(std::string(name));
  }

  Kind kind() const noexcept { return kind_; }

  std::string name() const {
    if (kind_ == Kind::Other) return other_;
    return std::string(known_names()[static_cast<std::size_t>(kind_)]);
  }

  friend bool operator==(const Domain& a, const Domain& b) { return a.name() == b.name(); }
  friend bool operator<(const Domain& a, const Domain& b) { return a.name() < b.name(); }

 private:
  static constexpr std::array<std::string_view, 5> known_names() {
    return {"Books", "Electronics", "Restaurants", "SocialMedia", "Hotels"};
  }

  Kind kind_ = Kind::Other;
  std::string other_;
};

struct Document {
  std::string id;
  Domain domain;
  std::string text;
  std::optional<int> rating;
  std::optional<SentimentLabel> label;

  /// The label as given, or derived from the rating when only a rating is present.
  std::optional<SentimentLabel> effective_label() const {
    if (label) return label;
    if (rating) return map_rating_to_label(*rating);
    return std::nullopt;
  }
};

struct Sentence {
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  std::size_t char_len = 0;
  std::size_t word_count = 0;

  static Sentence make(std::string doc_id, std::size_t index, std::string_view body) {
    Sentence s;
    s.doc_id = std::move(doc_id);
    s.index = index;
    s.text = std::string(text::trim(body));
    s.char_len = text::char_length(s.text);
    s.word_count = text::word_count(s.text);
    return s;
  }

  /// Stable identifier "doc_id#index" used as the sentence_id in downstream files.
  std::string id() const { return doc_id + "#" + std::to_string(index); }
};

// ---------------------------------------------------------------------------
// JSON mapping

inline ordered_json to_json(const Document& d) {
  ordered_json j;
  j["id"] = d.id;
  j["domain"] = d.domain.name();
  j["text"] = d.text;
  if (d.rating) j["rating"] = *d.rating;
  if (d.label) j["label"] = d.label->value();
  return j;
}

/// Parses and validates one document record (throws ParseError / DomainError).
inline Document document_from_json(const json& j) {
  Document d;
  d.id = field::string(j, "id");
  if (d.id.empty()) throw ParseError("empty id");
  d.domain = Domain::parse(field::string(j, "domain"));
  d.text = field::string(j, "text");
  if (field::has(j, "rating")) {
    const auto r = field::integer(j, "rating");
    if (r < 1 || r > 5) throw DomainError("rating out of range: " + std::to_string(r));
    d.rating = static_cast<int>(r);
  }
  if (field::has(j, "label")) d.label = SentimentLabel::from_int(field::integer(j, "label"));
  if (d.rating && d.label) {
    const auto derived = map_rating_to_label(*d.rating);
    if (!derived || !(*derived == *d.label))
      throw ParseError("label " + std::to_string(d.label->value()) + " contradicts rating " +
                       std::to_string(*d.rating));
  }
  return d;
}

inline ordered_json to_json(const Sentence& s) {
  ordered_json j;
  j["doc_id"] = s.doc_id;
  j["index"] = s.index;
  j["text"] = s.text;
  j["char_len"] = s.char_len;
  j["word_count"] = s.word_count;
  return j;
}

inline Sentence sentence_from_json(const json& j) {
  auto s = Sentence::make(field::string(j, "doc_id"), static_cast<std::size_t>(field::integer(j, "index")),
                          field::string(j, "text"));
  if (s.text.empty()) throw ParseError("empty sentence text");
  return s;
}

// ---------------------------------------------------------------------------
// Streaming document loading

/// Single-consumer stream of documents from a record file.
///
/// Malformed lines (bad JSON, missing fields, out-of-range rating, label/rating
/// contradiction, duplicate id) are skipped and recorded. finish() raises
/// CorpusFormatError when more than `max_malformed_fraction` of lines were bad.
class DocumentReader {
 public:
  explicit DocumentReader(const std::string& path, double max_malformed_fraction = 0.10)
      : reader_(path), max_bad_(max_malformed_fraction) {}

  std::optional<Document> next() {
    std::string line;
    while (reader_.next(line)) {
      try {
        Document d = document_from_json(json::parse(line));
        if (!seen_.insert(d.id).second) throw ParseError("duplicate id '" + d.id + "'");
        ++summary_.read;
        return d;
      } catch (const std::exception& e) {
        ++summary_.skipped;
        summary_.errors.push_back({reader_.line_number(), e.what()});
      }
    }
    return std::nullopt;
  }

  const LoadSummary& summary() const noexcept { return summary_; }

  const LoadSummary& finish() const {
    const auto total = summary_.read + summary_.skipped;
    if (total > 0 && static_cast<double>(summary_.skipped) > max_bad_ * static_cast<double>(total)) {
      std::string msg = reader_.path() + ": " + std::to_string(summary_.skipped) + " of " + std::to_string(total) +
                        " lines malformed";
      if (!summary_.errors.empty())
        msg += " (first at line " + std::to_string(summary_.errors.front().line) + ": " +
               summary_.errors.front().message + ")";
      throw CorpusFormatError(msg);
    }
    return summary_;
  }

 private:
  JsonlReader reader_;
  double max_bad_;
  LoadSummary summary_;
  std::unordered_set<std::string> seen_;
};

inline std::vector<Document> load_documents(const std::string& path, LoadSummary* summary = nullptr) {
  DocumentReader reader(path);
  std::vector<Document> docs;
  while (auto d = reader.next()) docs.push_back(std::move(*d));
  const auto& s = reader.finish();
  if (summary) *summary = s;
  return docs;
}

inline void write_documents(const std::string& path, const std::vector<Document>& docs) {
  JsonlWriter w(path);
  for (const auto& d : docs) w.write(to_json(d));
}

}  // namespace rlfkit
