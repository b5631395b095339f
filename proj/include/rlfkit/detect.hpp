#pragma once

// Detection and normalization of lengthened words.
//
// A token is split into maximal runs of one character (letters compared
// case-insensitively). A run "qualifies" as lengthening when it is a letter
// run of at least `letter_min`, a '!'/'?' run of at least `bang_min`, or a
// '.' run of at least `dot_min` (so a plain "..." ellipsis does not count).

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "rlfkit/error.hpp"
#include "rlfkit/jsonl.hpp"
#include "rlfkit/text.hpp"

namespace rlfkit {

struct Thresholds {
  std::size_t letter_min = 3;
  std::size_t bang_min = 2;  // '!' and '?'
  std::size_t dot_min = 4;
};

enum class RlfStyle { Letter, Punctuation };

inline std::string_view style_name(RlfStyle s) noexcept { return s == RlfStyle::Letter ? "letter" : "punctuation"; }

inline RlfStyle parse_style(std::string_view s) {
  if (s == "letter") return RlfStyle::Letter;
  if (s == "punctuation") return RlfStyle::Punctuation;
  throw ParseError("unknown style '" + std::string(s) + "'");
}

/// Maximal run of one character inside a token. `ch` is lowercased for letters.
struct Run {
  char ch = 0;
  std::size_t begin = 0;
  std::size_t length = 0;
};

inline std::vector<Run> runs_of(std::string_view token) {
  std::vector<Run> out;
  for (std::size_t i = 0; i < token.size();) {
    const char c = text::to_lower(token[i]);
    std::size_t j = i + 1;
    // Non-ASCII bytes never form runs; this keeps multi-byte sequences intact.
    if (static_cast<unsigned char>(c) < 0x80) {
      while (j < token.size() && text::to_lower(token[j]) == c) ++j;
    }
    out.push_back({c, i, j - i});
    i = j;
  }
  return out;
}

inline bool is_letter_run(const Run& r) noexcept { return text::is_alpha(r.ch); }

inline bool is_qualifying(const Run& r, const Thresholds& t = {}) noexcept {
  if (text::is_alpha(r.ch)) return r.length >= t.letter_min;
  if (r.ch == '!' || r.ch == '?') return r.length >= t.bang_min;
  if (r.ch == '.') return r.length >= t.dot_min;
  return false;
}

inline bool is_qualifying_letter_run(const Run& r, const Thresholds& t = {}) noexcept {
  return is_letter_run(r) && r.length >= t.letter_min;
}

/// Screening test: does `text` contain any qualifying run anywhere?
inline bool rlf_search(std::string_view text, const Thresholds& t = {}) {
  for (std::size_t i = 0; i < text.size();) {
    const char c = text::to_lower(text[i]);
    std::size_t j = i + 1;
    while (j < text.size() && text::to_lower(text[j]) == c) ++j;
    if (is_qualifying(Run{c, i, j - i}, t)) return true;
    i = j;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Word-level exclusions

enum class Exclusion { None, Number, Url, Monetary, Mention, NoLetters };

inline std::string_view exclusion_name(Exclusion e) noexcept {
  switch (e) {
    case Exclusion::None: return "none";
    case Exclusion::Number: return "number";
    case Exclusion::Url: return "url";
    case Exclusion::Monetary: return "monetary";
    case Exclusion::Mention: return "mention";
    case Exclusion::NoLetters: return "no_letters";
  }
  return "none";
}

inline Exclusion exclusion_class(std::string_view token) {
  if (token.empty()) return Exclusion::NoLetters;
  if (token.front() == '@') return Exclusion::Mention;
  if (token.find("://") != std::string_view::npos) return Exclusion::Url;
  if (token.size() >= 4 && text::to_lower(token.substr(0, 4)) == "www.") return Exclusion::Url;

  // Currency symbol then a digit: "$", "€" (E2 82 AC), "£" (C2 A3).
  for (std::string_view sym : {std::string_view("$"), std::string_view("\xE2\x82\xAC"), std::string_view("\xC2\xA3")}) {
    if (token.size() > sym.size() && token.substr(0, sym.size()) == sym && text::is_digit(token[sym.size()]))
      return Exclusion::Monetary;
  }

  bool has_digit = false, only_numeric = true, has_letter = false;
  for (char c : token) {
    if (text::is_digit(c)) has_digit = true;
    else if (c != ',' && c != '.') only_numeric = false;
    if (text::is_alpha(c)) has_letter = true;
  }
  if (has_digit && only_numeric) return Exclusion::Number;
  if (!has_letter) return Exclusion::NoLetters;
  return Exclusion::None;
}

// ---------------------------------------------------------------------------
// Dictionary

/// Case-insensitive word list.
class Dictionary {
 public:
  Dictionary() = default;

  template <class Range>
  static Dictionary from_words(const Range& words) {
    Dictionary d;
    for (const auto& w : words) d.add(w);
    if (d.words_.empty()) throw DomainError("dictionary is empty");
    return d;
  }

  /// Plain text, one word per line; blank lines and lines starting with '#' are ignored.
  static Dictionary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dictionary '" + path + "'");
    Dictionary d;
    std::string line;
    while (std::getline(in, line)) {
      auto w = text::trim(line);
      if (w.empty() || w.front() == '#') continue;
      d.add(w);
    }
    if (d.words_.empty()) throw DomainError("dictionary '" + path + "' is empty");
    return d;
  }

  void add(std::string_view w) { words_.insert(text::to_lower(w)); }

  bool contains(std::string_view w) const { return words_.count(text::to_lower(w)) > 0; }

  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// ---------------------------------------------------------------------------
// Root reduction

/// Result of reducing the qualifying letter runs of a word.
struct RootReduction {
  std::string root;
  std::vector<int> kept;          // length kept (1 or 2) for each qualifying letter run, left to right
  std::size_t candidates = 0;     // dictionary members among all reductions
  bool in_dictionary = false;     // false when no reduction is a dictionary word (fallback)
};

/// Upper bound on qualifying letter runs considered for enumeration (2^16 candidates).
inline constexpr std::size_t kMaxReducibleRuns = 16;

namespace detail {

inline std::string build_reduction(std::string_view word, const std::vector<Run>& runs, const std::vector<int>& kept,
                                   const Thresholds& t) {
  std::string out;
  out.reserve(word.size());
  std::size_t k = 0;
  for (const auto& r : runs) {
    if (is_qualifying_letter_run(r, t)) out.append(word.substr(r.begin, static_cast<std::size_t>(kept[k++])));
    else out.append(word.substr(r.begin, r.length));
  }
  return out;
}

}  // namespace detail

/// Enumerates every way of shortening each qualifying letter run to 1 or 2
/// characters and picks the dictionary word with (a) fewest characters, then
/// (b) runs kept at length 1 preferred left to right, then (c) lexicographic.
/// Surviving characters keep their surface case. Other runs are kept verbatim.
inline std::optional<RootReduction> reduce_to_root_detailed(std::string_view word, const Dictionary& dict,
                                                            const Thresholds& t = {}) {
  const auto runs = runs_of(word);
  std::size_t n_long = 0;
  for (const auto& r : runs) n_long += is_qualifying_letter_run(r, t) ? 1 : 0;
  if (n_long == 0 || n_long > kMaxReducibleRuns) return std::nullopt;

  std::optional<RootReduction> best;
  std::size_t best_len = 0;
  std::size_t found = 0;
  std::vector<int> kept(n_long);
  // Masks enumerate kept-vectors in lexicographic order (first run = most significant bit, 0 -> keep 1).
  const std::uint32_t limit = 1u << n_long;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    for (std::size_t k = 0; k < n_long; ++k) kept[k] = ((mask >> (n_long - 1 - k)) & 1u) ? 2 : 1;
    std::string cand = detail::build_reduction(word, runs, kept, t);
    if (!dict.contains(cand)) continue;
    ++found;
    // Masks arrive in tie-break order, so among equal lengths the first hit wins;
    // distinct masks give distinct strings, making the lexicographic rule moot.
    if (!best || cand.size() < best_len) {
      best = RootReduction{std::move(cand), kept, 0, true};
      best_len = best->root.size();
    }
  }
  if (best) best->candidates = found;
  return best;
}

inline std::optional<std::string> reduce_to_root(std::string_view word, const Dictionary& dict,
                                                 const Thresholds& t = {}) {
  auto r = reduce_to_root_detailed(word, dict, t);
  if (!r) return std::nullopt;
  return std::move(r->root);
}

/// Collapses every qualifying punctuation run: '!'-run to "!", '?'-run to "?",
/// '.'-run to "...". Everything else is kept verbatim.
inline std::string reduce_punct_root(std::string_view token, const Thresholds& t = {}) {
  std::string out;
  for (const auto& r : runs_of(token)) {
    if (!is_letter_run(r) && is_qualifying(r, t)) out.append(r.ch == '.' ? std::string_view("...") : token.substr(r.begin, 1));
    else out.append(token.substr(r.begin, r.length));
  }
  return out;
}

/// Run-collapsed pattern of a token with the standard-spelling part of each
/// lengthened run followed by '+', lowercased (e.g. "booook" with kept {2} ->
/// "boo+k", "it......" -> "it...+"). `kept` gives the length retained for each
/// qualifying letter run; when absent every letter run keeps one character.
inline std::string generalized_form(std::string_view token, const std::vector<int>* kept, const Thresholds& t = {}) {
  std::string out;
  std::size_t k = 0;
  for (const auto& r : runs_of(token)) {
    if (is_qualifying_letter_run(r, t)) {
      const std::size_t keep = kept ? static_cast<std::size_t>((*kept)[k++]) : 1;
      out.append(keep, r.ch);
      out.push_back('+');
    } else if (is_qualifying(r, t)) {
      out.append(r.ch == '.' ? std::string_view("...") : std::string_view(&r.ch, 1));
      out.push_back('+');
    } else {
      out.append(text::to_lower(token.substr(r.begin, r.length)));
    }
  }
  return out;
}

inline std::string generalized_form(std::string_view token, const Thresholds& t = {}) {
  return generalized_form(token, nullptr, t);
}

// ---------------------------------------------------------------------------
// Word scan

struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

/// One detected lengthened word.
struct RlfSpan {
  std::string surface;
  std::string root;
  std::string generalized_form;
  RlfStyle style = RlfStyle::Letter;
  std::size_t word_index = 0;
  CharSpan char_span;
  std::optional<std::string> pos_tag;
  bool root_in_dictionary = true;
  bool ambiguous_root = false;  // more than one dictionary reduction existed

  friend bool operator==(const RlfSpan&, const RlfSpan&) = default;
};

namespace detail {

inline bool is_alnum(char c) noexcept { return text::is_alpha(c) || text::is_digit(c); }

}  // namespace detail

/// Detects a lengthened word. Returns none for excluded tokens (numbers, URLs,
/// @-mentions, monetary amounts, tokens without letters) and for tokens with no
/// qualifying run. A qualifying letter run makes the span Letter style even
/// when a punctuation run also qualifies. word_index/char_span are left at zero
/// for the caller to fill.
inline std::optional<RlfSpan> scan_word(std::string_view token, const Dictionary& dict, const Thresholds& t = {}) {
  if (exclusion_class(token) != Exclusion::None) return std::nullopt;
  const auto runs = runs_of(token);
  bool any = false, letter = false;
  for (const auto& r : runs) {
    if (!is_qualifying(r, t)) continue;
    any = true;
    letter = letter || is_letter_run(r);
  }
  if (!any) return std::nullopt;

  RlfSpan span;
  span.surface = std::string(token);
  if (!letter) {
    span.style = RlfStyle::Punctuation;
    span.root = reduce_punct_root(token, t);
    span.generalized_form = generalized_form(token, t);
    return span;
  }

  span.style = RlfStyle::Letter;
  std::size_t b = 0, e = token.size();
  while (b < e && !detail::is_alnum(token[b])) ++b;
  while (e > b && !detail::is_alnum(token[e - 1])) --e;
  const std::string_view stem = token.substr(b, e - b);

  auto reduction = reduce_to_root_detailed(stem, dict, t);
  std::vector<int> kept;
  std::string reduced_stem;
  if (reduction) {
    kept = reduction->kept;
    reduced_stem = reduction->root;
    span.ambiguous_root = reduction->candidates > 1;
  } else {
    const auto stem_runs = runs_of(stem);
    for (const auto& r : stem_runs)
      if (is_qualifying_letter_run(r, t)) kept.push_back(1);
    reduced_stem = detail::build_reduction(stem, stem_runs, kept, t);
    span.root_in_dictionary = false;
  }
  std::string assembled = std::string(token.substr(0, b)) + reduced_stem + std::string(token.substr(e));
  span.root = reduce_punct_root(assembled, t);
  span.generalized_form = generalized_form(token, &kept, t);
  return span;
}

/// Scans every whitespace token of a sentence, filling word and character positions.
inline std::vector<RlfSpan> scan_sentence(std::string_view sentence, const Dictionary& dict, const Thresholds& t = {}) {
  std::vector<RlfSpan> spans;
  const auto tokens = text::tokenize(sentence);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (auto s = scan_word(tokens[i].text, dict, t)) {
      s->word_index = i;
      s->char_span = {tokens[i].char_begin, tokens[i].char_end};
      spans.push_back(std::move(*s));
    }
  }
  return spans;
}

/// True when no token of the sentence is a detected lengthened word.
inline bool is_rlf_free(std::string_view sentence, const Dictionary& dict, const Thresholds& t = {}) {
  if (!rlf_search(sentence, t)) return true;
  for (const auto& tok : text::tokenize(sentence))
    if (scan_word(tok.text, dict, t)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Form frequencies

class FormFrequencyTable {
 public:
  void add(std::string_view form, std::uint64_t n = 1) { counts_[std::string(form)] += n; }

  void merge(const FormFrequencyTable& other) {
    for (const auto& [form, n] : other.counts_) counts_[form] += n;
  }

  std::uint64_t count(std::string_view form) const {
    auto it = counts_.find(std::string(form));
    return it == counts_.end() ? 0 : it->second;
  }

  const std::map<std::string, std::uint64_t>& counts() const noexcept { return counts_; }

  template <class SpanRange>
  static FormFrequencyTable from_spans(const SpanRange& spans) {
    FormFrequencyTable t;
    for (const auto& s : spans) t.add(s.generalized_form);
    return t;
  }

  /// Line-delimited {generalized_form, count}.
  void save(const std::string& path) const {
    JsonlWriter w(path);
    for (const auto& [form, n] : counts_) {
      ordered_json j;
      j["generalized_form"] = form;
      j["count"] = n;
      w.write(j);
    }
  }

  static FormFrequencyTable load(const std::string& path) {
    FormFrequencyTable t;
    JsonlReader r(path);
    std::string line;
    while (r.next(line)) {
      const auto j = json::parse(line);
      const auto n = field::integer(j, "count");
      if (n < 0) throw ParseError(path + ":" + std::to_string(r.line_number()) + ": negative count");
      t.add(field::string(j, "generalized_form"), static_cast<std::uint64_t>(n));
    }
    return t;
  }

 private:
  std::map<std::string, std::uint64_t> counts_;
};

struct StratumCount {
  std::uint64_t kept = 0;
  std::uint64_t dropped = 0;
};

/// Per-stratum kept/dropped tally, serialized as line-delimited {stratum, kept, dropped}.
using StratumReport = std::map<std::string, StratumCount>;

inline void write_report(const std::string& path, const StratumReport& report) {
  JsonlWriter w(path);
  for (const auto& [stratum, c] : report) {
    ordered_json j;
    j["stratum"] = stratum;
    j["kept"] = c.kept;
    j["dropped"] = c.dropped;
    w.write(j);
  }
}

struct FormFilterResult {
  std::vector<RlfSpan> retained;
  StratumReport report;  // keyed "form:<generalized_form>"
};

inline constexpr std::uint64_t kDefaultMinFormCount = 100;

/// Keeps spans whose generalized form occurs strictly more than `min_count` times.
inline FormFilterResult filter_by_form_frequency(const std::vector<RlfSpan>& spans, const FormFrequencyTable& freq,
                                                 std::uint64_t min_count = kDefaultMinFormCount) {
  FormFilterResult out;
  for (const auto& s : spans) {
    auto& c = out.report["form:" + s.generalized_form];
    if (min_count == 0 || freq.count(s.generalized_form) > min_count) {
      out.retained.push_back(s);
      ++c.kept;
    } else {
      ++c.dropped;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON mapping

inline ordered_json to_json(const RlfSpan& s) {
  ordered_json j;
  j["surface"] = s.surface;
  j["root"] = s.root;
  j["generalized_form"] = s.generalized_form;
  j["style"] = style_name(s.style);
  j["word_index"] = s.word_index;
  j["char_span"] = {s.char_span.begin, s.char_span.end};
  if (s.pos_tag) j["pos_tag"] = *s.pos_tag;
  if (!s.root_in_dictionary) j["root_in_dictionary"] = false;
  if (s.ambiguous_root) j["ambiguous_root"] = true;
  return j;
}

inline RlfSpan span_from_json(const json& j) {
  RlfSpan s;
  s.surface = field::string(j, "surface");
  s.root = field::string(j, "root");
  s.generalized_form = field::string(j, "generalized_form");
  s.style = parse_style(field::string(j, "style"));
  s.word_index = static_cast<std::size_t>(field::integer(j, "word_index"));
  const auto& cs = field::required(j, "char_span");
  if (!cs.is_array() || cs.size() != 2) throw ParseError("char_span must be [begin, end]");
  s.char_span = {cs[0].get<std::size_t>(), cs[1].get<std::size_t>()};
  if (field::has(j, "pos_tag")) s.pos_tag = field::string(j, "pos_tag");
  if (field::has(j, "root_in_dictionary")) s.root_in_dictionary = j.at("root_in_dictionary").get<bool>();
  if (field::has(j, "ambiguous_root")) s.ambiguous_root = j.at("ambiguous_root").get<bool>();
  return s;
}

}  // namespace rlfkit
