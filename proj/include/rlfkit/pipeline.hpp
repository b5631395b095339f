#pragma once

// Document -> sentence -> word extraction of lengthened words, and the
// dataset-shaping steps that follow it (control pairing, balancing,
// stratified subsets, split tags, POS attachment).
//
// Every random decision is keyed_uniform(seed, stable key), so results do not
// depend on record order or on the degree of parallelism.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rlfkit/corpus.hpp"
#include "rlfkit/detect.hpp"
#include "rlfkit/error.hpp"
#include "rlfkit/hash.hpp"
#include "rlfkit/jsonl.hpp"
#include "rlfkit/text.hpp"

namespace rlfkit {

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr std::size_t kDefaultMinWords = 5;

enum class SplitTag { Train, Val, Test };

inline std::string_view split_name(SplitTag t) noexcept {
  switch (t) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
  }
  return "train";
}

inline SplitTag parse_split(std::string_view s) {
  if (s == "train") return SplitTag::Train;
  if (s == "val") return SplitTag::Val;
  if (s == "test") return SplitTag::Test;
  throw ParseError("unknown split tag '" + std::string(s) + "'");
}

/// An extracted sentence with at least one lengthened word.
struct RlfSentenceRecord {
  std::string doc_id;
  Domain domain;
  Sentence sentence;
  std::vector<RlfSpan> spans;
  SentimentLabel label = SentimentLabel::negative();
  std::optional<Sentence> pair_sentence;
  std::optional<SplitTag> split_tag;

  std::string id() const { return sentence.id(); }

  /// The first span; it decides the record's style stratum and form group.
  const RlfSpan& primary() const { return spans.front(); }
};

/// A merged sentence of a document together with whether it holds any lengthened word.
struct SentenceInfo {
  Sentence sentence;
  bool has_rlf = false;
};

using DocSentences = std::unordered_map<std::string, std::vector<SentenceInfo>>;

// ---------------------------------------------------------------------------
// Segmentation

namespace detail {

inline bool is_terminal(char c) noexcept { return c == '.' || c == '?' || c == '!'; }

inline bool is_closer(char c) noexcept { return c == '"' || c == '\'' || c == ')' || c == ']'; }

/// Abbreviations that do not end a sentence: honorifics ("Mr.", "Dr.") and dotted forms ("e.g.", "U.S.").
inline bool is_abbreviation(std::string_view core) {
  const auto n = core.size();
  static constexpr std::string_view kTitles[] = {"mr.", "mrs.", "ms.", "dr.", "jr.", "sr.", "st.", "prof.", "vs."};
  const auto lower = text::to_lower(core);
  for (auto t : kTitles)
    if (lower == t) return true;
  if (n >= 4 && core[n - 1] == '.' && core[n - 3] == '.' && detail::is_alnum(core[n - 2]) && detail::is_alnum(core[n - 4]))
    return true;
  return false;
}

inline bool ends_sentence(std::string_view token) {
  std::size_t e = token.size();
  while (e > 0 && is_closer(token[e - 1])) --e;
  const auto core = token.substr(0, e);
  if (core.empty() || !is_terminal(core.back())) return false;
  std::size_t b = e;
  while (b > 0 && is_terminal(core[b - 1])) --b;
  const auto run = core.substr(b);
  const bool strong = run.find_first_of("!?") != std::string_view::npos;
  if (!strong && exclusion_class(core) == Exclusion::Url) return false;
  if (!strong && run.size() == 1 && is_abbreviation(core)) return false;
  return true;
}

}  // namespace detail

/// Splits on runs of '.', '?' or '!' that end a whitespace token; the run stays
/// with its sentence. Decimals never split (no whitespace follows their '.'),
/// nor do URLs or common abbreviations ending in a single '.'.
inline std::vector<Sentence> segment_sentences(const Document& doc) {
  std::vector<Sentence> out;
  const std::string_view body = doc.text;
  const auto tokens = text::tokenize(body);
  std::size_t start = 0;
  bool open = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!open) {
      start = tokens[i].byte_begin;
      open = true;
    }
    if (detail::ends_sentence(tokens[i].text)) {
      out.push_back(Sentence::make(doc.id, out.size(), body.substr(start, tokens[i].byte_end - start)));
      open = false;
    }
  }
  if (open) out.push_back(Sentence::make(doc.id, out.size(), body.substr(start)));
  return out;
}

/// Appends every sentence shorter than `min_words` to its predecessor; a short
/// leading sentence absorbs its successors until it is long enough.
inline std::vector<Sentence> merge_short_sentences(const std::vector<Sentence>& sentences,
                                                   std::size_t min_words = kDefaultMinWords) {
  std::vector<std::string> bodies;
  std::vector<std::size_t> words;
  for (const auto& s : sentences) {
    const bool leader_short = bodies.size() == 1 && words[0] < min_words;
    if (!bodies.empty() && (s.word_count < min_words || leader_short)) {
      bodies.back() += " " + s.text;
      words.back() += s.word_count;
    } else {
      bodies.push_back(s.text);
      words.push_back(s.word_count);
    }
  }
  std::vector<Sentence> out;
  const std::string doc_id = sentences.empty() ? std::string() : sentences.front().doc_id;
  for (std::size_t i = 0; i < bodies.size(); ++i) out.push_back(Sentence::make(doc_id, i, bodies[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Extraction

struct ExtractOptions {
  Thresholds thresholds;
  std::size_t min_words = kDefaultMinWords;
};

enum class DocOutcome { Unlabeled, Rejected, NoRlf, Extracted };

struct DocumentExtraction {
  DocOutcome outcome = DocOutcome::Rejected;
  std::vector<RlfSentenceRecord> records;
  std::vector<SentenceInfo> sentences;  // merged sentences; filled when the document passed screening
};

inline DocumentExtraction extract_document(const Document& doc, const Dictionary& dict, const ExtractOptions& opts = {}) {
  DocumentExtraction out;
  const auto label = doc.effective_label();
  if (!label) {
    out.outcome = DocOutcome::Unlabeled;
    return out;
  }
  if (text::trim(doc.text).empty() || !rlf_search(doc.text, opts.thresholds)) {
    out.outcome = DocOutcome::Rejected;
    return out;
  }
  for (auto& s : merge_short_sentences(segment_sentences(doc), opts.min_words)) {
    SentenceInfo info{std::move(s), false};
    if (rlf_search(info.sentence.text, opts.thresholds)) {
      auto spans = scan_sentence(info.sentence.text, dict, opts.thresholds);
      if (!spans.empty()) {
        info.has_rlf = true;
        RlfSentenceRecord rec;
        rec.doc_id = doc.id;
        rec.domain = doc.domain;
        rec.sentence = info.sentence;
        rec.spans = std::move(spans);
        rec.label = *label;
        out.records.push_back(std::move(rec));
      }
    }
    out.sentences.push_back(std::move(info));
  }
  out.outcome = out.records.empty() ? DocOutcome::NoRlf : DocOutcome::Extracted;
  return out;
}

/// Records for every sentence of `doc` holding at least one lengthened word.
/// Unlabeled documents yield nothing; extract_corpus reports them.
inline std::vector<RlfSentenceRecord> extract_rlf(const Document& doc, const Dictionary& dict,
                                                  const ExtractOptions& opts = {}) {
  return extract_document(doc, dict, opts).records;
}

struct DomainCounts {
  std::uint64_t documents = 0;
  std::uint64_t rlf_documents = 0;
};

struct ExtractionReport {
  std::uint64_t documents = 0;
  std::uint64_t unlabeled = 0;
  std::uint64_t screened_in = 0;
  std::uint64_t rlf_documents = 0;
  std::uint64_t records = 0;
  std::uint64_t spans = 0;
  std::map<std::string, DomainCounts> per_domain;
  std::vector<std::string> unlabeled_ids;
  std::map<std::string, std::uint64_t> ambiguous_roots;  // surface (lowercased) -> occurrences
};

struct CorpusExtraction {
  std::vector<RlfSentenceRecord> records;
  DocSentences doc_sentences;  // only documents that produced records
  ExtractionReport report;
};

/// Extracts a whole corpus, optionally across `threads` workers. Output order
/// is document order regardless of the thread count.
inline CorpusExtraction extract_corpus(const std::vector<Document>& docs, const Dictionary& dict,
                                       const ExtractOptions& opts = {}, unsigned threads = 1) {
  std::vector<DocumentExtraction> parts(docs.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(docs.size(), 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) parts[i] = extract_document(docs[i], dict, opts);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (docs.size() + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          const std::size_t end = std::min(docs.size(), (w + 1) * chunk);
          for (std::size_t i = w * chunk; i < end; ++i) parts[i] = extract_document(docs[i], dict, opts);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  CorpusExtraction out;
  auto& rep = out.report;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto& part = parts[i];
    const auto& doc = docs[i];
    auto& dc = rep.per_domain[doc.domain.name()];
    ++rep.documents;
    ++dc.documents;
    if (part.outcome == DocOutcome::Unlabeled) {
      ++rep.unlabeled;
      rep.unlabeled_ids.push_back(doc.id);
      continue;
    }
    if (part.outcome == DocOutcome::Rejected) continue;
    ++rep.screened_in;
    if (part.outcome != DocOutcome::Extracted) continue;
    ++rep.rlf_documents;
    ++dc.rlf_documents;
    for (auto& rec : part.records) {
      ++rep.records;
      rep.spans += rec.spans.size();
      for (const auto& s : rec.spans)
        if (s.ambiguous_root) ++rep.ambiguous_roots[text::to_lower(s.surface)];
      out.records.push_back(std::move(rec));
    }
    out.doc_sentences.emplace(doc.id, std::move(part.sentences));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Control pairing

struct PairReport {
  std::uint64_t paired = 0;
  std::uint64_t single_sentence = 0;
  std::uint64_t no_candidate = 0;
};

/// Picks, per record, a random RLF-free sentence of the same document
/// (documents with two or more sentences only). The draw is keyed by the
/// record's doc_id and sentence index.
inline std::vector<RlfSentenceRecord> pair_control(std::vector<RlfSentenceRecord> records,
                                                   const DocSentences& doc_sentences, std::uint64_t seed,
                                                   PairReport* report = nullptr) {
  PairReport rep;
  for (auto& rec : records) {
    rec.pair_sentence.reset();
    auto it = doc_sentences.find(rec.doc_id);
    if (it == doc_sentences.end() || it->second.size() < 2) {
      ++rep.single_sentence;
      continue;
    }
    std::vector<const Sentence*> candidates;
    for (const auto& info : it->second)
      if (!info.has_rlf) candidates.push_back(&info.sentence);
    if (candidates.empty()) {
      ++rep.no_candidate;
      continue;
    }
    const double u = keyed_uniform(seed, "pair:" + rec.id());
    const auto pick = std::min(candidates.size() - 1, static_cast<std::size_t>(u * static_cast<double>(candidates.size())));
    rec.pair_sentence = *candidates[pick];
    ++rep.paired;
  }
  if (report) *report = rep;
  return records;
}

/// Re-derives the merged sentence lists of `docs`, marking sentences with lengthened words.
inline DocSentences build_doc_sentences(const std::vector<Document>& docs, const Dictionary& dict,
                                        const ExtractOptions& opts = {}) {
  DocSentences out;
  for (const auto& d : docs) {
    auto part = extract_document(d, dict, opts);
    if (part.outcome == DocOutcome::Extracted) out.emplace(d.id, std::move(part.sentences));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Form-frequency filtering over records

inline FormFrequencyTable form_frequencies(const std::vector<RlfSentenceRecord>& records) {
  FormFrequencyTable t;
  for (const auto& r : records)
    for (const auto& s : r.spans) t.add(s.generalized_form);
  return t;
}

/// Applies filter_by_form_frequency to each record's spans; records left with no span are dropped.
inline std::vector<RlfSentenceRecord> filter_records_by_form_frequency(std::vector<RlfSentenceRecord> records,
                                                                       const FormFrequencyTable& freq,
                                                                       std::uint64_t min_count, StratumReport* report) {
  std::vector<RlfSentenceRecord> out;
  StratumReport rep;
  for (auto& r : records) {
    auto res = filter_by_form_frequency(r.spans, freq, min_count);
    for (const auto& [k, c] : res.report) {
      rep[k].kept += c.kept;
      rep[k].dropped += c.dropped;
    }
    if (res.retained.empty()) continue;
    r.spans = std::move(res.retained);
    out.push_back(std::move(r));
  }
  if (report) *report = std::move(rep);
  return out;
}

// ---------------------------------------------------------------------------
// Balancing

struct BalancePolicy {
  double letter_keep_rate = 0.20;
  double ellipsis_keep_rate = 0.08;
  double other_punct_keep_rate = 1.0;
  std::optional<std::size_t> per_domain_cap;
  std::optional<std::size_t> per_form_cap;
  std::uint64_t seed = kDefaultSeed;

  void validate() const {
    for (double r : {letter_keep_rate, ellipsis_keep_rate, other_punct_keep_rate})
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("keep rate must be in [0, 1], got " + std::to_string(r));
    if (per_domain_cap && *per_domain_cap < 1) throw ConfigError("per_domain_cap must be >= 1");
    if (per_form_cap && *per_form_cap < 1) throw ConfigError("per_form_cap must be >= 1");
  }
};

enum class BalanceStratum { Letter, Ellipsis, OtherPunct };

inline std::string_view stratum_name(BalanceStratum s) noexcept {
  switch (s) {
    case BalanceStratum::Letter: return "letter";
    case BalanceStratum::Ellipsis: return "ellipsis";
    case BalanceStratum::OtherPunct: return "other_punct";
  }
  return "letter";
}

inline BalanceStratum balance_stratum(const RlfSentenceRecord& r, const Thresholds& t = {}) {
  const auto& s = r.primary();
  if (s.style == RlfStyle::Letter) return BalanceStratum::Letter;
  for (const auto& run : runs_of(s.surface))
    if (run.ch == '.' && is_qualifying(run, t)) return BalanceStratum::Ellipsis;
  return BalanceStratum::OtherPunct;
}

namespace detail {

/// Keeps at most `cap` records per group, preferring the smallest keyed hash; order preserved.
template <class KeyFn>
std::vector<RlfSentenceRecord> apply_cap(std::vector<RlfSentenceRecord> in, std::size_t cap, std::uint64_t seed,
                                         std::string_view tag, KeyFn key_of, StratumReport& rep) {
  std::map<std::string, std::vector<std::pair<std::uint64_t, std::size_t>>> groups;
  for (std::size_t i = 0; i < in.size(); ++i)
    groups[key_of(in[i])].emplace_back(keyed_hash(seed, std::string(tag) + ":" + in[i].id()), i);
  std::vector<bool> keep(in.size(), false);
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end());
    const auto n = std::min(cap, members.size());
    for (std::size_t k = 0; k < n; ++k) keep[members[k].second] = true;
    auto& c = rep[std::string(tag) + ":" + key];
    c.kept += n;
    c.dropped += members.size() - n;
  }
  std::vector<RlfSentenceRecord> out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (keep[i]) out.push_back(std::move(in[i]));
  return out;
}

}  // namespace detail

struct BalanceResult {
  std::vector<RlfSentenceRecord> records;
  StratumReport report;  // "style:<stratum>", "domain_cap:<domain>", "form_cap:<form>"
};

/// Downsamples by style stratum, then truncates over-represented domains and forms.
inline BalanceResult balance(std::vector<RlfSentenceRecord> records, const BalancePolicy& policy,
                             const Thresholds& t = {}) {
  policy.validate();
  BalanceResult out;
  for (auto s : {BalanceStratum::Letter, BalanceStratum::Ellipsis, BalanceStratum::OtherPunct})
    out.report["style:" + std::string(stratum_name(s))];
  std::vector<RlfSentenceRecord> sampled;
  for (auto& r : records) {
    const auto stratum = balance_stratum(r, t);
    const double rate = stratum == BalanceStratum::Letter     ? policy.letter_keep_rate
                        : stratum == BalanceStratum::Ellipsis ? policy.ellipsis_keep_rate
                                                              : policy.other_punct_keep_rate;
    auto& c = out.report["style:" + std::string(stratum_name(stratum))];
    if (keyed_uniform(policy.seed, "balance:" + r.id()) < rate) {
      ++c.kept;
      sampled.push_back(std::move(r));
    } else {
      ++c.dropped;
    }
  }
  if (policy.per_domain_cap)
    sampled = detail::apply_cap(std::move(sampled), *policy.per_domain_cap, policy.seed, "domain_cap",
                                [](const RlfSentenceRecord& r) { return r.domain.name(); }, out.report);
  if (policy.per_form_cap)
    sampled = detail::apply_cap(std::move(sampled), *policy.per_form_cap, policy.seed, "form_cap",
                                [](const RlfSentenceRecord& r) { return r.primary().generalized_form; }, out.report);
  out.records = std::move(sampled);
  return out;
}

// ---------------------------------------------------------------------------
// Subsets and splits

/// Proportional per-domain allocation with largest-remainder rounding; ties go
/// to the larger stratum, then to the smaller domain name.
inline std::map<std::string, std::size_t> allocate_by_domain(const std::map<std::string, std::size_t>& sizes,
                                                             std::size_t n) {
  std::size_t total = 0;
  for (const auto& [d, c] : sizes) total += c;
  if (n > total)
    throw DomainError("requested " + std::to_string(n) + " records but only " + std::to_string(total) + " available");
  std::map<std::string, std::size_t> quota;
  if (total == 0) return quota;
  std::vector<std::tuple<std::size_t, std::size_t, std::string>> remainders;  // (remainder, size, name)
  std::size_t assigned = 0;
  for (const auto& [d, c] : sizes) {
    const auto q = (n * c) / total;
    quota[d] = q;
    assigned += q;
    remainders.emplace_back((n * c) % total, c, d);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++quota[std::get<2>(remainders[k])];
  return quota;
}

/// Domain-stratified sample of n records, uniform within each stratum. Input order is preserved.
inline std::vector<RlfSentenceRecord> stratified_subset(const std::vector<RlfSentenceRecord>& records, std::size_t n,
                                                        std::uint64_t seed) {
  std::map<std::string, std::vector<std::pair<std::uint64_t, std::size_t>>> strata;
  for (std::size_t i = 0; i < records.size(); ++i)
    strata[records[i].domain.name()].emplace_back(keyed_hash(seed, "subset:" + records[i].id()), i);
  std::map<std::string, std::size_t> sizes;
  for (const auto& [d, m] : strata) sizes[d] = m.size();
  const auto quota = allocate_by_domain(sizes, n);
  std::vector<bool> keep(records.size(), false);
  for (auto& [d, members] : strata) {
    std::sort(members.begin(), members.end());
    for (std::size_t k = 0; k < quota.at(d); ++k) keep[members[k].second] = true;
  }
  std::vector<RlfSentenceRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) out.push_back(records[i]);
  return out;
}

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// Tags records train/val/test in seeded random order; counts must sum to the record count.
inline std::vector<RlfSentenceRecord> assign_splits(std::vector<RlfSentenceRecord> records, const SplitCounts& counts,
                                                    std::uint64_t seed) {
  if (counts.train + counts.val + counts.test != records.size())
    throw ConfigError("split counts sum to " + std::to_string(counts.train + counts.val + counts.test) +
                      " but there are " + std::to_string(records.size()) + " records");
  std::vector<std::pair<std::uint64_t, std::size_t>> order;
  for (std::size_t i = 0; i < records.size(); ++i) order.emplace_back(keyed_hash(seed, "split:" + records[i].id()), i);
  std::sort(order.begin(), order.end());
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& r = records[order[k].second];
    r.split_tag = k < counts.train               ? SplitTag::Train
                  : k < counts.train + counts.val ? SplitTag::Val
                                                  : SplitTag::Test;
  }
  return records;
}

// ---------------------------------------------------------------------------
// POS sidecar

struct PosReport {
  std::uint64_t tagged = 0;
  std::uint64_t untagged = 0;
  std::uint64_t duplicates = 0;
  LoadSummary sidecar;
};

/// Fills pos_tag from a line-delimited sidecar {doc_id, sentence_index, word_index, pos}.
/// Later lines override earlier ones for the same key.
inline std::vector<RlfSentenceRecord> attach_pos(std::vector<RlfSentenceRecord> records, const std::string& sidecar_path,
                                                 PosReport* report = nullptr) {
  using Key = std::tuple<std::string, std::size_t, std::size_t>;
  std::map<Key, std::string> tags;
  PosReport rep;
  JsonlReader reader(sidecar_path);
  std::string line;
  while (reader.next(line)) {
    try {
      const auto j = json::parse(line);
      Key k{field::string(j, "doc_id"), static_cast<std::size_t>(field::integer(j, "sentence_index")),
            static_cast<std::size_t>(field::integer(j, "word_index"))};
      auto pos = field::string(j, "pos");
      auto [it, inserted] = tags.insert_or_assign(std::move(k), std::move(pos));
      if (!inserted) ++rep.duplicates;
      ++rep.sidecar.read;
    } catch (const std::exception& e) {
      ++rep.sidecar.skipped;
      rep.sidecar.errors.push_back({reader.line_number(), e.what()});
    }
  }
  for (auto& r : records) {
    for (auto& s : r.spans) {
      auto it = tags.find(Key{r.doc_id, r.sentence.index, s.word_index});
      if (it == tags.end()) {
        ++rep.untagged;
        continue;
      }
      s.pos_tag = it->second;
      ++rep.tagged;
    }
  }
  if (report) *report = std::move(rep);
  return records;
}

// ---------------------------------------------------------------------------
// JSON mapping

inline ordered_json to_json(const RlfSentenceRecord& r) {
  ordered_json j;
  j["sentence_id"] = r.id();
  j["doc_id"] = r.doc_id;
  j["domain"] = r.domain.name();
  j["label"] = r.label.value();
  j["sentence"] = to_json(r.sentence);
  j["spans"] = ordered_json::array();
  for (const auto& s : r.spans) j["spans"].push_back(to_json(s));
  if (r.pair_sentence) j["pair_sentence"] = to_json(*r.pair_sentence);
  if (r.split_tag) j["split_tag"] = split_name(*r.split_tag);
  return j;
}

inline RlfSentenceRecord record_from_json(const json& j) {
  RlfSentenceRecord r;
  r.doc_id = field::string(j, "doc_id");
  r.domain = Domain::parse(field::string(j, "domain"));
  r.label = SentimentLabel::from_int(field::integer(j, "label"));
  r.sentence = sentence_from_json(field::required(j, "sentence"));
  if (r.sentence.doc_id != r.doc_id) throw ParseError("sentence.doc_id differs from doc_id");
  const auto& spans = field::required(j, "spans");
  if (!spans.is_array() || spans.empty()) throw ParseError("spans must be a non-empty array");
  for (const auto& s : spans) {
    r.spans.push_back(span_from_json(s));
    if (r.spans.back().char_span.end > r.sentence.char_len) throw ParseError("char_span outside sentence");
  }
  if (field::has(j, "pair_sentence")) r.pair_sentence = sentence_from_json(j.at("pair_sentence"));
  if (field::has(j, "split_tag")) r.split_tag = parse_split(field::string(j, "split_tag"));
  return r;
}

inline std::vector<RlfSentenceRecord> load_records(const std::string& path) {
  return read_records_strict<RlfSentenceRecord>(path, record_from_json);
}

inline void write_records(const std::string& path, const std::vector<RlfSentenceRecord>& records) {
  JsonlWriter w(path);
  for (const auto& r : records) w.write(to_json(r));
}

}  // namespace rlfkit
