#pragma once

// Human-evaluation bookkeeping: annotation samples, an append-only log of
// annotator submissions with last-write-wins replay, and the aggregates
// (majority-vote labels, mean reliability per model, Krippendorff's alpha).

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "rlfkit/error.hpp"
#include "rlfkit/hash.hpp"
#include "rlfkit/jsonl.hpp"
#include "rlfkit/metrics.hpp"

namespace rlfkit {

enum class AnnotationKind { SentimentLabel, Reliability };

inline std::string_view kind_name(AnnotationKind k) noexcept {
  return k == AnnotationKind::SentimentLabel ? "sentiment_label" : "reliability";
}

inline AnnotationKind parse_kind(std::string_view s) {
  if (s == "sentiment_label" || s == "SentimentLabel") return AnnotationKind::SentimentLabel;
  if (s == "reliability" || s == "Reliability") return AnnotationKind::Reliability;
  throw ValidationError("unknown annotation kind '" + std::string(s) + "'");
}

struct AnnotationRecord {
  std::string sample_id;
  std::string annotator_id;
  AnnotationKind kind = AnnotationKind::SentimentLabel;
  int value = 0;
  std::optional<std::string> model_id;  // Reliability only
  std::string timestamp;
};

inline void validate(const AnnotationRecord& r) {
  if (r.sample_id.empty()) throw ValidationError("sample_id is empty");
  if (r.annotator_id.empty()) throw ValidationError("annotator_id is empty");
  if (r.value != 0 && r.value != 1)
    throw ValidationError(std::string(kind_name(r.kind)) + " value must be 0 or 1, got " + std::to_string(r.value));
  if (r.kind == AnnotationKind::Reliability && (!r.model_id || r.model_id->empty()))
    throw ValidationError("reliability annotations need a model_id");
  if (r.kind == AnnotationKind::SentimentLabel && r.model_id)
    throw ValidationError("sentiment_label annotations take no model_id");
}

inline ordered_json to_json(const AnnotationRecord& r) {
  ordered_json j;
  j["sample_id"] = r.sample_id;
  j["annotator_id"] = r.annotator_id;
  j["kind"] = kind_name(r.kind);
  j["value"] = r.value;
  if (r.model_id) j["model_id"] = *r.model_id;
  j["timestamp"] = r.timestamp;
  return j;
}

/// `check` = false defers validate() to the caller (e.g. once a candidate id is resolved).
inline AnnotationRecord annotation_from_json(const json& j, bool check = true) {
  AnnotationRecord r;
  try {
    r.sample_id = field::string(j, "sample_id");
    r.annotator_id = field::string(j, "annotator_id");
    r.kind = parse_kind(field::string(j, "kind"));
    r.value = static_cast<int>(field::integer(j, "value"));
    if (field::has(j, "model_id")) r.model_id = field::string(j, "model_id");
    if (field::has(j, "timestamp")) r.timestamp = field::string(j, "timestamp");
  } catch (const ParseError& e) {
    throw ValidationError(e.what());
  }
  if (check) validate(r);
  return r;
}

inline std::vector<AnnotationRecord> load_annotations(const std::string& path, LoadSummary* summary = nullptr) {
  return read_records<AnnotationRecord>(path, [](const json& j) { return annotation_from_json(j); }, summary);
}

struct WisCandidate {
  std::string model_id;
  std::vector<std::string> tokens;
  std::vector<double> normalized_scores;
};

struct AnnotationSample {
  std::string sample_id;
  std::string sentence;
  std::optional<std::size_t> rlf_index;
  std::vector<WisCandidate> candidates;
};

inline AnnotationSample annotation_sample_from_json(const json& j) {
  AnnotationSample s;
  s.sample_id = field::string(j, "sample_id");
  s.sentence = field::string(j, "sentence");
  if (field::has(j, "rlf_index")) s.rlf_index = static_cast<std::size_t>(field::integer(j, "rlf_index"));
  if (field::has(j, "wis_candidates")) {
    for (const auto& c : j.at("wis_candidates")) {
      WisCandidate w;
      w.model_id = field::string(c, "model_id");
      w.tokens = field::required(c, "tokens").get<std::vector<std::string>>();
      w.normalized_scores = field::required(c, "normalized_scores").get<std::vector<double>>();
      if (w.tokens.size() != w.normalized_scores.size())
        throw ParseError("candidate " + w.model_id + " has mismatched tokens and scores");
      s.candidates.push_back(std::move(w));
    }
  }
  return s;
}

inline std::vector<AnnotationSample> load_annotation_samples(const std::string& path) {
  return read_records_strict<AnnotationSample>(path, annotation_sample_from_json);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Outcome of a majority vote: the winning code, or none on a tie.
struct MajorityVote {
  std::optional<int> value;
  std::size_t votes = 0;
};

inline MajorityVote majority_vote(const std::vector<int>& codes) {
  std::map<int, std::size_t> counts;
  for (int c : codes) ++counts[c];
  MajorityVote mv;
  mv.votes = codes.size();
  std::size_t best = 0;
  bool tie = false;
  for (const auto& [c, n] : counts) {
    if (n > best) {
      best = n;
      mv.value = c;
      tie = false;
    } else if (n == best) {
      tie = true;
    }
  }
  if (tie) mv.value.reset();
  return mv;
}

/// Keeps the last record per (sample, annotator, kind, model), in key order.
inline std::vector<AnnotationRecord> deduplicate_annotations(const std::vector<AnnotationRecord>& records) {
  std::map<std::tuple<std::string, std::string, int, std::string>, AnnotationRecord> last;
  for (const auto& r : records)
    last.insert_or_assign({r.sample_id, r.annotator_id, static_cast<int>(r.kind), r.model_id.value_or("")}, r);
  std::vector<AnnotationRecord> out;
  for (auto& [k, r] : last) out.push_back(std::move(r));
  return out;
}

/// Thread-safe annotation state backed by an append-only JSONL log.
///
/// Candidate order inside a sample is shuffled once, keyed by sample_id, and
/// candidates are exposed only under anonymous ids ("c1", "c2", ...).
class AnnotationStore {
 public:
  AnnotationStore(std::vector<AnnotationSample> samples, std::string log_path)
      : samples_(std::move(samples)), log_path_(std::move(log_path)) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!by_id_.emplace(samples_[i].sample_id, i).second)
        throw ValidationError("duplicate sample_id '" + samples_[i].sample_id + "'");
      auto& order = order_[samples_[i].sample_id];
      for (std::size_t c = 0; c < samples_[i].candidates.size(); ++c) order.push_back(c);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& s = samples_[i];
        return keyed_hash(0, s.sample_id + "\x1f" + s.candidates[a].model_id) <
               keyed_hash(0, s.sample_id + "\x1f" + s.candidates[b].model_id);
      });
    }
    replay();
    log_.open(log_path_, std::ios::app | std::ios::binary);
    if (!log_) throw IoError("cannot open annotation log '" + log_path_ + "'");
  }

  /// Validates and appends a submission. `candidate_id`, when given, is
  /// resolved to the model it anonymizes. Returns the stored record.
  AnnotationRecord submit(AnnotationRecord r, const std::optional<std::string>& candidate_id = std::nullopt) {
    std::lock_guard lock(mu_);
    auto it = by_id_.find(r.sample_id);
    if (it == by_id_.end()) throw NotFoundError("unknown sample '" + r.sample_id + "'");
    if (candidate_id) {
      if (r.kind != AnnotationKind::Reliability) throw ValidationError("candidate_id applies to reliability only");
      r.model_id = model_for_candidate(it->second, *candidate_id);
    }
    validate(r);
    if (r.model_id && !has_model(it->second, *r.model_id))
      throw NotFoundError("sample '" + r.sample_id + "' has no candidate for that model");
    if (r.timestamp.empty()) r.timestamp = utc_timestamp();
    write_line(log_, to_json(r));
    log_.flush();
    if (!log_) throw IoError("write failure on annotation log");
    apply(r);
    return r;
  }

  /// Next sample the annotator has not fully annotated, in file order.
  std::optional<ordered_json> next_for(const std::string& annotator) const {
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < samples_.size(); ++i)
      if (!complete(i, annotator)) return view(i, annotator);
    return std::nullopt;
  }

  ordered_json sample_view(const std::string& sample_id, const std::string& annotator) const {
    std::lock_guard lock(mu_);
    auto it = by_id_.find(sample_id);
    if (it == by_id_.end()) throw NotFoundError("unknown sample '" + sample_id + "'");
    return view(it->second, annotator);
  }

  ordered_json progress() const {
    std::lock_guard lock(mu_);
    std::map<std::string, std::tuple<std::size_t, std::size_t>> per;  // labels, reliability
    for (const auto& [key, r] : effective_) {
      auto& p = per[r.annotator_id];
      (r.kind == AnnotationKind::SentimentLabel ? std::get<0>(p) : std::get<1>(p))++;
    }
    ordered_json j;
    j["samples"] = samples_.size();
    j["effective_records"] = effective_.size();
    j["annotators"] = ordered_json::object();
    for (const auto& [a, p] : per) {
      std::size_t done = 0;
      for (std::size_t i = 0; i < samples_.size(); ++i) done += complete(i, a) ? 1 : 0;
      j["annotators"][a] = {{"labels", std::get<0>(p)}, {"reliability", std::get<1>(p)}, {"completed_samples", done}};
    }
    return j;
  }

  ordered_json aggregate() const {
    std::lock_guard lock(mu_);
    return aggregate_records(records_unlocked());
  }

  std::vector<AnnotationRecord> effective_records() const {
    std::lock_guard lock(mu_);
    return records_unlocked();
  }

  std::size_t replay_skipped() const noexcept { return replay_skipped_; }

  /// Aggregates over deduplicated records: majority labels, reliability means and alpha.
  static ordered_json aggregate_records(const std::vector<AnnotationRecord>& records) {
    AnnotationTable labels, reliability;
    std::map<std::string, std::vector<int>> votes;
    std::map<std::string, std::pair<double, std::size_t>> model_sum;
    for (const auto& r : records) {
      if (r.kind == AnnotationKind::SentimentLabel) {
        labels.set(r.sample_id, r.annotator_id, r.value);
        votes[r.sample_id].push_back(r.value);
      } else {
        reliability.set(r.sample_id + "\x1f" + *r.model_id, r.annotator_id, r.value);
        auto& s = model_sum[*r.model_id];
        s.first += r.value;
        ++s.second;
      }
    }
    ordered_json j;
    j["labels"] = ordered_json::array();
    for (const auto& [sample, v] : votes) {
      const auto mv = majority_vote(v);
      ordered_json e;
      e["sample_id"] = sample;
      e["votes"] = mv.votes;
      e["status"] = mv.value ? "resolved" : "unresolved";
      e["majority"] = mv.value ? ordered_json(*mv.value) : ordered_json(nullptr);
      j["labels"].push_back(e);
    }
    j["reliability"] = ordered_json::object();
    for (const auto& [m, s] : model_sum) j["reliability"][m] = s.first / static_cast<double>(s.second);
    auto alpha = [](const AnnotationTable& t) {
      auto a = try_krippendorff_alpha(t);
      return a ? ordered_json(*a) : ordered_json(nullptr);
    };
    j["alpha"] = {{"sentiment_label", alpha(labels)}, {"reliability", alpha(reliability)}};
    j["effective_records"] = records.size();
    return j;
  }

 private:
  using Key = std::tuple<std::string, std::string, int, std::string>;

  static Key key_of(const AnnotationRecord& r) {
    return {r.sample_id, r.annotator_id, static_cast<int>(r.kind), r.model_id.value_or("")};
  }

  void apply(const AnnotationRecord& r) { effective_[key_of(r)] = r; }

  std::vector<AnnotationRecord> records_unlocked() const {
    std::vector<AnnotationRecord> out;
    for (const auto& [k, r] : effective_) out.push_back(r);
    return out;
  }

  void replay() {
    std::ifstream probe(log_path_);
    if (!probe) return;
    probe.close();
    JsonlReader reader(log_path_);
    std::string line;
    while (reader.next(line)) {
      try {
        auto r = annotation_from_json(json::parse(line));
        if (!by_id_.count(r.sample_id)) throw NotFoundError("unknown sample");
        apply(r);
      } catch (const std::exception&) {
        ++replay_skipped_;
      }
    }
  }

  bool has_model(std::size_t sample, const std::string& model) const {
    for (const auto& c : samples_[sample].candidates)
      if (c.model_id == model) return true;
    return false;
  }

  std::string model_for_candidate(std::size_t sample, const std::string& candidate_id) const {
    const auto& order = order_.at(samples_[sample].sample_id);
    for (std::size_t k = 0; k < order.size(); ++k)
      if (candidate_id == "c" + std::to_string(k + 1)) return samples_[sample].candidates[order[k]].model_id;
    throw NotFoundError("unknown candidate '" + candidate_id + "'");
  }

  const AnnotationRecord* find(const std::string& sample, const std::string& annotator, AnnotationKind kind,
                               const std::string& model) const {
    auto it = effective_.find(Key{sample, annotator, static_cast<int>(kind), model});
    return it == effective_.end() ? nullptr : &it->second;
  }

  bool complete(std::size_t i, const std::string& annotator) const {
    const auto& s = samples_[i];
    if (!find(s.sample_id, annotator, AnnotationKind::SentimentLabel, "")) return false;
    for (const auto& c : s.candidates)
      if (!find(s.sample_id, annotator, AnnotationKind::Reliability, c.model_id)) return false;
    return true;
  }

  ordered_json view(std::size_t i, const std::string& annotator) const {
    const auto& s = samples_[i];
    ordered_json j;
    j["sample_id"] = s.sample_id;
    j["sentence"] = s.sentence;
    if (s.rlf_index) j["rlf_index"] = *s.rlf_index;
    j["candidates"] = ordered_json::array();
    const auto& order = order_.at(s.sample_id);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& c = s.candidates[order[k]];
      ordered_json cj;
      cj["candidate_id"] = "c" + std::to_string(k + 1);
      cj["tokens"] = c.tokens;
      cj["normalized_scores"] = c.normalized_scores;
      if (auto* r = find(s.sample_id, annotator, AnnotationKind::Reliability, c.model_id)) cj["reliability"] = r->value;
      j["candidates"].push_back(cj);
    }
    if (auto* r = find(s.sample_id, annotator, AnnotationKind::SentimentLabel, "")) j["sentiment_label"] = r->value;
    return j;
  }

  std::vector<AnnotationSample> samples_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> order_;
  std::map<Key, AnnotationRecord> effective_;
  std::string log_path_;
  std::ofstream log_;
  std::size_t replay_skipped_ = 0;
  mutable std::mutex mu_;
};

}  // namespace rlfkit
