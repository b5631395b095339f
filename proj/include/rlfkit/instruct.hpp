#pragma once

// ExpInstruct: the WIS-explanation and sentiment prompts sharing one
// instruction layout, the line-oriented "token: score" WIS format, and the
// assembly of instruction-tuning samples.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rlfkit/bundled_templates.hpp"
#include "rlfkit/corpus.hpp"
#include "rlfkit/error.hpp"
#include "rlfkit/explain.hpp"
#include "rlfkit/jsonl.hpp"
#include "rlfkit/pipeline.hpp"
#include "rlfkit/text.hpp"

namespace rlfkit {

/// Named sections of a template resource file.
struct InstructionTemplates {
  std::string version;
  std::string wis_instruction;
  std::string sa_instruction;
  std::string layout;

  static InstructionTemplates parse(std::string_view source) {
    InstructionTemplates t;
    std::map<std::string, std::string> sections;
    std::string* current = nullptr;
    std::istringstream in{std::string(source)};
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.rfind("@version", 0) == 0) {
        t.version = std::string(text::trim(std::string_view(line).substr(8)));
        current = nullptr;
      } else if (line.rfind("@section", 0) == 0) {
        const auto name = std::string(text::trim(std::string_view(line).substr(8)));
        if (sections.count(name)) throw ParseError("duplicate template section '" + name + "'");
        current = &sections[name];
      } else if (line.rfind("@end", 0) == 0) {
        current = nullptr;
      } else if (current) {
        if (!current->empty()) current->push_back('\n');
        current->append(line);
      } else if (!text::trim(line).empty() && line.front() != '#') {
        throw ParseError("template text outside a section: '" + line + "'");
      }
    }
    auto take = [&](const char* name) {
      auto it = sections.find(name);
      if (it == sections.end()) throw ParseError(std::string("template resource lacks section '") + name + "'");
      // Sections keep interior blank lines but not trailing ones.
      std::string s = it->second;
      while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
      return s;
    };
    t.wis_instruction = take("wis_instruction");
    t.sa_instruction = take("sa_instruction");
    t.layout = take("layout");
    if (t.version.empty()) throw ParseError("template resource lacks @version");
    for (const char* ph : {"{task_instruction}", "{input}", "{output}"})
      if (t.layout.find(ph) == std::string::npos) throw ParseError(std::string("layout lacks placeholder ") + ph);
    return t;
  }

  static InstructionTemplates load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open template resource '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  /// The template compiled into the library.
  static const InstructionTemplates& bundled() {
    static const InstructionTemplates t = parse(resources::kExpInstructTemplate);
    return t;
  }
};

struct PromptTemplate {
  std::string task_instruction;
  std::string input_text;
  std::optional<std::string> output_text;

  /// Substitutes the three placeholders of the layout in one pass; an absent
  /// output renders as empty, leaving the prompt open for completion.
  std::string render(const InstructionTemplates& templates = InstructionTemplates::bundled()) const {
    const std::string_view layout = templates.layout;
    std::string out;
    for (std::size_t i = 0; i < layout.size();) {
      if (layout[i] == '{') {
        const auto close = layout.find('}', i);
        if (close != std::string_view::npos) {
          const auto name = layout.substr(i + 1, close - i - 1);
          const std::string* value = nullptr;
          static const std::string empty;
          if (name == "task_instruction") value = &task_instruction;
          else if (name == "input") value = &input_text;
          else if (name == "output") value = output_text ? &*output_text : &empty;
          if (value) {
            out += *value;
            i = close + 1;
            continue;
          }
        }
      }
      out.push_back(layout[i++]);
    }
    return out;
  }
};

namespace detail {

inline void require_sentence(std::string_view sentence) {
  if (text::trim(sentence).empty()) throw DomainError("prompt sentence must be non-empty");
}

}  // namespace detail

inline PromptTemplate build_wis_prompt(std::string_view sentence,
                                       const InstructionTemplates& templates = InstructionTemplates::bundled()) {
  detail::require_sentence(sentence);
  return {templates.wis_instruction, std::string(sentence), std::nullopt};
}

inline PromptTemplate build_sa_prompt(std::string_view sentence,
                                      const InstructionTemplates& templates = InstructionTemplates::bundled()) {
  detail::require_sentence(sentence);
  return {templates.sa_instruction, std::string(sentence), std::nullopt};
}

// ---------------------------------------------------------------------------
// Structured WIS text

inline std::string format_score(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

/// One "token: score" line per token, no trailing newline.
inline std::string render_wis_target(const std::vector<std::string>& tokens, const std::vector<double>& scores) {
  if (tokens.size() != scores.size()) throw DomainError("tokens and scores differ in length");
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back('\n');
    out += tokens[i];
    out += ": ";
    out += format_score(scores[i]);
  }
  return out;
}

inline constexpr double kMinWisScore = 1.0;
inline constexpr double kMaxWisScore = 5.0;

struct WisParse {
  std::vector<double> raw_scores;  // aligned to the expected tokens
  std::size_t aligned = 0;
  std::size_t repaired = 0;       // expected tokens absent from the response, filled with the minimum score
  std::size_t clamped = 0;        // scores pulled back into [1, 5]
  std::size_t ignored_lines = 0;  // response lines without a parsable "token: score"
};

namespace detail {

inline std::string match_key(std::string_view token) {
  auto t = text::trim(token);
  auto strip_pair = [&](char open, char close) {
    if (t.size() >= 2 && t.front() == open && t.back() == close) t = t.substr(1, t.size() - 2);
  };
  strip_pair('"', '"');
  strip_pair('`', '`');
  strip_pair('\'', '\'');
  return text::to_lower(t);
}

inline std::optional<double> parse_number(std::string_view s) {
  s = text::trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses a "token: score" response against the expected decomposition.
///
/// Response lines are matched to expected tokens case-insensitively by longest
/// common subsequence, which tolerates dropped, duplicated or extra lines.
/// Unmatched expected tokens get score 1. Throws ParseError when fewer than
/// half of the expected tokens align.
inline WisParse parse_wis_response(std::string_view response, const std::vector<std::string>& expected_tokens) {
  struct Pair {
    std::string key;
    double score;
  };
  std::vector<Pair> pairs;
  WisParse out;
  std::istringstream in{std::string(response)};
  std::string line;
  while (std::getline(in, line)) {
    auto l = text::trim(line);
    if (l.empty() || l.rfind("```", 0) == 0) continue;
    if (l.size() > 2 && (l[0] == '-' || l[0] == '*') && l[1] == ' ') l = text::trim(l.substr(2));
    const auto colon = l.rfind(':');
    std::optional<double> score;
    if (colon != std::string_view::npos && colon > 0) score = detail::parse_number(l.substr(colon + 1));
    if (!score) {
      ++out.ignored_lines;
      continue;
    }
    pairs.push_back({detail::match_key(l.substr(0, colon)), *score});
  }

  const std::size_t n = expected_tokens.size(), m = pairs.size();
  std::vector<std::string> want(n);
  for (std::size_t i = 0; i < n; ++i) want[i] = detail::match_key(expected_tokens[i]);
  std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      dp[i][j] = want[i - 1] == pairs[j - 1].key ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);

  std::vector<std::optional<double>> matched(n);
  for (std::size_t i = n, j = m; i > 0 && j > 0;) {
    if (want[i - 1] == pairs[j - 1].key && dp[i][j] == dp[i - 1][j - 1] + 1) {
      matched[i - 1] = pairs[j - 1].score;
      --i;
      --j;
    } else if (dp[i - 1][j] >= dp[i][j - 1]) {
      --i;
    } else {
      --j;
    }
  }

  out.raw_scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!matched[i]) {
      out.raw_scores[i] = kMinWisScore;
      ++out.repaired;
      continue;
    }
    ++out.aligned;
    double v = *matched[i];
    if (v < kMinWisScore || v > kMaxWisScore) {
      v = std::clamp(v, kMinWisScore, kMaxWisScore);
      ++out.clamped;
    }
    out.raw_scores[i] = v;
  }
  if (n == 0 || 2 * out.aligned < n)
    throw ParseError("only " + std::to_string(out.aligned) + " of " + std::to_string(n) +
                     " tokens aligned in the WIS response");
  return out;
}

// ---------------------------------------------------------------------------
// Prompt-based WIS: requests out, responses in

struct WisRequest {
  std::string sentence_id;
  std::vector<std::string> tokens;
  std::string prompt;
};

inline std::vector<WisRequest> build_wis_requests(const std::vector<RlfSentenceRecord>& records,
                                                  const InstructionTemplates& templates = InstructionTemplates::bundled()) {
  std::vector<WisRequest> out;
  for (const auto& r : records)
    out.push_back({r.id(), text::split_words(r.sentence.text), build_wis_prompt(r.sentence.text, templates).render(templates)});
  return out;
}

struct WisResponse {
  std::string sentence_id;
  std::string model_id;
  std::string response;
};

struct ResponseReport {
  std::size_t parsed = 0;
  std::size_t failed = 0;
  std::size_t unknown_sentence = 0;
  std::size_t repaired_tokens = 0;
  std::size_t clamped_scores = 0;
  std::vector<RejectedRecord> failures;
};

/// Converts completion responses into WIS interchange records (one per RLF span).
inline std::vector<WisRecord> wis_from_responses(const std::vector<WisResponse>& responses,
                                                 const std::vector<RlfSentenceRecord>& records,
                                                 ResponseReport* report = nullptr) {
  std::unordered_map<std::string, const RlfSentenceRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id(), &r);
  ResponseReport rep;
  std::vector<WisRecord> out;
  for (const auto& resp : responses) {
    auto it = by_id.find(resp.sentence_id);
    if (it == by_id.end()) {
      ++rep.unknown_sentence;
      rep.failures.push_back({resp.sentence_id, "unknown sentence_id"});
      continue;
    }
    const auto tokens = text::split_words(it->second->sentence.text);
    try {
      auto parsed = parse_wis_response(resp.response, tokens);
      rep.repaired_tokens += parsed.repaired;
      rep.clamped_scores += parsed.clamped;
      for (auto& w : wis_records_for(*it->second, resp.model_id, tokens, parsed.raw_scores)) out.push_back(std::move(w));
      ++rep.parsed;
    } catch (const Error& e) {
      ++rep.failed;
      rep.failures.push_back({resp.sentence_id, e.what()});
    }
  }
  if (report) *report = std::move(rep);
  return out;
}

inline WisResponse response_from_json(const json& j) {
  return {field::string(j, "sentence_id"), field::string(j, "model_id"), field::string(j, "response")};
}

inline ordered_json to_json(const WisRequest& r) {
  ordered_json j;
  j["sentence_id"] = r.sentence_id;
  j["tokens"] = r.tokens;
  j["prompt"] = r.prompt;
  return j;
}

// ---------------------------------------------------------------------------
// Instruction dataset

enum class InstructTask { WIS, SA };

inline std::string_view task_name(InstructTask t) noexcept { return t == InstructTask::WIS ? "WIS" : "SA"; }

struct InstructionSample {
  InstructTask task = InstructTask::SA;
  std::string sentence_id;
  std::string rendered;  // prompt with an empty output section
  std::string target;
};

inline ordered_json to_json(const InstructionSample& s) {
  ordered_json j;
  j["task"] = task_name(s.task);
  j["sentence_id"] = s.sentence_id;
  j["rendered"] = s.rendered;
  j["target"] = s.target;
  return j;
}

inline InstructionSample sample_from_json(const json& j) {
  InstructionSample s;
  const auto task = field::string(j, "task");
  if (task == "WIS") s.task = InstructTask::WIS;
  else if (task == "SA") s.task = InstructTask::SA;
  else throw ParseError("unknown task '" + task + "'");
  s.sentence_id = field::string(j, "sentence_id");
  s.rendered = field::string(j, "rendered");
  s.target = field::string(j, "target");
  return s;
}

struct DatasetReport {
  std::size_t sa_samples = 0;
  std::size_t wis_samples = 0;
  std::size_t missing_wis = 0;
};

/// Per record: one SA sample (target = document label), then one WIS sample
/// when a WIS record exists for the sentence (first one in input order wins).
inline std::vector<InstructionSample> build_expinstruct_dataset(
    const std::vector<RlfSentenceRecord>& records, const std::vector<WisRecord>& wis, DatasetReport* report = nullptr,
    const InstructionTemplates& templates = InstructionTemplates::bundled()) {
  std::unordered_map<std::string, const WisRecord*> wis_by_id;
  for (const auto& w : wis) wis_by_id.emplace(w.sentence_id, &w);
  DatasetReport rep;
  std::vector<InstructionSample> out;
  for (const auto& r : records) {
    const auto sa = build_sa_prompt(r.sentence.text, templates);
    out.push_back({InstructTask::SA, r.id(), sa.render(templates), r.label.is_positive() ? "1" : "0"});
    ++rep.sa_samples;
    auto it = wis_by_id.find(r.id());
    if (it == wis_by_id.end()) {
      ++rep.missing_wis;
      continue;
    }
    const auto prompt = build_wis_prompt(r.sentence.text, templates);
    out.push_back({InstructTask::WIS, r.id(), prompt.render(templates),
                   render_wis_target(it->second->tokens, it->second->raw_scores)});
    ++rep.wis_samples;
  }
  if (report) *report = rep;
  return out;
}

}  // namespace rlfkit
