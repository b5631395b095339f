#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rlfkit::text {

constexpr bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr bool is_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

constexpr bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

constexpr char to_lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = to_lower(c);
  return out;
}

constexpr bool is_utf8_continuation(char c) noexcept {
  return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

/// Number of code points in a UTF-8 string.
inline std::size_t char_length(std::string_view s) noexcept {
  std::size_t n = 0;
  for (char c : s) n += is_utf8_continuation(c) ? 0 : 1;
  return n;
}

inline std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

/// A whitespace-delimited unit with byte and code-point offsets into its source.
struct Token {
  std::string_view text;
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
  std::size_t char_begin = 0;
  std::size_t char_end = 0;
};

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t chars = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      ++chars;
      continue;
    }
    Token t;
    t.byte_begin = i;
    t.char_begin = chars;
    while (i < s.size() && !is_space(s[i])) {
      if (!is_utf8_continuation(s[i])) ++chars;
      ++i;
    }
    t.byte_end = i;
    t.char_end = chars;
    t.text = s.substr(t.byte_begin, t.byte_end - t.byte_begin);
    tokens.push_back(t);
  }
  return tokens;
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(s)) out.emplace_back(t.text);
  return out;
}

inline std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace rlfkit::text
