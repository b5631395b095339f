#pragma once

#include <cstddef>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlfkit/error.hpp"
#include "rlfkit/text.hpp"

namespace rlfkit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct LineError {
  std::size_t line = 0;
  std::string message;
};

/// Outcome of reading a line-delimited record file.
struct LoadSummary {
  std::size_t read = 0;
  std::size_t skipped = 0;
  std::vector<LineError> errors;
};

/// Reads one JSON object per line. Blank lines are ignored.
class JsonlReader {
 public:
  explicit JsonlReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw IoError("cannot open '" + path + "' for reading");
  }

  /// Advances to the next non-blank line. Returns false at end of file.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!text::trim(line).empty()) return true;
    }
    if (in_.bad()) throw IoError("read failure on '" + path_ + "'");
    return false;
  }

  std::size_t line_number() const noexcept { return line_no_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

/// Parses every line of `path` with `parse`, skipping (and recording) lines that throw.
template <class T, class Parse>
std::vector<T> read_records(const std::string& path, Parse&& parse, LoadSummary* summary = nullptr) {
  JsonlReader reader(path);
  std::vector<T> out;
  LoadSummary local;
  std::string line;
  while (reader.next(line)) {
    try {
      out.push_back(parse(json::parse(line)));
      ++local.read;
    } catch (const std::exception& e) {
      ++local.skipped;
      local.errors.push_back({reader.line_number(), e.what()});
    }
  }
  if (summary) *summary = std::move(local);
  return out;
}

/// Like read_records but any malformed line is fatal.
template <class T, class Parse>
std::vector<T> read_records_strict(const std::string& path, Parse&& parse) {
  LoadSummary summary;
  auto out = read_records<T>(path, std::forward<Parse>(parse), &summary);
  if (summary.skipped) {
    const auto& e = summary.errors.front();
    throw CorpusFormatError(path + ":" + std::to_string(e.line) + ": " + e.message);
  }
  return out;
}

template <class J>
void write_line(std::ostream& os, const J& j) {
  os << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
  }

  template <class J>
  void write(const J& j) {
    write_line(out_, j);
    if (!out_) throw IoError("write failure on '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

/// Field accessors that raise ParseError with the field name on type mismatch.
namespace field {

inline const json& required(const json& j, const char* name) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) throw ParseError(std::string("missing field '") + name + "'");
  return *it;
}

inline std::string string(const json& j, const char* name) {
  const auto& v = required(j, name);
  if (!v.is_string()) throw ParseError(std::string("field '") + name + "' is not a string");
  return v.get<std::string>();
}

inline long long integer(const json& j, const char* name) {
  const auto& v = required(j, name);
  if (!v.is_number_integer()) throw ParseError(std::string("field '") + name + "' is not an integer");
  return v.get<long long>();
}

inline bool has(const json& j, const char* name) {
  auto it = j.find(name);
  return it != j.end() && !it->is_null();
}

}  // namespace field

}  // namespace rlfkit
