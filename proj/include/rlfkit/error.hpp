#pragma once

#include <stdexcept>
#include <string>

namespace rlfkit {

/// Base of every error the toolkit throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A record file is unusable as a whole (e.g. too many malformed lines).
class CorpusFormatError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A statistic has no defined value for the given input (e.g. zero variance).
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

}  // namespace rlfkit
