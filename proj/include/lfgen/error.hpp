#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lfgen {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input violates a precondition or a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A precomputed embedding was requested for text that the file lacks.
class LookupError : public Error {
 public:
  explicit LookupError(std::string text)
      : Error("no embedding for text: \"" + text + "\""), text_(std::move(text)) {}

  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

}  // namespace lfgen
