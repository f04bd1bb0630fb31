#ifndef VERSEWRIGHT_ERRORS_HPP_
#define VERSEWRIGHT_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace versewright {

// Bad input data or arguments. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A malformed record in a text format, with the 1-based line it came from.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Filesystem failures. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant was found broken. Maps to CLI exit code 4.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

#define VW_CHECK(cond, msg)                                      \
  do {                                                           \
    if (!(cond)) throw ::versewright::InvariantError(msg);       \
  } while (false)

}  // namespace versewright

#endif  // VERSEWRIGHT_ERRORS_HPP_
