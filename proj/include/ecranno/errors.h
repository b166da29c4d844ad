#ifndef ECRANNO_ERRORS_H_
#define ECRANNO_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecranno {

// Malformed or invariant-violating input (corpus lines, score files,
// configuration values). The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string &message, size_t line = 0)
      : std::runtime_error(line == 0 ? message
                                     : "line " + std::to_string(line) + ": " +
                                           message),
        line_(line) {}

  // 1-based input line, or 0 when the error is not tied to a line.
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// A pairwise score that cannot be produced, e.g. a pair missing from a
// precomputed matrix with no default.
class ScoreLookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Illegal cluster-store mutation or query.
class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ecranno

#endif  // ECRANNO_ERRORS_H_
