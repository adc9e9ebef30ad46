#pragma once

#include <stdexcept>
#include <string>

namespace gmmot {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments violate a documented precondition (shapes, simplex membership, sample counts).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Marginals that cannot be coupled: sums disagree or entries are negative.
class InfeasibleMarginals : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// The object is in the wrong state for the call, e.g. classifying with an unlabeled mixture.
class InvalidState : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value. `stage` names where it happened.
class NumericalFailure : public Error {
 public:
  NumericalFailure(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Malformed text input. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

template <class E = InvalidInput>
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw E(msg);
}

}  // namespace detail
}  // namespace gmmot
