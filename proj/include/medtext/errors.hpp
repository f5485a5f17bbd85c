#pragma once

#include <stdexcept>
#include <string>

namespace medtext {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input (bad line, bad JSON, bad model file). Messages name the
/// offending line where one exists.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but inconsistent with itself (surface text does not
/// match offsets, corpus hashes disagree between runs).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// A domain invariant is violated (overlapping spans, offsets out of range,
/// empty corpus where one is required).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace medtext
