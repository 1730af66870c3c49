// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pimdse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value does not fit the requested bit width.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Vectors do not fit the geometry of the target crossbar.
class CapacityExceeded : public Error {
 public:
  using Error::Error;
};

class UnplacedId : public Error {
 public:
  using Error::Error;
};

/// Input document or file could not be parsed. `line()` is 1-based, 0 when
/// the failure is not tied to a line.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A structurally well-formed input violates a semantic invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pimdse
