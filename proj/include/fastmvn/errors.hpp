// Exception types shared by all fastmvn modules.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fastmvn {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// Thrown when a Cholesky pivot is non-positive. `pivot()` is the index of
/// the first failing diagonal entry.
class NotPositiveDefinite : public Error {
public:
  explicit NotPositiveDefinite(std::ptrdiff_t pivot)
      : Error("matrix is not positive definite (pivot " +
              std::to_string(pivot) + ")"),
        pivot_(pivot) {}
  std::ptrdiff_t pivot() const noexcept { return pivot_; }

private:
  std::ptrdiff_t pivot_;
};

class RankDeficient : public Error {
public:
  using Error::Error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class InvalidSimplex : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const noexcept { return line_; }

private:
  long line_;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ValidationFailed : public Error {
public:
  using Error::Error;
};

} // namespace fastmvn
