#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lrckatz {

using Index = std::int64_t;

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed edge-list input. `line()` is 1-based; 0 means "whole input".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Damping factor outside (0, 1/||G||_2).
class AlphaError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Graph must be connected for the requested operation.
class DisconnectedError : public Error {
 public:
  using Error::Error;
};

/// Power iteration ran out of iterations; carries the last estimate.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, double last_estimate)
      : Error(what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

/// Cholesky met a nonpositive pivot. `block()` is -1 for a non-block factorization.
class NonPositivePivotError : public Error {
 public:
  NonPositivePivotError(const std::string& what, Index block, double pivot)
      : Error(what), block_(block), pivot_(pivot) {}
  Index block() const noexcept { return block_; }
  double pivot() const noexcept { return pivot_; }

 private:
  Index block_;
  double pivot_;
};

/// A retained Ritz value reached 1; the low-rank preconditioner is undefined.
class SpectrumError : public Error {
 public:
  using Error::Error;
};

class UnknownNodeError : public Error {
 public:
  UnknownNodeError(const std::string& what, std::int64_t node) : Error(what), node_(node) {}
  std::int64_t node() const noexcept { return node_; }

 private:
  std::int64_t node_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Index container could not be decoded.
class IndexFormatError : public Error {
 public:
  enum class Kind { magic, version, checksum, malformed };
  IndexFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// An argument outside the operation's domain (e.g. a cutoff outside the
/// time range, T >= n).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class EmptyPositivesError : public Error {
 public:
  using Error::Error;
};

/// Oracle refused an instance above its size cap.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrckatz
