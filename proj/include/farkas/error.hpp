#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace farkas {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed model, certificate, graph or LP text. Carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A model violates a structural invariant or a precondition of an operation.
class ModelError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The threshold property does not hold, so no certificate or witness exists.
class PropertyFalse : public Error {
 public:
  using Error::Error;
};

/// Pr equals lambda but the relation is strict.
class StrictInfeasible : public PropertyFalse {
 public:
  using PropertyFalse::PropertyFalse;
};

/// An LP or polytope has no feasible point.
class Infeasible : public Error {
 public:
  using Error::Error;
};

class PointNotInPolytope : public Error {
 public:
  using Error::Error;
};

/// Closed-form certificate repair lost the lambda side of the condition.
class RepairFailed : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Violated internal assumption (e.g. a singular system on a validated model).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace farkas
