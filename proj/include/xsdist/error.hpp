#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xsdist {

/// Parameter outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Adaptive quadrature could not reach the requested tolerance.
/// Carries the best value and the achieved error estimate.
class QuadratureError : public std::runtime_error {
public:
  QuadratureError(const std::string& what, double value, double error_estimate)
      : std::runtime_error(what), value_(value), error_(error_estimate) {}

  double value() const noexcept { return value_; }
  double error_estimate() const noexcept { return error_; }

private:
  double value_;
  double error_;
};

/// Malformed input file. `key()` names the offending key or column,
/// `line()` is 1-based (0 when not applicable).
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::string key = {}, std::size_t line = 0)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string key_;
  std::size_t line_;
};

/// Input data that parses but violates a series invariant.
class ValidationError : public std::runtime_error {
public:
  ValidationError(const std::string& what, std::size_t row = 0)
      : std::runtime_error(what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Singular resolvent in the scattering-matrix solve.
class SingularSolveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace xsdist
