#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simalign {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Line and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
  ParseError(const std::string& path, std::size_t line, std::size_t column, const std::string& what);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

// A value violates a type invariant (non-finite entry, asymmetry, duplicate id, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

class AlignmentError : public Error {
public:
  enum class Kind { Length, Order, Set };

  AlignmentError(Kind kind, std::ptrdiff_t position, const std::string& what)
      : Error(what), kind_(kind), position_(position) {}

  Kind kind() const { return kind_; }
  // First differing index for Kind::Order, -1 otherwise.
  std::ptrdiff_t position() const { return position_; }

private:
  Kind kind_;
  std::ptrdiff_t position_;
};

// Rank-deficient or otherwise unsolvable linear system.
class NumericalError : public Error {
public:
  using Error::Error;
};

// A metric is undefined for the given input (e.g. correlation with a constant vector).
class UndefinedMetricError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, std::size_t iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}

  std::size_t iterations() const { return iterations_; }
  // Final optimality measure (KKT violation or gradient norm) when the cap was hit.
  double residual() const { return residual_; }

private:
  std::size_t iterations_;
  double residual_;
};

} // namespace simalign
