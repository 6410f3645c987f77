#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sobolmat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the unit cube, bad shape, or otherwise invalid argument.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened for reading or writing.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Elementwise division hit a zero denominator at (row, col).
class DivisionByZero : public Error {
 public:
  DivisionByZero(std::size_t row, std::size_t col)
      : Error("division by zero at (" + std::to_string(row) + ", " +
              std::to_string(col) + "): an output has zero variance"),
        row_(row),
        col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

/// An output column has zero (sample) variance.
class ZeroVariance : public Error {
 public:
  explicit ZeroVariance(std::size_t output)
      : Error("output " + std::to_string(output) + " has zero variance"),
        output_(output) {}
  std::size_t output() const { return output_; }

 private:
  std::size_t output_;
};

class OddRowCount : public Error {
 public:
  explicit OddRowCount(std::size_t rows)
      : Error("two-fold split needs an even row count, got " +
              std::to_string(rows)) {}
};

/// Gram matrix stayed indefinite after the maximum jitter.
class FactorizationFailure : public Error {
 public:
  using Error::Error;
};

class NonFiniteLikelihood : public Error {
 public:
  using Error::Error;
};

class IntegrationFailure : public Error {
 public:
  using Error::Error;
};

/// Taylor-series variance Q went negative beyond the clamp threshold.
class NegativeQ : public Error {
 public:
  NegativeQ(std::size_t l, std::size_t lp, double value)
      : Error("negative Sobol' error variance " + std::to_string(value) +
              " at (" + std::to_string(l) + ", " + std::to_string(lp) + ")"),
        l_(l),
        lp_(lp) {}
  std::size_t l() const { return l_; }
  std::size_t lprime() const { return lp_; }

 private:
  std::size_t l_;
  std::size_t lp_;
};

}  // namespace sobolmat
