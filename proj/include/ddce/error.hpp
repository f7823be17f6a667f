#pragma once

#include <stdexcept>
#include <string>

namespace ddce {

// Bad input data or file contents. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad invocation or configuration. The CLI maps these to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsplittableDatasetError : public DataError {
 public:
  using DataError::DataError;
};

class StratificationError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientSourceError : public DataError {
 public:
  InsufficientSourceError(std::size_t required, std::size_t available)
      : DataError("outlier source has " + std::to_string(available) +
                  " rows, " + std::to_string(required) + " required"),
        required_(required) {}
  std::size_t required() const { return required_; }

 private:
  std::size_t required_;
};

class LengthMismatchError : public DataError {
 public:
  using DataError::DataError;
};

// EMB1 parsing failures.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedError : public DataError {
 public:
  using DataError::DataError;
};

class NonFiniteError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace ddce
