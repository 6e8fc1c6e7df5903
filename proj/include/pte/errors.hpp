#pragma once

#include <stdexcept>
#include <string>

namespace pte {

// Base class for all library errors. kind() is a stable short tag used for
// bootstrap failure tallies and CLI exit-code mapping.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual const char* kind() const noexcept { return "error"; }
};

// Bad inputs: malformed files, invalid configuration, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
  const char* kind() const noexcept override { return "parse"; }
};

// Numerical failures during estimation.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical"; }
};

class SingularDesignError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "singular-design"; }
};

class UndefinedPteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "undefined-pte"; }
};

class ZeroSpreadError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "zero-spread"; }
};

class NearZeroProbabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "near-zero-probability"; }
};

// Bootstrap produced too few successful replicates to summarize.
class InferenceUnreliableError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "inference-unreliable"; }
};

}  // namespace pte
