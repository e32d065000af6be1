#pragma once

#include <stdexcept>
#include <string>

namespace swlab {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Malformed spec string or config entry; carries the offending field name.
class ParseError : public ConfigurationError {
 public:
  ParseError(std::string field, const std::string& what)
      : ConfigurationError(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DomainCoverageError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class PotentialValidityError : public Error {
 public:
  using Error::Error;
};

class DegeneratePotentialError : public Error {
 public:
  using Error::Error;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

class FitFailure : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ToleranceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class WeightValidityError : public Error {
 public:
  using Error::Error;
};

}  // namespace swlab
