#pragma once

#include <stdexcept>
#include <string>

namespace plmodel {

// Malformed input text (JSON, CSV).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input parsed but violates a domain invariant; the message names the element.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Feature layout or column set does not match what a consumer expects.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model training failed (invalid hyperparameters, divergence).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace plmodel
