#pragma once

#include <stdexcept>
#include <string>

namespace oodgmix {

// Malformed input file (missing file, bad token).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a structural rule (edge crossing graphs).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unsatisfiable or inconsistent user configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Argument outside the support of a distribution.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Failure during training (empty class, divergence, non-finite values).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oodgmix
