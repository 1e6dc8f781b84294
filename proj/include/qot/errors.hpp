#pragma once

#include <stdexcept>
#include <string>

namespace qot {

/// A documented precondition or operator contract does not hold.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Input is well-formed but numerically degenerate (zero norm, empty family, ...).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Problem exceeds a configured enumeration cap.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Scenario or payload document fails schema checks.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qot
