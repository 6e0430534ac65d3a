#pragma once

#include <stdexcept>
#include <string>

namespace robust_sp {

/// Caller violated a documented precondition (wrong dimension, missing
/// conditioning value, index out of range).
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameter value maps to an invalid natural parameter (nonpositive rate
/// or scale, non-finite entries).
class invalid_parameter : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Observation outside the support of the model law.
class support_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure could not reach its accuracy target.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular or indefinite matrix where a positive definite one is required.
class linalg_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

}  // namespace robust_sp
