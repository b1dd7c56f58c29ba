#pragma once

#include <stdexcept>
#include <string>

namespace qfp {

// A precondition on mathematical input was violated (e.g. p | D where the
// closed form needs p to be coprime to D).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A configured iteration or memory budget would be exceeded.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameters are inconsistent with each other or malformed.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An evaluator was used before a required setup step (e.g. calibration).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace qfp
