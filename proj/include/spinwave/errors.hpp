#pragma once

#include <stdexcept>
#include <string>

namespace spinwave {

// Input outside the documented domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Moment of more than four number operators was requested.
struct UnsupportedOrder : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Network element the selected engine cannot represent.
struct UnsupportedElement : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical breakdown (rank defect, non-convergence).
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spinwave
