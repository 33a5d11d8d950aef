#pragma once

#include <stdexcept>
#include <string>

namespace colbreak {

// Base for runtime failures of the numerics (as opposed to bad arguments).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A time step produced values below the negativity threshold.
struct InstabilityError : NumericalError {
  InstabilityError(const std::string& what, std::size_t cell, double value)
      : NumericalError(what), cell(cell), value(value) {}
  std::size_t cell = 0;
  double value = 0.0;
};

// Step control drove dt below the underflow floor.
struct StiffnessError : NumericalError {
  using NumericalError::NumericalError;
};

// A parameter combination violates a stated admissibility constraint.
struct ConstraintError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace colbreak
