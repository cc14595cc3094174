#pragma once

#include <stdexcept>
#include <string>

namespace chaoskit {

/// Bad caller input: non-normalized measures, invalid parameters, malformed config.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure at runtime.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Explicit time step exceeded the stability bound.
struct CflViolation : NumericalError {
  double admissible_dt;
  CflViolation(const std::string& msg, double admissible)
      : NumericalError(msg), admissible_dt(admissible) {}
};

/// Trajectory left the representable range (integration blow-up).
struct BlowUpError : NumericalError {
  int particle;
  BlowUpError(const std::string& msg, int offending_particle)
      : NumericalError(msg), particle(offending_particle) {}
};

/// Parameters outside the regime a proof-backed formula covers.
struct RegimeError : InvalidInput {
  using InvalidInput::InvalidInput;
};

/// Problem size exceeds a configured cap.
struct SizeCapError : InvalidInput {
  using InvalidInput::InvalidInput;
};

/// Matrix failed a positive-definiteness factorization.
struct NotPositiveDefinite : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace chaoskit
