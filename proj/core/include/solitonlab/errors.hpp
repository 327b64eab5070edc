#pragma once

#include <stdexcept>
#include <string>

namespace soliton {

// Iterative solver exhausted its budget without meeting its tolerance.
struct NoConvergenceError : std::runtime_error {
  explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A certified quantity (sign, count, residual) came out wrong; the result
// must not be used.  Maps to exit code 2 at the CLI boundary.
struct CertificationFailure : std::runtime_error {
  explicit CertificationFailure(const std::string& what) : std::runtime_error(what) {}
};

// The computation finished but the discretization error swamps the margin
// being certified.  Maps to exit code 3 at the CLI boundary.
struct InconclusiveResult : std::runtime_error {
  explicit InconclusiveResult(const std::string& what) : std::runtime_error(what) {}
};

// A biorthogonal pairing that must be invertible is numerically singular.
struct DegeneratePairing : std::runtime_error {
  explicit DegeneratePairing(const std::string& what) : std::runtime_error(what) {}
};

// Bisection endpoints do not straddle the sought sign change.
struct BracketFailure : std::runtime_error {
  explicit BracketFailure(const std::string& what) : std::runtime_error(what) {}
};

// The nonlinear amplitude crossed the collapse proxy threshold; the field
// beyond this moment is not resolvable on the grid.
struct BlowUpDetected : std::runtime_error {
  double exit_time = 0.0;
  BlowUpDetected(const std::string& what, double t)
      : std::runtime_error(what), exit_time(t) {}
};

}  // namespace soliton
