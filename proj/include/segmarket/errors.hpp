#pragma once

#include <stdexcept>
#include <string>

namespace segmarket {

// Base of every error thrown by the library. CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Both signal densities vanish at the evaluation point.
class DegenerateSignal : public Error {
public:
  using Error::Error;
};

// Parameters violate a model restriction (ordering of wages, Q* range, ...).
class ParamDomain : public Error {
public:
  using Error::Error;
};

// A caller-side precondition does not hold (tol <= 0, r == 0 in a phi scan, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

// Bracketing of a pool-quality bound failed.
class NoBound : public Error {
public:
  NoBound(std::string which, double f_lo, double f_hi)
      : Error("cannot bracket " + which + ": residual signs at endpoints are " +
              std::to_string(f_lo) + " and " + std::to_string(f_hi)),
        which_(std::move(which)), f_lo_(f_lo), f_hi_(f_hi) {}

  const std::string& which() const noexcept { return which_; }
  double residual_low() const noexcept { return f_lo_; }
  double residual_high() const noexcept { return f_hi_; }

private:
  std::string which_;
  double f_lo_;
  double f_hi_;
};

// Argument outside the region where a closed form is a probability.
class OutOfRegion : public Error {
public:
  using Error::Error;
};

// The solver produced a result the theory rules out (e.g. an empty equilibrium set).
class InternalInconsistency : public Error {
public:
  using Error::Error;
};

class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, double last_step, double oscillation)
      : Error(what), last_step_(last_step), oscillation_(oscillation) {}

  double last_step() const noexcept { return last_step_; }
  // Ratio of the last step to the one before it; close to -1 means a 2-cycle.
  double oscillation() const noexcept { return oscillation_; }

private:
  double last_step_;
  double oscillation_;
};

class NoSymmetricMixed : public Error {
public:
  using Error::Error;
};

}  // namespace segmarket
