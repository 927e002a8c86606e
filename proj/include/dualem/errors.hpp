#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace dualem {

// Base class for every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scalar argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Geometric configuration the solver cannot handle (overlaps, degeneracies).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Invalid model or configuration detected before solving.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Linear or nonlinear solve failed (singular system, bad residual).
class SolverError : public Error {
 public:
  using Error::Error;
};

// Circuit graph defect (nodes unreachable from ground).
class TopologyError : public Error {
 public:
  using Error::Error;
};

// File or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Quadrature refinement hit its cap without meeting the tolerance.
// Carries the last two estimates so callers can judge how far apart they are.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, std::complex<double> previous,
                   std::complex<double> last)
      : Error(msg), previous_(previous), last_(last) {}

  std::complex<double> previous_estimate() const noexcept { return previous_; }
  std::complex<double> last_estimate() const noexcept { return last_; }

 private:
  std::complex<double> previous_;
  std::complex<double> last_;
};

}  // namespace dualem
