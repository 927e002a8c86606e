#pragma once

#include <cmath>

#include "dualem/errors.hpp"

namespace dualem {

// First-order Bessel function of the first kind. Odd in x.
// Absolute error <= 1e-12 for |x| <= 1e3.
inline double bessel_j1(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_j1: non-finite argument");
  if (x < 0.0) return -std::cyl_bessel_j(1.0, -x);
  return std::cyl_bessel_j(1.0, x);
}

}  // namespace dualem
