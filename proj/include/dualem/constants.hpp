#pragma once

#include <numbers>

namespace dualem {

// Fixed physical constants, single definition point for every module.
inline constexpr double MU_0 = 4.0 * std::numbers::pi * 1e-7;  // Vacuum permeability [H/m]
inline constexpr double EPS_0 = 8.854e-12;                     // Vacuum permittivity [F/m]

inline constexpr double COPPER_SIGMA = 5.8e7;        // Annealed copper conductivity [S/m]
inline constexpr double COPPER_RESISTIVITY = 1.68e-8;  // [Ohm m]

}  // namespace dualem
