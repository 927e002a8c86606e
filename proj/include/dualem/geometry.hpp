#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "dualem/errors.hpp"

namespace dualem {

// Report-style validation result: empty means valid.
struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }

  std::string joined() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v;
    }
    return out;
  }
};

// Planar spiral coil pair. Radii smear the turns uniformly over the annulus,
// heights span the copper layer, w is the center-to-center spacing.
// Heights are relative to the sensor face; lift-off shifts them at solve time.
struct CoilPairGeometry {
  double r_e1 = 2.5e-3;  // excitation inner radius [m]
  double r_e2 = 18e-3;   // excitation outer radius [m]
  double r_p1 = 2.5e-3;  // pickup inner radius [m]
  double r_p2 = 18e-3;   // pickup outer radius [m]
  double l_e1 = 0.0;     // excitation bottom height [m]
  double l_e2 = 35e-6;   // excitation top height [m]
  double l_p1 = 0.0;     // pickup bottom height [m]
  double l_p2 = 35e-6;   // pickup top height [m]
  int n1 = 8;            // excitation turn count
  int n2 = 8;            // pickup turn count
  double w = 41e-3;      // center-to-center spacing [m]
};

// Default sensor: 41 mm center spacing, 2.5..18 mm annulus, 8 turns per coil
// (two stacked 4-turn layers of a double-sided board), 35 um copper.
// Turn counts and radii are estimates; flagged as such in emitted metadata.
inline CoilPairGeometry sensor_default() { return CoilPairGeometry{}; }

inline ValidationReport validate_geometry(const CoilPairGeometry& g) {
  ValidationReport rep;
  if (!(g.r_e1 >= 0.0)) rep.violations.push_back("excitation coil: negative inner radius");
  if (!(g.r_p1 >= 0.0)) rep.violations.push_back("pickup coil: negative inner radius");
  if (!(g.r_e1 < g.r_e2)) rep.violations.push_back("excitation coil: degenerate radial extent");
  if (!(g.r_p1 < g.r_p2)) rep.violations.push_back("pickup coil: degenerate radial extent");
  if (!(g.l_e1 < g.l_e2)) rep.violations.push_back("excitation coil: degenerate height extent");
  if (!(g.l_p1 < g.l_p2)) rep.violations.push_back("pickup coil: degenerate height extent");
  if (g.n1 < 1) rep.violations.push_back("turn count n1 must be >= 1");
  if (g.n2 < 1) rep.violations.push_back("turn count n2 must be >= 1");
  if (!(g.w >= 0.0)) rep.violations.push_back("negative coil spacing w");
  return rep;
}

// Homogeneous plate target below the sensor.
struct PlateSample {
  double sigma = 0.0;      // conductivity [S/m]
  double mu_r = 1.0;       // relative permeability
  double c = 1e-3;         // plate thickness [m]
  double liftoff = 1.6e-3; // sensor face to plate top surface [m]
};

inline ValidationReport validate_plate(const PlateSample& p) {
  ValidationReport rep;
  if (!(p.sigma >= 0.0)) rep.violations.push_back("plate: negative conductivity");
  if (!(p.mu_r > 0.0)) rep.violations.push_back("plate: non-positive relative permeability");
  if (!(p.c > 0.0)) rep.violations.push_back("plate: non-positive thickness");
  if (!(p.liftoff >= 0.0)) rep.violations.push_back("plate: negative lift-off");
  return rep;
}

// AC drive. Exactly one of current/source_voltage drives a given solve.
struct Excitation {
  double frequency = 1e5;  // [Hz]
  std::optional<std::complex<double>> current;         // [A]
  std::optional<std::complex<double>> source_voltage;  // [V]
};

inline ValidationReport validate_excitation(const Excitation& e) {
  ValidationReport rep;
  if (!(e.frequency > 0.0)) rep.violations.push_back("excitation: frequency must be > 0 for AC analysis");
  const int drives = (e.current.has_value() ? 1 : 0) + (e.source_voltage.has_value() ? 1 : 0);
  if (drives != 1) rep.violations.push_back("excitation: exactly one of current/source_voltage must be set");
  return rep;
}

inline void require_valid(const ValidationReport& rep, const char* what) {
  if (!rep.ok()) throw ValidationError(std::string(what) + ": " + rep.joined());
}

}  // namespace dualem
