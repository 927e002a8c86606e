#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include "dualem/bessel.hpp"
#include "dualem/constants.hpp"
#include "dualem/errors.hpp"
#include "dualem/geometry.hpp"
#include "dualem/parallel.hpp"
#include "dualem/quadrature.hpp"

namespace dualem {

// Node counts and tolerances for the spatial-frequency integral.
// alpha_max = 0 selects 40 / min(r_e2, r_p2) automatically.
// alpha_points are Gauss-Legendre nodes per oscillation panel of the alpha axis.
struct QuadratureSpec {
  double alpha_max = 0.0;  // [1/m], 0 = automatic
  int alpha_points = 12;
  int theta_points = 64;
  int rp_points = 32;
  double rel_tol = 1e-4;
  int refine_cap = 3;
};

inline ValidationReport validate_quadrature(const QuadratureSpec& q) {
  ValidationReport rep;
  if (q.alpha_max < 0.0) rep.violations.push_back("quadrature: negative alpha_max");
  if (q.alpha_points < 8) rep.violations.push_back("quadrature: alpha_points must be >= 8");
  if (q.theta_points < 8) rep.violations.push_back("quadrature: theta_points must be >= 8");
  if (q.rp_points < 8) rep.violations.push_back("quadrature: rp_points must be >= 8");
  if (!(q.rel_tol > 0.0 && q.rel_tol <= 1e-2))
    rep.violations.push_back("quadrature: rel_tol must be in (0, 1e-2]");
  if (q.refine_cap < 1) rep.violations.push_back("quadrature: refine_cap must be >= 1");
  return rep;
}

// Complex inductance phasor tagged with the drive frequency (0 = static/free space).
struct ComplexInductance {
  std::complex<double> value;  // [H]
  double frequency = 0.0;      // [Hz]
};

// kernel_I(x1, x2) = integral of t*J1(t) dt over [x1, x2].
inline double kernel_I(double x1, double x2) {
  if (!(x1 >= 0.0) || !(x2 >= x1)) throw DomainError("kernel_I: require 0 <= x1 <= x2");
  if (x1 == x2) return 0.0;
  static const GaussLegendre rule = gauss_legendre(16);
  return integrate_panels([](double t) { return t * bessel_j1(t); }, x1, x2,
                          std::numbers::pi, rule);
}

// Plate reflection fraction R(alpha, omega). alpha1 = sqrt(alpha^2 + j*w*mu0*mu_r*sigma),
// principal branch. Rearranged to carry exp(-2*alpha1*c) only, so thick or highly
// conductive plates cannot overflow. |R| <= 1 for passive media.
inline std::complex<double> reflection_coefficient(double alpha, double omega,
                                                   const PlateSample& plate) {
  if (!(alpha > 0.0)) throw DomainError("reflection_coefficient: alpha must be > 0");
  if (!(omega >= 0.0)) throw DomainError("reflection_coefficient: omega must be >= 0");
  const double mu = plate.mu_r;
  const std::complex<double> a1 =
      std::sqrt(std::complex<double>(alpha * alpha, omega * MU_0 * mu * plate.sigma));
  const std::complex<double> e = std::exp(-2.0 * a1 * plate.c);
  const std::complex<double> sum = a1 + mu * alpha;
  const std::complex<double> dif = a1 - mu * alpha;
  // alpha1^2 - mu^2 alpha^2 written analytically so sigma = 0, mu_r = 1 gives an
  // exact zero instead of rounding residue from the squared square root.
  const std::complex<double> a1sq_minus =
      std::complex<double>(alpha * alpha * (1.0 - mu * mu), omega * MU_0 * mu * plate.sigma);
  const std::complex<double> num = a1sq_minus * (e - 1.0);
  const std::complex<double> den = sum * sum - dif * dif * e;
  return num / den;
}

namespace detail {

// Angular coupling factor of the off-axis pickup turn:
// G(alpha) = integral over r_p in [r_p1, r_p2], theta in [0, 2pi] of
//            r_p * cos(phi) * J1(alpha * r) with
// r = sqrt(r_p^2 + w^2 - 2 w r_p cos theta), cos(phi) = (w cos theta - r_p)/r.
// phi is the two-argument arctangent form phi = theta + atan2(r_p sin theta, w - r_p cos theta),
// reduced here algebraically; the orientation renders the side-by-side pair positive.
inline double angular_factor(double alpha, const CoilPairGeometry& g,
                             const GaussLegendre& theta_rule, const GaussLegendre& rp_rule) {
  const double two_pi = 2.0 * std::numbers::pi;
  double sum = 0.0;
  const double rp_mid = 0.5 * (g.r_p1 + g.r_p2);
  const double rp_half = 0.5 * (g.r_p2 - g.r_p1);
  for (std::size_t i = 0; i < rp_rule.nodes.size(); ++i) {
    const double rp = rp_mid + rp_half * rp_rule.nodes[i];
    double inner = 0.0;
    for (std::size_t k = 0; k < theta_rule.nodes.size(); ++k) {
      const double theta = 0.5 * two_pi * (1.0 + theta_rule.nodes[k]);
      const double ct = std::cos(theta);
      const double r2 = rp * rp + g.w * g.w - 2.0 * g.w * rp * ct;
      const double r = std::sqrt(std::max(r2, 0.0));
      double val;
      if (r < 1e-14) {
        // Pickup point on the excitation axis: J1(alpha r)/r -> alpha/2.
        val = (g.w * ct - rp) * 0.5 * alpha;
      } else {
        val = (g.w * ct - rp) / r * bessel_j1(alpha * r);
      }
      inner += theta_rule.weights[k] * val;
    }
    sum += rp_rule.weights[i] * rp * inner * (0.5 * two_pi);
  }
  return sum * rp_half;
}

inline double height_f(double x) { return std::exp(-std::abs(x)) + std::abs(x); }

}  // namespace detail

// Precomputed alpha-axis kernel for one coil pair. The geometry factors are
// frequency- and plate-independent, so frequency/plate/lift-off sweeps reuse
// one kernel. Free-space and reflected height factors are kept separately:
// L_air carries no plate term at all, and delta_l carries the reflection
// coefficient on the same grid, so sigma = 0 cancels structurally.
class MutualKernel {
 public:
  // probes: (plate, omega) pairs whose delta-L participates in the
  // convergence check alongside the free-space value.
  MutualKernel(const CoilPairGeometry& g, const QuadratureSpec& q,
               const std::vector<std::pair<PlateSample, double>>& probes = {})
      : geom_(g) {
    require_valid(validate_geometry(g), "geometry");
    require_valid(validate_quadrature(q), "quadrature");
    for (const auto& pr : probes) {
      require_valid(validate_plate(pr.first), "plate");
      if (!(pr.second > 0.0)) throw DomainError("MutualKernel: probe omega must be > 0");
    }

    QuadratureSpec spec = q;
    if (spec.alpha_max <= 0.0) spec.alpha_max = 40.0 / std::min(g.r_e2, g.r_p2);

    build(spec);
    std::vector<std::complex<double>> est = estimates(probes);
    for (int pass = 0; pass < q.refine_cap; ++pass) {
      QuadratureSpec finer = spec;
      finer.alpha_points *= 2;
      finer.theta_points *= 2;
      finer.rp_points *= 2;
      const std::vector<Node> coarse_nodes = std::move(nodes_);
      build(finer);
      const std::vector<std::complex<double>> fine_est = estimates(probes);
      double metric = 0.0;
      const double scale_floor = q.rel_tol * std::abs(fine_est[0]);
      for (std::size_t i = 0; i < est.size(); ++i) {
        const double scale = std::max(std::abs(fine_est[i]), scale_floor);
        if (scale > 0.0) metric = std::max(metric, std::abs(fine_est[i] - est[i]) / scale);
      }
      if (metric <= q.rel_tol) {
        spec_ = finer;
        return;
      }
      if (pass + 1 == q.refine_cap) {
        throw ConvergenceError("mutual inductance quadrature did not converge", est[0], fine_est[0]);
      }
      spec = finer;
      est = fine_est;
      (void)coarse_nodes;
    }
    spec_ = spec;
  }

  // Free-space mutual inductance [H]. Real by construction.
  double l_air() const {
    double sum = 0.0;
    for (const Node& n : nodes_) sum += n.weighted_p * n.h_air;
    return sum;
  }

  // Plate contribution delta-L(omega) [H] on the shared grid.
  std::complex<double> delta_l(const PlateSample& plate, double omega) const {
    require_valid(validate_plate(plate), "plate");
    if (!(omega > 0.0)) throw DomainError("delta_l: omega must be > 0");
    std::complex<double> sum = 0.0;
    for (const Node& n : nodes_) {
      const std::complex<double> r = reflection_coefficient(n.alpha, omega, plate);
      sum += n.weighted_p * n.h_refl0 * std::exp(-2.0 * n.alpha * plate.liftoff) * r;
    }
    return sum;
  }

  const QuadratureSpec& effective_spec() const noexcept { return spec_; }
  double alpha_tail_estimate() const noexcept { return tail_estimate_; }

 private:
  struct Node {
    double alpha;
    double weighted_p;  // GL weight * prefactor * I_e(alpha) * G(alpha) / alpha^2
    double h_air;       // free-space height factor [m^2]
    double h_refl0;     // reflected height factor at zero lift-off [m^2]
  };

  void build(const QuadratureSpec& spec) {
    const CoilPairGeometry& g = geom_;
    const double prefactor =
        MU_0 * g.n1 * g.n2 /
        (2.0 * (g.r_e2 - g.r_e1) * (g.l_e2 - g.l_e1) * (g.r_p2 - g.r_p1) * (g.l_p2 - g.l_p1));

    // Panels sized to half the fastest Bessel oscillation along alpha.
    const double osc_radius = g.r_e2 + g.r_p2 + g.w;
    const double panel_width = std::numbers::pi / osc_radius;
    const int panels =
        std::max(1, static_cast<int>(std::ceil(spec.alpha_max / panel_width)));
    const double width = spec.alpha_max / panels;

    const GaussLegendre alpha_rule = gauss_legendre(spec.alpha_points);
    const GaussLegendre theta_rule = gauss_legendre(spec.theta_points);
    const GaussLegendre rp_rule = gauss_legendre(spec.rp_points);

    nodes_.assign(static_cast<std::size_t>(panels) * spec.alpha_points, Node{});
    parallel_for(panels, [&](int p) {
      const double a0 = p * width;
      for (int k = 0; k < spec.alpha_points; ++k) {
        const double alpha = a0 + 0.5 * width * (1.0 + alpha_rule.nodes[k]);
        const double gl_w = 0.5 * width * alpha_rule.weights[k];
        const double ie = kernel_I(alpha * g.r_e1, alpha * g.r_e2);
        const double gf = detail::angular_factor(alpha, g, theta_rule, rp_rule);
        Node n;
        n.alpha = alpha;
        n.weighted_p = gl_w * prefactor * ie * gf / (alpha * alpha);
        n.h_air = (detail::height_f(alpha * (g.l_p2 - g.l_e1)) +
                   detail::height_f(alpha * (g.l_p1 - g.l_e2)) -
                   detail::height_f(alpha * (g.l_p2 - g.l_e2)) -
                   detail::height_f(alpha * (g.l_p1 - g.l_e1))) /
                  (alpha * alpha);
        n.h_refl0 = (std::exp(-alpha * g.l_e1) - std::exp(-alpha * g.l_e2)) *
                    (std::exp(-alpha * g.l_p1) - std::exp(-alpha * g.l_p2)) /
                    (alpha * alpha);
        nodes_[static_cast<std::size_t>(p) * spec.alpha_points + k] = n;
      }
    });

    // Tail bound: last-panel magnitude extrapolated over the truncated range.
    double last_panel = 0.0;
    for (int k = 0; k < spec.alpha_points; ++k) {
      const Node& n = nodes_[nodes_.size() - spec.alpha_points + k];
      last_panel += n.weighted_p * n.h_air;
    }
    const double total = l_air();
    tail_estimate_ = std::abs(total) > 0.0
                         ? std::abs(last_panel) * (spec.alpha_max / (2.0 * width)) / std::abs(total)
                         : 0.0;
  }

  std::vector<std::complex<double>> estimates(
      const std::vector<std::pair<PlateSample, double>>& probes) const {
    std::vector<std::complex<double>> est;
    est.reserve(probes.size() + 1);
    est.emplace_back(l_air(), 0.0);
    for (const auto& pr : probes) est.push_back(delta_l(pr.first, pr.second));
    return est;
  }

  CoilPairGeometry geom_;
  QuadratureSpec spec_;
  std::vector<Node> nodes_;
  double tail_estimate_ = 0.0;
};

// Free-space mutual inductance of the coil pair.
inline ComplexInductance mutual_inductance_free_space(const CoilPairGeometry& g,
                                                      const QuadratureSpec& q = {}) {
  MutualKernel kernel(g, q);
  return ComplexInductance{std::complex<double>(kernel.l_air(), 0.0), 0.0};
}

// Mutual inductance above a plate: L(omega) = L_air + delta_L(omega).
inline ComplexInductance mutual_inductance_above_plate(const CoilPairGeometry& g,
                                                       const PlateSample& plate, double omega,
                                                       const QuadratureSpec& q = {}) {
  if (!(omega > 0.0)) throw DomainError("mutual_inductance_above_plate: omega must be > 0");
  MutualKernel kernel(g, q, {{plate, omega}});
  const std::complex<double> value = kernel.l_air() + kernel.delta_l(plate, omega);
  return ComplexInductance{value, omega / (2.0 * std::numbers::pi)};
}

// Plate-induced change delta_L(omega) = L(omega) - L_air on one shared grid.
inline ComplexInductance delta_L(const CoilPairGeometry& g, const PlateSample& plate,
                                 double omega, const QuadratureSpec& q = {}) {
  if (!(omega > 0.0)) throw DomainError("delta_L: omega must be > 0");
  MutualKernel kernel(g, q, {{plate, omega}});
  return ComplexInductance{kernel.delta_l(plate, omega), omega / (2.0 * std::numbers::pi)};
}

// V = j*omega*L*I. Zero frequency yields zero volts.
inline std::complex<double> induced_voltage(const ComplexInductance& l, const Excitation& exc) {
  if (!exc.current.has_value()) throw DomainError("induced_voltage: excitation must drive by current");
  if (exc.frequency < 0.0) throw DomainError("induced_voltage: negative frequency");
  const double omega = 2.0 * std::numbers::pi * exc.frequency;
  return std::complex<double>(0.0, 1.0) * omega * l.value * (*exc.current);
}

// Independent free-space oracle: double line integral mu0/(4 pi) of
// (dl1 . dl2)/|r12| over concentric circular filaments covering each annulus.
// The pickup loops are traversed in the orientation that makes the
// side-by-side pair positive, matching the solver's convention.
inline double neumann_oracle(const CoilPairGeometry& g, int filaments_per_coil,
                             int segments_per_loop) {
  require_valid(validate_geometry(g), "geometry");
  if (filaments_per_coil < 16 || segments_per_loop < 16)
    throw DomainError("neumann_oracle: counts must be >= 16");

  const int F = filaments_per_coil;
  const int S = segments_per_loop;
  const double two_pi = 2.0 * std::numbers::pi;
  const double ze = 0.5 * (g.l_e1 + g.l_e2);
  const double zp = 0.5 * (g.l_p1 + g.l_p2);

  struct Loop {
    std::vector<double> px, py, pz, tx, ty;  // midpoints and segment vectors (z-tangent = 0)
  };
  auto make_loop = [&](double radius, double cx, double z, bool reversed) {
    Loop lp;
    lp.px.resize(S);
    lp.py.resize(S);
    lp.pz.assign(S, z);
    lp.tx.resize(S);
    lp.ty.resize(S);
    const double dphi = two_pi / S;
    for (int s = 0; s < S; ++s) {
      const double phi = (s + 0.5) * dphi;
      const double sgn = reversed ? -1.0 : 1.0;
      lp.px[s] = cx + radius * std::cos(phi);
      lp.py[s] = sgn * radius * std::sin(phi);
      lp.tx[s] = -radius * std::sin(phi) * dphi;
      lp.ty[s] = sgn * radius * std::cos(phi) * dphi;
    }
    return lp;
  };

  std::vector<Loop> exc(F), pick(F);
  for (int i = 0; i < F; ++i) {
    const double re = g.r_e1 + (i + 0.5) * (g.r_e2 - g.r_e1) / F;
    const double rp = g.r_p1 + (i + 0.5) * (g.r_p2 - g.r_p1) / F;
    exc[i] = make_loop(re, 0.0, ze, false);
    pick[i] = make_loop(rp, g.w, zp, true);
  }

  const double weight = (static_cast<double>(g.n1) / F) * (static_cast<double>(g.n2) / F);
  std::vector<double> partial(F, 0.0);
  bool overlap = false;
  parallel_for(F, [&](int i) {
    double acc = 0.0;
    for (int j = 0; j < F; ++j) {
      const Loop& a = exc[i];
      const Loop& b = pick[j];
      for (int s = 0; s < S; ++s) {
        for (int t = 0; t < S; ++t) {
          const double dx = a.px[s] - b.px[t];
          const double dy = a.py[s] - b.py[t];
          const double dz = a.pz[s] - b.pz[t];
          const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
          if (dist < 1e-9) {
            overlap = true;
            return;
          }
          acc += (a.tx[s] * b.tx[t] + a.ty[s] * b.ty[t]) / dist;
        }
      }
    }
    partial[i] = acc;
  });
  if (overlap) throw GeometryError("neumann_oracle: filaments closer than 1e-9 m");

  double sum = 0.0;
  for (double p : partial) sum += p;  // fixed order, bit-reproducible
  return MU_0 / (4.0 * std::numbers::pi) * weight * sum;
}

// Standard conductor skin depth [m].
inline double skin_depth(double omega, double sigma, double mu_r = 1.0) {
  if (!(omega > 0.0) || !(sigma > 0.0) || !(mu_r > 0.0))
    throw DomainError("skin_depth: omega, sigma, mu_r must be > 0");
  return std::sqrt(2.0 / (omega * MU_0 * mu_r * sigma));
}

}  // namespace dualem
