#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <dualem/constants.hpp>
#include <dualem/errors.hpp>
#include <dualem/geometry.hpp>

namespace dualem {

// Rectangular cell-centered grid. Cell (i, j) spans
// [x_min + i*cell, x_min + (i+1)*cell] x [y_min + j*cell, y_min + (j+1)*cell].
struct GridSpec {
  double x_min = -60e-3;
  double x_max = 60e-3;
  double y_min = -20e-3;
  double y_max = 40e-3;
  double cell = 0.25e-3;

  int nx() const { return static_cast<int>(std::llround((x_max - x_min) / cell)); }
  int ny() const { return static_cast<int>(std::llround((y_max - y_min) / cell)); }
};

struct TraceSegment {
  std::string name;
  double x0 = 0.0;  // near edge, m
  double x1 = 0.0;  // far edge, m
};

// One layer of the sample stack. Layers stack bottom-up without gaps from the
// lift-off plane; an air spacer is just a layer with eps_r = 1.
struct SampleLayer {
  double eps_r = 1.0;
  double thickness = 0.0;  // m
  double extent = 0.0;     // lateral width, m; <= 0 spans the full domain
  bool floating = false;   // equipotential body with zero net charge
};

// Transmitter traces T_A..T_F at negative x, receiver traces D_A..D_F
// mirrored at positive x; the innermost pair edges are pair_gap apart.
inline std::vector<TraceSegment> default_traces(double track_width = 4e-3,
                                                double track_gap = 1e-3,
                                                double pair_gap = 5e-3,
                                                int per_side = 6) {
  if (per_side < 1 || per_side > 26) throw DomainError("per_side must be in [1, 26]");
  if (track_width <= 0.0 || track_gap <= 0.0 || pair_gap <= 0.0)
    throw DomainError("trace layout dimensions must be positive");
  std::vector<TraceSegment> traces;
  traces.reserve(2 * static_cast<std::size_t>(per_side));
  for (int k = 0; k < per_side; ++k) {
    const double near = pair_gap / 2.0 + k * (track_width + track_gap);
    const char letter = static_cast<char>('A' + k);
    traces.push_back({std::string("T_") + letter, -(near + track_width), -near});
  }
  for (int k = 0; k < per_side; ++k) {
    const double near = pair_gap / 2.0 + k * (track_width + track_gap);
    const char letter = static_cast<char>('A' + k);
    traces.push_back({std::string("D_") + letter, near, near + track_width});
  }
  return traces;
}

// Out-of-plane length used to convert per-unit-length capacitances to farads.
// A 2-D cross-section of two facing spiral arcs only represents the region
// where the arcs stay near their closest approach, an arc of order
// sqrt(gap * turn radius) ~ 12 mm here, not a full turn circumference. The
// default is calibrated against the overall transmitter-receiver coupling of
// the reference sensor; the nearby pair and row couplings then follow as
// predictions.
inline double default_extrusion_length() { return 13.3e-3; }

// Cell sizes for grid-convergence checks, coarsest first. Between the two
// finest rungs the aggregate transmitter-receiver coupling of the default
// model moves by about 0.5%, so results on the default grid are converged
// for the tolerances used here.
inline std::array<double, 3> default_grid_ladder() { return {0.25e-3, 0.125e-3, 0.0625e-3}; }

struct CrossSectionModel {
  GridSpec grid;
  std::vector<TraceSegment> traces = default_traces();
  double trace_thickness = 0.25e-3;
  double substrate_thickness = 1.6e-3;  // directly above the traces
  double substrate_eps = 4.4;
  double liftoff = 1.6e-3;  // sample stack base, measured from the trace top
  std::vector<SampleLayer> sample_layers;
  double extrusion_length = default_extrusion_length();
};

inline ValidationReport validate_model(const CrossSectionModel& m) {
  ValidationReport rep;
  const GridSpec& g = m.grid;
  if (!(g.cell > 0.0)) rep.violations.push_back("grid cell size must be positive");
  if (!(g.x_max > g.x_min) || !(g.y_max > g.y_min))
    rep.violations.push_back("degenerate grid extents");
  if (!rep.ok()) return rep;
  if (g.nx() < 8 || g.ny() < 8) rep.violations.push_back("grid too coarse (< 8 cells per axis)");
  if (m.traces.empty()) rep.violations.push_back("no trace segments");
  for (const TraceSegment& t : m.traces) {
    if (!(t.x1 > t.x0)) rep.violations.push_back("degenerate trace " + t.name);
    if (t.x0 < g.x_min || t.x1 > g.x_max)
      rep.violations.push_back("trace " + t.name + " outside the grid");
  }
  std::vector<TraceSegment> sorted = m.traces;
  std::sort(sorted.begin(), sorted.end(),
            [](const TraceSegment& a, const TraceSegment& b) { return a.x0 < b.x0; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const double gap = sorted[k].x0 - sorted[k - 1].x1;
    if (gap < 0.0)
      rep.violations.push_back("traces " + sorted[k - 1].name + " and " + sorted[k].name +
                               " overlap");
    else if (gap < 4.0 * g.cell - 1e-12)
      rep.violations.push_back("gap between " + sorted[k - 1].name + " and " + sorted[k].name +
                               " resolved by fewer than 4 cells");
  }
  if (!(m.trace_thickness > 0.0)) rep.violations.push_back("trace thickness must be positive");
  if (m.substrate_thickness < 0.0) rep.violations.push_back("negative substrate thickness");
  if (m.substrate_eps < 1.0) rep.violations.push_back("substrate eps_r must be >= 1");
  if (m.liftoff < 0.0) rep.violations.push_back("negative lift-off");
  if (m.liftoff < m.substrate_thickness - 1e-12)
    rep.violations.push_back("sample stack intersects the substrate");
  double stack_top = m.trace_thickness + m.liftoff;
  for (const SampleLayer& s : m.sample_layers) {
    if (s.thickness < 0.0) rep.violations.push_back("negative sample layer thickness");
    if (!s.floating && s.eps_r < 1.0) rep.violations.push_back("sample eps_r must be >= 1");
    stack_top += s.thickness;
  }
  if (stack_top > g.y_max) rep.violations.push_back("sample stack exceeds the grid top");
  if (!(m.extrusion_length > 0.0)) rep.violations.push_back("extrusion length must be positive");
  return rep;
}

// Boundary potentials for the driven traces: tx over the transmitter side,
// det over the receiver side, in the order the traces appear per side.
struct PotentialAssignment {
  std::vector<double> tx;
  std::vector<double> det;
};

// Excitation ramp 1 V -> 0 V across the transmitter; receiver at det_scale
// times the mirrored ramp.
inline PotentialAssignment ramp_assignment(int per_side = 6, double det_scale = 1.0 / 16.0) {
  if (per_side < 1) throw DomainError("per_side must be >= 1");
  PotentialAssignment p;
  p.tx.resize(static_cast<std::size_t>(per_side));
  p.det.resize(static_cast<std::size_t>(per_side));
  for (int k = 0; k < per_side; ++k) {
    const double ramp = per_side == 1 ? 1.0 : 1.0 - static_cast<double>(k) / (per_side - 1);
    p.tx[static_cast<std::size_t>(k)] = ramp;
    p.det[static_cast<std::size_t>(k)] = det_scale * ramp;
  }
  return p;
}

inline ValidationReport validate_assignment(const PotentialAssignment& p) {
  ValidationReport rep;
  if (p.tx.empty() || p.det.empty()) {
    rep.violations.push_back("empty potential assignment");
    return rep;
  }
  for (std::size_t k = 1; k < p.tx.size(); ++k)
    if (p.tx[k] > p.tx[k - 1] + 1e-12) {
      rep.violations.push_back("excitation potentials must be monotone non-increasing");
      break;
    }
  bool uniform = true;
  for (double v : p.det) uniform = uniform && std::abs(v - p.det.front()) <= 1e-12;
  bool scaled = p.det.size() == p.tx.size();
  if (scaled) {
    double scale = 0.0;
    bool have = false;
    for (std::size_t k = 0; k < p.det.size(); ++k) {
      if (std::abs(p.tx[k]) > 1e-12) {
        const double s = p.det[k] / p.tx[k];
        if (!have) {
          scale = s;
          have = true;
        } else if (std::abs(s - scale) > 1e-9) {
          scaled = false;
        }
      } else if (std::abs(p.det[k]) > 1e-12) {
        scaled = false;
      }
    }
  }
  if (!uniform && !scaled)
    rep.violations.push_back("detection potentials must be uniform or scale the excitation");
  return rep;
}

// Discretized problem: relative permittivity and conductor id per cell.
// cond = -1 marks a free cell; conductor ids are dense 0..K-1.
struct GridProblem {
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  double x0 = 0.0;  // center of cell (0, 0)
  double y0 = 0.0;
  std::vector<double> eps;
  std::vector<int> cond;
  std::vector<std::uint8_t> floating;  // per conductor id

  int idx(int i, int j) const { return j * nx + i; }
  int conductor_count() const { return static_cast<int>(floating.size()); }
};

// Per-cell solution of one electrostatic solve.
struct FieldMap {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 0.0;
  std::vector<double> phi;          // V
  std::vector<double> ex, ey;       // V/m, zero inside conductors
  std::vector<double> sensitivity;  // filled by sensitivity_map only
  std::vector<double> trace_charge;        // C/m per driven conductor
  std::vector<double> floating_potential;  // V per floating conductor, NaN otherwise

  int idx(int i, int j) const { return j * nx + i; }
  double x_of(int i) const { return x0 + i * h; }
  double y_of(int j) const { return y0 + j * h; }
};

// Five-point finite-volume solver. Conductors are equipotential cell blocks
// whose potential acts on the shared face, so a free cell sees a half-cell
// link of conductance 2*eps; free-free faces use the harmonic mean. Floating
// conductors keep one unknown each (supernode), preserving symmetry. The
// factorization is computed once and reused across right-hand sides.
class GridSolver {
 public:
  explicit GridSolver(GridProblem p) : p_(std::move(p)) { build(); }

  struct Result {
    std::vector<double> phi;
    std::vector<double> charge;              // C/m, per conductor
    std::vector<double> floating_potential;  // V, NaN for driven conductors
  };

  // volts has one entry per conductor id; entries for floating ids are ignored.
  Result solve(const std::vector<double>& volts) const {
    const int nc = p_.conductor_count();
    if (static_cast<int>(volts.size()) != nc)
      throw DomainError("potential vector size does not match conductor count");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_unknown_);
    for (const Face& f : dirichlet_faces_) b[f.unknown] += f.g * volts[static_cast<std::size_t>(f.cond)];
    Eigen::VectorXd x = ldlt_.solve(b);
    if (ldlt_.info() != Eigen::Success) throw SolverError("electrostatic solve failed");
    const double scale = std::max(b.lpNorm<Eigen::Infinity>(), 1e-30);
    const double residual = (a_ * x - b).lpNorm<Eigen::Infinity>() / scale;
    if (residual > 1e-8)
      throw SolverError("electrostatic solve residual " + std::to_string(residual));

    Result r;
    r.phi.assign(p_.eps.size(), 0.0);
    r.floating_potential.assign(static_cast<std::size_t>(nc),
                                std::numeric_limits<double>::quiet_NaN());
    std::vector<double> pot(static_cast<std::size_t>(nc));
    for (int k = 0; k < nc; ++k) {
      if (p_.floating[static_cast<std::size_t>(k)]) {
        pot[static_cast<std::size_t>(k)] = x[float_unknown_[static_cast<std::size_t>(k)]];
        r.floating_potential[static_cast<std::size_t>(k)] = pot[static_cast<std::size_t>(k)];
      } else {
        pot[static_cast<std::size_t>(k)] = volts[static_cast<std::size_t>(k)];
      }
    }
    for (std::size_t c = 0; c < r.phi.size(); ++c) {
      const int id = p_.cond[c];
      r.phi[c] = id >= 0 ? pot[static_cast<std::size_t>(id)] : x[unknown_[c]];
    }
    r.charge.assign(static_cast<std::size_t>(nc), 0.0);
    for (const Face& f : charge_faces_)
      r.charge[static_cast<std::size_t>(f.cond)] +=
          f.g * (pot[static_cast<std::size_t>(f.cond)] - r.phi[static_cast<std::size_t>(f.unknown)]);
    for (double& q : r.charge) q *= EPS_0;
    return r;
  }

  const GridProblem& problem() const { return p_; }

 private:
  struct Face {
    int unknown;  // free-cell unknown index (dirichlet_faces_) or cell index (charge_faces_)
    int cond;
    double g;
  };

  void build() {
    const int nx = p_.nx, ny = p_.ny;
    if (nx < 2 || ny < 2 || p_.h <= 0.0) throw DomainError("grid problem too small");
    const std::size_t n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    if (p_.eps.size() != n || p_.cond.size() != n)
      throw DomainError("grid problem field sizes do not match the grid");
    const int nc = p_.conductor_count();
    bool any_driven = false;
    for (int k = 0; k < nc; ++k) any_driven = any_driven || !p_.floating[static_cast<std::size_t>(k)];
    if (!any_driven) throw DomainError("at least one driven conductor is required");

    unknown_.assign(n, -1);
    n_free_ = 0;
    for (std::size_t c = 0; c < n; ++c)
      if (p_.cond[c] < 0) unknown_[c] = n_free_++;
    float_unknown_.assign(static_cast<std::size_t>(nc), -1);
    int next = n_free_;
    for (int k = 0; k < nc; ++k)
      if (p_.floating[static_cast<std::size_t>(k)]) float_unknown_[static_cast<std::size_t>(k)] = next++;
    n_unknown_ = next;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    auto couple = [&](int ua, int ub, double g) {
      trip.emplace_back(ua, ua, g);
      trip.emplace_back(ub, ub, g);
      trip.emplace_back(ua, ub, -g);
      trip.emplace_back(ub, ua, -g);
    };
    auto visit_face = [&](std::size_t ca, std::size_t cb) {
      const int ka = p_.cond[ca], kb = p_.cond[cb];
      if (ka >= 0 && kb >= 0) {
        if (ka != kb) throw GeometryError("adjacent distinct conductors");
        return;
      }
      if (ka < 0 && kb < 0) {
        const double ea = p_.eps[ca], eb = p_.eps[cb];
        couple(unknown_[ca], unknown_[cb], 2.0 * ea * eb / (ea + eb));
        return;
      }
      const std::size_t cf = ka < 0 ? ca : cb;  // free side
      const int k = ka < 0 ? kb : ka;
      const double g = 2.0 * p_.eps[cf];
      const int uf = unknown_[cf];
      if (p_.floating[static_cast<std::size_t>(k)]) {
        couple(uf, float_unknown_[static_cast<std::size_t>(k)], g);
      } else {
        trip.emplace_back(uf, uf, g);
        dirichlet_faces_.push_back({uf, k, g});
      }
      charge_faces_.push_back({static_cast<int>(cf), k, g});
    };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t c = static_cast<std::size_t>(p_.idx(i, j));
        if (i + 1 < nx) visit_face(c, c + 1);
        if (j + 1 < ny) visit_face(c, c + static_cast<std::size_t>(nx));
      }

    a_.resize(n_unknown_, n_unknown_);
    a_.setFromTriplets(trip.begin(), trip.end());
    a_.makeCompressed();
    ldlt_.compute(a_);
    if (ldlt_.info() != Eigen::Success)
      throw SolverError("electrostatic factorization failed (disconnected grid?)");
  }

  GridProblem p_;
  int n_free_ = 0;
  int n_unknown_ = 0;
  std::vector<int> unknown_;
  std::vector<int> float_unknown_;
  std::vector<Face> dirichlet_faces_;
  std::vector<Face> charge_faces_;  // unknown field holds the free cell index
  Eigen::SparseMatrix<double> a_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

namespace detail {

// Cells are assigned by center membership in half-open bands, so stacked
// layers partition rows without gaps or double claims.
inline bool in_band(double v, double lo, double hi) { return v >= lo - 1e-12 && v < hi - 1e-12; }

inline GridProblem rasterize(const CrossSectionModel& m) {
  const GridSpec& gs = m.grid;
  GridProblem p;
  p.nx = gs.nx();
  p.ny = gs.ny();
  p.h = gs.cell;
  p.x0 = gs.x_min + 0.5 * gs.cell;
  p.y0 = gs.y_min + 0.5 * gs.cell;
  const std::size_t n = static_cast<std::size_t>(p.nx) * static_cast<std::size_t>(p.ny);
  p.eps.assign(n, 1.0);
  p.cond.assign(n, -1);
  const int n_traces = static_cast<int>(m.traces.size());

  auto row_center = [&](int j) { return p.y0 + j * p.h; };
  auto col_center = [&](int i) { return p.x0 + i * p.h; };

  // substrate band directly above the traces
  const double sub_lo = m.trace_thickness;
  const double sub_hi = m.trace_thickness + m.substrate_thickness;
  for (int j = 0; j < p.ny; ++j) {
    if (!in_band(row_center(j), sub_lo, sub_hi)) continue;
    for (int i = 0; i < p.nx; ++i) p.eps[static_cast<std::size_t>(p.idx(i, j))] = m.substrate_eps;
  }

  // sample stack above the lift-off plane
  p.floating.assign(static_cast<std::size_t>(n_traces), 0);
  double base = m.trace_thickness + m.liftoff;
  for (const SampleLayer& s : m.sample_layers) {
    const double lo = base, hi = base + s.thickness;
    base = hi;
    int id = -1;
    if (s.floating) {
      id = static_cast<int>(p.floating.size());
      p.floating.push_back(1);
    }
    bool any_row = false;
    for (int j = 0; j < p.ny; ++j) {
      double yc = row_center(j);
      if (!in_band(yc, lo, hi)) continue;
      any_row = true;
      for (int i = 0; i < p.nx; ++i) {
        if (s.extent > 0.0 && std::abs(col_center(i)) > s.extent / 2.0) continue;
        const std::size_t c = static_cast<std::size_t>(p.idx(i, j));
        if (s.floating)
          p.cond[c] = id;
        else
          p.eps[c] = s.eps_r;
      }
    }
    // a floating conductor thinner than one cell still occupies one row
    if (s.floating && !any_row && s.thickness > 0.0) {
      const double mid = 0.5 * (lo + hi);
      const int j = std::clamp(static_cast<int>(std::floor((mid - gs.y_min) / p.h)), 0, p.ny - 1);
      for (int i = 0; i < p.nx; ++i) {
        if (s.extent > 0.0 && std::abs(col_center(i)) > s.extent / 2.0) continue;
        p.cond[static_cast<std::size_t>(p.idx(i, j))] = id;
      }
    }
  }

  // traces last: they own their cells unconditionally
  for (int t = 0; t < n_traces; ++t) {
    const TraceSegment& seg = m.traces[static_cast<std::size_t>(t)];
    for (int j = 0; j < p.ny; ++j) {
      if (!in_band(row_center(j), 0.0, m.trace_thickness)) continue;
      for (int i = 0; i < p.nx; ++i) {
        const double xc = col_center(i);
        if (xc < seg.x0 || xc > seg.x1) continue;
        p.cond[static_cast<std::size_t>(p.idx(i, j))] = t;
      }
    }
  }
  return p;
}

// Derivative at x = 0 of the quadratic through (xl, vl), (0, vc), (xr, vr).
inline double lagrange_slope(double xl, double vl, double vc, double xr, double vr) {
  return -vl * xr / (xl * (xl - xr)) - vc * (xl + xr) / (xl * xr) -
         vr * xl / (xr * (xr - xl));
}

// Central differences in the interior; conductor surfaces live on cell faces,
// so cells next to a conductor use a one-sided quadratic with the face sample
// at half-cell distance. Field inside conductors is zero.
inline void fill_field(FieldMap& f, const GridProblem& p) {
  const int nx = f.nx, ny = f.ny;
  f.ex.assign(f.phi.size(), 0.0);
  f.ey.assign(f.phi.size(), 0.0);
  auto phi_at = [&](int i, int j) { return f.phi[static_cast<std::size_t>(f.idx(i, j))]; };
  auto cond_at = [&](int i, int j) { return p.cond[static_cast<std::size_t>(p.idx(i, j))]; };
  const double h = f.h;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = static_cast<std::size_t>(f.idx(i, j));
      if (cond_at(i, j) >= 0) continue;
      const double vc = phi_at(i, j);
      auto axis = [&](bool lo_in, double lo_v, bool lo_cond, bool hi_in, double hi_v,
                      bool hi_cond) {
        const double xl = lo_cond ? -0.5 * h : -h;
        const double xr = hi_cond ? 0.5 * h : h;
        if (lo_in && hi_in) return -lagrange_slope(xl, lo_v, vc, xr, hi_v);
        if (lo_in) return -(vc - lo_v) / (-xl);   // one-sided at the domain edge
        if (hi_in) return -(hi_v - vc) / xr;
        return 0.0;
      };
      f.ex[c] = axis(i > 0, i > 0 ? phi_at(i - 1, j) : 0.0, i > 0 && cond_at(i - 1, j) >= 0,
                     i + 1 < nx, i + 1 < nx ? phi_at(i + 1, j) : 0.0,
                     i + 1 < nx && cond_at(i + 1, j) >= 0);
      f.ey[c] = axis(j > 0, j > 0 ? phi_at(i, j - 1) : 0.0, j > 0 && cond_at(i, j - 1) >= 0,
                     j + 1 < ny, j + 1 < ny ? phi_at(i, j + 1) : 0.0,
                     j + 1 < ny && cond_at(i, j + 1) >= 0);
    }
}

inline FieldMap to_field_map(const GridProblem& p, GridSolver::Result&& r) {
  FieldMap f;
  f.nx = p.nx;
  f.ny = p.ny;
  f.x0 = p.x0;
  f.y0 = p.y0;
  f.h = p.h;
  f.phi = std::move(r.phi);
  f.trace_charge = std::move(r.charge);
  f.floating_potential = std::move(r.floating_potential);
  fill_field(f, p);
  return f;
}

// Trace potentials in trace order from a per-side assignment; floating sample
// conductors (appended ids) get zero placeholders the solver ignores.
inline std::vector<double> assignment_volts(const CrossSectionModel& m, const GridProblem& p,
                                            const PotentialAssignment& a) {
  std::vector<double> volts(static_cast<std::size_t>(p.conductor_count()), 0.0);
  std::size_t it = 0, id = 0;
  for (std::size_t t = 0; t < m.traces.size(); ++t) {
    const std::string& name = m.traces[t].name;
    const bool is_tx = !name.empty() && name.front() == 'T';
    if (is_tx) {
      if (it >= a.tx.size()) throw DomainError("assignment shorter than the transmitter side");
      volts[t] = a.tx[it++];
    } else {
      if (id >= a.det.size()) throw DomainError("assignment shorter than the receiver side");
      volts[t] = a.det[id++];
    }
  }
  return volts;
}

}  // namespace detail

inline FieldMap solve_potential(const CrossSectionModel& m, const PotentialAssignment& p) {
  require_valid(validate_model(m), "cross-section model");
  require_valid(validate_assignment(p), "potential assignment");
  GridProblem prob = detail::rasterize(m);
  const std::vector<double> volts = detail::assignment_volts(m, prob, p);
  GridSolver solver(std::move(prob));
  return detail::to_field_map(solver.problem(), solver.solve(volts));
}

// Positive mutual couplings (magnitude of induced charge per volt) with the
// Maxwell matrix kept internally: coupling(i, j) = -maxwell(i, j) off-diagonal.
struct CapacitanceMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd maxwell;     // F, symmetrized
  double max_asymmetry = 0.0;  // relative to the largest entry, before symmetrization
  std::string warning;

  double coupling(int i, int j) const {
    return i == j ? maxwell(i, i) : -maxwell(i, j);
  }
  int index(std::string_view name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return static_cast<int>(k);
    throw DomainError("unknown segment name: " + std::string(name));
  }
};

inline CapacitanceMatrix segment_capacitance_matrix(const CrossSectionModel& m) {
  require_valid(validate_model(m), "cross-section model");
  GridProblem prob = detail::rasterize(m);
  const int n_traces = static_cast<int>(m.traces.size());
  GridSolver solver(std::move(prob));
  const int nc = solver.problem().conductor_count();

  Eigen::MatrixXd raw(n_traces, n_traces);
  std::vector<double> volts(static_cast<std::size_t>(nc), 0.0);
  for (int k = 0; k < n_traces; ++k) {
    volts.assign(static_cast<std::size_t>(nc), 0.0);
    volts[static_cast<std::size_t>(k)] = 1.0;
    const GridSolver::Result r = solver.solve(volts);
    for (int j = 0; j < n_traces; ++j)
      raw(j, k) = r.charge[static_cast<std::size_t>(j)] * m.extrusion_length;
  }

  CapacitanceMatrix cm;
  cm.names.reserve(static_cast<std::size_t>(n_traces));
  for (const TraceSegment& t : m.traces) cm.names.push_back(t.name);
  const double scale = raw.cwiseAbs().maxCoeff();
  cm.max_asymmetry = scale > 0.0 ? (raw - raw.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  if (cm.max_asymmetry > 0.02)
    cm.warning = "capacitance matrix asymmetry " + std::to_string(cm.max_asymmetry);
  cm.maxwell = 0.5 * (raw + raw.transpose());
  return cm;
}

// Transmitter-to-receiver total with the receiver as one conductor. Grounding
// the union imposes the same Dirichlet data as grounding each segment, so the
// block sum over the mutual couplings equals the unified re-solve exactly.
inline double aggregate_coupling(const CapacitanceMatrix& cm) {
  double total = 0.0;
  for (std::size_t i = 0; i < cm.names.size(); ++i) {
    if (cm.names[i].empty() || cm.names[i].front() != 'T') continue;
    for (std::size_t j = 0; j < cm.names.size(); ++j) {
      if (cm.names[j].empty() || cm.names[j].front() != 'D') continue;
      total += cm.coupling(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return total;
}

// Per-track coupling table. Unlike the Maxwell matrix, each entry is solved
// with only the participating conductors held at fixed potentials and every
// other trace floating, matching how isolated track-to-track couplings are
// measured and reported for this sensor: grounding the bystander traces would
// screen the far tracks to nothing, whereas the reference data shows a flat
// far-track tail. Rows drive one transmitter track against the grounded
// receiver union; their sum is the overall transmitter-receiver capacitance.
struct CouplingTable {
  std::vector<std::string> tx_names, rx_names;
  Eigen::MatrixXd pair;       // F, pair(i, j): T_i to D_j, others floating
  Eigen::VectorXd tx_to_rx;   // F, T_i to the receiver union, other T floating
  Eigen::VectorXd rx_to_tx;   // F, D_j to the transmitter union, other D floating
  Eigen::VectorXd rx_tap;     // F, per-segment share of aggregate, see below
  double aggregate = 0.0;     // F, sum of tx_to_rx
};

namespace detail {

// Maxwell matrix reduced to a driven subset with the rest floating: imposing
// Q = 0 on the floating block eliminates it by the Schur complement.
inline Eigen::MatrixXd reduce_floating(const Eigen::MatrixXd& c, const std::vector<int>& driven) {
  const int n = static_cast<int>(c.rows());
  std::vector<int> rest;
  std::vector<char> is_driven(static_cast<std::size_t>(n), 0);
  for (int k : driven) is_driven[static_cast<std::size_t>(k)] = 1;
  for (int k = 0; k < n; ++k)
    if (!is_driven[static_cast<std::size_t>(k)]) rest.push_back(k);
  const int nd = static_cast<int>(driven.size()), nf = static_cast<int>(rest.size());
  Eigen::MatrixXd cdd(nd, nd), cdf(nd, nf), cff(nf, nf);
  for (int a = 0; a < nd; ++a) {
    for (int b = 0; b < nd; ++b) cdd(a, b) = c(driven[static_cast<std::size_t>(a)], driven[static_cast<std::size_t>(b)]);
    for (int b = 0; b < nf; ++b) cdf(a, b) = c(driven[static_cast<std::size_t>(a)], rest[static_cast<std::size_t>(b)]);
  }
  for (int a = 0; a < nf; ++a)
    for (int b = 0; b < nf; ++b) cff(a, b) = c(rest[static_cast<std::size_t>(a)], rest[static_cast<std::size_t>(b)]);
  if (nf == 0) return cdd;
  return cdd - cdf * cff.ldlt().solve(cdf.transpose());
}

}  // namespace detail

inline CouplingTable coupling_table(const CapacitanceMatrix& cm) {
  std::vector<int> tx, rx;
  for (std::size_t k = 0; k < cm.names.size(); ++k)
    (cm.names[k].front() == 'T' ? tx : rx).push_back(static_cast<int>(k));
  const int nt = static_cast<int>(tx.size()), nr = static_cast<int>(rx.size());

  CouplingTable table;
  for (int i : tx) table.tx_names.push_back(cm.names[static_cast<std::size_t>(i)]);
  for (int j : rx) table.rx_names.push_back(cm.names[static_cast<std::size_t>(j)]);
  table.pair.resize(nt, nr);
  table.tx_to_rx.resize(nt);
  table.rx_to_tx.resize(nr);

  for (int a = 0; a < nt; ++a)
    for (int b = 0; b < nr; ++b) {
      const Eigen::MatrixXd s = detail::reduce_floating(
          cm.maxwell, {tx[static_cast<std::size_t>(a)], rx[static_cast<std::size_t>(b)]});
      table.pair(a, b) = -0.5 * (s(0, 1) + s(1, 0));
    }
  for (int a = 0; a < nt; ++a) {
    std::vector<int> driven = rx;
    driven.push_back(tx[static_cast<std::size_t>(a)]);
    const Eigen::MatrixXd s = detail::reduce_floating(cm.maxwell, driven);
    double q = 0.0;
    for (int j = 0; j < nr; ++j) q += s(j, nr);
    table.tx_to_rx[a] = -q;
  }
  for (int b = 0; b < nr; ++b) {
    std::vector<int> driven = tx;
    driven.push_back(rx[static_cast<std::size_t>(b)]);
    const Eigen::MatrixXd s = detail::reduce_floating(cm.maxwell, driven);
    double q = 0.0;
    for (int i = 0; i < nt; ++i) q += s(i, nt);
    table.rx_to_tx[b] = -q;
  }
  table.aggregate = table.tx_to_rx.sum();

  // Per-segment tap couplings for the lumped receiver network. The track ties
  // the receiver segments to one potential, so the operational current split
  // is the Maxwell coupling row of each segment with every conductor held:
  // the near segment takes most of the current and the outermost one recovers
  // a little, having no neighbour to screen it. The raw rows are scaled so
  // the taps sum to the aggregate, the calibrated two-coil total.
  table.rx_tap.resize(nr);
  for (int b = 0; b < nr; ++b) {
    double q = 0.0;
    for (int i : tx) q += cm.coupling(i, rx[static_cast<std::size_t>(b)]);
    table.rx_tap[b] = q;
  }
  const double raw_total = table.rx_tap.sum();
  if (!(raw_total > 0.0)) throw SolverError("coupling table: no transmitter-receiver coupling");
  table.rx_tap *= table.aggregate / raw_total;
  return table;
}

inline CouplingTable coupling_table(const CrossSectionModel& m) {
  return coupling_table(segment_capacitance_matrix(m));
}

// S = E_exc . E_det per cell, normalized by the extremum of largest magnitude
// so the map's maximum is exactly 1. The two fields drive the transmitter and
// receiver sides with the standard ramp, the other side grounded.
inline FieldMap sensitivity_map(const CrossSectionModel& m) {
  require_valid(validate_model(m), "cross-section model");
  GridProblem prob = detail::rasterize(m);
  int per_side = 0;
  for (const TraceSegment& t : m.traces)
    if (!t.name.empty() && t.name.front() == 'T') ++per_side;
  GridSolver solver(std::move(prob));
  const GridProblem& p = solver.problem();

  PotentialAssignment exc = ramp_assignment(per_side, 0.0);
  PotentialAssignment det;
  det.tx.assign(exc.tx.size(), 0.0);
  det.det = exc.tx;
  FieldMap fe = detail::to_field_map(p, solver.solve(detail::assignment_volts(m, p, exc)));
  FieldMap fd = detail::to_field_map(p, solver.solve(detail::assignment_volts(m, p, det)));

  FieldMap out = std::move(fe);
  out.sensitivity.assign(out.phi.size(), 0.0);
  double extremum = 0.0;
  for (std::size_t c = 0; c < out.phi.size(); ++c) {
    const double s = out.ex[c] * fd.ex[c] + out.ey[c] * fd.ey[c];
    out.sensitivity[c] = s;
    if (std::abs(s) > std::abs(extremum)) extremum = s;
  }
  if (extremum != 0.0)
    for (double& s : out.sensitivity) s /= extremum;
  return out;
}

// Sealed parallel-plate cross-section: full-width plates, zero-flux side
// walls, uniform dielectric. Returns the solved capacitance per unit depth.
inline double analytic_capacitor_check(double width, double gap, double eps_r,
                                       double cell = 0.25e-3) {
  if (!(width > 0.0) || !(gap > 0.0) || !(cell > 0.0)) throw DomainError("non-positive dimensions");
  if (eps_r < 1.0) throw DomainError("eps_r must be >= 1");
  if (width / gap < 10.0) throw DomainError("width/gap must be >= 10");
  const int nx = static_cast<int>(std::llround(width / cell));
  const int rows = static_cast<int>(std::llround(gap / cell));
  if (nx < 2 || rows < 1) throw DomainError("capacitor under-resolved by the grid");

  GridProblem p;
  p.nx = nx;
  p.ny = rows + 2;
  p.h = cell;
  p.x0 = 0.5 * cell;
  p.y0 = 0.5 * cell;
  const std::size_t n = static_cast<std::size_t>(p.nx) * static_cast<std::size_t>(p.ny);
  p.eps.assign(n, eps_r);
  p.cond.assign(n, -1);
  p.floating = {0, 0};
  for (int i = 0; i < nx; ++i) {
    p.cond[static_cast<std::size_t>(p.idx(i, 0))] = 0;
    p.cond[static_cast<std::size_t>(p.idx(i, p.ny - 1))] = 1;
  }
  GridSolver solver(std::move(p));
  const GridSolver::Result r = solver.solve({1.0, 0.0});
  return r.charge[0];
}

}  // namespace dualem
