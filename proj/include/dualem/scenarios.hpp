#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <dualem/circuit.hpp>
#include <dualem/constants.hpp>
#include <dualem/electrostatic.hpp>
#include <dualem/errors.hpp>
#include <dualem/inductive.hpp>

namespace dualem {

enum class ScenarioKind {
  plastic_stack,
  water_immersion,
  copper_stack,
  copper_plus_plastic,
  water_plus_ferrite,
};

inline const char* scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::plastic_stack: return "plastic_stack";
    case ScenarioKind::water_immersion: return "water_immersion";
    case ScenarioKind::copper_stack: return "copper_stack";
    case ScenarioKind::copper_plus_plastic: return "copper_plus_plastic";
    case ScenarioKind::water_plus_ferrite: return "water_plus_ferrite";
  }
  throw DomainError("unknown scenario kind");
}

inline ScenarioKind scenario_from_name(std::string_view name) {
  for (ScenarioKind k : {ScenarioKind::plastic_stack, ScenarioKind::water_immersion,
                         ScenarioKind::copper_stack, ScenarioKind::copper_plus_plastic,
                         ScenarioKind::water_plus_ferrite})
    if (name == scenario_name(k)) return k;
  throw DomainError("unknown scenario: " + std::string(name));
}

enum class NormalizeMode { abs_delta, shifted };

// abs_delta: |V_s - V_a| / |V_a|. shifted: 1 + (|V_s| - |V_a|) / |V_a|.
// Magnitude convention throughout: the instrument reports scalar channels.
inline double normalize(std::complex<double> v_sample, std::complex<double> v_air,
                        NormalizeMode mode) {
  const double a = std::abs(v_air);
  if (a == 0.0) throw DomainError("normalize: reference voltage is zero");
  if (mode == NormalizeMode::abs_delta) return std::abs(v_sample - v_air) / a;
  return 1.0 + (std::abs(v_sample) - a) / a;
}

// Shared parameter bag for the five replication sweeps. Frequencies default
// to 1 MHz for the common/simultaneous channels and 100 kHz for the
// differential channel; sample constants carry the standard bench values.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::plastic_stack;

  double frequency_common = 1e6;        // Hz
  double frequency_differential = 1e5;  // Hz
  double drive_current = 10e-3;         // A, differential drive amplitude

  double eps_plastic = 3.0;
  double eps_water = 80.0;
  double plastic_thickness = 1.5e-3;  // m per plate
  double plastic_extent = 65e-3;      // m, plate width across the section
  double foil_thickness = 60e-6;      // m per copper foil
  double copper_liftoff = 5e-3;       // m, gap to the copper sample
  double copper_sheet_thickness = 300e-6;
  double copper_sheet_extent = 50e-3;
  double water_height_per_ml = 0.1e-3;  // 1 mm of height per 10 mL
  double water_ml = 15.0;               // combined scenario fill
  double ferrite_mu = 600.0;            // NiZn-class default
  double ferrite_eps = 12.0;
  double ferrite_ring_thickness = 2e-3;  // m of stack height per ring
  double ferrite_extent = 10e-3;         // m, ring footprint in the section

  int plastic_layers = 4;
  int water_max_ml = 60;
  int water_step_ml = 10;
  int copper_layers = 5;
  int copper_plastic_layers = 3;
  int ferrite_rings = 3;

  CoilPairGeometry coil;
  QuadratureSpec quadrature;
  CrossSectionModel cross_section;  // base model; scenarios add sample layers
  InstrumentModel instrument;
  double sim_l1 = 320e-9;  // coil self-inductances for the dual-mode network
  double sim_l2 = 320e-9;
  std::complex<double> v_exc = 1.0;
};

inline ValidationReport validate_scenario(const ScenarioSpec& s) {
  ValidationReport rep;
  if (!(s.frequency_common > 0.0) || !(s.frequency_differential > 0.0))
    rep.violations.push_back("scenario: frequencies must be > 0");
  if (!(s.drive_current > 0.0)) rep.violations.push_back("scenario: drive current must be > 0");
  if (s.eps_plastic < 1.0 || s.eps_water < 1.0 || s.ferrite_eps < 1.0)
    rep.violations.push_back("scenario: relative permittivities must be >= 1");
  if (!(s.plastic_thickness > 0.0) || !(s.foil_thickness > 0.0) ||
      !(s.copper_sheet_thickness > 0.0) || !(s.ferrite_ring_thickness > 0.0))
    rep.violations.push_back("scenario: sample thicknesses must be > 0");
  if (!(s.copper_liftoff > 0.0)) rep.violations.push_back("scenario: copper lift-off must be > 0");
  if (!(s.water_height_per_ml > 0.0))
    rep.violations.push_back("scenario: water height per mL must be > 0");
  if (!(s.ferrite_mu > 0.0)) rep.violations.push_back("scenario: ferrite mu_r must be > 0");
  if (s.plastic_layers < 0 || s.copper_plastic_layers < 0 || s.ferrite_rings < 0)
    rep.violations.push_back("scenario: layer counts must be >= 0");
  if (s.copper_layers < 1) rep.violations.push_back("scenario: copper sweep needs >= 1 layer");
  if (s.water_max_ml < 0 || s.water_step_ml <= 0)
    rep.violations.push_back("scenario: water sweep bounds invalid");
  if (!s.cross_section.sample_layers.empty())
    rep.violations.push_back("scenario: base cross-section must not carry sample layers");
  if (static_cast<double>(s.copper_plastic_layers) * s.plastic_thickness >= s.copper_liftoff)
    rep.violations.push_back("scenario: plastic stack does not fit under the copper sample");
  for (const auto& v : validate_instrument(s.instrument).violations) rep.violations.push_back(v);
  return rep;
}

// One CSV row: a single channel readout at one sweep point.
struct ScenarioRow {
  double sweep_value = 0.0;
  std::string mode;  // "common" or "differential"
  std::complex<double> v;
  double c_m = std::numeric_limits<double>::quiet_NaN();  // NaN: channel has none
  double v_normalized = 0.0;
  std::string flags;  // semicolon-joined estimate markers
};

struct ScenarioResult {
  ScenarioKind kind = ScenarioKind::plastic_stack;
  std::string name;
  std::string normalization;  // "abs_delta" / "shifted"
  std::vector<ScenarioRow> rows;
  std::vector<std::string> notes;  // key=value solver settings for provenance
};

namespace detail {

inline std::string join_flags(std::vector<std::string> flags) {
  std::sort(flags.begin(), flags.end());
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ";";
    out += f;
  }
  return out;
}

// Estimate markers for defaulted parameters that the reference data does not
// pin down: instrument input, coil turn layout, section depth, drive level.
inline std::vector<std::string> estimate_flags(const ScenarioSpec& s, bool electrostatic_used,
                                               bool inductive_used) {
  std::vector<std::string> flags;
  if (s.instrument.estimated) flags.push_back("zs_estimate");
  if (electrostatic_used && s.cross_section.extrusion_length == default_extrusion_length())
    flags.push_back("extrusion_estimate");
  if (inductive_used) flags.push_back("coil_geometry_estimate");
  if (inductive_used && s.drive_current == 10e-3) flags.push_back("drive_estimate");
  return flags;
}

inline CrossSectionModel with_sample(const ScenarioSpec& s, std::vector<SampleLayer> layers) {
  CrossSectionModel m = s.cross_section;
  m.sample_layers = std::move(layers);
  return m;
}

// Single-capacitor series divider: the aggregate coupling against the
// instrument input, plus the capacitance recovered back from the tap voltage.
struct DividerReadout {
  std::complex<double> v;
  double c_m = 0.0;
};

inline DividerReadout divider_readout(double c_agg, const ScenarioSpec& s) {
  const double omega = 2.0 * std::numbers::pi * s.frequency_common;
  const std::complex<double> zs = instrument_zs(s.instrument, omega);
  const std::complex<double> z_cm = 1.0 / (std::complex<double>(0.0, omega) * c_agg);
  DividerReadout r;
  r.v = s.v_exc * zs / (zs + z_cm);
  r.c_m = extract_cm(r.v, s.v_exc, s.instrument, omega);
  return r;
}

inline void note_grid(ScenarioResult& out, const ScenarioSpec& s) {
  out.notes.push_back("grid_cell=" + std::to_string(s.cross_section.grid.cell));
  out.notes.push_back("extrusion_length=" + std::to_string(s.cross_section.extrusion_length));
}

inline void note_quadrature(ScenarioResult& out, const QuadratureSpec& q) {
  out.notes.push_back("alpha_points=" + std::to_string(q.alpha_points));
  out.notes.push_back("rel_tol=" + std::to_string(q.rel_tol));
}

}  // namespace detail

// Plastic plates stacked on the board: the common-mode capacitance climbs
// with each added plate.
inline ScenarioResult run_plastic_stack(const ScenarioSpec& spec = {}) {
  ScenarioSpec s = spec;
  s.kind = ScenarioKind::plastic_stack;
  require_valid(validate_scenario(s), "scenario");

  ScenarioResult out;
  out.kind = s.kind;
  out.name = scenario_name(s.kind);
  out.normalization = "shifted";
  detail::note_grid(out, s);
  const std::string flags = detail::join_flags(detail::estimate_flags(s, true, false));

  std::complex<double> v_air;
  for (int n = 0; n <= s.plastic_layers; ++n) {
    std::vector<SampleLayer> layers;
    for (int k = 0; k < n; ++k)
      layers.push_back({s.eps_plastic, s.plastic_thickness, s.plastic_extent, false});
    const double agg = coupling_table(detail::with_sample(s, std::move(layers))).aggregate;
    const detail::DividerReadout r = detail::divider_readout(agg, s);
    if (n == 0) v_air = r.v;
    out.rows.push_back({static_cast<double>(n), "common", r.v, r.c_m,
                        normalize(r.v, v_air, NormalizeMode::shifted), flags});
  }
  return out;
}

// Water poured over the coated sensor face, 1 mm of height per 10 mL.
inline ScenarioResult run_water_immersion(const ScenarioSpec& spec = {}) {
  ScenarioSpec s = spec;
  s.kind = ScenarioKind::water_immersion;
  require_valid(validate_scenario(s), "scenario");

  ScenarioResult out;
  out.kind = s.kind;
  out.name = scenario_name(s.kind);
  out.normalization = "shifted";
  detail::note_grid(out, s);
  const std::string flags = detail::join_flags(detail::estimate_flags(s, true, false));

  std::complex<double> v_air;
  for (int ml = 0; ml <= s.water_max_ml; ml += s.water_step_ml) {
    std::vector<SampleLayer> layers;
    if (ml > 0) layers.push_back({s.eps_water, ml * s.water_height_per_ml, 0.0, false});
    const double agg = coupling_table(detail::with_sample(s, std::move(layers))).aggregate;
    const detail::DividerReadout r = detail::divider_readout(agg, s);
    if (ml == 0) v_air = r.v;
    out.rows.push_back({static_cast<double>(ml), "common", r.v, r.c_m,
                        normalize(r.v, v_air, NormalizeMode::shifted), flags});
  }
  return out;
}

// Copper foils accumulating toward the sensor: each added foil thickens the
// stack and closes the air gap by its own thickness, so the pickup magnitude
// falls monotonically.
inline ScenarioResult run_copper_stack(const ScenarioSpec& spec = {}) {
  ScenarioSpec s = spec;
  s.kind = ScenarioKind::copper_stack;
  require_valid(validate_scenario(s), "scenario");

  const double omega = 2.0 * std::numbers::pi * s.frequency_differential;
  const std::complex<double> jwi =
      std::complex<double>(0.0, omega) * std::complex<double>(s.drive_current, 0.0);
  auto stacked = [&](int n) {
    PlateSample p;
    p.sigma = COPPER_SIGMA;
    p.mu_r = 1.0;
    p.c = n * s.foil_thickness;
    p.liftoff = s.copper_liftoff - (n - 1) * s.foil_thickness;
    return p;
  };

  MutualKernel kernel(s.coil, s.quadrature, {{stacked(1), omega}, {stacked(s.copper_layers), omega}});

  ScenarioResult out;
  out.kind = s.kind;
  out.name = scenario_name(s.kind);
  out.normalization = "abs_delta";
  detail::note_quadrature(out, kernel.effective_spec());
  const std::string flags = detail::join_flags(detail::estimate_flags(s, false, true));

  const std::complex<double> v_air = jwi * kernel.l_air();
  for (int n = 0; n <= s.copper_layers; ++n) {
    const std::complex<double> m =
        n == 0 ? std::complex<double>(kernel.l_air(), 0.0)
               : kernel.l_air() + kernel.delta_l(stacked(n), omega);
    const std::complex<double> v = jwi * m;
    out.rows.push_back({static_cast<double>(n), "differential", v,
                        std::numeric_limits<double>::quiet_NaN(),
                        normalize(v, v_air, NormalizeMode::abs_delta), flags});
  }
  return out;
}

// Plastic plates slid into the fixed gap under a floating copper sheet,
// solved in simultaneous mode: the differential channel holds still while
// the common channel climbs with each plate.
inline ScenarioResult run_copper_plus_plastic(const ScenarioSpec& spec = {}) {
  ScenarioSpec s = spec;
  s.kind = ScenarioKind::copper_plus_plastic;
  require_valid(validate_scenario(s), "scenario");

  const double omega = 2.0 * std::numbers::pi * s.frequency_common;

  // Inductive state: one copper sheet at the far side of the gap, behind the
  // board. Plastic is inductively inert, so one solve covers the sweep.
  PlateSample sheet;
  sheet.sigma = COPPER_SIGMA;
  sheet.mu_r = 1.0;
  sheet.c = s.copper_sheet_thickness;
  sheet.liftoff = s.cross_section.substrate_thickness + s.copper_liftoff;
  MutualKernel kernel(s.coil, s.quadrature, {{sheet, omega}});
  const std::complex<double> m_air(kernel.l_air(), 0.0);
  const std::complex<double> m_copper = m_air + kernel.delta_l(sheet, omega);

  auto readout = [&](std::complex<double> m, const Eigen::VectorXd& rows) {
    SimultaneousParams p;
    p.v_exc = s.v_exc;
    p.l1 = s.sim_l1;
    p.l2 = s.sim_l2;
    p.m = m;
    for (int k = 0; k < 6; ++k) p.c_couple[static_cast<std::size_t>(k)] = rows[k];
    p.instrument = s.instrument;
    return simultaneous_readout(p, omega);
  };

  const Eigen::VectorXd air_rows = coupling_table(s.cross_section).rx_tap;
  const ModeReadout air = readout(m_air, air_rows);

  ScenarioResult out;
  out.kind = s.kind;
  out.name = scenario_name(s.kind);
  out.normalization = "shifted";
  detail::note_grid(out, s);
  detail::note_quadrature(out, kernel.effective_spec());
  const std::string flags = detail::join_flags(detail::estimate_flags(s, true, true));

  for (int n = 0; n <= s.copper_plastic_layers; ++n) {
    std::vector<SampleLayer> layers;
    for (int k = 0; k < n; ++k)
      layers.push_back({s.eps_plastic, s.plastic_thickness, s.plastic_extent, false});
    const double spacer = s.copper_liftoff - n * s.plastic_thickness;
    layers.push_back({1.0, spacer, 0.0, false});
    layers.push_back({1.0, s.copper_sheet_thickness, s.copper_sheet_extent, true});
    const CouplingTable table = coupling_table(detail::with_sample(s, std::move(layers)));
    const ModeReadout r = readout(m_copper, table.rx_tap);

    out.rows.push_back({static_cast<double>(n), "differential", r.v_diff,
                        std::numeric_limits<double>::quiet_NaN(),
                        normalize(r.v_diff, air.v_diff, NormalizeMode::shifted), flags});
    out.rows.push_back({static_cast<double>(n), "common", r.v_common, r.c_m,
                        normalize(r.v_common, air.v_common, NormalizeMode::shifted), flags});
  }
  return out;
}

// Fixed 15 mL water fill, then ferrite rings added one at a time. Steps:
// 0 = bare sensor, 1 = water only, 1+r = water plus r rings. The common
// channel jumps with the water and barely moves with the rings; the
// differential channel responds only to the rings.
inline ScenarioResult run_water_plus_ferrite(const ScenarioSpec& spec = {}) {
  ScenarioSpec s = spec;
  s.kind = ScenarioKind::water_plus_ferrite;
  require_valid(validate_scenario(s), "scenario");

  const double omega_d = 2.0 * std::numbers::pi * s.frequency_differential;
  const std::complex<double> jwi =
      std::complex<double>(0.0, omega_d) * std::complex<double>(s.drive_current, 0.0);
  const double water_height = s.water_ml * s.water_height_per_ml;

  auto rings_plate = [&](int r) {
    PlateSample p;
    p.sigma = 0.0;
    p.mu_r = s.ferrite_mu;
    p.c = r * s.ferrite_ring_thickness;
    p.liftoff = s.cross_section.substrate_thickness + water_height;
    return p;
  };
  MutualKernel kernel(s.coil, s.quadrature, {{rings_plate(1), omega_d}});

  ScenarioResult out;
  out.kind = s.kind;
  out.name = scenario_name(s.kind);
  out.normalization = "shifted";
  detail::note_grid(out, s);
  detail::note_quadrature(out, kernel.effective_spec());
  std::vector<std::string> base_flags = detail::estimate_flags(s, true, true);
  base_flags.push_back("ferrite_mu_estimate");
  const std::string flags = detail::join_flags(std::move(base_flags));

  const std::complex<double> v_diff_air = jwi * kernel.l_air();
  std::complex<double> v_common_air;

  for (int step = 0; step <= 1 + s.ferrite_rings; ++step) {
    const bool water = step >= 1;
    const int rings = std::max(0, step - 1);

    std::vector<SampleLayer> layers;
    if (water) layers.push_back({s.eps_water, water_height, 0.0, false});
    if (rings > 0)
      layers.push_back({s.ferrite_eps, rings * s.ferrite_ring_thickness, s.ferrite_extent, false});
    const double agg = coupling_table(detail::with_sample(s, std::move(layers))).aggregate;
    const detail::DividerReadout common = detail::divider_readout(agg, s);
    if (step == 0) v_common_air = common.v;

    // Water is a lossless dielectric to the coils; only the rings reflect.
    const std::complex<double> m =
        rings > 0 ? kernel.l_air() + kernel.delta_l(rings_plate(rings), omega_d)
                  : std::complex<double>(kernel.l_air(), 0.0);
    const std::complex<double> v_diff = jwi * m;

    out.rows.push_back({static_cast<double>(step), "differential", v_diff,
                        std::numeric_limits<double>::quiet_NaN(),
                        normalize(v_diff, v_diff_air, NormalizeMode::shifted), flags});
    out.rows.push_back({static_cast<double>(step), "common", common.v, common.c_m,
                        normalize(common.v, v_common_air, NormalizeMode::shifted), flags});
  }
  return out;
}

inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
  switch (spec.kind) {
    case ScenarioKind::plastic_stack: return run_plastic_stack(spec);
    case ScenarioKind::water_immersion: return run_water_immersion(spec);
    case ScenarioKind::copper_stack: return run_copper_stack(spec);
    case ScenarioKind::copper_plus_plastic: return run_copper_plus_plastic(spec);
    case ScenarioKind::water_plus_ferrite: return run_water_plus_ferrite(spec);
  }
  throw DomainError("unknown scenario kind");
}

}  // namespace dualem
