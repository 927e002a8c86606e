#pragma once

#include <complex>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <dualem/circuit.hpp>
#include <dualem/electrostatic.hpp>
#include <dualem/errors.hpp>
#include <dualem/geometry.hpp>
#include <dualem/inductive.hpp>
#include <dualem/scenarios.hpp>

namespace dualem {

using Json = nlohmann::json;

// Full parameter tree with every configurable key and its default. The schema
// is closed: merging a user file or a --set override that names a key absent
// from this tree is an error, as is changing a value's type. All quantities
// are SI; complex values appear as re_/im_ pairs; excitation drives may be
// null, meaning "not driven this way".
inline Json default_config() {
  Json cfg;
  cfg["geometry"] = {
      {"r_e1", 2.5e-3}, {"r_e2", 18e-3}, {"r_p1", 2.5e-3}, {"r_p2", 18e-3},
      {"l_e1", 0.0},    {"l_e2", 35e-6}, {"l_p1", 0.0},    {"l_p2", 35e-6},
      {"n1", 8},        {"n2", 8},       {"w", 41e-3},
  };
  cfg["plate"] = {{"sigma", 0.0}, {"mu_r", 1.0}, {"c", 1e-3}, {"liftoff", 1.6e-3}};
  cfg["excitation"] = {{"frequency", 1e5}, {"current", 10e-3}, {"source_voltage", nullptr}};
  cfg["quadrature"] = {{"alpha_max", 0.0}, {"alpha_points", 12}, {"theta_points", 64},
                       {"rp_points", 32},  {"rel_tol", 1e-4},    {"refine_cap", 3}};
  cfg["sweep"] = {{"f_min", 1e3}, {"f_max", 1e7}, {"points", 13}};
  cfg["cross_section"] = {
      {"track_width", 4e-3},
      {"track_gap", 1e-3},
      {"pair_gap", 5e-3},
      {"per_side", 6},
      {"trace_thickness", 0.25e-3},
      {"substrate_thickness", 1.6e-3},
      {"substrate_eps", 4.4},
      {"liftoff", 1.6e-3},
      {"extrusion_length", default_extrusion_length()},
      {"grid",
       {{"x_min", -60e-3}, {"x_max", 60e-3}, {"y_min", -20e-3}, {"y_max", 40e-3},
        {"cell", 0.25e-3}}},
      {"sample_layers", Json::array()},
  };
  cfg["instrument"] = {{"zs_r", 1e6}, {"zs_c", 35e-12}, {"r1", 1e6}, {"r2", 1e6},
                       {"estimated", true}};
  cfg["circuit"] = {
      {"frequency", 1e6},
      {"simultaneous",
       {{"re_v_exc", 1.0},
        {"im_v_exc", 0.0},
        {"l1", 320e-9},
        {"l2", 320e-9},
        {"re_m", 20e-9},
        {"im_m", 0.0},
        {"r_track", default_track_segment_resistance()},
        {"c_couple", Json::array()}}},
      {"netlist",
       {{"resistors", Json::array()},
        {"capacitors", Json::array()},
        {"inductors", Json::array()},
        {"mutuals", Json::array()},
        {"voltage_sources", Json::array()},
        {"current_sources", Json::array()}}},
  };
  cfg["scenario"] = {
      {"name", "plastic_stack"},
      {"frequency_common", 1e6},
      {"frequency_differential", 1e5},
      {"drive_current", 10e-3},
      {"eps_plastic", 3.0},
      {"eps_water", 80.0},
      {"plastic_thickness", 1.5e-3},
      {"plastic_extent", 65e-3},
      {"foil_thickness", 60e-6},
      {"copper_liftoff", 5e-3},
      {"copper_sheet_thickness", 300e-6},
      {"copper_sheet_extent", 50e-3},
      {"water_height_per_ml", 0.1e-3},
      {"water_ml", 15.0},
      {"ferrite_mu", 600.0},
      {"ferrite_eps", 12.0},
      {"ferrite_ring_thickness", 2e-3},
      {"ferrite_extent", 10e-3},
      {"plastic_layers", 4},
      {"water_max_ml", 60},
      {"water_step_ml", 10},
      {"copper_layers", 5},
      {"copper_plastic_layers", 3},
      {"ferrite_rings", 3},
      {"sim_l1", 320e-9},
      {"sim_l2", 320e-9},
      {"re_v_exc", 1.0},
      {"im_v_exc", 0.0},
  };
  // Bench-measured sensor constants carried as metadata, never computed.
  cfg["metadata"] = {{"coil_self_inductance", 320e-9},
                     {"coil_mutual_inductance", 20e-9},
                     {"direct_coupling_capacitance", 1.56e-12}};
  return cfg;
}

namespace detail {

// Integers and floats merge freely; null pairs with numbers so optional
// drives can be set and cleared. Everything else must match kind exactly.
inline bool mergeable_kinds(const Json& base, const Json& over) {
  auto numeric = [](const Json& j) { return j.is_number() || j.is_null(); };
  if (numeric(base) && numeric(over)) return true;
  if (base.is_boolean() && over.is_boolean()) return true;
  if (base.is_string() && over.is_string()) return true;
  if (base.is_object() && over.is_object()) return true;
  if (base.is_array() && over.is_array()) return true;
  return false;
}

inline void merge_into(Json& base, const Json& over, const std::string& path) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ValidationError("config: unknown key '" + key + "'");
    Json& slot = base[it.key()];
    if (!mergeable_kinds(slot, it.value()))
      throw ValidationError("config: wrong value kind for '" + key + "'");
    if (slot.is_object())
      merge_into(slot, it.value(), key);
    else
      slot = it.value();  // scalars and arrays replace wholesale
  }
}

}  // namespace detail

// Strict deep-merge of an overlay onto the default tree: unknown keys and
// kind changes are rejected; arrays replace as a unit.
inline Json merge_config(Json base, const Json& overlay) {
  if (!overlay.is_object()) throw ValidationError("config: top level must be an object");
  detail::merge_into(base, overlay, "");
  return base;
}

inline Json parse_config_text(const std::string& text) {
  Json overlay;
  try {
    overlay = Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError(std::string("config: parse error: ") + e.what());
  }
  return merge_config(default_config(), overlay);
}

inline Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

// Applies one "dotted.path=value" override. The path must name an existing
// scalar; the value is parsed as JSON, falling back to a bare string.
inline void apply_override(Json& cfg, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("config: override must look like key.path=value: '" + spec + "'");
  const std::string path = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);

  Json* node = &cfg;
  std::size_t start = 0;
  std::vector<std::string> parts;
  while (true) {
    const std::size_t dot = path.find('.', start);
    parts.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
    if (!node->is_object() || !node->contains(parts[k]))
      throw ValidationError("config: unknown key '" + path + "'");
    node = &(*node)[parts[k]];
  }
  const std::string& leaf = parts.back();
  if (!node->is_object() || !node->contains(leaf))
    throw ValidationError("config: unknown key '" + path + "'");
  Json& slot = (*node)[leaf];
  if (slot.is_object() || slot.is_array())
    throw ValidationError("config: '" + path + "' is structured; overrides set scalars only");

  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::exception&) {
    value = text;  // unquoted strings arrive bare on the command line
  }
  if (!detail::mergeable_kinds(slot, value))
    throw ValidationError("config: wrong value kind for '" + path + "'");
  slot = std::move(value);
}

// FNV-1a over the canonical dump; object keys serialize sorted, so equal
// trees hash equal regardless of construction order.
inline std::string config_hash(const Json& cfg) {
  const std::string text = cfg.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace detail {

inline const Json& section(const Json& cfg, const char* name) {
  if (!cfg.contains(name)) throw ValidationError(std::string("config: missing section '") + name + "'");
  return cfg.at(name);
}

inline double num(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ValidationError(std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline int integer(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw ValidationError(std::string("config: '") + key + "' must be an integer");
  return j.at(key).get<int>();
}

inline bool boolean(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_boolean())
    throw ValidationError(std::string("config: '") + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

inline std::string text(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw ValidationError(std::string("config: '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline CoilPairGeometry geometry_from_config(const Json& cfg) {
  const Json& g = detail::section(cfg, "geometry");
  CoilPairGeometry out;
  out.r_e1 = detail::num(g, "r_e1");
  out.r_e2 = detail::num(g, "r_e2");
  out.r_p1 = detail::num(g, "r_p1");
  out.r_p2 = detail::num(g, "r_p2");
  out.l_e1 = detail::num(g, "l_e1");
  out.l_e2 = detail::num(g, "l_e2");
  out.l_p1 = detail::num(g, "l_p1");
  out.l_p2 = detail::num(g, "l_p2");
  out.n1 = detail::integer(g, "n1");
  out.n2 = detail::integer(g, "n2");
  out.w = detail::num(g, "w");
  return out;
}

inline PlateSample plate_from_config(const Json& cfg) {
  const Json& p = detail::section(cfg, "plate");
  PlateSample out;
  out.sigma = detail::num(p, "sigma");
  out.mu_r = detail::num(p, "mu_r");
  out.c = detail::num(p, "c");
  out.liftoff = detail::num(p, "liftoff");
  return out;
}

inline Excitation excitation_from_config(const Json& cfg) {
  const Json& e = detail::section(cfg, "excitation");
  Excitation out;
  out.frequency = detail::num(e, "frequency");
  if (e.contains("current") && e.at("current").is_number())
    out.current = std::complex<double>(e.at("current").get<double>(), 0.0);
  if (e.contains("source_voltage") && e.at("source_voltage").is_number())
    out.source_voltage = std::complex<double>(e.at("source_voltage").get<double>(), 0.0);
  return out;
}

inline QuadratureSpec quadrature_from_config(const Json& cfg) {
  const Json& q = detail::section(cfg, "quadrature");
  QuadratureSpec out;
  out.alpha_max = detail::num(q, "alpha_max");
  out.alpha_points = detail::integer(q, "alpha_points");
  out.theta_points = detail::integer(q, "theta_points");
  out.rp_points = detail::integer(q, "rp_points");
  out.rel_tol = detail::num(q, "rel_tol");
  out.refine_cap = detail::integer(q, "refine_cap");
  return out;
}

inline CrossSectionModel cross_section_from_config(const Json& cfg) {
  const Json& x = detail::section(cfg, "cross_section");
  CrossSectionModel out;
  out.traces = default_traces(detail::num(x, "track_width"), detail::num(x, "track_gap"),
                              detail::num(x, "pair_gap"), detail::integer(x, "per_side"));
  out.trace_thickness = detail::num(x, "trace_thickness");
  out.substrate_thickness = detail::num(x, "substrate_thickness");
  out.substrate_eps = detail::num(x, "substrate_eps");
  out.liftoff = detail::num(x, "liftoff");
  out.extrusion_length = detail::num(x, "extrusion_length");
  const Json& g = detail::section(x, "grid");
  out.grid.x_min = detail::num(g, "x_min");
  out.grid.x_max = detail::num(g, "x_max");
  out.grid.y_min = detail::num(g, "y_min");
  out.grid.y_max = detail::num(g, "y_max");
  out.grid.cell = detail::num(g, "cell");
  if (!x.contains("sample_layers") || !x.at("sample_layers").is_array())
    throw ValidationError("config: 'sample_layers' must be an array");
  for (const Json& l : x.at("sample_layers")) {
    if (!l.is_object()) throw ValidationError("config: sample layer must be an object");
    for (auto it = l.begin(); it != l.end(); ++it)
      if (it.key() != "eps_r" && it.key() != "thickness" && it.key() != "extent" &&
          it.key() != "floating")
        throw ValidationError("config: unknown sample layer key '" + it.key() + "'");
    SampleLayer layer;
    layer.eps_r = detail::num(l, "eps_r");
    layer.thickness = detail::num(l, "thickness");
    layer.extent = l.contains("extent") ? detail::num(l, "extent") : 0.0;
    layer.floating = l.contains("floating") ? detail::boolean(l, "floating") : false;
    out.sample_layers.push_back(layer);
  }
  return out;
}

inline InstrumentModel instrument_from_config(const Json& cfg) {
  const Json& i = detail::section(cfg, "instrument");
  InstrumentModel out;
  out.zs_r = detail::num(i, "zs_r");
  out.zs_c = detail::num(i, "zs_c");
  out.r1 = detail::num(i, "r1");
  out.r2 = detail::num(i, "r2");
  out.estimated = detail::boolean(i, "estimated");
  return out;
}

// Tap capacitances default to the cross-section model's split when the
// configured list is empty; a non-empty list must carry one entry per tap.
inline SimultaneousParams simultaneous_from_config(const Json& cfg) {
  const Json& s = detail::section(detail::section(cfg, "circuit"), "simultaneous");
  SimultaneousParams out;
  out.v_exc = {detail::num(s, "re_v_exc"), detail::num(s, "im_v_exc")};
  out.l1 = detail::num(s, "l1");
  out.l2 = detail::num(s, "l2");
  out.m = {detail::num(s, "re_m"), detail::num(s, "im_m")};
  out.r_track.fill(detail::num(s, "r_track"));
  out.instrument = instrument_from_config(cfg);
  const Json& taps = s.at("c_couple");
  if (!taps.is_array()) throw ValidationError("config: 'c_couple' must be an array");
  if (!taps.empty()) {
    if (taps.size() != out.c_couple.size())
      throw ValidationError("config: 'c_couple' needs exactly 6 entries");
    for (std::size_t k = 0; k < out.c_couple.size(); ++k) {
      if (!taps[k].is_number()) throw ValidationError("config: 'c_couple' entries must be numbers");
      out.c_couple[k] = taps[k].get<double>();
    }
  } else {
    out.c_couple.fill(0.0);
  }
  return out;
}

inline double circuit_frequency_from_config(const Json& cfg) {
  return detail::num(detail::section(cfg, "circuit"), "frequency");
}

inline bool netlist_empty(const Json& cfg) {
  const Json& n = detail::section(detail::section(cfg, "circuit"), "netlist");
  for (const auto& item : n.items())
    if (item.value().is_array() && !item.value().empty()) return false;
  return true;
}

inline ACNetwork netlist_from_config(const Json& cfg) {
  const Json& n = detail::section(detail::section(cfg, "circuit"), "netlist");
  auto im = [](const Json& e, const char* key) {
    return e.contains(key) ? detail::num(e, key) : 0.0;
  };
  ACNetwork net;
  for (const Json& e : n.at("resistors"))
    net.add_resistor(detail::text(e, "a"), detail::text(e, "b"), detail::num(e, "ohms"));
  for (const Json& e : n.at("capacitors"))
    net.add_capacitor(detail::text(e, "a"), detail::text(e, "b"), detail::num(e, "farads"));
  for (const Json& e : n.at("inductors"))
    net.add_inductor(detail::text(e, "name"), detail::text(e, "a"), detail::text(e, "b"),
                     detail::num(e, "henries"));
  for (const Json& e : n.at("mutuals"))
    net.add_mutual(detail::text(e, "first"), detail::text(e, "second"),
                   {detail::num(e, "re_henries"), im(e, "im_henries")});
  for (const Json& e : n.at("voltage_sources"))
    net.add_voltage_source(detail::text(e, "a"), detail::text(e, "b"),
                           {detail::num(e, "re_volts"), im(e, "im_volts")});
  for (const Json& e : n.at("current_sources"))
    net.add_current_source(detail::text(e, "a"), detail::text(e, "b"),
                           {detail::num(e, "re_amps"), im(e, "im_amps")});
  return net;
}

inline ScenarioSpec scenario_from_config(const Json& cfg) {
  const Json& s = detail::section(cfg, "scenario");
  ScenarioSpec out;
  out.kind = scenario_from_name(detail::text(s, "name"));
  out.frequency_common = detail::num(s, "frequency_common");
  out.frequency_differential = detail::num(s, "frequency_differential");
  out.drive_current = detail::num(s, "drive_current");
  out.eps_plastic = detail::num(s, "eps_plastic");
  out.eps_water = detail::num(s, "eps_water");
  out.plastic_thickness = detail::num(s, "plastic_thickness");
  out.plastic_extent = detail::num(s, "plastic_extent");
  out.foil_thickness = detail::num(s, "foil_thickness");
  out.copper_liftoff = detail::num(s, "copper_liftoff");
  out.copper_sheet_thickness = detail::num(s, "copper_sheet_thickness");
  out.copper_sheet_extent = detail::num(s, "copper_sheet_extent");
  out.water_height_per_ml = detail::num(s, "water_height_per_ml");
  out.water_ml = detail::num(s, "water_ml");
  out.ferrite_mu = detail::num(s, "ferrite_mu");
  out.ferrite_eps = detail::num(s, "ferrite_eps");
  out.ferrite_ring_thickness = detail::num(s, "ferrite_ring_thickness");
  out.ferrite_extent = detail::num(s, "ferrite_extent");
  out.plastic_layers = detail::integer(s, "plastic_layers");
  out.water_max_ml = detail::integer(s, "water_max_ml");
  out.water_step_ml = detail::integer(s, "water_step_ml");
  out.copper_layers = detail::integer(s, "copper_layers");
  out.copper_plastic_layers = detail::integer(s, "copper_plastic_layers");
  out.ferrite_rings = detail::integer(s, "ferrite_rings");
  out.sim_l1 = detail::num(s, "sim_l1");
  out.sim_l2 = detail::num(s, "sim_l2");
  out.v_exc = {detail::num(s, "re_v_exc"), detail::num(s, "im_v_exc")};
  out.coil = geometry_from_config(cfg);
  out.quadrature = quadrature_from_config(cfg);
  out.cross_section = cross_section_from_config(cfg);
  out.instrument = instrument_from_config(cfg);
  return out;
}

}  // namespace dualem
