#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dualem/constants.hpp"
#include "dualem/geometry.hpp"

using dualem::CoilPairGeometry;
using dualem::Excitation;
using dualem::PlateSample;
using dualem::sensor_default;
using dualem::validate_excitation;
using dualem::validate_geometry;
using dualem::validate_plate;

TEST_CASE("constants have their fixed values", "[core]") {
  CHECK(dualem::MU_0 == 4.0 * std::numbers::pi * 1e-7);
  CHECK(dualem::EPS_0 == 8.854e-12);
}

TEST_CASE("default sensor geometry validates cleanly", "[core]") {
  const auto rep = validate_geometry(sensor_default());
  CHECK(rep.ok());
  CHECK(rep.violations.empty());
}

TEST_CASE("degenerate radial extent is reported", "[core]") {
  CoilPairGeometry g = sensor_default();
  g.r_e1 = g.r_e2;
  const auto rep = validate_geometry(g);
  REQUIRE_FALSE(rep.ok());
  bool found = false;
  for (const auto& v : rep.violations) {
    if (v.find("degenerate radial extent") != std::string::npos) found = true;
  }
  CHECK(found);
}

TEST_CASE("coaxial spacing w = 0 is valid", "[core]") {
  CoilPairGeometry g = sensor_default();
  g.w = 0.0;
  CHECK(validate_geometry(g).ok());
}

TEST_CASE("geometry invariants are each enforced", "[core]") {
  CoilPairGeometry g = sensor_default();
  g.n1 = 0;
  CHECK_FALSE(validate_geometry(g).ok());

  g = sensor_default();
  g.w = -1e-3;
  CHECK_FALSE(validate_geometry(g).ok());

  g = sensor_default();
  g.l_p2 = g.l_p1;
  CHECK_FALSE(validate_geometry(g).ok());

  g = sensor_default();
  g.r_e1 = -1e-3;
  CHECK_FALSE(validate_geometry(g).ok());
}

TEST_CASE("plate validation", "[core]") {
  PlateSample p;
  CHECK(validate_plate(p).ok());
  p.sigma = -1.0;
  CHECK_FALSE(validate_plate(p).ok());
  p = PlateSample{};
  p.c = 0.0;
  CHECK_FALSE(validate_plate(p).ok());
  p = PlateSample{};
  p.mu_r = 0.0;
  CHECK_FALSE(validate_plate(p).ok());
  p = PlateSample{};
  p.liftoff = -1e-3;
  CHECK_FALSE(validate_plate(p).ok());
}

TEST_CASE("excitation requires exactly one drive", "[core]") {
  Excitation e;
  e.frequency = 1e5;
  CHECK_FALSE(validate_excitation(e).ok());  // no drive at all
  e.current = std::complex<double>(0.01, 0.0);
  CHECK(validate_excitation(e).ok());
  e.source_voltage = std::complex<double>(1.0, 0.0);
  CHECK_FALSE(validate_excitation(e).ok());  // both set
  e.current.reset();
  CHECK(validate_excitation(e).ok());
  e.frequency = 0.0;
  CHECK_FALSE(validate_excitation(e).ok());
}

TEST_CASE("validation report joins messages", "[core]") {
  CoilPairGeometry g = sensor_default();
  g.r_e1 = g.r_e2;
  g.n1 = 0;
  const auto rep = validate_geometry(g);
  CHECK(rep.violations.size() == 2);
  CHECK(rep.joined().find(";") != std::string::npos);
}

#include "dualem/config.hpp"
#include "dualem/io.hpp"

using dualem::apply_override;
using dualem::config_hash;
using dualem::default_config;
using dualem::format_sig;
using dualem::Json;
using dualem::merge_config;
using dualem::parse_config_text;

TEST_CASE("default config round-trips into the default structs", "[core]") {
  const Json cfg = default_config();

  const CoilPairGeometry g = dualem::geometry_from_config(cfg);
  const CoilPairGeometry gd;
  CHECK(g.r_e1 == gd.r_e1);
  CHECK(g.r_e2 == gd.r_e2);
  CHECK(g.l_e2 == gd.l_e2);
  CHECK(g.n1 == gd.n1);
  CHECK(g.n2 == gd.n2);
  CHECK(g.w == gd.w);

  const PlateSample p = dualem::plate_from_config(cfg);
  const PlateSample pd;
  CHECK(p.sigma == pd.sigma);
  CHECK(p.mu_r == pd.mu_r);
  CHECK(p.c == pd.c);
  CHECK(p.liftoff == pd.liftoff);

  const dualem::QuadratureSpec q = dualem::quadrature_from_config(cfg);
  const dualem::QuadratureSpec qd;
  CHECK(q.alpha_points == qd.alpha_points);
  CHECK(q.theta_points == qd.theta_points);
  CHECK(q.rp_points == qd.rp_points);
  CHECK(q.rel_tol == qd.rel_tol);

  const dualem::CrossSectionModel x = dualem::cross_section_from_config(cfg);
  const dualem::CrossSectionModel xd;
  CHECK(x.traces.size() == xd.traces.size());
  CHECK(x.trace_thickness == xd.trace_thickness);
  CHECK(x.substrate_eps == xd.substrate_eps);
  CHECK(x.extrusion_length == xd.extrusion_length);
  CHECK(x.grid.cell == xd.grid.cell);
  CHECK(x.sample_layers.empty());

  const dualem::InstrumentModel i = dualem::instrument_from_config(cfg);
  const dualem::InstrumentModel id;
  CHECK(i.zs_r == id.zs_r);
  CHECK(i.zs_c == id.zs_c);
  CHECK(i.estimated == id.estimated);

  const dualem::SimultaneousParams s = dualem::simultaneous_from_config(cfg);
  CHECK(s.l1 == 320e-9);
  CHECK(s.l2 == 320e-9);
  CHECK(s.m == std::complex<double>(20e-9, 0.0));
  for (double c : s.c_couple) CHECK(c == 0.0);  // empty list: derive downstream

  const dualem::ScenarioSpec sc = dualem::scenario_from_config(cfg);
  const dualem::ScenarioSpec sd;
  CHECK(sc.kind == sd.kind);
  CHECK(sc.frequency_common == sd.frequency_common);
  CHECK(sc.plastic_layers == sd.plastic_layers);
  CHECK(sc.sim_l1 == sd.sim_l1);
  CHECK(sc.v_exc == sd.v_exc);
  CHECK(dualem::validate_scenario(sc).ok());
}

TEST_CASE("config merge is strict about keys and kinds", "[core]") {
  CHECK_THROWS_AS(merge_config(default_config(), Json{{"geomtry", Json::object()}}),
                  dualem::ValidationError);
  CHECK_THROWS_AS(merge_config(default_config(), Json{{"geometry", {{"r_e9", 1.0}}}}),
                  dualem::ValidationError);
  CHECK_THROWS_AS(merge_config(default_config(), Json{{"geometry", {{"r_e1", "wide"}}}}),
                  dualem::ValidationError);
  CHECK_THROWS_AS(merge_config(default_config(), Json{{"plate", 3.0}}),
                  dualem::ValidationError);

  // Numbers merge across the int/float split; deep keys land in place.
  const Json merged =
      merge_config(default_config(), Json{{"geometry", {{"n1", 4}, {"r_e1", 3e-3}}},
                                          {"circuit", {{"simultaneous", {{"l1", 5e-7}}}}}});
  CHECK(dualem::geometry_from_config(merged).n1 == 4);
  CHECK(dualem::geometry_from_config(merged).r_e1 == 3e-3);
  CHECK(dualem::simultaneous_from_config(merged).l1 == 5e-7);
  CHECK(dualem::simultaneous_from_config(merged).l2 == 320e-9);  // untouched sibling
}

TEST_CASE("excitation drives honor null as not driven", "[core]") {
  Json cfg = merge_config(default_config(),
                          Json{{"excitation", {{"current", nullptr}, {"source_voltage", 1.0}}}});
  Excitation e = dualem::excitation_from_config(cfg);
  CHECK_FALSE(e.current.has_value());
  REQUIRE(e.source_voltage.has_value());
  CHECK(e.source_voltage->real() == 1.0);
  CHECK(validate_excitation(e).ok());

  // Default drives a current and leaves the voltage source off.
  e = dualem::excitation_from_config(default_config());
  REQUIRE(e.current.has_value());
  CHECK_FALSE(e.source_voltage.has_value());
}

TEST_CASE("overrides set scalars by dotted path", "[core]") {
  Json cfg = default_config();
  apply_override(cfg, "plate.sigma=5.8e7");
  CHECK(dualem::plate_from_config(cfg).sigma == 5.8e7);
  apply_override(cfg, "scenario.name=copper_stack");
  CHECK(dualem::scenario_from_config(cfg).kind == dualem::ScenarioKind::copper_stack);
  apply_override(cfg, "excitation.current=null");
  apply_override(cfg, "excitation.source_voltage=2.5");
  CHECK_FALSE(dualem::excitation_from_config(cfg).current.has_value());

  CHECK_THROWS_AS(apply_override(cfg, "plate.rho=1"), dualem::ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "plate=1"), dualem::ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "plate.sigma"), dualem::ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "plate.sigma=high"), dualem::ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "scenario.name=3"), dualem::ValidationError);
}

TEST_CASE("config hash is stable and value-sensitive", "[core]") {
  const std::string base = config_hash(default_config());
  CHECK(base.size() == 16);
  CHECK(base == config_hash(default_config()));

  Json cfg = default_config();
  apply_override(cfg, "plate.sigma=1.0");
  CHECK(config_hash(cfg) != base);
  // Merging an explicit default is a no-op for the hash.
  const Json same = merge_config(default_config(), Json{{"plate", {{"mu_r", 1.0}}}});
  CHECK(config_hash(same) == base);
}

TEST_CASE("config text parsing reports bad syntax as an io failure", "[core]") {
  CHECK_THROWS_AS(parse_config_text("{not json"), dualem::IoError);
  CHECK_THROWS_AS(dualem::load_config("/nonexistent/path.json"), dualem::IoError);
  const Json cfg = parse_config_text("{\"plate\": {\"sigma\": 2.0}}");
  CHECK(dualem::plate_from_config(cfg).sigma == 2.0);
}

TEST_CASE("netlist config builds an analyzable network", "[core]") {
  CHECK(dualem::netlist_empty(default_config()));
  const char* text = R"({
    "circuit": {
      "frequency": 1000.0,
      "netlist": {
        "resistors": [{"a": "in", "b": "out", "ohms": 1000.0}],
        "capacitors": [{"a": "out", "b": "gnd", "farads": 1e-6}],
        "voltage_sources": [{"a": "in", "b": "gnd", "re_volts": 1.0}]
      }
    }
  })";
  const Json cfg = parse_config_text(text);
  CHECK_FALSE(dualem::netlist_empty(cfg));
  dualem::ACNetwork net = dualem::netlist_from_config(cfg);
  const auto sol = dualem::mna_solve(net, 2.0 * std::numbers::pi * 1000.0);
  const std::complex<double> v_out = sol.at("out");
  const std::complex<double> zc =
      1.0 / (std::complex<double>(0.0, 2.0 * std::numbers::pi * 1000.0 * 1e-6));
  const std::complex<double> expect = zc / (zc + 1000.0);
  CHECK(std::abs(v_out - expect) < 1e-10 * std::abs(expect));
}

TEST_CASE("sample layers parse with defaults and reject unknown keys", "[core]") {
  const char* text = R"({
    "cross_section": {
      "sample_layers": [
        {"eps_r": 3.0, "thickness": 1.5e-3, "extent": 65e-3},
        {"eps_r": 1.0, "thickness": 60e-6, "floating": true}
      ]
    }
  })";
  const dualem::CrossSectionModel m = dualem::cross_section_from_config(parse_config_text(text));
  REQUIRE(m.sample_layers.size() == 2);
  CHECK(m.sample_layers[0].eps_r == 3.0);
  CHECK(m.sample_layers[0].extent == 65e-3);
  CHECK_FALSE(m.sample_layers[0].floating);
  CHECK(m.sample_layers[1].floating);
  CHECK(m.sample_layers[1].extent == 0.0);

  Json bad = default_config();
  bad["cross_section"]["sample_layers"] = Json::array({Json{{"eps", 3.0}, {"thickness", 1e-3}}});
  CHECK_THROWS_AS(dualem::cross_section_from_config(bad), dualem::ValidationError);
}

TEST_CASE("numeric formatting is deterministic at 12 digits", "[core]") {
  CHECK(format_sig(0.0) == "0");
  CHECK(format_sig(1.0) == "1");
  CHECK(format_sig(-2.5) == "-2.5");
  CHECK(format_sig(1.0 / 3.0) == "0.333333333333");
  CHECK(format_sig(1.2345678901234e-7) == format_sig(1.2345678901234e-7));
  CHECK(format_sig(std::numeric_limits<double>::quiet_NaN()) == "nan");
  // Round-trip at 12 digits is lossy only below the printed precision.
  const double v = 3.14159265358979e3;
  CHECK(format_sig(v) == "3141.59265359");
}

TEST_CASE("csv documents render provenance then header then rows", "[core]") {
  dualem::CsvDocument doc;
  doc.provenance = {"config_hash=deadbeef", "estimates=zs"};
  doc.columns = {"a", "b"};
  doc.rows = {{"1", "2"}, {"3", "4"}};
  const std::string text = doc.str();
  CHECK(text ==
        "# config_hash=deadbeef\n# estimates=zs\na,b\n1,2\n3,4\n");
  doc.rows.push_back({"5"});
  CHECK_THROWS_AS(doc.str(), dualem::IoError);
}
