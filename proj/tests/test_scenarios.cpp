#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "dualem/scenarios.hpp"

using namespace dualem;
using Complex = std::complex<double>;

namespace {

std::vector<const ScenarioRow*> rows_of(const ScenarioResult& r, const std::string& mode) {
  std::vector<const ScenarioRow*> out;
  for (const auto& row : r.rows)
    if (row.mode == mode) out.push_back(&row);
  return out;
}

}  // namespace

TEST_CASE("normalization modes follow their definitions", "[scenarios]") {
  const Complex v(0.30, -0.40);
  CHECK(normalize(v, v, NormalizeMode::abs_delta) == 0.0);
  CHECK(normalize(v, v, NormalizeMode::shifted) == 1.0);

  // Equal-magnitude phasors a quarter turn apart: the complex difference
  // registers in abs_delta, the magnitude convention keeps shifted at 1.
  const Complex rot = v * Complex(0.0, 1.0);
  CHECK(std::abs(normalize(rot, v, NormalizeMode::abs_delta) - std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(normalize(rot, v, NormalizeMode::shifted) - 1.0) < 1e-12);

  CHECK(std::abs(normalize(Complex(1.1, 0.0), Complex(1.0, 0.0), NormalizeMode::shifted) - 1.1) <
        1e-12);
  CHECK_THROWS_AS(normalize(v, Complex(0.0, 0.0), NormalizeMode::abs_delta), DomainError);
}

TEST_CASE("scenario names round-trip", "[scenarios]") {
  for (ScenarioKind k : {ScenarioKind::plastic_stack, ScenarioKind::water_immersion,
                         ScenarioKind::copper_stack, ScenarioKind::copper_plus_plastic,
                         ScenarioKind::water_plus_ferrite})
    CHECK(scenario_from_name(scenario_name(k)) == k);
  CHECK_THROWS_AS(scenario_from_name("unknown"), DomainError);
}

TEST_CASE("scenario validation rejects unusable setups", "[scenarios]") {
  ScenarioSpec bad;
  bad.plastic_layers = -1;
  CHECK_FALSE(validate_scenario(bad).ok());
  CHECK_THROWS_AS(run_plastic_stack(bad), ValidationError);

  ScenarioSpec tight;
  tight.copper_plastic_layers = 4;  // 6 mm of plastic cannot fit a 5 mm gap
  CHECK_FALSE(validate_scenario(tight).ok());

  ScenarioSpec dirty;
  dirty.cross_section.sample_layers.push_back({3.0, 1e-3, 0.0, false});
  CHECK_FALSE(validate_scenario(dirty).ok());
}

TEST_CASE("plastic stack raises the common capacitance plate by plate", "[scenarios]") {
  const ScenarioResult r = run_plastic_stack();
  REQUIRE(r.rows.size() == 5);
  CHECK(r.normalization == "shifted");

  const ScenarioRow& air = r.rows.front();
  CHECK(air.mode == "common");
  CHECK(air.v_normalized == 1.0);
  CHECK(air.c_m > 0.938e-12);
  CHECK(air.c_m < 1.742e-12);
  CHECK(air.flags.find("zs_estimate") != std::string::npos);
  CHECK(air.flags.find("extrusion_estimate") != std::string::npos);

  for (std::size_t k = 1; k < r.rows.size(); ++k) CHECK(r.rows[k].c_m > r.rows[k - 1].c_m);

  CHECK(air.c_m > 1.005e-12);
  CHECK(air.c_m < 1.675e-12);
  CHECK(r.rows.back().c_m > 1.275e-12);
  CHECK(r.rows.back().c_m < 2.125e-12);
}

TEST_CASE("scenario sweeps are deterministic", "[scenarios]") {
  const ScenarioResult a = run_plastic_stack();
  const ScenarioResult b = run_plastic_stack();
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].v == b.rows[k].v);
    CHECK(a.rows[k].c_m == b.rows[k].c_m);
    CHECK(a.rows[k].v_normalized == b.rows[k].v_normalized);
  }
}

TEST_CASE("water immersion outruns the plastic stack", "[scenarios]") {
  const ScenarioResult water = run_water_immersion();
  REQUIRE(water.rows.size() == 7);
  CHECK(water.rows.front().sweep_value == 0.0);
  CHECK(water.rows.back().sweep_value == 60.0);

  for (std::size_t k = 1; k < water.rows.size(); ++k)
    CHECK(water.rows[k].c_m > water.rows[k - 1].c_m);

  const ScenarioResult plastic = run_plastic_stack();
  CHECK(water.rows.front().c_m == plastic.rows.front().c_m);
  const double water_change = water.rows.back().c_m - water.rows.front().c_m;
  const double plastic_change = plastic.rows.back().c_m - plastic.rows.front().c_m;
  CHECK(water_change > plastic_change);
}

TEST_CASE("copper foils cut the pickup voltage foil by foil", "[scenarios]") {
  const ScenarioResult r = run_copper_stack();
  REQUIRE(r.rows.size() == 6);
  CHECK(r.normalization == "abs_delta");
  CHECK(r.rows.front().v_normalized == 0.0);
  CHECK(std::isnan(r.rows.front().c_m));
  for (const auto& row : r.rows) CHECK(row.mode == "differential");
  for (std::size_t k = 1; k < r.rows.size(); ++k)
    CHECK(std::abs(r.rows[k].v) < std::abs(r.rows[k - 1].v));
}

TEST_CASE("copper sweep is quadrature converged", "[scenarios]") {
  const ScenarioResult base = run_copper_stack();
  ScenarioSpec refined;
  refined.quadrature.alpha_points = 24;
  refined.quadrature.theta_points = 128;
  refined.quadrature.rp_points = 64;
  const ScenarioResult fine = run_copper_stack(refined);
  REQUIRE(base.rows.size() == fine.rows.size());
  for (std::size_t k = 0; k < base.rows.size(); ++k) {
    const double rel = std::abs(base.rows[k].v - fine.rows[k].v) / std::abs(fine.rows[k].v);
    CHECK(rel < 0.01);
  }
}

TEST_CASE("plastic under copper moves only the common channel", "[scenarios]") {
  const ScenarioResult r = run_copper_plus_plastic();
  const auto diff = rows_of(r, "differential");
  const auto common = rows_of(r, "common");
  REQUIRE(diff.size() == 4);
  REQUIRE(common.size() == 4);

  double lo = diff.front()->v_normalized, hi = lo;
  for (const auto* row : diff) {
    lo = std::min(lo, row->v_normalized);
    hi = std::max(hi, row->v_normalized);
    CHECK(std::isnan(row->c_m));
  }
  CHECK((hi - lo) / hi < 0.02);

  for (std::size_t k = 1; k < common.size(); ++k) {
    CHECK(common[k]->v_normalized > common[k - 1]->v_normalized);
    CHECK(common[k]->c_m > common[k - 1]->c_m);
  }
  // The floating sheet couples the sides: the copper-only baseline already
  // sits above the bare-sensor reference.
  CHECK(common.front()->v_normalized > 1.0);
}

TEST_CASE("water dominates the common channel, ferrite the differential", "[scenarios]") {
  const ScenarioResult r = run_water_plus_ferrite();
  const auto diff = rows_of(r, "differential");
  const auto common = rows_of(r, "common");
  REQUIRE(diff.size() == 5);
  REQUIRE(common.size() == 5);

  // Water is invisible to the coils: the first two differential rows agree
  // exactly; every added ring lifts the pickup above the baseline.
  CHECK(diff[1]->v == diff[0]->v);
  CHECK(diff[1]->v_normalized == 1.0);
  for (std::size_t k = 2; k < diff.size(); ++k) CHECK(diff[k]->v_normalized > 1.0);

  const double water_change = common[1]->c_m - common[0]->c_m;
  const double ferrite_change = common.back()->c_m - common[1]->c_m;
  CHECK(water_change > 0.0);
  CHECK(ferrite_change >= 0.0);
  CHECK(water_change >= 10.0 * ferrite_change);
  CHECK(ferrite_change < 0.10 * water_change);

  for (const auto* row : common) CHECK(row->flags.find("ferrite_mu_estimate") != std::string::npos);
}
