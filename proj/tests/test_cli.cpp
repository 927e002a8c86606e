#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Spawns the installed binary through the shell, capturing both streams.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / "dualem_cli_capture";
  fs::create_directories(dir);
  const fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string(DUALEM_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("dualem_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> lines;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("usage problems exit 64", "[cli]") {
  CHECK(run_cli("").code == 64);
  CHECK(run_cli("transmogrify").code == 64);
  CHECK(run_cli("inductive --no-such-flag").code == 64);
  CHECK(run_cli("scenario underwater_basket").code == 64);
  const RunResult help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(help.out.find("scenario") != std::string::npos);
}

TEST_CASE("missing config file exits 2 and names the path", "[cli]") {
  const RunResult r = run_cli("scenario plastic_stack --config /no/such/dualem.json");
  CHECK(r.code == 2);
  CHECK(r.err.find("/no/such/dualem.json") != std::string::npos);
}

TEST_CASE("config violations exit 1", "[cli]") {
  CHECK(run_cli("inductive --set nosuch.key=1").code == 1);
  CHECK(run_cli("capacitive --set cross_section.per_side=0").code == 1);
  CHECK(run_cli("circuit --set circuit.frequency=-5").code == 1);
}

TEST_CASE("plastic stack scenario writes five rows with the fixed header", "[cli]") {
  const fs::path dir = fresh_dir("plastic");
  const RunResult r = run_cli("scenario plastic_stack --quiet --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());  // --quiet suppresses progress lines
  const std::string csv = slurp(dir / "scenario_plastic_stack.csv");
  const auto lines = data_lines(csv);
  REQUIRE(lines.size() == 6);  // header + air + four layers
  CHECK(lines[0] == "sweep_value,mode,re_V,im_V,C_m_F,V_normalized,flags");
  CHECK(lines[1].rfind("0,common,", 0) == 0);
  CHECK(csv.find("# config_hash=") != std::string::npos);
  CHECK(csv.find("estimates=") != std::string::npos);
}

TEST_CASE("scenario reruns are bit-identical", "[cli]") {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  REQUIRE(run_cli("scenario plastic_stack --quiet --out " + a.string()).code == 0);
  REQUIRE(run_cli("scenario plastic_stack --quiet --out " + b.string()).code == 0);
  const std::string first = slurp(a / "scenario_plastic_stack.csv");
  CHECK_FALSE(first.empty());
  CHECK(first == slurp(b / "scenario_plastic_stack.csv"));
}

TEST_CASE("validate reports a pass table and exits 0", "[cli]") {
  const RunResult r = run_cli("validate");
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("all checks passed") != std::string::npos);
}

TEST_CASE("capacitive emits the matrix with segment-name headers", "[cli]") {
  const fs::path dir = fresh_dir("cap");
  const RunResult r = run_cli("capacitive --quiet --out " + dir.string());
  REQUIRE(r.code == 0);
  const std::string matrix = slurp(dir / "capacitance_matrix.csv");
  const auto lines = data_lines(matrix);
  REQUIRE_FALSE(lines.empty());
  CHECK(lines[0].rfind("segment,T_A,T_B", 0) == 0);
  CHECK(lines[0].find("D_F") != std::string::npos);
  REQUIRE(lines.size() == 13);  // header + 12 conductors
  CHECK(lines[1].rfind("T_A,", 0) == 0);

  const std::string table = slurp(dir / "coupling_table.csv");
  CHECK(data_lines(table)[0] == "quantity,segment,value_F");
  CHECK(table.find("rx_tap") != std::string::npos);
  CHECK(table.find("# aggregate_F=") != std::string::npos);

  CHECK(data_lines(slurp(dir / "field_phi.csv"))[0] == "x,y,phi_V");
  CHECK(data_lines(slurp(dir / "sensitivity.csv"))[0] == "x,y,sensitivity");
}

TEST_CASE("circuit readout with explicit taps emits one row", "[cli]") {
  const fs::path dir = fresh_dir("circuit");
  const fs::path cfg = dir / "taps.json";
  std::ofstream(cfg) << R"({"circuit": {"simultaneous": {"c_couple":
    [873.8e-15, 160.1e-15, 92.9e-15, 65.4e-15, 53.0e-15, 91.3e-15]}}})";
  const RunResult r =
      run_cli("circuit --quiet --config " + cfg.string() + " --out " + dir.string());
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "circuit_readout.csv");
  const auto lines = data_lines(csv);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "frequency_Hz,re_v_diff,im_v_diff,re_v_common,im_v_common,C_m_F");
  CHECK(csv.find("# taps=configured") != std::string::npos);
  // Open-loop differential ratio m/l1 = 1/16 of the 1 V drive.
  const double re_v_diff = std::stod(lines[1].substr(lines[1].find(',') + 1));
  CHECK(std::abs(re_v_diff - 0.0625) < 0.001);
}

TEST_CASE("circuit netlist mode solves node voltages", "[cli]") {
  const fs::path dir = fresh_dir("netlist");
  const fs::path cfg = dir / "net.json";
  std::ofstream(cfg) << R"({"circuit": {"frequency": 1000.0, "netlist": {
    "resistors": [{"a": "in", "b": "out", "ohms": 1000.0}],
    "capacitors": [{"a": "out", "b": "gnd", "farads": 1e-6}],
    "voltage_sources": [{"a": "in", "b": "gnd", "re_volts": 1.0}]}}})";
  const RunResult r =
      run_cli("circuit --quiet --config " + cfg.string() + " --out " + dir.string());
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "circuit_nodes.csv");
  const auto lines = data_lines(csv);
  CHECK(lines[0] == "node,re_V,im_V");
  bool has_out = false;
  for (const auto& l : lines)
    if (l.rfind("out,", 0) == 0) has_out = true;
  CHECK(has_out);
}

TEST_CASE("inductive sweep emits the requested points", "[cli]") {
  const fs::path dir = fresh_dir("inductive");
  const RunResult r = run_cli("inductive --quiet --set sweep.points=2 --set sweep.f_max=1e6 --out " +
                              dir.string());
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "inductive.csv");
  const auto lines = data_lines(csv);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "frequency_Hz,re_M_H,im_M_H,re_delta_L_H,im_delta_L_H,re_V,im_V");
  CHECK(lines[1].rfind("1000,", 0) == 0);
  CHECK(lines[2].rfind("1000000,", 0) == 0);
  CHECK(csv.find("# re_M_free_H=") != std::string::npos);
  CHECK(csv.find("coil_geometry_estimate") != std::string::npos);
}

TEST_CASE("plot flag adds an svg next to the csv", "[cli]") {
  const fs::path dir = fresh_dir("plot");
  REQUIRE(run_cli("scenario plastic_stack --quiet --plot --out " + dir.string()).code == 0);
  const std::string svg = slurp(dir / "scenario_plastic_stack.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}
