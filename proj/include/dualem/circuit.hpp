#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <dualem/constants.hpp>
#include <dualem/errors.hpp>
#include <dualem/geometry.hpp>

namespace dualem {

// Lumped AC network solved by modified nodal analysis. Two-terminal elements
// reference nodes by name; the ground node pins the potential reference.
// Mutual couplings pair named inductors, dotted at each inductor's 'a'
// terminal, so currents entering both 'a' terminals couple with +M.
struct ACNetwork {
  struct Resistor {
    std::string a, b;
    double ohms = 0.0;
  };
  struct Capacitor {
    std::string a, b;
    double farads = 0.0;
  };
  struct Inductor {
    std::string name;
    std::string a, b;
    double henries = 0.0;
  };
  // A complex value models an eddy-loaded coupling at the analysis frequency
  // (the imaginary part carries the reflected loss).
  struct Mutual {
    std::string first, second;  // inductor names
    std::complex<double> henries;
  };
  struct VoltageSource {
    std::string a, b;  // raises V(a) - V(b) to the phasor value
    std::complex<double> volts;
  };
  struct CurrentSource {
    std::string a, b;  // injects the phasor current into a, drawn from b
    std::complex<double> amps;
  };

  std::string ground = "gnd";
  std::vector<Resistor> resistors;
  std::vector<Capacitor> capacitors;
  std::vector<Inductor> inductors;
  std::vector<Mutual> mutuals;
  std::vector<VoltageSource> vsources;
  std::vector<CurrentSource> isources;

  void add_resistor(std::string a, std::string b, double ohms) {
    resistors.push_back({std::move(a), std::move(b), ohms});
  }
  void add_capacitor(std::string a, std::string b, double farads) {
    capacitors.push_back({std::move(a), std::move(b), farads});
  }
  void add_inductor(std::string name, std::string a, std::string b, double henries) {
    inductors.push_back({std::move(name), std::move(a), std::move(b), henries});
  }
  void add_mutual(std::string first, std::string second, std::complex<double> henries) {
    mutuals.push_back({std::move(first), std::move(second), henries});
  }
  void add_voltage_source(std::string a, std::string b, std::complex<double> volts) {
    vsources.push_back({std::move(a), std::move(b), volts});
  }
  void add_current_source(std::string a, std::string b, std::complex<double> amps) {
    isources.push_back({std::move(a), std::move(b), amps});
  }
};

inline ValidationReport validate_network(const ACNetwork& net) {
  ValidationReport rep;
  if (net.ground.empty()) rep.violations.push_back("network: ground node name is empty");
  const std::size_t elements = net.resistors.size() + net.capacitors.size() +
                               net.inductors.size() + net.vsources.size() + net.isources.size();
  if (elements == 0) rep.violations.push_back("network: no elements");
  for (const auto& r : net.resistors)
    if (!(r.ohms > 0.0)) rep.violations.push_back("resistor " + r.a + "-" + r.b + ": non-positive value");
  for (const auto& c : net.capacitors)
    if (c.farads < 0.0) rep.violations.push_back("capacitor " + c.a + "-" + c.b + ": negative value");
  for (const auto& l : net.inductors)
    if (!(l.henries > 0.0)) rep.violations.push_back("inductor " + l.name + ": non-positive value");
  auto find_l = [&](const std::string& name) -> const ACNetwork::Inductor* {
    for (const auto& l : net.inductors)
      if (l.name == name) return &l;
    return nullptr;
  };
  for (const auto& m : net.mutuals) {
    const auto* l1 = find_l(m.first);
    const auto* l2 = find_l(m.second);
    if (l1 == nullptr || l2 == nullptr) {
      rep.violations.push_back("mutual coupling references unknown inductor " +
                               (l1 == nullptr ? m.first : m.second));
      continue;
    }
    const double limit = std::sqrt(l1->henries * l2->henries);
    if (std::abs(m.henries) > limit * (1.0 + 1e-12))
      rep.violations.push_back("mutual coupling " + m.first + "-" + m.second +
                               ": coupling factor above 1");
  }
  return rep;
}

namespace detail {

// Union-find over node names; used to diagnose subgraphs with no ground path.
struct NodeUnion {
  std::map<std::string, std::string> parent;

  const std::string& find(const std::string& x) {
    auto it = parent.emplace(x, x).first;
    if (it->second != x) it->second = find(it->second);
    return it->second;
  }
  void unite(const std::string& a, const std::string& b) {
    const std::string ra = find(a), rb = find(b);
    if (ra != rb) parent[ra] = rb;
  }
};

inline std::vector<std::string> disconnected_nodes(const ACNetwork& net) {
  NodeUnion u;
  u.find(net.ground);
  for (const auto& e : net.resistors) u.unite(e.a, e.b);
  for (const auto& e : net.capacitors) u.unite(e.a, e.b);
  for (const auto& e : net.inductors) u.unite(e.a, e.b);
  for (const auto& e : net.vsources) u.unite(e.a, e.b);
  for (const auto& e : net.isources) u.unite(e.a, e.b);
  std::vector<std::string> orphans;
  const std::string root = u.find(net.ground);
  for (const auto& [name, _] : u.parent)
    if (u.find(name) != root) orphans.push_back(name);
  return orphans;
}

}  // namespace detail

// Complex-phasor modified nodal analysis. Unknowns are the non-ground node
// voltages plus one branch current per inductor and per voltage source. The
// solution is checked against KCL at every node before it is returned.
inline std::map<std::string, std::complex<double>> mna_solve(const ACNetwork& net, double omega) {
  if (!(omega > 0.0)) throw DomainError("mna_solve requires omega > 0");
  require_valid(validate_network(net), "network");
  {
    const std::vector<std::string> orphans = detail::disconnected_nodes(net);
    if (!orphans.empty()) {
      std::string msg = "no path to ground from node(s):";
      for (const auto& n : orphans) msg += " " + n;
      throw TopologyError(msg);
    }
  }

  std::map<std::string, int> node_of;
  auto node_id = [&](const std::string& n) -> int {
    if (n == net.ground) return -1;
    auto it = node_of.emplace(n, static_cast<int>(node_of.size())).first;
    return it->second;
  };
  for (const auto& e : net.resistors) { node_id(e.a); node_id(e.b); }
  for (const auto& e : net.capacitors) { node_id(e.a); node_id(e.b); }
  for (const auto& e : net.inductors) { node_id(e.a); node_id(e.b); }
  for (const auto& e : net.vsources) { node_id(e.a); node_id(e.b); }
  for (const auto& e : net.isources) { node_id(e.a); node_id(e.b); }

  const int nn = static_cast<int>(node_of.size());
  const int nl = static_cast<int>(net.inductors.size());
  const int nv = static_cast<int>(net.vsources.size());
  const int dim = nn + nl + nv;
  const std::complex<double> jw(0.0, omega);

  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim);

  auto stamp_admittance = [&](const std::string& na, const std::string& nb,
                              std::complex<double> y) {
    const int ia = node_id(na), ib = node_id(nb);
    if (ia >= 0) a(ia, ia) += y;
    if (ib >= 0) a(ib, ib) += y;
    if (ia >= 0 && ib >= 0) {
      a(ia, ib) -= y;
      a(ib, ia) -= y;
    }
  };
  // Branch current column: the current leaves 'a' and enters 'b'.
  auto stamp_branch = [&](int col, const std::string& na, const std::string& nb) {
    const int ia = node_id(na), ib = node_id(nb);
    if (ia >= 0) {
      a(ia, col) += 1.0;
      a(col, ia) += 1.0;
    }
    if (ib >= 0) {
      a(ib, col) -= 1.0;
      a(col, ib) -= 1.0;
    }
  };

  for (const auto& e : net.resistors) stamp_admittance(e.a, e.b, 1.0 / e.ohms);
  for (const auto& e : net.capacitors) stamp_admittance(e.a, e.b, jw * e.farads);
  for (int k = 0; k < nl; ++k) {
    const auto& l = net.inductors[static_cast<std::size_t>(k)];
    stamp_branch(nn + k, l.a, l.b);
    a(nn + k, nn + k) -= jw * l.henries;
  }
  auto inductor_index = [&](const std::string& name) {
    for (int k = 0; k < nl; ++k)
      if (net.inductors[static_cast<std::size_t>(k)].name == name) return k;
    throw DomainError("unknown inductor in mutual coupling: " + name);
  };
  for (const auto& m : net.mutuals) {
    const int k1 = inductor_index(m.first), k2 = inductor_index(m.second);
    a(nn + k1, nn + k2) -= jw * m.henries;
    a(nn + k2, nn + k1) -= jw * m.henries;
  }
  for (int k = 0; k < nv; ++k) {
    const auto& s = net.vsources[static_cast<std::size_t>(k)];
    stamp_branch(nn + nl + k, s.a, s.b);
    rhs[nn + nl + k] = s.volts;
  }
  for (const auto& s : net.isources) {
    const int ia = node_id(s.a), ib = node_id(s.b);
    if (ia >= 0) rhs[ia] += s.amps;
    if (ib >= 0) rhs[ib] -= s.amps;
  }

  const Eigen::FullPivLU<Eigen::MatrixXcd> lu(a);
  if (!lu.isInvertible()) throw TopologyError("singular nodal system (degenerate element loop)");
  const Eigen::VectorXcd x = lu.solve(rhs);

  auto volt = [&](const std::string& n) -> std::complex<double> {
    const int i = node_id(n);
    return i < 0 ? std::complex<double>(0.0) : x[i];
  };

  // KCL audit: every branch current from the solution must balance per node.
  std::vector<std::complex<double>> residual(static_cast<std::size_t>(nn), 0.0);
  double max_branch = 0.0;
  auto flow = [&](const std::string& na, const std::string& nb, std::complex<double> i) {
    max_branch = std::max(max_branch, std::abs(i));
    const int ia = node_id(na), ib = node_id(nb);
    if (ia >= 0) residual[static_cast<std::size_t>(ia)] += i;
    if (ib >= 0) residual[static_cast<std::size_t>(ib)] -= i;
  };
  for (const auto& e : net.resistors) flow(e.a, e.b, (volt(e.a) - volt(e.b)) / e.ohms);
  for (const auto& e : net.capacitors) flow(e.a, e.b, (volt(e.a) - volt(e.b)) * jw * e.farads);
  for (int k = 0; k < nl; ++k) {
    const auto& l = net.inductors[static_cast<std::size_t>(k)];
    flow(l.a, l.b, x[nn + k]);
  }
  for (int k = 0; k < nv; ++k) {
    const auto& s = net.vsources[static_cast<std::size_t>(k)];
    flow(s.a, s.b, x[nn + nl + k]);
  }
  for (const auto& s : net.isources) flow(s.b, s.a, s.amps);
  double worst = 0.0;
  for (const auto& r : residual) worst = std::max(worst, std::abs(r));
  if (max_branch > 0.0 && worst > 1e-12 * max_branch)
    throw SolverError("nodal solution violates KCL: residual " + std::to_string(worst));

  std::map<std::string, std::complex<double>> out;
  out[net.ground] = 0.0;
  for (const auto& [name, idx] : node_of) out[name] = x[idx];
  return out;
}

// Differential pickup of a mutual-inductance change under current drive.
inline std::complex<double> differential_voltage(double delta_m, const Excitation& exc) {
  require_valid(validate_excitation(exc), "excitation");
  if (!exc.current.has_value())
    throw DomainError("differential_voltage requires a current-driven excitation");
  const double omega = 2.0 * std::numbers::pi * exc.frequency;
  return std::complex<double>(0.0, omega * delta_m) * *exc.current;
}

// Direct coupling in parallel with the sample-mediated series chain; a
// missing series element removes the chain entirely.
inline double measured_capacitance(double c_d, double c_s1, double c_3, double c_s2) {
  if (c_d < 0.0 || c_s1 < 0.0 || c_3 < 0.0 || c_s2 < 0.0)
    throw DomainError("measured_capacitance requires non-negative capacitances");
  if (c_s1 == 0.0 || c_3 == 0.0 || c_s2 == 0.0) return c_d;
  return c_d + 1.0 / (1.0 / c_s1 + 1.0 / c_3 + 1.0 / c_s2);
}

// Analyzer input model. The default values are typical instrument inputs,
// not datasheet numbers; 'estimated' marks them for output metadata and is
// cleared when a configuration overrides them.
struct InstrumentModel {
  double zs_r = 1e6;     // input resistance [Ohm]
  double zs_c = 35e-12;  // input capacitance [F]
  double r1 = 1e6;       // channel input resistance [Ohm]
  double r2 = 1e6;       // channel input resistance [Ohm]
  bool estimated = true;
};

inline ValidationReport validate_instrument(const InstrumentModel& m) {
  ValidationReport rep;
  if (!(m.zs_r > 0.0)) rep.violations.push_back("instrument: zs_r must be > 0");
  if (m.zs_c < 0.0) rep.violations.push_back("instrument: zs_c must be >= 0");
  if (!(m.r1 > 0.0) || !(m.r2 > 0.0)) rep.violations.push_back("instrument: r1, r2 must be > 0");
  return rep;
}

inline std::complex<double> instrument_zs(const InstrumentModel& m, double omega) {
  if (!(omega > 0.0)) throw DomainError("instrument_zs requires omega > 0");
  require_valid(validate_instrument(m), "instrument");
  return 1.0 / (1.0 / m.zs_r + std::complex<double>(0.0, omega * m.zs_c));
}

// One capacitive coupling path: capacitance and the phasor voltage across it.
struct CouplingDrive {
  double c = 0.0;
  std::complex<double> v;
};

inline std::complex<double> common_mode_current(const std::vector<CouplingDrive>& couplings,
                                                double omega) {
  if (!(omega > 0.0)) throw DomainError("common_mode_current requires omega > 0");
  std::complex<double> total = 0.0;
  for (const auto& k : couplings) total += std::complex<double>(0.0, omega * k.c) * k.v;
  return total;
}

inline std::complex<double> common_mode_voltage(std::complex<double> i_c,
                                                const InstrumentModel& zs, double omega) {
  return i_c * instrument_zs(zs, omega);
}

// Inverts the series-C_m / parallel-RC divider: v_a/v_exc = Zs/(Zs + 1/(jwC)).
inline double extract_cm(std::complex<double> v_a, std::complex<double> v_exc,
                         const InstrumentModel& zs, double omega) {
  if (!(omega > 0.0)) throw DomainError("extract_cm requires omega > 0");
  if (std::abs(v_a) == 0.0) return 0.0;
  if (std::abs(v_a) >= std::abs(v_exc))
    throw DomainError("extract_cm requires an attenuated divider (|v_a| < |v_exc|)");
  const std::complex<double> z = instrument_zs(zs, omega);
  const std::complex<double> z_cm = z * (v_exc - v_a) / v_a;
  const std::complex<double> cm = 1.0 / (std::complex<double>(0.0, omega) * z_cm);
  return cm.real();
}

// One receiver inter-tap link: one turn of trace at the mean winding radius.
inline double default_track_segment_resistance() {
  const double length = 2.0 * std::numbers::pi * 20e-3;
  const double cross_section = 4e-3 * 35e-6;
  return COPPER_RESISTIVITY * length / cross_section;
}

// Parameters of the dual-mode network: a driven transmitter coil, a
// five-link distributed receiver tapped at D_A by the instrument input, and
// a per-tap capacitive coupling ladder from the transmitter rail.
struct SimultaneousParams {
  std::complex<double> v_exc = 1.0;
  double l1 = 320e-9;  // transmitter self-inductance [H], bench value
  double l2 = 320e-9;  // receiver self-inductance [H], bench value
  std::complex<double> m = 20e-9;  // transmitter-receiver mutual [H]
  std::array<double, 6> c_couple{};               // C_A..C_F [F]
  std::array<double, 5> r_track{                  // R_AB..R_EF [Ohm]
      default_track_segment_resistance(), default_track_segment_resistance(),
      default_track_segment_resistance(), default_track_segment_resistance(),
      default_track_segment_resistance()};
  InstrumentModel instrument;
};

inline ValidationReport validate_simultaneous(const SimultaneousParams& p) {
  ValidationReport rep;
  if (!(std::abs(p.v_exc) > 0.0)) rep.violations.push_back("simultaneous: zero excitation");
  if (!(p.l1 > 0.0) || !(p.l2 > 0.0)) rep.violations.push_back("simultaneous: coil inductances must be > 0");
  if (std::abs(p.m) > std::sqrt(p.l1 * p.l2))
    rep.violations.push_back("simultaneous: mutual coupling factor above 1");
  for (double c : p.c_couple)
    if (c < 0.0) rep.violations.push_back("simultaneous: negative coupling capacitance");
  for (double r : p.r_track)
    if (!(r > 0.0)) rep.violations.push_back("simultaneous: track resistances must be > 0");
  for (const auto& v : validate_instrument(p.instrument).violations) rep.violations.push_back(v);
  return rep;
}

// Receiver taps in chain order; v_diff spans D_A..D_F, v_common taps D_A.
inline const std::array<const char*, 6>& receiver_taps() {
  static const std::array<const char*, 6> taps = {"D_A", "D_B", "D_C", "D_D", "D_E", "D_F"};
  return taps;
}

inline ACNetwork build_simultaneous_network(const SimultaneousParams& p) {
  require_valid(validate_simultaneous(p), "simultaneous parameters");
  ACNetwork net;
  net.add_voltage_source("exc", net.ground, p.v_exc);
  net.add_inductor("L1", "exc", net.ground, p.l1);

  const auto& taps = receiver_taps();
  // Each link k: D_k --R_track-- mid_k --L2/5-- D_k+1. The link inductors are
  // dotted away from D_A, so an open-receiver walk D_A -> D_F accumulates
  // +j*omega*M*I1, matching the two-coil pickup sign.
  for (int k = 0; k < 5; ++k) {
    const std::string mid = std::string("link_") + taps[static_cast<std::size_t>(k)];
    net.add_resistor(taps[static_cast<std::size_t>(k)], mid, p.r_track[static_cast<std::size_t>(k)]);
    const std::string lname = std::string("L2_") + std::to_string(k);
    net.add_inductor(lname, taps[static_cast<std::size_t>(k + 1)], mid, p.l2 / 5.0);
    net.add_mutual("L1", lname, p.m / 5.0);
  }
  for (std::size_t k = 0; k < 6; ++k)
    if (p.c_couple[k] > 0.0) net.add_capacitor("exc", taps[k], p.c_couple[k]);

  // Instrument input at the D_A tap.
  net.add_resistor("D_A", net.ground, p.instrument.zs_r);
  if (p.instrument.zs_c > 0.0) net.add_capacitor("D_A", net.ground, p.instrument.zs_c);
  return net;
}

// Joint readout of both modes from one solve of the dual-mode network.
struct ModeReadout {
  std::complex<double> v_diff;   // V(D_F) - V(D_A)
  std::complex<double> v_common; // V(D_A)
  double c_m = 0.0;              // capacitance recovered from the divider
};

inline ModeReadout simultaneous_readout(const SimultaneousParams& p, double omega) {
  const ACNetwork net = build_simultaneous_network(p);
  const auto sol = mna_solve(net, omega);
  ModeReadout r;
  r.v_common = sol.at("D_A");
  r.v_diff = sol.at("D_F") - r.v_common;
  r.c_m = std::abs(r.v_common) == 0.0
              ? 0.0
              : std::max(0.0, extract_cm(r.v_common, p.v_exc, p.instrument, omega));
  return r;
}

}  // namespace dualem
