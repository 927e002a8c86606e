#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dualem/bessel.hpp"
#include "dualem/quadrature.hpp"

using dualem::gauss_legendre;
using dualem::gl_integrate;
using dualem::integrate_panels;

TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly", "[quadrature]") {
  const auto rule = gauss_legendre(5);
  for (int k = 0; k <= 9; ++k) {
    const double got = gl_integrate([&](double x) { return std::pow(x, k); }, -1.0, 1.0, rule);
    const double expected = (k % 2 == 1) ? 0.0 : 2.0 / (k + 1);
    CHECK(std::abs(got - expected) < 1e-14);
  }
}

TEST_CASE("gauss-legendre nodes are symmetric and weights sum to 2", "[quadrature]") {
  for (int n : {8, 16, 33, 64}) {
    const auto rule = gauss_legendre(n);
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
      wsum += rule.weights[i];
      CHECK(std::abs(rule.nodes[i] + rule.nodes[n - 1 - i]) < 1e-14);
    }
    CHECK(std::abs(wsum - 2.0) < 1e-13);
  }
}

TEST_CASE("composite panels handle oscillatory integrands", "[quadrature]") {
  const auto rule = gauss_legendre(16);
  const double pi = std::numbers::pi;

  const double s = integrate_panels([](double x) { return std::sin(x); }, 0.0, 20.0 * pi,
                                    0.5 * pi, rule);
  CHECK(std::abs(s) < 1e-12);

  // integral of J1 over [0, 10] equals 1 - J0(10).
  const double j = integrate_panels([](double x) { return dualem::bessel_j1(x); }, 0.0, 10.0,
                                    pi, rule);
  CHECK(std::abs(j - 1.2459357644513483352) < 1e-12);
}

TEST_CASE("composite panels reject invalid ranges", "[quadrature]") {
  const auto rule = gauss_legendre(8);
  CHECK_THROWS_AS(integrate_panels([](double) { return 1.0; }, 1.0, 0.0, 0.1, rule),
                  dualem::DomainError);
  CHECK_THROWS_AS(integrate_panels([](double) { return 1.0; }, 0.0, 1.0, 0.0, rule),
                  dualem::DomainError);
  CHECK(integrate_panels([](double) { return 1.0; }, 2.0, 2.0, 0.1, rule) == 0.0);
}
