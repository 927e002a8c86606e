#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dualem/errors.hpp"

namespace dualem {

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Nodes by Newton iteration on P_n; accurate to ~1e-15 for n up to several hundred.
inline GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: order must be >= 1");
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;  // roots come in +/- pairs
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Legendre recurrence for P_n(x) and P_{n-1}(x).
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // Recompute P_{n-1} at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double wgt = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = wgt;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = wgt;
  }
  return rule;
}

// Integrate f over [a, b] with a single mapped rule.
template <typename F>
double gl_integrate(F&& f, double a, double b, const GaussLegendre& rule) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * sum;
}

// Composite rule: split [a, b] into panels no wider than max_panel_width.
template <typename F>
double integrate_panels(F&& f, double a, double b, double max_panel_width,
                        const GaussLegendre& rule) {
  if (!(b >= a)) throw DomainError("integrate_panels: b < a");
  if (!(max_panel_width > 0.0)) throw DomainError("integrate_panels: non-positive panel width");
  if (a == b) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_panel_width)));
  const double width = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    sum += gl_integrate(f, a + p * width, a + (p + 1) * width, rule);
  }
  return sum;
}

}  // namespace dualem
