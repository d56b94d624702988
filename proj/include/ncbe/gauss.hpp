#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ncbe {

/// Gauss-Legendre quadrature on the reference interval [0,1].
/// An n-point rule integrates polynomials of degree <= 2n-1 exactly;
/// weights are positive and sum to 1.
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
  int exactness = 0;  // highest polynomial degree integrated exactly
};

namespace detail {

// Legendre P_n and P_n' at x via the three-term recurrence.
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace detail

inline constexpr int kMaxGaussPoints = 32;

/// n-point Gauss-Legendre rule mapped to [0,1].
inline QuadratureRule gauss_rule(int n) {
  if (n < 1 || n > kMaxGaussPoints)
    throw std::invalid_argument("gauss_rule: point count must be in [1,32]");
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  rule.exactness = 2 * n - 1;
  for (int i = 0; i < n / 2 + n % 2; ++i) {
    // Chebyshev initial guess, Newton refinement on [-1,1].
    double x = -std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = detail::legendre(n, x);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    auto [p, dp] = detail::legendre(n, x);
    (void)p;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.points[n - 1 - i] = 0.5 * (1.0 - x);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

/// Cached rule lookup; rules are immutable after first construction.
inline const QuadratureRule& cached_gauss(int n) {
  static const std::array<QuadratureRule, kMaxGaussPoints + 1> table = [] {
    std::array<QuadratureRule, kMaxGaussPoints + 1> t;
    for (int k = 1; k <= kMaxGaussPoints; ++k) t[k] = gauss_rule(k);
    return t;
  }();
  if (n < 1 || n > kMaxGaussPoints)
    throw std::invalid_argument("cached_gauss: point count must be in [1,32]");
  return table[n];
}

/// Integrate f over [a,b] with an n-point Gauss rule.
template <class F>
double gauss_integrate(double a, double b, int n, F&& f) {
  const QuadratureRule& q = cached_gauss(n);
  double h = b - a, acc = 0.0;
  for (size_t i = 0; i < q.points.size(); ++i)
    acc += q.weights[i] * f(a + h * q.points[i]);
  return h * acc;
}

}  // namespace ncbe
