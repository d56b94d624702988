#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ncbe/gauss.hpp"

namespace ncbe {

/// Weight function coeff * (x+shift)^(num/den) * exp(-rate*x).
///
/// Kernel factors and moment weights all reduce to this form. Products of
/// two weights stay in the family (powers add, rates add), which is what
/// lets loss/gain assembly integrate kernel-weighted basis products exactly.
struct PowerWeight {
  double coeff = 1.0;
  long long num = 0;
  long long den = 1;
  double shift = 0.0;
  double rate = 0.0;

  bool is_pure_poly() const { return num == 0 && rate == 0.0; }

  double operator()(double x) const {
    double v = coeff;
    if (num != 0) {
      double base = x + shift;
      if (den == 1 && num >= -2 && num <= 3) {  // hot path for integer powers
        double p = 1.0;
        for (long long i = 0; i < (num < 0 ? -num : num); ++i) p *= base;
        v *= num < 0 ? 1.0 / p : p;
      } else {
        v *= std::pow(base, double(num) / double(den));
      }
    }
    if (rate != 0.0) v *= std::exp(-rate * x);
    return v;
  }

  PowerWeight& normalize() {
    if (den < 0) { den = -den; num = -num; }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
    if (num == 0) { den = 1; shift = 0.0; }
    return *this;
  }
};

inline PowerWeight power_weight(double coeff, long long num, long long den,
                                double shift = 0.0, double rate = 0.0) {
  PowerWeight w{coeff, num, den, shift, rate};
  return w.normalize();
}

/// Product of two weights; requires matching shifts when both carry a power.
inline PowerWeight operator*(const PowerWeight& a, const PowerWeight& b) {
  PowerWeight r;
  r.coeff = a.coeff * b.coeff;
  r.rate = a.rate + b.rate;
  if (a.num == 0) {
    r.num = b.num; r.den = b.den; r.shift = b.shift;
  } else if (b.num == 0) {
    r.num = a.num; r.den = a.den; r.shift = a.shift;
  } else {
    if (a.shift != b.shift)
      throw std::invalid_argument("PowerWeight product: mismatched shifts");
    long long l = std::lcm(a.den, b.den);
    r.num = a.num * (l / a.den) + b.num * (l / b.den);
    r.den = l;
    r.shift = a.shift;
  }
  return r.normalize();
}

namespace detail {

inline int gauss_points_for_degree(int degree) {
  int n = degree / 2 + 1;
  if (n > kMaxGaussPoints)
    throw std::runtime_error("integrate_weighted: integrand degree too high");
  return n < 1 ? 1 : n;
}

}  // namespace detail

/// Integral over [a,b] of w(x) * f(x) where f is polynomial of degree
/// <= deg. Exact (up to roundoff) for rate == 0 via the substitution
/// x + shift = t^den, which turns the integrand into a polynomial in t.
/// Exponential weights fall back to a fixed high-order rule.
template <class F>
double integrate_weighted(double a, double b, const PowerWeight& w, int deg, F&& f) {
  if (b <= a) return 0.0;
  if (w.coeff == 0.0) return 0.0;
  if (w.rate != 0.0) {
    // not exactness-critical; used for smooth data only
    int n = std::min(kMaxGaussPoints, deg + 12);
    return gauss_integrate(a, b, n, [&](double x) { return w(x) * f(x); });
  }
  if (w.num == 0) {
    int n = detail::gauss_points_for_degree(deg);
    double r = gauss_integrate(a, b, n, f);
    return w.coeff * r;
  }
  if (a + w.shift < 0)
    throw std::invalid_argument("integrate_weighted: negative base for fractional power");
  if (w.num + w.den - 1 < 0)
    throw std::invalid_argument("integrate_weighted: non-integrable power");
  const long long d = w.den;
  const double ta = std::pow(a + w.shift, 1.0 / double(d));
  const double tb = std::pow(b + w.shift, 1.0 / double(d));
  const int tdeg = int(w.num + d - 1 + d * (long long)deg);
  int n = detail::gauss_points_for_degree(tdeg);
  double r = gauss_integrate(ta, tb, n, [&](double t) {
    double x = std::pow(t, double(d)) - w.shift;
    // t^(num+den-1), exponent guaranteed >= 0
    double tp = std::pow(t, double(w.num + d - 1));
    return tp * f(x);
  });
  return w.coeff * double(d) * r;
}

/// Closed-form integral of w alone over [a,b] (f == 1).
inline double integrate_weight(double a, double b, const PowerWeight& w) {
  return integrate_weighted(a, b, w, 0, [](double) { return 1.0; });
}

}  // namespace ncbe
