#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ncbe/integrate.hpp"
#include "ncbe/mesh.hpp"

namespace ncbe {

/// Univariate kernel factor: constant, monomial x^p, shifted power
/// (x+c)^p, or exponential exp(-rate*x). All are PowerWeight instances,
/// so they evaluate anywhere and integrate exactly against polynomials.
using UnivariateFactor = PowerWeight;

inline UnivariateFactor factor_constant(double c) { return power_weight(c, 0, 1); }
inline UnivariateFactor factor_monomial(long long num, long long den, double coeff = 1.0) {
  return power_weight(coeff, num, den);
}
inline UnivariateFactor factor_shifted_power(double shift, long long num, long long den,
                                             double coeff = 1.0) {
  return power_weight(coeff, num, den, shift);
}
inline UnivariateFactor factor_exponential(double rate, double coeff = 1.0) {
  return power_weight(coeff, 0, 1, 0.0, rate);
}

/// One separable term of a two-argument kernel: coeff * prod_a f_a(y_a) * prod_a g_a(z_a).
struct SeparableTerm {
  double coeff = 1.0;
  std::vector<UnivariateFactor> arg1;  // one factor per axis, first argument
  std::vector<UnivariateFactor> arg2;  // one factor per axis, second argument
};

/// Collision rate Gamma(y,z): symmetric, nonnegative, sum of separable terms.
struct CollisionKernel {
  int dim = 1;
  std::vector<SeparableTerm> terms;
  std::string name;
};

inline double eval_collision(const CollisionKernel& k, const std::vector<double>& y,
                             const std::vector<double>& z) {
  double v = 0.0;
  for (const auto& t : k.terms) {
    double p = t.coeff;
    for (int a = 0; a < k.dim; ++a) p *= t.arg1[a](y[a]) * t.arg2[a](z[a]);
    v += p;
  }
  return v;
}

struct DiracAtom {
  double weight = 1.0;
  double ratio = 0.5;  // fragment size = ratio * parent size, ratio in (0,1)
};

/// Breakage distribution beta(x,y). All paper cases are z-independent.
/// SeparableSmooth: sum of terms coeff * prod_a f_a(x_a) * prod_a q_a(y_a).
/// DiracComb: per-axis atoms sum_m w_m delta(x - a_m y).
struct BreakageKernel {
  enum class Kind { SeparableSmooth, DiracComb };
  Kind kind = Kind::SeparableSmooth;
  int dim = 1;
  std::vector<SeparableTerm> terms;              // SeparableSmooth: arg1 = fragment, arg2 = parent
  std::vector<std::vector<DiracAtom>> atoms;     // DiracComb: per axis
  std::string name;
};

inline double eval_breakage_smooth(const BreakageKernel& b, const std::vector<double>& x,
                                   const std::vector<double>& y) {
  double v = 0.0;
  for (const auto& t : b.terms) {
    double p = t.coeff;
    for (int a = 0; a < b.dim; ++a) p *= t.arg1[a](x[a]) * t.arg2[a](y[a]);
    v += p;
  }
  return v;
}

/// Mean fragment count per breakage event: integral of beta over the box
/// [0,y]. Closed form per factor; throws for non-integrable factors.
inline double multiplicity(const BreakageKernel& b, const std::vector<double>& y) {
  if (b.kind == BreakageKernel::Kind::DiracComb) {
    double nu = 1.0;
    for (const auto& axis_atoms : b.atoms) {
      double s = 0.0;
      for (const auto& at : axis_atoms) s += at.weight;
      nu *= s;
    }
    return nu;
  }
  double nu = 0.0;
  for (const auto& t : b.terms) {
    double p = t.coeff;
    for (int a = 0; a < b.dim; ++a)
      p *= t.arg2[a](y[a]) * integrate_weight(0.0, y[a], t.arg1[a]);
    nu += p;
  }
  return nu;
}

struct HypervolumeCheck {
  bool pass = false;
  double defect = 0.0;  // integral of (prod x_i) * beta over [0,y] minus prod y_i
};

/// Structural check of fragment-volume balance for a single parent y.
inline HypervolumeCheck check_hypervolume_conservation(const BreakageKernel& b,
                                                       const std::vector<double>& y,
                                                       double tol = 1e-12) {
  double prod_y = 1.0;
  for (double v : y) prod_y *= v;
  double total = 0.0;
  if (b.kind == BreakageKernel::Kind::DiracComb) {
    total = 1.0;
    for (int a = 0; a < b.dim; ++a) {
      double s = 0.0;
      for (const auto& at : b.atoms[a]) s += at.weight * at.ratio;
      total *= s * y[a];
    }
  } else {
    const UnivariateFactor x1 = factor_monomial(1, 1);
    for (const auto& t : b.terms) {
      double p = t.coeff;
      for (int a = 0; a < b.dim; ++a)
        p *= t.arg2[a](y[a]) * integrate_weight(0.0, y[a], x1 * t.arg1[a]);
      total += p;
    }
  }
  HypervolumeCheck c;
  c.defect = total - prod_y;
  c.pass = std::abs(c.defect) <= tol * std::abs(prod_y);
  return c;
}

namespace detail {

inline double factor_sup(const UnivariateFactor& f, double lo, double hi) {
  // all supported forms are monotone on (0, x_max]
  if (f.num < 0 && lo + f.shift <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(std::abs(f(lo)), std::abs(f(hi)));
}

}  // namespace detail

/// Upper bound C0 for Gamma over the truncated box [lo,hi]^d.
inline double collision_bound(const CollisionKernel& k, double lo, double hi) {
  double c0 = 0.0;
  for (const auto& t : k.terms) {
    double p = std::abs(t.coeff);
    for (int a = 0; a < k.dim; ++a)
      p *= detail::factor_sup(t.arg1[a], lo, hi) * detail::factor_sup(t.arg2[a], lo, hi);
    c0 += p;
  }
  return c0;
}

/// Upper bound b0 for a smooth beta over the truncated box; infinity for
/// Dirac combs (not bounded in the pointwise sense).
inline double breakage_bound(const BreakageKernel& b, double lo, double hi) {
  if (b.kind == BreakageKernel::Kind::DiracComb)
    return std::numeric_limits<double>::infinity();
  double b0 = 0.0;
  for (const auto& t : b.terms) {
    double p = std::abs(t.coeff);
    for (int a = 0; a < b.dim; ++a)
      p *= detail::factor_sup(t.arg1[a], lo, hi) * detail::factor_sup(t.arg2[a], lo, hi);
    b0 += p;
  }
  return b0;
}

// ---------------------------------------------------------------------------
// Kernel expression grammar for run configurations:
//   product | constant | poly(c) | binary_uniform | dirac(r1:w1,...) |
//   multi_uniform(d)
// ---------------------------------------------------------------------------

inline CollisionKernel parse_collision_kernel(const std::string& expr, int dim) {
  CollisionKernel k;
  k.dim = dim;
  k.name = expr;
  SeparableTerm t;
  t.coeff = 1.0;
  if (expr == "product") {
    for (int a = 0; a < dim; ++a) {
      t.arg1.push_back(factor_monomial(1, 1));
      t.arg2.push_back(factor_monomial(1, 1));
    }
  } else if (expr == "constant") {
    for (int a = 0; a < dim; ++a) {
      t.arg1.push_back(factor_constant(1.0));
      t.arg2.push_back(factor_constant(1.0));
    }
  } else if (expr.rfind("poly(", 0) == 0 && expr.back() == ')') {
    double c = std::stod(expr.substr(5, expr.size() - 6));
    if (c < 0) throw config_error("poly(c): shift must be nonnegative");
    for (int a = 0; a < dim; ++a) {
      t.arg1.push_back(factor_shifted_power(c, 1, 3));
      t.arg2.push_back(factor_shifted_power(c, 1, 3));
    }
  } else {
    throw config_error("unknown collision kernel expression: " + expr);
  }
  k.terms.push_back(std::move(t));
  return k;
}

inline BreakageKernel parse_breakage_kernel(const std::string& expr, int dim) {
  BreakageKernel b;
  b.dim = dim;
  b.name = expr;
  if (expr == "binary_uniform" || expr.rfind("multi_uniform", 0) == 0) {
    SeparableTerm t;
    t.coeff = 1.0;
    for (int a = 0; a < dim; ++a) {
      t.coeff *= 2.0;
      t.arg1.push_back(factor_constant(1.0));
      t.arg2.push_back(factor_monomial(-1, 1));
    }
    b.terms.push_back(std::move(t));
    return b;
  }
  if (expr.rfind("dirac(", 0) == 0 && expr.back() == ')') {
    b.kind = BreakageKernel::Kind::DiracComb;
    b.atoms.assign(dim, {});
    std::string body = expr.substr(6, expr.size() - 7);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw config_error("dirac(): expected ratio:weight");
      DiracAtom at;
      at.ratio = std::stod(item.substr(0, colon));
      at.weight = std::stod(item.substr(colon + 1));
      if (!(at.ratio > 0.0 && at.ratio < 1.0))
        throw config_error("dirac(): atom ratio must lie in (0,1)");
      for (int a = 0; a < dim; ++a) b.atoms[a].push_back(at);
    }
    if (b.atoms[0].empty()) throw config_error("dirac(): no atoms given");
    return b;
  }
  throw config_error("unknown breakage kernel expression: " + expr);
}

}  // namespace ncbe
