#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ncbe/operators.hpp"
#include "ncbe/stepper.hpp"

namespace ncbe {

/// Moment with per-axis exponents k: integral of (prod x_a^k_a) u_h, using
/// per-axis functionals that are quadrature-exact for degree r + k.
inline double moment(const VectorXd& alpha, const DofMap& dof, const std::vector<int>& k) {
  if (int(k.size()) != dof.dim()) throw std::invalid_argument("moment: exponent count mismatch");
  std::vector<VectorXd> axis_vecs;
  for (int a = 0; a < dof.dim(); ++a) {
    if (k[a] < 0) throw std::invalid_argument("moment: exponents must be nonnegative");
    axis_vecs.push_back(
        assemble_axis_vector(dof.mesh.axes[a], dof.degree, factor_monomial(k[a], 1)));
  }
  return kron_dot(axis_vecs, alpha);
}

/// Closed-form field with gradient, evaluated pointwise.
struct ExactField {
  std::function<double(const std::vector<double>&)> value;
  std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

/// Axis-aligned restriction of norm integration; elements outside are
/// skipped and sampled nodes outside are ignored.
struct NormRegion {
  std::vector<double> lo, hi;
  bool contains_element(const std::vector<double>& elo, const std::vector<double>& ehi) const {
    if (lo.empty()) return true;
    for (size_t a = 0; a < elo.size(); ++a)
      if (elo[a] < lo[a] - 1e-14 || ehi[a] > hi[a] + 1e-14) return false;
    return true;
  }
  bool contains_point(const std::vector<double>& x) const {
    if (lo.empty()) return true;
    for (size_t a = 0; a < x.size(); ++a)
      if (x[a] < lo[a] - 1e-14 || x[a] > hi[a] + 1e-14) return false;
    return true;
  }
};

struct NormReport {
  double l1 = 0, l2 = 0, h1 = 0;
  double linf = 0;      // node-sampled max |u - u_h|
  double rel_linf = 0;  // linf / node-sampled max |u|
};

/// Error norms against a closed-form solution. L1/L2/H1 use per-element
/// Gauss quadrature; the Linf norm is sampled at the global nodes exactly as
/// reported in the reference tables (not a quadrature-point sup).
inline NormReport norm_error(const VectorXd& alpha, const DofMap& dof, const ExactField& exact,
                             const NormRegion& region = {}, int quad_n = 0) {
  const int d = dof.dim();
  const int r = dof.degree;
  if (!exact.value) throw std::invalid_argument("norm_error: exact solution missing");
  if (quad_n == 0) quad_n = r + 5;
  const QuadratureRule& q = cached_gauss(quad_n);
  NormReport rep;
  double l1 = 0, l2 = 0, h1grad = 0;

  std::vector<int> elem(d, 0), nelem(d);
  for (int a = 0; a < d; ++a) nelem[a] = dof.mesh.axes[a].num_elements();
  std::vector<double> elo(d), ehi(d), x(d), xi(d);
  bool done = false;
  while (!done) {
    for (int a = 0; a < d; ++a) {
      elo[a] = dof.mesh.axes[a].element_left(elem[a]);
      ehi[a] = dof.mesh.axes[a].element_right(elem[a]);
    }
    if (region.contains_element(elo, ehi)) {
      std::vector<int> qi(d, 0);
      bool qdone = false;
      while (!qdone) {
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
          xi[a] = q.points[qi[a]];
          x[a] = elo[a] + (ehi[a] - elo[a]) * xi[a];
          w *= (ehi[a] - elo[a]) * q.weights[qi[a]];
        }
        // u_h and its gradient from the local expansion
        double uh = 0.0;
        std::vector<double> guh(d, 0.0);
        int nloc = 1;
        for (int a = 0; a < d; ++a) nloc *= r + 1;
        std::vector<int> per_axis(d);
        for (int lin = 0; lin < nloc; ++lin) {
          int rem = lin;
          double shape = 1.0;
          std::vector<double> dshape(d, 1.0);
          for (int a = 0; a < d; ++a) {
            int l = rem % (r + 1);
            rem /= r + 1;
            double pv = lagrange_eval(r, l, xi[a]);
            double pg = lagrange_grad(r, l, xi[a]) / (ehi[a] - elo[a]);
            shape *= pv;
            for (int b = 0; b < d; ++b) dshape[b] *= (b == a) ? pg : pv;
            per_axis[a] = dof.axis_index(elem[a], l);
          }
          double c = alpha[dof.global_index(per_axis)];
          uh += c * shape;
          for (int a = 0; a < d; ++a) guh[a] += c * dshape[a];
        }
        double ue = exact.value(x);
        double e = ue - uh;
        l1 += w * std::abs(e);
        l2 += w * e * e;
        if (exact.gradient) {
          auto ge = exact.gradient(x);
          for (int a = 0; a < d; ++a) {
            double de = ge[a] - guh[a];
            h1grad += w * de * de;
          }
        }
        int a = 0;
        while (a < d) {
          if (++qi[a] < int(q.points.size())) break;
          qi[a] = 0;
          ++a;
        }
        if (a == d) qdone = true;
      }
    }
    int a = 0;
    while (a < d) {
      if (++elem[a] < nelem[a]) break;
      elem[a] = 0;
      ++a;
    }
    if (a == d) done = true;
  }
  rep.l1 = l1;
  rep.l2 = std::sqrt(l2);
  rep.h1 = std::sqrt(l2 + h1grad);

  // node-sampled sup norm
  double emax = 0.0, umax = 0.0;
  std::vector<int> gi(d, 0), gdim(d);
  for (int a = 0; a < d; ++a) gdim[a] = dof.axis_dofs(a);
  done = false;
  while (!done) {
    std::vector<double> xn(d);
    for (int a = 0; a < d; ++a) xn[a] = dof.axis_node_coord(a, gi[a]);
    if (region.contains_point(xn)) {
      std::vector<int> per_axis(gi.begin(), gi.end());
      double uh = alpha[dof.global_index(per_axis)];
      double ue = exact.value(xn);
      emax = std::max(emax, std::abs(ue - uh));
      umax = std::max(umax, std::abs(ue));
    }
    int a = 0;
    while (a < d) {
      if (++gi[a] < gdim[a]) break;
      gi[a] = 0;
      ++a;
    }
    if (a == d) done = true;
  }
  rep.linf = emax;
  rep.rel_linf = umax > 0 ? emax / umax : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

/// Experimental orders of convergence: pairwise log-ratio slopes. A zero
/// error makes the order undefined and is reported as NaN.
inline std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2)
    throw std::invalid_argument("eoc: need matching sequences of length >= 2");
  std::vector<double> orders;
  for (size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] == 0.0 || errors[i - 1] == 0.0) {
      orders.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    orders.push_back(std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]));
  }
  return orders;
}

struct ConservationReport {
  std::vector<double> times;
  std::vector<double> hyper_drift;  // |m1(t) - m1(0)| / |m1(0)| per record
  double max_hyper_drift = 0.0;
  bool number_nondecreasing = true;
  double worst_number_decrease = 0.0;
  double min_nodal_value = 0.0;
};

inline ConservationReport conservation_report(const Trajectory& traj, double slack = 1e-10) {
  if (traj.steps.empty()) throw std::invalid_argument("conservation_report: empty trajectory");
  ConservationReport rep;
  double m1_0 = traj.steps.front().hypervolume;
  double prev_m0 = traj.steps.front().number;
  rep.min_nodal_value = traj.steps.front().min_nodal;
  for (const auto& s : traj.steps) {
    double drift = m1_0 != 0.0 ? std::abs(s.hypervolume - m1_0) / std::abs(m1_0)
                               : std::abs(s.hypervolume);
    rep.times.push_back(s.t);
    rep.hyper_drift.push_back(drift);
    rep.max_hyper_drift = std::max(rep.max_hyper_drift, drift);
    double decrease = prev_m0 - s.number;
    if (decrease > slack * std::max(1.0, std::abs(prev_m0))) {
      rep.number_nondecreasing = false;
      rep.worst_number_decrease = std::max(rep.worst_number_decrease, decrease);
    }
    prev_m0 = s.number;
    rep.min_nodal_value = std::min(rep.min_nodal_value, s.min_nodal);
  }
  return rep;
}

}  // namespace ncbe
