#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ncbe/basis.hpp"
#include "ncbe/kernels.hpp"

namespace ncbe {

namespace oracle_detail {

// Quadrature points for one axis: per-panel Gauss under the substitution
// x = t^den, so rational-power kernel factors integrate exactly. Panels are
// elements, optionally split at extra cut coordinates (Dirac-comb preimages).
struct AxisPoints {
  std::vector<double> x, w;
};

inline AxisPoints build_axis_points(const Axis1D& axis, long long den, int n,
                                    const std::vector<double>& extra_cuts) {
  AxisPoints pts;
  const QuadratureRule& q = cached_gauss(n);
  for (int e = 0; e < axis.num_elements(); ++e) {
    std::vector<double> cuts{axis.element_left(e), axis.element_right(e)};
    for (double c : extra_cuts)
      if (c > cuts.front() && c < cuts.back()) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    for (size_t s = 0; s + 1 < cuts.size(); ++s) {
      double ta = std::pow(cuts[s], 1.0 / double(den));
      double tb = std::pow(cuts[s + 1], 1.0 / double(den));
      for (size_t i = 0; i < q.points.size(); ++i) {
        double t = ta + (tb - ta) * q.points[i];
        pts.x.push_back(std::pow(t, double(den)));
        pts.w.push_back((tb - ta) * q.weights[i] * double(den) * std::pow(t, double(den - 1)));
      }
    }
  }
  return pts;
}

inline long long power_den_lcm(const CollisionKernel& g, const BreakageKernel& b) {
  long long l = 1;
  for (const auto& t : g.terms)
    for (int a = 0; a < g.dim; ++a) {
      if (t.arg1[a].num != 0) l = std::lcm(l, t.arg1[a].den);
      if (t.arg2[a].num != 0) l = std::lcm(l, t.arg2[a].den);
    }
  for (const auto& t : b.terms)
    for (int a = 0; a < b.dim; ++a) {
      if (t.arg1[a].num != 0) l = std::lcm(l, t.arg1[a].den);
      if (t.arg2[a].num != 0) l = std::lcm(l, t.arg2[a].den);
    }
  return l;
}

}  // namespace oracle_detail

inline constexpr long long kOracleDofLimit = 200;

/// Brute-force residual by direct nested quadrature of the weak-form loss
/// and gain integrals. No factorized operators, no panelized gain matrices;
/// this is the independent reference the assembled path is tested against.
/// Guarded to small problems.
inline VectorXd dense_oracle_residual(const TensorMesh& mesh, int r, const CollisionKernel& gamma,
                                      const BreakageKernel& beta, const VectorXd& alpha,
                                      int quad_n = 0) {
  mesh.validate();
  DofMap dof = build_dof_map(mesh, r);
  const int d = mesh.dim();
  const long long n_dofs = dof.total_dofs();
  if (n_dofs > kOracleDofLimit)
    throw std::runtime_error("dense_oracle_residual: size guard exceeded (200 dofs)");
  if (alpha.size() != n_dofs)
    throw std::invalid_argument("dense_oracle_residual: coefficient size mismatch");

  const long long den = oracle_detail::power_den_lcm(gamma, beta);
  if (quad_n == 0) quad_n = d == 1 ? 18 : (d == 2 ? 6 : 4);

  // per-axis point sets; combs need extra cuts at node preimages
  std::vector<oracle_detail::AxisPoints> apts;
  for (int a = 0; a < d; ++a) {
    std::vector<double> cuts;
    if (beta.kind == BreakageKernel::Kind::DiracComb)
      for (const auto& at : beta.atoms[a])
        for (double node : mesh.axes[a].nodes) cuts.push_back(node / at.ratio);
    apts.push_back(oracle_detail::build_axis_points(mesh.axes[a], den, quad_n, cuts));
  }

  // tensor point list
  std::vector<std::vector<double>> X;
  std::vector<double> W;
  {
    std::vector<size_t> idx(d, 0);
    while (true) {
      std::vector<double> x(d);
      double w = 1.0;
      for (int a = 0; a < d; ++a) {
        x[a] = apts[a].x[idx[a]];
        w *= apts[a].w[idx[a]];
      }
      X.push_back(std::move(x));
      W.push_back(w);
      int a = 0;
      while (a < d) {
        if (++idx[a] < apts[a].x.size()) break;
        idx[a] = 0;
        ++a;
      }
      if (a == d) break;
    }
  }
  const size_t Q = X.size();

  std::vector<double> U(Q);
  for (size_t q = 0; q < Q; ++q) U[q] = eval_fe_function(alpha, dof, X[q]);

  // Z(y) = integral of Gamma(y,z) u(z) dz
  std::vector<double> Z(Q, 0.0);
  for (size_t qy = 0; qy < Q; ++qy) {
    double s = 0.0;
    for (size_t qz = 0; qz < Q; ++qz) s += W[qz] * eval_collision(gamma, X[qy], X[qz]) * U[qz];
    Z[qy] = s;
  }

  // scatter helper: value * phi_j(x) into out for the local supports
  auto scatter = [&](VectorXd& out, const std::vector<double>& x, double value) {
    int elem[3], nloc = 1;
    double xi[3];
    for (int a = 0; a < d; ++a) {
      const Axis1D& ax = dof.mesh.axes[a];
      elem[a] = ax.locate(x[a]);
      xi[a] = (x[a] - ax.element_left(elem[a])) / ax.element_size(elem[a]);
      nloc *= r + 1;
    }
    std::vector<int> per_axis(d);
    for (int lin = 0; lin < nloc; ++lin) {
      int rem = lin;
      double shape = 1.0;
      for (int a = 0; a < d; ++a) {
        int l = rem % (r + 1);
        rem /= r + 1;
        shape *= lagrange_eval(r, l, xi[a]);
        per_axis[a] = dof.axis_index(elem[a], l);
      }
      out[dof.global_index(per_axis)] += value * shape;
    }
  };

  // loss_j = int phi_j(x) u(x) Z(x) dx
  VectorXd loss = VectorXd::Zero(n_dofs);
  for (size_t q = 0; q < Q; ++q) scatter(loss, X[q], W[q] * U[q] * Z[q]);

  // gain_j = int phi_j(x) [ int_{y >= x} beta(x,y) u(y) Z(y) dy ] dx
  VectorXd gain = VectorXd::Zero(n_dofs);
  if (beta.kind == BreakageKernel::Kind::DiracComb) {
    // the x-integral collapses onto the comb: sum_m w_m phi_j(a_m y)
    std::vector<std::vector<double>> combos;  // atom index per axis
    std::vector<size_t> idx(d, 0);
    while (true) {
      double wprod = 1.0;
      std::vector<double> ratios(d);
      for (int a = 0; a < d; ++a) {
        wprod *= beta.atoms[a][idx[a]].weight;
        ratios[a] = beta.atoms[a][idx[a]].ratio;
      }
      for (size_t qy = 0; qy < Q; ++qy) {
        std::vector<double> xs(d);
        bool inside = true;
        for (int a = 0; a < d; ++a) {
          xs[a] = ratios[a] * X[qy][a];
          if (xs[a] < dof.mesh.axes[a].x_min()) inside = false;
        }
        if (inside) scatter(gain, xs, wprod * W[qy] * U[qy] * Z[qy]);
      }
      int a = 0;
      while (a < d) {
        if (++idx[a] < beta.atoms[a].size()) break;
        idx[a] = 0;
        ++a;
      }
      if (a == d) break;
    }
  } else {
    // x-point sets per y: elements fully below plus the partial element,
    // nested per axis, fresh substituted Gauss on each partial panel
    const QuadratureRule& qg = cached_gauss(quad_n);
    auto axis_points_below = [&](int a, double ylim) {
      oracle_detail::AxisPoints p;
      const Axis1D& ax = dof.mesh.axes[a];
      for (int e = 0; e < ax.num_elements(); ++e) {
        double lo = ax.element_left(e), hi = std::min(ax.element_right(e), ylim);
        if (hi <= lo) break;
        double ta = std::pow(lo, 1.0 / double(den)), tb = std::pow(hi, 1.0 / double(den));
        for (size_t i = 0; i < qg.points.size(); ++i) {
          double t = ta + (tb - ta) * qg.points[i];
          p.x.push_back(std::pow(t, double(den)));
          p.w.push_back((tb - ta) * qg.weights[i] * double(den) * std::pow(t, double(den - 1)));
        }
      }
      return p;
    };
    for (size_t qy = 0; qy < Q; ++qy) {
      double gy = W[qy] * U[qy] * Z[qy];
      if (gy == 0.0) continue;
      std::vector<oracle_detail::AxisPoints> xp;
      for (int a = 0; a < d; ++a) xp.push_back(axis_points_below(a, X[qy][a]));
      std::vector<size_t> idx(d, 0);
      bool empty = false;
      for (int a = 0; a < d; ++a)
        if (xp[a].x.empty()) empty = true;
      if (empty) continue;
      while (true) {
        std::vector<double> x(d);
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
          x[a] = xp[a].x[idx[a]];
          w *= xp[a].w[idx[a]];
        }
        scatter(gain, x, gy * w * eval_breakage_smooth(beta, x, X[qy]));
        int a = 0;
        while (a < d) {
          if (++idx[a] < xp[a].x.size()) break;
          idx[a] = 0;
          ++a;
        }
        if (a == d) break;
      }
    }
  }
  return loss - gain;
}

}  // namespace ncbe
