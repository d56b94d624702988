#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ncbe/mesh.hpp"

namespace ncbe {

using Eigen::VectorXd;

inline constexpr int kMaxDegree = 3;

/// Value of the degree-r Lagrange basis function psi_k at xi in [0,1],
/// with equispaced reference nodes xi_m = m/r.
inline double lagrange_eval(int r, int k, double xi) {
  if (r < 1) throw std::invalid_argument("lagrange_eval: degree must be >= 1");
  if (k < 0 || k > r) throw std::invalid_argument("lagrange_eval: node index out of range");
  double v = 1.0;
  for (int m = 0; m <= r; ++m) {
    if (m == k) continue;
    v *= (xi * r - m) / double(k - m);
  }
  return v;
}

/// d/dxi of psi_k at xi.
inline double lagrange_grad(int r, int k, double xi) {
  if (r < 1) throw std::invalid_argument("lagrange_grad: degree must be >= 1");
  if (k < 0 || k > r) throw std::invalid_argument("lagrange_grad: node index out of range");
  double sum = 0.0;
  for (int j = 0; j <= r; ++j) {
    if (j == k) continue;
    double term = double(r) / double(k - j);
    for (int m = 0; m <= r; ++m) {
      if (m == k || m == j) continue;
      term *= (xi * r - m) / double(k - m);
    }
    sum += term;
  }
  return sum;
}

/// Global numbering for C0 tensor-product Lagrange elements of degree r.
/// Per axis the dof count is r*N+1; interface nodes are shared. Global
/// indices are lexicographic with axis 0 fastest.
struct DofMap {
  TensorMesh mesh;
  int degree = 1;

  int dim() const { return mesh.dim(); }
  int axis_dofs(int a) const { return degree * mesh.axes[a].num_elements() + 1; }

  long long total_dofs() const {
    long long n = 1;
    for (int a = 0; a < dim(); ++a) n *= axis_dofs(a);
    return n;
  }

  /// Per-axis global index of local node l in element e.
  int axis_index(int e, int l) const { return e * degree + l; }

  /// Physical coordinate of per-axis dof g.
  double axis_node_coord(int a, int g) const {
    const Axis1D& ax = mesh.axes[a];
    int e = std::min(g / degree, ax.num_elements() - 1);
    int l = g - e * degree;
    return ax.element_left(e) + ax.element_size(e) * double(l) / double(degree);
  }

  /// Per-axis dof index of the node nearest to x.
  int axis_nearest_node(int a, double x) const {
    int best = 0;
    double bd = std::abs(axis_node_coord(a, 0) - x);
    for (int g = 1; g < axis_dofs(a); ++g) {
      double d = std::abs(axis_node_coord(a, g) - x);
      if (d < bd) { bd = d; best = g; }
    }
    return best;
  }

  long long global_index(const std::vector<int>& per_axis) const {
    long long idx = 0, stride = 1;
    for (int a = 0; a < dim(); ++a) {
      idx += stride * per_axis[a];
      stride *= axis_dofs(a);
    }
    return idx;
  }
};

inline DofMap build_dof_map(const TensorMesh& mesh, int r) {
  mesh.validate();
  if (r < 1 || r > kMaxDegree)
    throw config_error("build_dof_map: supported degrees are 1..3");
  return DofMap{mesh, r};
}

/// Evaluate the FE function with the given coefficients at point x
/// (x.size() == mesh dimension). Elements are located by binary search.
inline double eval_fe_function(const Eigen::VectorXd& coeffs, const DofMap& dof,
                               const std::vector<double>& x) {
  const int d = dof.dim();
  if (int(x.size()) != d)
    throw std::invalid_argument("eval_fe_function: point dimension mismatch");
  if (coeffs.size() != dof.total_dofs())
    throw std::invalid_argument("eval_fe_function: coefficient count mismatch");
  int elem[3] = {0, 0, 0};
  double xi[3] = {0, 0, 0};
  for (int a = 0; a < d; ++a) {
    const Axis1D& ax = dof.mesh.axes[a];
    elem[a] = ax.locate(x[a]);
    xi[a] = (x[a] - ax.element_left(elem[a])) / ax.element_size(elem[a]);
  }
  const int r = dof.degree;
  double value = 0.0;
  int nloc = 1;
  for (int a = 0; a < d; ++a) nloc *= r + 1;
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
    value += coeffs[dof.global_index(per_axis)] * shape;
  }
  return value;
}

}  // namespace ncbe
