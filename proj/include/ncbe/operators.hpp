#pragma once

#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ncbe/basis.hpp"
#include "ncbe/integrate.hpp"
#include "ncbe/kernels.hpp"
#include "ncbe/linalg.hpp"

namespace ncbe {

namespace detail {

// integral over [a,b] of coeff*(x+shift)^(num/den) * F(x), where F becomes a
// polynomial of degree fdeg_t in t after the substitution x + shift = t^den.
template <class F>
double integrate_power_sub(double a, double b, double coeff, long long num, long long den,
                           double shift, int fdeg_t, F&& f) {
  if (b <= a || coeff == 0.0) return 0.0;
  if (a + shift < 0) throw std::invalid_argument("integrate_power_sub: negative base");
  const double ta = std::pow(a + shift, 1.0 / double(den));
  const double tb = std::pow(b + shift, 1.0 / double(den));
  const int tdeg = int(num + den - 1) + fdeg_t;
  if (num + den - 1 < 0) throw std::invalid_argument("integrate_power_sub: non-integrable power");
  int n = gauss_points_for_degree(tdeg);
  double r = gauss_integrate(ta, tb, n, [&](double t) {
    double x = std::pow(t, double(den)) - shift;
    return std::pow(t, double(num + den - 1)) * f(x);
  });
  return coeff * double(den) * r;
}

inline double elem_phi_integral(double a, double b, int r, int k, const PowerWeight& w) {
  double h = b - a;
  return integrate_weighted(a, b, w, r, [&](double x) {
    return lagrange_eval(r, k, (x - a) / h);
  });
}

}  // namespace detail

/// Per-axis factorized piece of one separable kernel term: the residual
/// contribution is coeff * (kron(A) alpha) * (kron(v) . alpha).
struct ProductTerm {
  double coeff = 1.0;
  std::vector<MatrixXd> A;
  std::vector<VectorXd> v;
  VectorXd v_full;  // materialized kron(v), cached at assembly
};

/// Mass matrix, factorized loss/gain operators and conservation
/// functionals, all built on one DofMap. Immutable after assembly.
struct OperatorSet {
  DofMap dof;
  std::vector<MatrixXd> mass;      // per-axis Gram matrices
  std::vector<ProductTerm> loss;   // collision removal
  std::vector<ProductTerm> gain;   // fragment production
  std::vector<VectorXd> w_number;  // per-axis integrals of phi_j
  std::vector<VectorXd> w_hyper;   // per-axis integrals of x*phi_j
  VectorXd number_full;            // kron(w_number)
  VectorXd hyper_full;             // kron(w_hyper)
  double bound_C0 = 0.0;           // sup of the collision kernel on the box
  double bound_b0 = 0.0;           // sup of the breakage kernel on the box
  double bound_K = 0.0;            // C0*b0*|D|^(3/2) + C0*|D|^(1/2)
  std::string kernel_id;

  long long dofs() const { return dof.total_dofs(); }
};

/// Exact Gram matrix of the degree-r basis on one axis.
inline MatrixXd assemble_axis_mass(const Axis1D& axis, int r) {
  const int n = r * axis.num_elements() + 1;
  MatrixXd M = MatrixXd::Zero(n, n);
  const QuadratureRule& q = cached_gauss(r + 1);
  for (int e = 0; e < axis.num_elements(); ++e) {
    double h = axis.element_size(e);
    for (int k = 0; k <= r; ++k)
      for (int l = k; l <= r; ++l) {
        double s = 0.0;
        for (size_t p = 0; p < q.points.size(); ++p)
          s += q.weights[p] * lagrange_eval(r, k, q.points[p]) * lagrange_eval(r, l, q.points[p]);
        s *= h;
        int gk = e * r + k, gl = e * r + l;
        M(gk, gl) += s;
        if (gk != gl) M(gl, gk) += s;
      }
  }
  return M;
}

/// Weighted Gram matrix W[j,i] = integral of phi_j phi_i w on one axis.
inline MatrixXd assemble_axis_weighted_mass(const Axis1D& axis, int r, const PowerWeight& w) {
  const int n = r * axis.num_elements() + 1;
  MatrixXd W = MatrixXd::Zero(n, n);
  for (int e = 0; e < axis.num_elements(); ++e) {
    double a = axis.element_left(e), b = axis.element_right(e), h = b - a;
    for (int k = 0; k <= r; ++k)
      for (int l = k; l <= r; ++l) {
        double s = integrate_weighted(a, b, w, 2 * r, [&](double x) {
          double xi = (x - a) / h;
          return lagrange_eval(r, k, xi) * lagrange_eval(r, l, xi);
        });
        int gk = e * r + k, gl = e * r + l;
        W(gk, gl) += s;
        if (gk != gl) W(gl, gk) += s;
      }
  }
  return W;
}

/// Load vector v[k] = integral of w * phi_k on one axis.
inline VectorXd assemble_axis_vector(const Axis1D& axis, int r, const PowerWeight& w) {
  const int n = r * axis.num_elements() + 1;
  VectorXd v = VectorXd::Zero(n);
  for (int e = 0; e < axis.num_elements(); ++e) {
    double a = axis.element_left(e), b = axis.element_right(e);
    for (int k = 0; k <= r; ++k)
      v[e * r + k] += detail::elem_phi_integral(a, b, r, k, w);
  }
  return v;
}

/// Gain matrix on one axis for a smooth breakage factor:
///   G[j,i] = int phi_j(x) f(x) [ int_{x}^{xmax} w(y) phi_i(y) dy ] dx.
/// The inner integral is split at element boundaries so every panel is a
/// weighted polynomial; the partial panel inside the x-element is handled
/// by a substituted rule whose degree covers the fractional powers, which
/// keeps the volume-balance identities at roundoff.
inline MatrixXd assemble_axis_gain(const Axis1D& axis, int r, const PowerWeight& frag,
                                   const PowerWeight& parent) {
  const int ne = axis.num_elements();
  const int n = r * ne + 1;
  MatrixXd G = MatrixXd::Zero(n, n);

  // suffix[e][i] = integral of parent*phi_i over (right end of element e, xmax]
  std::vector<VectorXd> suffix(ne, VectorXd::Zero(n));
  for (int e = ne - 2; e >= 0; --e) {
    suffix[e] = suffix[e + 1];
    double a = axis.element_left(e + 1), b = axis.element_right(e + 1);
    for (int k = 0; k <= r; ++k)
      suffix[e][(e + 1) * r + k] += detail::elem_phi_integral(a, b, r, k, parent);
  }

  // common substitution denominator and shift for the triangle part
  long long den = std::lcm(frag.num != 0 ? frag.den : 1, parent.num != 0 ? parent.den : 1);
  double shift = 0.0;
  if (frag.num != 0 && frag.shift != 0.0) shift = frag.shift;
  if (parent.num != 0 && parent.shift != 0.0) {
    if (shift != 0.0 && shift != parent.shift)
      throw config_error("gain assembly: incompatible factor shifts");
    shift = parent.shift;
  }

  for (int e = 0; e < ne; ++e) {
    double a = axis.element_left(e), b = axis.element_right(e), h = b - a;
    for (int k = 0; k <= r; ++k) {
      int gj = e * r + k;
      // suffix contribution: (int_e phi_j f) * suffix[e][i]
      double cj = detail::elem_phi_integral(a, b, r, k, frag);
      if (cj != 0.0 && e < ne - 1) G.row(gj) += cj * suffix[e].transpose();
      // triangle contribution inside the element
      for (int l = 0; l <= r; ++l) {
        int gi = e * r + l;
        // degree of the inner antiderivative in the substituted variable
        int ideg = int((den / (parent.num != 0 ? parent.den : 1)) *
                           (parent.num != 0 ? parent.num : 0) +
                       den * (r + 1));
        int fdeg = int(den) * r + ideg;
        double val = detail::integrate_power_sub(
            a, b, frag.coeff, frag.num != 0 ? frag.num * (den / frag.den) : 0, den, shift, fdeg,
            [&](double x) {
              double inner = integrate_weighted(x, b, parent, r, [&](double y) {
                return lagrange_eval(r, l, (y - a) / h);
              });
              double er = frag.rate != 0.0 ? std::exp(-frag.rate * x) : 1.0;
              return lagrange_eval(r, k, (x - a) / h) * inner * er;
            });
        G(gj, gi) += val;
      }
    }
  }
  return G;
}

/// Gain matrix on one axis for a Dirac-comb breakage factor with the
/// collision y-factor g:
///   D[j,i] = sum_m w_m int phi_j(a_m y) g(y) phi_i(y) dy.
/// Panels split where a_m*y crosses element boundaries so each piece is a
/// weighted polynomial.
inline MatrixXd assemble_axis_comb_gain(const Axis1D& axis, int r,
                                        const std::vector<DiracAtom>& atoms,
                                        const PowerWeight& g) {
  const int ne = axis.num_elements();
  const int n = r * ne + 1;
  MatrixXd D = MatrixXd::Zero(n, n);
  for (const auto& at : atoms) {
    if (!(at.ratio > 0.0 && at.ratio < 1.0))
      throw config_error("comb gain assembly: atom ratio must lie in (0,1)");
    for (int e = 0; e < ne; ++e) {
      double ya = axis.element_left(e), yb = axis.element_right(e), hy = yb - ya;
      // breakpoints where a*y hits an element boundary
      std::vector<double> cuts{ya, yb};
      for (int eb = 0; eb <= ne; ++eb) {
        double y = axis.nodes[eb] / at.ratio;
        if (y > ya && y < yb) cuts.push_back(y);
      }
      std::sort(cuts.begin(), cuts.end());
      for (size_t c = 0; c + 1 < cuts.size(); ++c) {
        double p0 = cuts[c], p1 = cuts[c + 1];
        if (p1 - p0 <= 0) continue;
        double xm = at.ratio * 0.5 * (p0 + p1);
        if (xm < axis.x_min() || xm > axis.x_max()) continue;
        int ex = axis.locate(xm);
        double xa = axis.element_left(ex), hx = axis.element_size(ex);
        for (int k = 0; k <= r; ++k) {
          int gj = ex * r + k;
          for (int l = 0; l <= r; ++l) {
            int gi = e * r + l;
            double val = integrate_weighted(p0, p1, g, 2 * r, [&](double y) {
              double xij = (at.ratio * y - xa) / hx;
              double xii = (y - ya) / hy;
              return lagrange_eval(r, k, xij) * lagrange_eval(r, l, xii);
            });
            D(gj, gi) += at.weight * val;
          }
        }
      }
    }
  }
  return D;
}

inline MatrixXd assemble_mass(const TensorMesh& mesh, int r) {
  std::vector<MatrixXd> per_axis;
  for (const auto& ax : mesh.axes) per_axis.push_back(assemble_axis_mass(ax, r));
  return kron_matrix(per_axis);
}

/// Build the full operator set for one kernel pair on a tensor mesh.
inline OperatorSet assemble_operators(const TensorMesh& mesh, int r,
                                      const CollisionKernel& gamma, const BreakageKernel& beta) {
  mesh.validate();
  if (gamma.dim != mesh.dim() || beta.dim != mesh.dim())
    throw config_error("assemble_operators: kernel dimension mismatch");
  OperatorSet ops;
  ops.dof = build_dof_map(mesh, r);
  ops.kernel_id = gamma.name + "|" + beta.name;
  const int d = mesh.dim();

  for (int a = 0; a < d; ++a) {
    ops.mass.push_back(assemble_axis_mass(mesh.axes[a], r));
    ops.w_number.push_back(assemble_axis_vector(mesh.axes[a], r, factor_constant(1.0)));
    ops.w_hyper.push_back(assemble_axis_vector(mesh.axes[a], r, factor_monomial(1, 1)));
  }
  ops.number_full = kron_vector(ops.w_number);
  ops.hyper_full = kron_vector(ops.w_hyper);

  for (const auto& gt : gamma.terms) {
    ProductTerm lossterm;
    lossterm.coeff = gt.coeff;
    for (int a = 0; a < d; ++a) {
      lossterm.A.push_back(assemble_axis_weighted_mass(mesh.axes[a], r, gt.arg1[a]));
      lossterm.v.push_back(assemble_axis_vector(mesh.axes[a], r, gt.arg2[a]));
    }
    lossterm.v_full = kron_vector(lossterm.v);
    ops.loss.push_back(std::move(lossterm));

    if (beta.kind == BreakageKernel::Kind::DiracComb) {
      ProductTerm g;
      g.coeff = gt.coeff;
      for (int a = 0; a < d; ++a) {
        g.A.push_back(assemble_axis_comb_gain(mesh.axes[a], r, beta.atoms[a], gt.arg1[a]));
        g.v.push_back(ops.loss.back().v[a]);
      }
      g.v_full = ops.loss.back().v_full;
      ops.gain.push_back(std::move(g));
    } else {
      for (const auto& bt : beta.terms) {
        ProductTerm g;
        g.coeff = gt.coeff * bt.coeff;
        for (int a = 0; a < d; ++a) {
          PowerWeight parent = bt.arg2[a] * gt.arg1[a];
          g.A.push_back(assemble_axis_gain(mesh.axes[a], r, bt.arg1[a], parent));
          g.v.push_back(ops.loss.back().v[a]);
        }
        g.v_full = ops.loss.back().v_full;
        ops.gain.push_back(std::move(g));
      }
    }
  }

  double lo = mesh.axes[0].x_min(), hi = mesh.axes[0].x_max();
  for (const auto& ax : mesh.axes) {
    lo = std::min(lo, ax.x_min());
    hi = std::max(hi, ax.x_max());
  }
  ops.bound_C0 = collision_bound(gamma, lo, hi);
  ops.bound_b0 = breakage_bound(beta, lo, hi);
  double measure = 1.0;
  for (const auto& ax : mesh.axes) measure *= ax.x_max();
  ops.bound_K = ops.bound_C0 * ops.bound_b0 * std::pow(measure, 1.5) +
                ops.bound_C0 * std::sqrt(measure);
  return ops;
}

enum class NonlinearityMode { Consistent, Hadamard };

/// Consistent Galerkin residual N(alpha)_j = loss_j - gain_j, with the full
/// bilinear contraction of the quadratic nonlinearity.
inline VectorXd nonlinear_residual(const OperatorSet& ops, const VectorXd& alpha,
                                   NonlinearityMode mode = NonlinearityMode::Consistent) {
  if (alpha.size() != ops.dofs())
    throw std::invalid_argument("nonlinear_residual: coefficient size mismatch");
  VectorXd out = VectorXd::Zero(alpha.size());
  auto add = [&](const ProductTerm& t, double sign) {
    if (mode == NonlinearityMode::Consistent) {
      double s = t.v_full.dot(alpha);
      out += (sign * t.coeff * s) * kron_apply(t.A, alpha);
    } else {
      VectorXd diag = t.v_full.cwiseProduct(alpha).cwiseProduct(alpha);
      out += (sign * t.coeff) * kron_apply(t.A, diag);
    }
  };
  for (const auto& t : ops.loss) add(t, +1.0);
  for (const auto& t : ops.gain) add(t, -1.0);
  return out;
}

/// Directional derivative of the residual at alpha applied to x.
inline VectorXd nonlinear_jacobian_apply(const OperatorSet& ops, const VectorXd& alpha,
                                         const VectorXd& x,
                                         NonlinearityMode mode = NonlinearityMode::Consistent) {
  VectorXd out = VectorXd::Zero(alpha.size());
  auto add = [&](const ProductTerm& t, double sign) {
    if (mode == NonlinearityMode::Consistent) {
      double s = t.v_full.dot(alpha);
      double sx = t.v_full.dot(x);
      out += (sign * t.coeff) * (s * kron_apply(t.A, x) + sx * kron_apply(t.A, alpha));
    } else {
      VectorXd diag = 2.0 * t.v_full.cwiseProduct(alpha).cwiseProduct(x);
      out += (sign * t.coeff) * kron_apply(t.A, diag);
    }
  };
  for (const auto& t : ops.loss) add(t, +1.0);
  for (const auto& t : ops.gain) add(t, -1.0);
  return out;
}

inline constexpr long long kDenseJacobianLimit = 4096;

/// Materialized Jacobian; guarded by the dense size limit.
inline MatrixXd nonlinear_jacobian(const OperatorSet& ops, const VectorXd& alpha,
                                   NonlinearityMode mode = NonlinearityMode::Consistent) {
  const long long n = ops.dofs();
  if (n > kDenseJacobianLimit)
    throw std::runtime_error("nonlinear_jacobian: problem too large to materialize; use the action");
  MatrixXd J = MatrixXd::Zero(n, n);
  auto add = [&](const ProductTerm& t, double sign) {
    MatrixXd A = kron_matrix(t.A);
    if (mode == NonlinearityMode::Consistent) {
      double s = t.v_full.dot(alpha);
      VectorXd y = A * alpha;
      J += (sign * t.coeff) * (s * A + y * t.v_full.transpose());
    } else {
      J += (sign * t.coeff * 2.0) * A * t.v_full.cwiseProduct(alpha).asDiagonal();
    }
  };
  for (const auto& t : ops.loss) add(t, +1.0);
  for (const auto& t : ops.gain) add(t, -1.0);
  return J;
}

// ---------------------------------------------------------------------------
// Binary operator dump: header (dims, degree, kernel id), then each matrix
// and vector as row-major 64-bit floats. Used to warm-restart sweeps.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline void put_mat(std::ostream& os, const MatrixXd& m) {
  put_u64(os, m.rows());
  put_u64(os, m.cols());
  for (long long i = 0; i < m.rows(); ++i)
    for (long long j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      os.write(reinterpret_cast<const char*>(&v), 8);
    }
}
inline MatrixXd get_mat(std::istream& is) {
  long long r = get_u64(is), c = get_u64(is);
  MatrixXd m(r, c);
  for (long long i = 0; i < r; ++i)
    for (long long j = 0; j < c; ++j) {
      double v;
      is.read(reinterpret_cast<char*>(&v), 8);
      m(i, j) = v;
    }
  return m;
}

}  // namespace detail

inline void save_operator_set(const OperatorSet& ops, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_operator_set: cannot open " + path);
  os.write("NCBEOP01", 8);
  detail::put_u64(os, ops.dof.dim());
  detail::put_u64(os, ops.dof.degree);
  detail::put_u64(os, ops.kernel_id.size());
  os.write(ops.kernel_id.data(), ops.kernel_id.size());
  for (int a = 0; a < ops.dof.dim(); ++a) {
    const auto& nodes = ops.dof.mesh.axes[a].nodes;
    detail::put_u64(os, nodes.size());
    os.write(reinterpret_cast<const char*>(nodes.data()), nodes.size() * 8);
  }
  auto put_terms = [&](const std::vector<ProductTerm>& ts) {
    detail::put_u64(os, ts.size());
    for (const auto& t : ts) {
      os.write(reinterpret_cast<const char*>(&t.coeff), 8);
      for (const auto& A : t.A) detail::put_mat(os, A);
      for (const auto& v : t.v) detail::put_mat(os, v);
    }
  };
  for (const auto& M : ops.mass) detail::put_mat(os, M);
  put_terms(ops.loss);
  put_terms(ops.gain);
  for (const auto& v : ops.w_number) detail::put_mat(os, v);
  for (const auto& v : ops.w_hyper) detail::put_mat(os, v);
  os.write(reinterpret_cast<const char*>(&ops.bound_C0), 8);
  os.write(reinterpret_cast<const char*>(&ops.bound_b0), 8);
  os.write(reinterpret_cast<const char*>(&ops.bound_K), 8);
}

inline OperatorSet load_operator_set(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_operator_set: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (std::memcmp(magic, "NCBEOP01", 8) != 0)
    throw std::runtime_error("load_operator_set: bad magic");
  OperatorSet ops;
  int d = int(detail::get_u64(is));
  int r = int(detail::get_u64(is));
  size_t idlen = detail::get_u64(is);
  ops.kernel_id.resize(idlen);
  is.read(ops.kernel_id.data(), idlen);
  TensorMesh mesh;
  for (int a = 0; a < d; ++a) {
    Axis1D ax;
    ax.nodes.resize(detail::get_u64(is));
    is.read(reinterpret_cast<char*>(ax.nodes.data()), ax.nodes.size() * 8);
    mesh.axes.push_back(std::move(ax));
  }
  ops.dof = build_dof_map(mesh, r);
  auto get_terms = [&](std::vector<ProductTerm>& ts) {
    size_t n = detail::get_u64(is);
    for (size_t i = 0; i < n; ++i) {
      ProductTerm t;
      is.read(reinterpret_cast<char*>(&t.coeff), 8);
      for (int a = 0; a < d; ++a) t.A.push_back(detail::get_mat(is));
      for (int a = 0; a < d; ++a) t.v.push_back(detail::get_mat(is).col(0));
      t.v_full = kron_vector(t.v);
      ts.push_back(std::move(t));
    }
  };
  for (int a = 0; a < d; ++a) ops.mass.push_back(detail::get_mat(is));
  get_terms(ops.loss);
  get_terms(ops.gain);
  for (int a = 0; a < d; ++a) ops.w_number.push_back(detail::get_mat(is).col(0));
  for (int a = 0; a < d; ++a) ops.w_hyper.push_back(detail::get_mat(is).col(0));
  ops.number_full = kron_vector(ops.w_number);
  ops.hyper_full = kron_vector(ops.w_hyper);
  is.read(reinterpret_cast<char*>(&ops.bound_C0), 8);
  is.read(reinterpret_cast<char*>(&ops.bound_b0), 8);
  is.read(reinterpret_cast<char*>(&ops.bound_K), 8);
  return ops;
}

}  // namespace ncbe
