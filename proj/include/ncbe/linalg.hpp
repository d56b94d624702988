#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace ncbe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Apply the Kronecker-product operator (A_{d-1} x ... x A_0) to a vector
/// laid out with axis 0 fastest, without materializing the full matrix.
inline VectorXd kron_apply(const std::vector<MatrixXd>& axis_ops, const VectorXd& x) {
  const int d = int(axis_ops.size());
  std::vector<long long> dims(d);
  long long total = 1;
  for (int a = 0; a < d; ++a) {
    dims[a] = axis_ops[a].cols();
    total *= dims[a];
  }
  if (x.size() != total) throw std::invalid_argument("kron_apply: size mismatch");
  VectorXd cur = x, next;
  for (int a = 0; a < d; ++a) {
    long long before = 1, after = 1;
    for (int b = 0; b < a; ++b) before *= axis_ops[b].rows();
    for (int b = a + 1; b < d; ++b) after *= dims[b];
    const MatrixXd& A = axis_ops[a];
    next.resize(before * A.rows() * after);
    for (long long k = 0; k < after; ++k) {
      Eigen::Map<const MatrixXd> xin(cur.data() + k * before * A.cols(), before, A.cols());
      Eigen::Map<MatrixXd> xout(next.data() + k * before * A.rows(), before, A.rows());
      xout.noalias() = xin * A.transpose();
    }
    cur.swap(next);
  }
  return cur;
}

/// Dot product of a Kronecker vector (v_{d-1} x ... x v_0) with x.
inline double kron_dot(const std::vector<VectorXd>& axis_vecs, const VectorXd& x) {
  const int d = int(axis_vecs.size());
  VectorXd cur = x;
  for (int a = d - 1; a >= 0; --a) {
    long long rest = cur.size() / axis_vecs[a].size();
    Eigen::Map<const MatrixXd> m(cur.data(), rest, axis_vecs[a].size());
    VectorXd next = m * axis_vecs[a];
    cur.swap(next);
  }
  return cur[0];
}

/// Materialize the full Kronecker vector (axis 0 fastest).
inline VectorXd kron_vector(const std::vector<VectorXd>& axis_vecs) {
  VectorXd out = VectorXd::Ones(1);
  for (const auto& v : axis_vecs) {
    VectorXd next(out.size() * v.size());
    for (long long j = 0; j < v.size(); ++j)
      next.segment(j * out.size(), out.size()) = out * v[j];
    out.swap(next);
  }
  return out;
}

/// Materialize the full Kronecker matrix (small problems only).
inline MatrixXd kron_matrix(const std::vector<MatrixXd>& axis_ops) {
  MatrixXd out = MatrixXd::Ones(1, 1);
  for (const auto& A : axis_ops) {
    MatrixXd next(out.rows() * A.rows(), out.cols() * A.cols());
    for (long long i = 0; i < A.rows(); ++i)
      for (long long j = 0; j < A.cols(); ++j)
        next.block(i * out.rows(), j * out.cols(), out.rows(), out.cols()) = A(i, j) * out;
    out.swap(next);
  }
  return out;
}

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Left-preconditioned GMRES without restarts. Deterministic; intended for
/// the mass-preconditioned Newton systems where a handful of iterations
/// reaches machine precision.
inline GmresResult gmres(const std::function<VectorXd(const VectorXd&)>& apply,
                         const std::function<VectorXd(const VectorXd&)>& precond,
                         const VectorXd& rhs, VectorXd& x, double rel_tol, int max_iter) {
  GmresResult res;
  const long long n = rhs.size();
  VectorXd r = precond(rhs - apply(x));
  double beta = r.norm();
  double ref = precond(rhs).norm();
  if (ref == 0.0) ref = 1.0;
  if (beta <= rel_tol * ref) {
    res.converged = true;
    res.residual = beta / ref;
    return res;
  }
  std::vector<VectorXd> V;
  V.reserve(max_iter + 1);
  V.push_back(r / beta);
  MatrixXd H = MatrixXd::Zero(max_iter + 1, max_iter);
  std::vector<double> cs(max_iter), sn(max_iter);
  VectorXd g = VectorXd::Zero(max_iter + 1);
  g[0] = beta;
  int k = 0;
  for (; k < max_iter; ++k) {
    VectorXd w = precond(apply(V[k]));
    for (int i = 0; i <= k; ++i) {
      H(i, k) = w.dot(V[i]);
      w -= H(i, k) * V[i];
    }
    H(k + 1, k) = w.norm();
    const bool breakdown = H(k + 1, k) < 1e-300;
    if (!breakdown) V.push_back(w / H(k + 1, k));
    for (int i = 0; i < k; ++i) {
      double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
      H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
      H(i, k) = t;
    }
    double denom = std::hypot(H(k, k), H(k + 1, k));
    cs[k] = denom == 0 ? 1.0 : H(k, k) / denom;
    sn[k] = denom == 0 ? 0.0 : H(k + 1, k) / denom;
    H(k, k) = denom;
    H(k + 1, k) = 0.0;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];
    if (std::abs(g[k + 1]) <= rel_tol * ref || breakdown) {
      ++k;
      break;
    }
  }
  VectorXd y = VectorXd::Zero(k);
  for (int i = k - 1; i >= 0; --i) {
    double s = g[i];
    for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
    y[i] = s / H(i, i);
  }
  for (int i = 0; i < k; ++i) x += y[i] * V[i];
  VectorXd rr = precond(rhs - apply(x));
  res.iterations = k;
  res.residual = rr.norm() / ref;
  res.converged = res.residual <= rel_tol * 10;
  (void)n;
  return res;
}

}  // namespace ncbe
