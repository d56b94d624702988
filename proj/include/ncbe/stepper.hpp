#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ncbe/operators.hpp"

namespace ncbe {

enum class TimeScheme { BDF2, BackwardEuler };

struct StepperConfig {
  double tau = 1e-3;
  double T = 1.0;
  double newton_tol = 1e-11;  // absolute, on ||F||_2 scaled by dof count
  int max_newton_iters = 25;
  int max_halvings = 5;
  TimeScheme scheme = TimeScheme::BDF2;
  NonlinearityMode nonlinearity = NonlinearityMode::Consistent;
  double linear_tol = 1e-13;
  int linear_max_iter = 300;
};

struct NewtonStats {
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;
};

struct solver_error : std::runtime_error {
  NewtonStats stats;
  solver_error(const std::string& msg, NewtonStats s)
      : std::runtime_error(msg), stats(std::move(s)) {}
};

/// Initial number density: closed-form separable profile or a product of
/// point masses (projected, not regularized).
struct InitialDatum {
  enum class Kind { Smooth, DiracProduct };
  Kind kind = Kind::Smooth;
  std::vector<std::function<double(double)>> axis_profile;  // u0 = prod_a f_a(x_a)
  std::vector<double> location;                             // DiracProduct atom position
  double weight = 1.0;

  static InitialDatum smooth(std::vector<std::function<double(double)>> profile) {
    InitialDatum d;
    d.kind = Kind::Smooth;
    d.axis_profile = std::move(profile);
    return d;
  }
  static InitialDatum dirac(std::vector<double> location, double weight = 1.0) {
    InitialDatum d;
    d.kind = Kind::DiracProduct;
    d.location = std::move(location);
    d.weight = weight;
    return d;
  }
};

/// L2 projection of the initial datum: solves M a0 = b with b_j = (u0, phi_j)
/// for smooth data, b_j = weight * phi_j(x0) for point masses. Separability
/// lets the Kronecker mass factor per axis.
inline VectorXd project_initial(const InitialDatum& u0, const OperatorSet& ops) {
  const int d = ops.dof.dim();
  std::vector<VectorXd> axis_coeff;
  for (int a = 0; a < d; ++a) {
    const Axis1D& ax = ops.dof.mesh.axes[a];
    const int r = ops.dof.degree;
    const int n = r * ax.num_elements() + 1;
    VectorXd b = VectorXd::Zero(n);
    if (u0.kind == InitialDatum::Kind::Smooth) {
      const auto& f = u0.axis_profile.at(a);
      for (int e = 0; e < ax.num_elements(); ++e) {
        double lo = ax.element_left(e), h = ax.element_size(e);
        for (int k = 0; k <= r; ++k)
          b[e * r + k] += gauss_integrate(lo, lo + h, 14, [&](double x) {
            return f(x) * lagrange_eval(r, k, (x - lo) / h);
          });
      }
    } else {
      double x0 = u0.location.at(a);
      if (x0 < ax.x_min() || x0 > ax.x_max())
        throw config_error("project_initial: point mass outside the domain");
      int e = ax.locate(x0);
      double xi = (x0 - ax.element_left(e)) / ax.element_size(e);
      for (int k = 0; k <= r; ++k) b[e * r + k] += lagrange_eval(r, k, xi);
    }
    Eigen::LLT<MatrixXd> llt(ops.mass[a]);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("project_initial: mass factorization failed");
    axis_coeff.push_back(llt.solve(b));
  }
  VectorXd alpha = kron_vector(axis_coeff);
  if (u0.kind == InitialDatum::Kind::DiracProduct) alpha *= u0.weight;
  return alpha;
}

/// Newton-based implicit time stepping for the semidiscrete system
/// M a' + N(a) = b(t). Backward Euler bootstraps the two-step BDF2 formula.
/// 1D systems factor the dense Jacobian; tensor grids use GMRES with the
/// Kronecker mass as preconditioner.
class Stepper {
 public:
  Stepper(const OperatorSet& ops, StepperConfig cfg,
          std::function<VectorXd(double)> load = {})
      : ops_(ops), cfg_(cfg), load_(std::move(load)) {
    const long long n = ops_.dofs();
    dense_ = n <= kDenseJacobianLimit && ops_.dof.dim() == 1;
    if (dense_) mass_full_ = kron_matrix(ops_.mass);
    for (const auto& M : ops_.mass) {
      mass_llt_.emplace_back(M);
      if (mass_llt_.back().info() != Eigen::Success)
        throw std::runtime_error("Stepper: mass factorization failed");
    }
  }

  const OperatorSet& ops() const { return ops_; }
  const StepperConfig& config() const { return cfg_; }

  VectorXd mass_apply(const VectorXd& x) const { return kron_apply(ops_.mass, x); }

  VectorXd mass_solve(const VectorXd& b) const {
    VectorXd cur = b;
    const int d = ops_.dof.dim();
    for (int a = 0; a < d; ++a) {
      long long before = 1, after = 1;
      long long na = ops_.mass[a].rows();
      for (int i = 0; i < a; ++i) before *= ops_.mass[i].rows();
      for (int i = a + 1; i < d; ++i) after *= ops_.mass[i].rows();
      for (long long k = 0; k < after; ++k) {
        Eigen::Map<MatrixXd> blk(cur.data() + k * before * na, before, na);
        blk.transpose() = mass_llt_[a].solve(blk.transpose()).eval();
      }
    }
    return cur;
  }

  /// Backward-Euler step: solve M(a1-a0)/tau + N(a1) = b(t1) from guess a0.
  VectorXd be_step(const VectorXd& a0, double t1, NewtonStats* stats = nullptr) const {
    VectorXd load = load_ ? load_(t1) : VectorXd();
    return solve_implicit(1.0 / cfg_.tau, a0, load, a0, t1, stats);
  }

  /// BDF2 step with linear-extrapolation initial guess.
  VectorXd bdf2_step(const VectorXd& an, const VectorXd& anm1, double t_next,
                     NewtonStats* stats = nullptr) const {
    VectorXd anchor = (4.0 * an - anm1) / 3.0;
    VectorXd load = load_ ? load_(t_next) : VectorXd();
    VectorXd guess = 2.0 * an - anm1;
    return solve_implicit(1.5 / cfg_.tau, anchor, load, guess, t_next, stats);
  }

  /// Solve c*M(a - anchor) + N(a) = load by damped Newton. The mass term
  /// acts on the difference from the anchor state, which keeps the residual
  /// free of large cancelling intermediates as the solution grows.
  VectorXd solve_implicit(double c, const VectorXd& anchor, const VectorXd& load,
                          const VectorXd& guess, double t,
                          NewtonStats* stats_out = nullptr) const {
    NewtonStats stats;
    VectorXd a = guess;
    const double scale = double(ops_.dofs());
    auto residual = [&](const VectorXd& x) -> VectorXd {
      VectorXd F = c * mass_apply(x - anchor) + nonlinear_residual(ops_, x, cfg_.nonlinearity);
      if (load.size()) F -= load;
      return F;
    };
    VectorXd F = residual(a);
    double fnorm = F.norm() / scale;
    stats.residual_history.push_back(fnorm);
    bool stalled = false;
    for (int it = 0; it < cfg_.max_newton_iters; ++it) {
      if (fnorm <= cfg_.newton_tol) {
        stats.converged = true;
        break;
      }
      VectorXd da;
      if (dense_) {
        MatrixXd J = c * mass_full_ + nonlinear_jacobian(ops_, a, cfg_.nonlinearity);
        da = J.partialPivLu().solve(-F);
      } else {
        auto apply = [&](const VectorXd& x) -> VectorXd {
          return c * mass_apply(x) + nonlinear_jacobian_apply(ops_, a, x, cfg_.nonlinearity);
        };
        auto precond = [&](const VectorXd& x) -> VectorXd { return mass_solve(x) / c; };
        da = VectorXd::Zero(a.size());
        VectorXd negF = -F;
        gmres(apply, precond, negF, da, cfg_.linear_tol, cfg_.linear_max_iter);
      }
      double step = 1.0;
      VectorXd a_try, F_try;
      double fnorm_try = fnorm;
      bool accepted = false;
      for (int halving = 0; halving <= cfg_.max_halvings; ++halving) {
        a_try = a + step * da;
        F_try = residual(a_try);
        fnorm_try = F_try.norm() / scale;
        if (fnorm_try < fnorm || fnorm_try <= cfg_.newton_tol) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {  // no step reduces the residual: attainable floor
        stalled = true;
        break;
      }
      a = a_try;
      F = F_try;
      fnorm = fnorm_try;
      stats.residual_history.push_back(fnorm);
      ++stats.iterations;
    }
    if (fnorm <= cfg_.newton_tol) stats.converged = true;
    // a stall within a small factor of the tolerance is the roundoff floor
    if (stalled && fnorm <= 10.0 * cfg_.newton_tol) stats.converged = true;
    stats.final_residual = fnorm;
    if (!stats.converged) {
      if (stats_out) *stats_out = stats;
      throw solver_error("Newton did not converge at t=" + std::to_string(t) +
                             " (residual " + std::to_string(fnorm) + ")",
                         stats);
    }
    if (stats_out) *stats_out = std::move(stats);
    return a;
  }

 private:
  const OperatorSet& ops_;
  StepperConfig cfg_;
  std::function<VectorXd(double)> load_;
  bool dense_ = false;
  MatrixXd mass_full_;
  std::vector<Eigen::LLT<MatrixXd>> mass_llt_;
};

struct Snapshot {
  double t = 0.0;
  VectorXd alpha;
  int newton_iterations = 0;
  double newton_residual = 0.0;
};

struct StepRecord {
  double t;
  double number;      // w0 . a
  double hypervolume; // w1 . a
  double min_nodal;
  int newton_iterations;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<StepRecord> steps;
  std::vector<std::string> warnings;
  double number0 = 0.0;
  double hyper0 = 0.0;
  bool aborted = false;        // Newton gave up before the horizon
  double t_reached = 0.0;
  std::string abort_reason;
};

/// Full march: one backward-Euler bootstrap step, BDF2 afterwards. Records
/// conservation diagnostics every step and captures snapshots at the
/// requested times (warning if a time is not a step multiple).
inline Trajectory run_trajectory(const Stepper& stepper, const VectorXd& alpha0,
                                 const std::vector<double>& snapshot_times) {
  const auto& cfg = stepper.config();
  const auto& ops = stepper.ops();
  Trajectory traj;
  if (ops.bound_K > 0 && std::isfinite(ops.bound_K) && cfg.tau >= 1.0 / (4.0 * ops.bound_K))
    traj.warnings.push_back("time step exceeds the stability bound 1/(4K), K=" +
                            std::to_string(ops.bound_K));
  const long long nsteps = std::llround(cfg.T / cfg.tau);
  std::vector<long long> snap_steps;
  for (double ts : snapshot_times) {
    long long k = std::llround(ts / cfg.tau);
    if (std::abs(k * cfg.tau - ts) > 1e-9 * std::max(1.0, std::abs(ts)))
      traj.warnings.push_back("snapshot time " + std::to_string(ts) +
                              " is not a step multiple; using nearest step");
    snap_steps.push_back(std::min(std::max<long long>(k, 0), nsteps));
  }
  auto record = [&](double t, const VectorXd& a, int iters) {
    StepRecord rec;
    rec.t = t;
    rec.number = ops.number_full.dot(a);
    rec.hypervolume = ops.hyper_full.dot(a);
    rec.min_nodal = a.minCoeff();
    rec.newton_iterations = iters;
    traj.steps.push_back(rec);
  };
  auto maybe_snapshot = [&](long long k, double t, const VectorXd& a, const NewtonStats& st) {
    for (size_t i = 0; i < snap_steps.size(); ++i)
      if (snap_steps[i] == k)
        traj.snapshots.push_back({t, a, st.iterations, st.final_residual});
  };
  VectorXd prev = alpha0, cur = alpha0;
  traj.number0 = ops.number_full.dot(alpha0);
  traj.hyper0 = ops.hyper_full.dot(alpha0);
  record(0.0, alpha0, 0);
  maybe_snapshot(0, 0.0, alpha0, NewtonStats{});
  if (nsteps == 0) return traj;

  // steps abort with a diagnostic when Newton stalls (blow-up cases) rather
  // than silently losing accuracy; the partial trajectory is returned
  NewtonStats st;
  try {
    cur = stepper.be_step(alpha0, cfg.tau, &st);
    record(cfg.tau, cur, st.iterations);
    maybe_snapshot(1, cfg.tau, cur, st);
    traj.t_reached = cfg.tau;
    for (long long k = 2; k <= nsteps; ++k) {
      double t = k * cfg.tau;
      VectorXd next = cfg.scheme == TimeScheme::BackwardEuler
                          ? stepper.be_step(cur, t, &st)
                          : stepper.bdf2_step(cur, prev, t, &st);
      prev = cur;
      cur = next;
      record(t, cur, st.iterations);
      maybe_snapshot(k, t, cur, st);
      traj.t_reached = t;
    }
  } catch (const solver_error& e) {
    traj.aborted = true;
    traj.abort_reason = e.what();
    traj.warnings.push_back(std::string("march aborted: ") + e.what());
  }
  return traj;
}

}  // namespace ncbe
