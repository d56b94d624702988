#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ncbe/cases.hpp"
#include "ncbe/csv.hpp"
#include "ncbe/observables.hpp"
#include "ncbe/oracle.hpp"
#include "ncbe/stepper.hpp"

namespace ncbe {

struct RunOptions {
  int n_per_axis = 0;          // elements per axis; 0 = invalid
  int degree = 1;
  double tau = 0.0;            // 0 = default min(1e-3, h/4)
  double T = 0.0;              // 0 = case horizon
  std::vector<double> snapshot_times;  // empty = case defaults
  NonlinearityMode nonlinearity = NonlinearityMode::Consistent;
  TimeScheme scheme = TimeScheme::BDF2;
  GridMode grid = GridMode::Uniform;
  std::uint64_t seed = 1;
  double grid_ratio = 2.0;          // end-to-end size ratio for geometric grading
  bool use_variant_kernel = false;  // normalized power-law breakage variant
  std::string gamma_expr;           // optional kernel override (expression grammar)
  std::string beta_expr;
  double newton_tol = 1e-11;
};

struct RunSetup {
  TestCase tc;
  TensorMesh mesh;
  OperatorSet ops;
  VectorXd alpha0;
  StepperConfig cfg;
  std::function<VectorXd(double)> load;
  Provenance provenance;
};

inline RunSetup make_setup(TestCase tc, const RunOptions& opt) {
  if (opt.n_per_axis < 1) throw config_error("element count must be >= 1");
  if (opt.use_variant_kernel) {
    if (!tc.has_variant) throw config_error("case " + tc.id + " has no variant kernel");
    tc.beta = tc.variant_beta;
    tc.closures = tc.variant_closures;
    tc.mass_conserving = true;
  }
  if (!opt.gamma_expr.empty() || !opt.beta_expr.empty()) {
    // kernels composed from the expression grammar replace the case kernels;
    // the case closures no longer apply
    if (!opt.gamma_expr.empty()) tc.gamma = parse_collision_kernel(opt.gamma_expr, tc.dim);
    if (!opt.beta_expr.empty()) tc.beta = parse_breakage_kernel(opt.beta_expr, tc.dim);
    tc.closures.clear();
    tc.has_exact = false;
    tc.manufactured_source = false;
    tc.mass_conserving =
        check_hypervolume_conservation(tc.beta, std::vector<double>(tc.dim, 0.5 * tc.x_max)).pass;
  }
  RunSetup s;
  std::vector<Axis1D> axes;
  for (int a = 0; a < tc.dim; ++a)
    axes.push_back(opt.grid == GridMode::Uniform
                       ? uniform_axis(tc.x_min, tc.x_max, opt.n_per_axis)
                       : nonuniform_axis(tc.x_min, tc.x_max, opt.n_per_axis, opt.grid, opt.seed,
                                         opt.grid_ratio));
  s.mesh = tensor_mesh(std::move(axes));
  s.ops = assemble_operators(s.mesh, opt.degree, tc.gamma, tc.beta);
  snap_dirac_to_mesh(tc, s.ops.dof);
  s.alpha0 = project_initial(tc.initial, s.ops);
  s.cfg.T = opt.T > 0 ? opt.T : tc.T;
  double h = mesh_size(s.mesh);
  s.cfg.tau = opt.tau > 0 ? opt.tau : std::min(1e-3, h / 4.0);
  s.cfg.scheme = opt.scheme;
  s.cfg.nonlinearity = opt.nonlinearity;
  s.cfg.newton_tol = opt.newton_tol;
  s.load = manufactured_load(tc, s.ops);
  s.tc = std::move(tc);

  auto& p = s.provenance;
  p.add("case", s.tc.id);
  p.add("dimension", std::to_string(s.tc.dim));
  p.add("domain_min", s.tc.x_min, true);
  p.add("domain_max", s.tc.x_max, true);
  p.add("elements_per_axis", std::to_string(opt.n_per_axis));
  p.add("degree", std::to_string(opt.degree), opt.degree == 1);
  p.add("tau", s.cfg.tau, opt.tau <= 0);
  p.add("T", s.cfg.T, opt.T <= 0);
  p.add("scheme", opt.scheme == TimeScheme::BDF2 ? "bdf2" : "backward_euler");
  p.add("nonlinearity",
        opt.nonlinearity == NonlinearityMode::Consistent ? "consistent" : "hadamard");
  p.add("grid", opt.grid == GridMode::Uniform
                    ? "uniform"
                    : (opt.grid == GridMode::Geometric ? "geometric" : "random"));
  if (opt.grid == GridMode::Random) p.add("seed", std::to_string(opt.seed));
  if (opt.grid == GridMode::Geometric) p.add("grid_ratio", opt.grid_ratio, true);
  if (!opt.gamma_expr.empty()) p.add("collision_kernel_override", opt.gamma_expr);
  if (!opt.beta_expr.empty()) p.add("breakage_kernel_override", opt.beta_expr);
  p.add("newton_tol", s.cfg.newton_tol, true);
  p.add("kernel", s.ops.kernel_id);
  p.add("forcing", s.tc.manufactured_source ? "manufactured" : "none");
  p.add("stability_constant_K", s.ops.bound_K);
  if (s.tc.initial.kind == InitialDatum::Kind::DiracProduct)
    p.add("atom_location", fmt_double(s.tc.initial.location[0]));
  return s;
}

inline std::vector<double> effective_snapshots(const RunSetup& s, const RunOptions& opt) {
  std::vector<double> ts = opt.snapshot_times.empty() ? s.tc.snapshot_times : opt.snapshot_times;
  std::vector<double> out;
  for (double t : ts)
    if (t <= s.cfg.T + 1e-12) out.push_back(t);
  if (out.empty() || out.back() < s.cfg.T - 1e-12) out.push_back(s.cfg.T);
  return out;
}

inline Trajectory execute(const RunSetup& s, const std::vector<double>& snapshots) {
  Stepper stepper(s.ops, s.cfg, s.load);
  return run_trajectory(stepper, s.alpha0, snapshots);
}

/// Snapshot table: time, moment functionals with exact values and relative
/// errors where closures exist, conservation diagnostics, Newton effort.
inline std::string trajectory_csv(const RunSetup& s, const Trajectory& traj) {
  const int d = s.tc.dim;
  std::vector<int> k0(d, 0), k1(d, 1);
  std::string m0name = "m" + std::string(d, '0');
  std::string m1name = "m" + std::string(d, '1');
  std::ostringstream os;
  os << "t," << m0name << "," << m0name << "_exact," << m0name << "_rel_err," << m1name << ","
     << m1name << "_exact," << m1name << "_rel_err,hyper_drift,min_nodal,newton_iters\n";
  double m1_0 = traj.hyper0;
  for (const auto& snap : traj.snapshots) {
    double m0 = moment(snap.alpha, s.ops.dof, k0);
    double m1 = moment(snap.alpha, s.ops.dof, k1);
    double drift = m1_0 != 0 ? std::abs(m1 - m1_0) / std::abs(m1_0) : std::abs(m1);
    double minn = 0.0;
    for (const auto& st : traj.steps)
      if (std::abs(st.t - snap.t) < 1e-12) minn = st.min_nodal;
    auto closure_cols = [&](const std::vector<int>& k, double num) {
      if (!s.tc.has_closure(k)) return std::string(",,");
      double ex = s.tc.exact_moment(k, snap.t);
      return "," + fmt_double(ex) + "," +
             fmt_double(ex != 0 ? std::abs(num - ex) / std::abs(ex) : std::abs(num));
    };
    os << fmt_double(snap.t) << ',' << fmt_double(m0) << closure_cols(k0, m0) << ','
       << fmt_double(m1) << closure_cols(k1, m1) << ',' << fmt_double(drift) << ','
       << fmt_double(minn) << ',' << snap.newton_iterations << '\n';
  }
  return os.str();
}

struct MomentStudyResult {
  std::vector<int> k;
  std::vector<double> times;
  std::vector<int> n_values;
  // value[i][j]: moment at time i for mesh j; rel_err likewise
  std::vector<std::vector<double>> value, rel_err;
  std::vector<double> exact;
};

/// Moment comparison across a mesh ladder, mirroring the published tables:
/// one block per moment index, column pairs (numeric, relative error).
inline std::vector<MomentStudyResult> moment_study(const TestCase& tc,
                                                   const std::vector<int>& n_list,
                                                   const RunOptions& base) {
  std::vector<MomentStudyResult> results;
  std::vector<std::vector<int>> indices;
  for (const auto& c : tc.closures)
    if (c.label == "stated") indices.push_back(c.k);
  for (const auto& k : indices) {
    MomentStudyResult r;
    r.k = k;
    r.n_values = n_list;
    results.push_back(std::move(r));
  }
  bool first_mesh = true;
  for (int n : n_list) {
    RunOptions opt = base;
    opt.n_per_axis = n;
    if (opt.tau <= 0) opt.tau = 1e-3;
    RunSetup s = make_setup(tc, opt);
    auto snaps = effective_snapshots(s, opt);
    Trajectory traj = execute(s, snaps);
    if (traj.aborted) throw solver_error(traj.abort_reason, {});
    for (size_t m = 0; m < indices.size(); ++m) {
      auto& r = results[m];
      for (size_t i = 0; i < traj.snapshots.size(); ++i) {
        const auto& snap = traj.snapshots[i];
        if (snap.t == 0.0 && snaps.front() != 0.0) continue;
        double num = moment(snap.alpha, s.ops.dof, r.k);
        double ex = s.tc.exact_moment(r.k, snap.t);
        if (first_mesh) {
          r.times.push_back(snap.t);
          r.exact.push_back(ex);
        }
        if (r.value.size() <= i) {
          r.value.emplace_back();
          r.rel_err.emplace_back();
        }
        r.value[i].push_back(num);
        r.rel_err[i].push_back(ex != 0 ? std::abs(num - ex) / std::abs(ex) : std::abs(num));
      }
    }
    first_mesh = false;
  }
  return results;
}

inline std::string moment_study_csv(const MomentStudyResult& r) {
  std::ostringstream os;
  os << "t,exact";
  for (int n : r.n_values) os << ",num_n" << n << ",rel_err_n" << n << ",rel_err_n" << n << "_4sig";
  os << '\n';
  for (size_t i = 0; i < r.times.size(); ++i) {
    os << fmt_double(r.times[i]) << ',' << fmt_double(r.exact[i]);
    for (size_t j = 0; j < r.n_values.size(); ++j)
      os << ',' << fmt_double(r.value[i][j]) << ',' << fmt_double(r.rel_err[i][j]) << ','
         << fmt_sig4(r.rel_err[i][j]);
    os << '\n';
  }
  return os.str();
}

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  long long dofs = 0;
  NormReport norms;
  double eoc_l2 = 0, eoc_rel_linf = 0, eoc_h1 = 0, eoc_l1 = 0;  // NaN on first row
};

struct ConvergenceResult {
  int degree = 1;
  std::vector<ConvergenceRow> rows;
  std::vector<Snapshot> final_snapshots;  // terminal snapshot per mesh
  std::vector<RunSetup> setups;           // matching setups (mesh/ops) per row
};

/// Grid-refinement study at fixed degree: march every mesh to T, measure
/// the terminal error against the closed form, attach pairwise orders.
inline ConvergenceResult convergence_study(const TestCase& tc, const std::vector<int>& n_list,
                                           int degree, const RunOptions& base) {
  if (!tc.has_exact) throw config_error("case " + tc.id + " has no exact solution");
  ConvergenceResult res;
  res.degree = degree;
  std::vector<double> hs, l2s, rls, h1s, l1s;
  for (int n : n_list) {
    RunOptions opt = base;
    opt.n_per_axis = n;
    opt.degree = degree;
    RunSetup s = make_setup(tc, opt);
    std::vector<double> snaps = opt.snapshot_times;
    if (snaps.empty()) snaps = {s.cfg.T};
    Trajectory traj = execute(s, snaps);
    if (traj.aborted) throw solver_error(traj.abort_reason, {});
    const Snapshot& last = traj.snapshots.back();
    NormRegion region = norm_region_for(s.tc);
    NormReport norms = norm_error(last.alpha, s.ops.dof, exact_field_at(s.tc, last.t), region);
    ConvergenceRow row;
    row.n = n;
    row.h = mesh_size(s.mesh);
    row.dofs = s.ops.dofs();
    row.norms = norms;
    res.rows.push_back(row);
    res.final_snapshots.push_back(last);
    res.setups.push_back(std::move(s));
    hs.push_back(row.h);
    l2s.push_back(norms.l2);
    rls.push_back(norms.rel_linf);
    h1s.push_back(norms.h1);
    l1s.push_back(norms.l1);
  }
  if (res.rows.size() >= 2) {
    auto e2 = eoc(l2s, hs), er = eoc(rls, hs), eh = eoc(h1s, hs), e1 = eoc(l1s, hs);
    for (size_t i = 1; i < res.rows.size(); ++i) {
      res.rows[i].eoc_l2 = e2[i - 1];
      res.rows[i].eoc_rel_linf = er[i - 1];
      res.rows[i].eoc_h1 = eh[i - 1];
      res.rows[i].eoc_l1 = e1[i - 1];
    }
    res.rows[0].eoc_l2 = res.rows[0].eoc_rel_linf = res.rows[0].eoc_h1 = res.rows[0].eoc_l1 =
        std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

inline std::string convergence_csv(const std::vector<ConvergenceResult>& blocks,
                                   bool include_l1 = false) {
  std::ostringstream os;
  os << "degree,n,h,dofs,l2,l2_eoc,rel_linf,rel_linf_eoc,h1,h1_eoc";
  if (include_l1) os << ",l1,l1_eoc";
  os << '\n';
  for (const auto& b : blocks)
    for (const auto& row : b.rows) {
      os << b.degree << ',' << row.n << ',' << fmt_double(row.h) << ',' << row.dofs << ','
         << fmt_double(row.norms.l2) << ',' << fmt_double(row.eoc_l2) << ','
         << fmt_double(row.norms.rel_linf) << ',' << fmt_double(row.eoc_rel_linf) << ','
         << fmt_double(row.norms.h1) << ',' << fmt_double(row.eoc_h1);
      if (include_l1) os << ',' << fmt_double(row.norms.l1) << ',' << fmt_double(row.eoc_l1);
      os << '\n';
    }
  return os.str();
}

}  // namespace ncbe
