// Command-line driver for the collisional breakage solver: single runs,
// moment studies across mesh ladders, and grid-refinement convergence
// sweeps. Outputs are deterministic CSV files plus a provenance echo of
// every effective setting.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncbe/csv.hpp"
#include "ncbe/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

std::vector<double> parse_times(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

ncbe::GridMode parse_grid(const std::string& g) {
  if (g == "uniform") return ncbe::GridMode::Uniform;
  if (g == "geometric") return ncbe::GridMode::Geometric;
  if (g == "random") return ncbe::GridMode::Random;
  throw ncbe::config_error("unknown grid mode: " + g);
}

std::filesystem::path out_root() {
  const char* env = std::getenv("NCBE_OUT_ROOT");
  return env ? std::filesystem::path(env) : std::filesystem::path("out");
}

struct CommonOpts {
  std::string case_id;
  int degree = 1;
  double tau = 0.0;
  double T = 0.0;
  std::string snapshots;
  std::string mode = "bdf2";
  std::string nonlinearity = "consistent";
  std::string grid = "uniform";
  std::uint64_t seed = 1;
  double grid_ratio = 2.0;
  bool tc3_normalized = false;
  std::string gamma_expr, beta_expr;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_case = true) {
  if (with_case) cmd->add_option("--case", o.case_id, "case id (see list-cases)")->required();
  cmd->add_option("--degree", o.degree, "polynomial degree (1..3)");
  cmd->add_option("--tau", o.tau, "time step; default min(1e-3, h/4)");
  cmd->add_option("--T", o.T, "final time; default from the case");
  cmd->add_option("--snapshots", o.snapshots, "comma-separated snapshot times");
  cmd->add_option("--mode", o.mode, "bdf2 | backward_euler");
  cmd->add_option("--nonlinearity", o.nonlinearity, "consistent | hadamard");
  cmd->add_option("--grid", o.grid, "uniform | geometric | random");
  cmd->add_option("--seed", o.seed, "seed for random grids");
  cmd->add_option("--ratio", o.grid_ratio, "end-to-end size ratio for geometric grids");
  cmd->add_flag("--tc3-normalized", o.tc3_normalized,
                "use the volume-conserving variant of the power-law breakage kernel");
  cmd->add_option("--gamma", o.gamma_expr,
                  "collision kernel expression override (product, constant, poly(c))");
  cmd->add_option("--beta", o.beta_expr,
                  "breakage kernel expression override (binary_uniform, dirac(r:w,...), "
                  "multi_uniform(d))");
  cmd->add_option("--out", o.out_dir, "output directory (default under NCBE_OUT_ROOT)");
}

ncbe::RunOptions to_run_options(const CommonOpts& o, int n) {
  ncbe::RunOptions opt;
  opt.n_per_axis = n;
  opt.degree = o.degree;
  opt.tau = o.tau;
  opt.T = o.T;
  opt.snapshot_times = parse_times(o.snapshots);
  opt.scheme = o.mode == "backward_euler" ? ncbe::TimeScheme::BackwardEuler
                                          : ncbe::TimeScheme::BDF2;
  if (o.mode != "bdf2" && o.mode != "backward_euler")
    throw ncbe::config_error("unknown mode: " + o.mode);
  if (o.nonlinearity == "hadamard")
    opt.nonlinearity = ncbe::NonlinearityMode::Hadamard;
  else if (o.nonlinearity != "consistent")
    throw ncbe::config_error("unknown nonlinearity mode: " + o.nonlinearity);
  opt.grid = parse_grid(o.grid);
  opt.seed = o.seed;
  opt.grid_ratio = o.grid_ratio;
  opt.use_variant_kernel = o.tc3_normalized;
  opt.gamma_expr = o.gamma_expr;
  opt.beta_expr = o.beta_expr;
  return opt;
}

std::filesystem::path resolve_out(const CommonOpts& o, const std::string& stem) {
  return o.out_dir.empty() ? out_root() / stem : std::filesystem::path(o.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conforming finite-element solver for collisional breakage population balances"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value configuration file");

  CommonOpts run_o, mom_o, conv_o;
  int run_n = 0;
  bool dump_coeffs = false, dump_operators = false, dump_mesh = false;
  auto* run = app.add_subcommand("run", "march one case and emit trajectory.csv");
  add_common(run, run_o);
  run->add_option("--n", run_n, "elements per axis")->required();
  run->add_flag("--dump-coeffs", dump_coeffs, "write coefficient snapshots");
  run->add_flag("--dump-operators", dump_operators, "write the assembled operator dump");
  run->add_flag("--dump-mesh", dump_mesh, "write mesh coordinates as CSV");

  std::string mom_nlist = "80,160,320";
  auto* moments = app.add_subcommand("moments", "moment comparison tables across a mesh ladder");
  add_common(moments, mom_o);
  moments->add_option("--n-list", mom_nlist, "comma-separated element counts");

  std::string conv_nlist = "20,40,80,160,320", conv_degrees = "1";
  auto* conv = app.add_subcommand("convergence", "grid-refinement error study");
  add_common(conv, conv_o);
  conv->add_option("--n-list", conv_nlist, "comma-separated element counts");
  conv->add_option("--degrees", conv_degrees, "comma-separated polynomial degrees");

  bool show_disc = false;
  auto* list = app.add_subcommand("list-cases", "print the case registry");
  list->add_flag("--discrepancies", show_disc, "include the known-discrepancy report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (list->parsed()) {
      for (const auto& tc : ncbe::registry()) {
        std::cout << tc.id << "  [" << tc.dim << "D]  " << tc.description << "\n";
        std::cout << "    domain [" << ncbe::fmt_double(tc.x_min) << ", "
                  << ncbe::fmt_double(tc.x_max) << "]^" << tc.dim << ", horizon T="
                  << ncbe::fmt_double(tc.T) << (tc.has_exact ? ", exact solution available" : "")
                  << (tc.manufactured_source ? ", manufactured forcing" : "") << "\n";
      }
      if (show_disc) {
        std::cout << "known discrepancies:\n";
        for (const auto& e : ncbe::discrepancy_report())
          std::cout << "  " << e.case_id << ": " << e.what << " = " << ncbe::fmt_double(e.value)
                    << "\n";
      }
      return kExitOk;
    }

    if (run->parsed()) {
      auto tc = ncbe::find_case(run_o.case_id);
      auto opt = to_run_options(run_o, run_n);
      auto setup = ncbe::make_setup(tc, opt);
      auto snaps = ncbe::effective_snapshots(setup, opt);
      auto traj = ncbe::execute(setup, snaps);
      auto dir = resolve_out(run_o, "run_" + run_o.case_id);
      ncbe::write_file(dir / "trajectory.csv", ncbe::trajectory_csv(setup, traj));
      for (const auto& w : traj.warnings) std::cerr << "warning: " << w << "\n";
      ncbe::Provenance prov = setup.provenance;
      for (const auto& w : traj.warnings) prov.add("warning", w);
      ncbe::write_file(dir / "provenance.txt", prov.text());
      if (traj.aborted) {
        ncbe::write_file(dir / "diagnostic.txt",
                         "march aborted at t=" + ncbe::fmt_double(traj.t_reached) + " of " +
                             ncbe::fmt_double(setup.cfg.T) + "\n" + traj.abort_reason + "\n");
        std::cerr << "solver error: " << traj.abort_reason << "\n";
        return kExitSolver;
      }
      if (dump_mesh) ncbe::write_file(dir / "mesh.csv", ncbe::mesh_to_csv(setup.mesh));
      if (dump_operators) ncbe::save_operator_set(setup.ops, (dir / "operators.bin").string());
      if (dump_coeffs) {
        for (const auto& snap : traj.snapshots) {
          std::ostringstream os;
          os << "coeff\n";
          for (long long i = 0; i < snap.alpha.size(); ++i)
            os << ncbe::fmt_double(snap.alpha[i]) << "\n";
          ncbe::write_file(dir / ("coeffs_t" + ncbe::fmt_double(snap.t) + ".csv"), os.str());
        }
      }
      std::cout << "wrote " << (dir / "trajectory.csv").string() << "\n";
      return kExitOk;
    }

    if (moments->parsed()) {
      auto tc = ncbe::find_case(mom_o.case_id);
      auto opt = to_run_options(mom_o, 1);
      std::vector<int> ns;
      for (double v : parse_times(mom_nlist)) ns.push_back(int(v));
      auto results = ncbe::moment_study(tc, ns, opt);
      auto dir = resolve_out(mom_o, "moments_" + mom_o.case_id);
      for (const auto& r : results) {
        std::string name = "m";
        for (int kk : r.k) name += std::to_string(kk);
        ncbe::write_file(dir / ("moments_" + name + ".csv"), ncbe::moment_study_csv(r));
      }
      ncbe::Provenance prov;
      prov.add("case", mom_o.case_id);
      prov.add("n_list", mom_nlist);
      prov.add("tau", opt.tau > 0 ? opt.tau : 1e-3, opt.tau <= 0);
      prov.add("degree", std::to_string(opt.degree), opt.degree == 1);
      ncbe::write_file(dir / "provenance.txt", prov.text());
      std::cout << "wrote " << dir.string() << "\n";
      return kExitOk;
    }

    if (conv->parsed()) {
      auto tc = ncbe::find_case(conv_o.case_id);
      auto opt = to_run_options(conv_o, 1);
      std::vector<int> ns;
      for (double v : parse_times(conv_nlist)) ns.push_back(int(v));
      std::vector<ncbe::ConvergenceResult> blocks;
      for (double dv : parse_times(conv_degrees)) {
        auto res = ncbe::convergence_study(tc, ns, int(dv), opt);
        res.setups.clear();  // drop meshes before rendering
        blocks.push_back(std::move(res));
      }
      bool l1 = opt.grid != ncbe::GridMode::Uniform;
      auto dir = resolve_out(conv_o, "convergence_" + conv_o.case_id);
      ncbe::write_file(dir / "convergence.csv", ncbe::convergence_csv(blocks, l1));
      ncbe::Provenance prov;
      prov.add("case", conv_o.case_id);
      prov.add("n_list", conv_nlist);
      prov.add("degrees", conv_degrees);
      prov.add("tau", opt.tau, opt.tau <= 0);
      prov.add("T", opt.T > 0 ? opt.T : tc.T, opt.T <= 0);
      prov.add("grid", conv_o.grid);
      if (opt.grid == ncbe::GridMode::Random) prov.add("seed", std::to_string(opt.seed));
      ncbe::write_file(dir / "provenance.txt", prov.text());
      std::cout << "wrote " << (dir / "convergence.csv").string() << "\n";
      return kExitOk;
    }
  } catch (const ncbe::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ncbe::solver_error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const ncbe::io_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}
