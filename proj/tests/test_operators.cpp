#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ncbe/cases.hpp"
#include "ncbe/operators.hpp"

using namespace ncbe;

namespace {

VectorXd random_nonneg(std::mt19937_64& rng, long long n) {
  VectorXd v(n);
  for (long long i = 0; i < n; ++i) v[i] = double(rng() >> 11) * 0x1.0p-53;
  return v;
}

// nodal values of the coordinate-product function, the discrete test
// function for the volume-balance identity
VectorXd nodal_coordinate_product(const DofMap& dof) {
  std::vector<VectorXd> axis;
  for (int a = 0; a < dof.dim(); ++a) {
    VectorXd c(dof.axis_dofs(a));
    for (int g = 0; g < dof.axis_dofs(a); ++g) c[g] = dof.axis_node_coord(a, g);
    axis.push_back(c);
  }
  return kron_vector(axis);
}

}  // namespace

TEST_CASE("single element hat mass matrix") {
  auto M = assemble_axis_mass(uniform_axis(0, 1, 1), 1);
  REQUIRE(M(0, 0) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
  REQUIRE(M(0, 1) == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
  REQUIRE(M(1, 1) == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("mass row sums equal the basis integrals") {
  auto axis = nonuniform_axis(0.1, 3.0, 9, GridMode::Random, 11);
  for (int r = 1; r <= 3; ++r) {
    auto M = assemble_axis_mass(axis, r);
    auto w = assemble_axis_vector(axis, r, factor_constant(1.0));
    VectorXd rows = M.rowwise().sum();
    for (int j = 0; j < M.rows(); ++j) {
      REQUIRE(rows[j] == Catch::Approx(w[j]).epsilon(1e-12));
      REQUIRE(w[j] > 0.0);
    }
  }
}

TEST_CASE("mass matrices are symmetric positive definite") {
  auto axis = uniform_axis(1e-9, 5, 12);
  for (int r = 1; r <= 3; ++r) {
    auto M = assemble_axis_mass(axis, r);
    REQUIRE((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    Eigen::LLT<MatrixXd> llt(M);
    REQUIRE(llt.info() == Eigen::Success);
  }
}

TEST_CASE("2d mass equals the kronecker product of axis masses") {
  auto ax = uniform_axis(0, 1, 3);
  auto ay = uniform_axis(0, 2, 3);
  auto mesh = tensor_mesh({ax, ay});
  int r = 2;
  auto dof = build_dof_map(mesh, r);
  MatrixXd M = assemble_mass(mesh, r);
  // direct 2d quadrature for a few entries
  const QuadratureRule& q = cached_gauss(r + 2);
  auto direct_entry = [&](int j, int i) {
    int nx = dof.axis_dofs(0);
    int jx = j % nx, jy = j / nx, ix = i % nx, iy = i / nx;
    double total = 0;
    for (int ex = 0; ex < ax.num_elements(); ++ex)
      for (int ey = 0; ey < ay.num_elements(); ++ey) {
        double sx = 0, sy = 0;
        for (size_t p = 0; p < q.points.size(); ++p) {
          double xi = q.points[p];
          auto val = [&](int g, int e, double xx) {
            int l = g - e * r;
            return (l >= 0 && l <= r) ? lagrange_eval(r, l, xx) : 0.0;
          };
          sx += q.weights[p] * val(jx, ex, xi) * val(ix, ex, xi);
          sy += q.weights[p] * val(jy, ey, xi) * val(iy, ey, xi);
        }
        total += sx * ax.element_size(ex) * sy * ay.element_size(ey);
      }
    return total;
  };
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 12; ++trial) {
    int j = int(rng() % M.rows()), i = int(rng() % M.cols());
    REQUIRE(M(j, i) == Catch::Approx(direct_entry(j, i)).margin(1e-13));
  }
}

TEST_CASE("loss operator basics") {
  // constant kernel, flat density on a single element: loss_j = int phi_j = 1/2
  auto mesh = tensor_mesh({uniform_axis(0, 1, 1)});
  auto gamma = parse_collision_kernel("constant", 1);
  BreakageKernel nobeta;
  nobeta.dim = 1;
  nobeta.name = "none";
  auto ops = assemble_operators(mesh, 1, gamma, nobeta);
  REQUIRE(ops.gain.empty());
  VectorXd ones = VectorXd::Ones(2);
  VectorXd res = nonlinear_residual(ops, ones);
  REQUIRE(res[0] == Catch::Approx(0.5).epsilon(1e-13));
  REQUIRE(res[1] == Catch::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("product kernel loss vectors are first-moment functionals") {
  auto mesh = tensor_mesh({uniform_axis(1e-9, 5, 8)});
  auto tc = find_case("m1");
  auto ops = assemble_operators(mesh, 1, tc.gamma, tc.beta);
  auto w1 = assemble_axis_vector(mesh.axes[0], 1, factor_monomial(1, 1));
  REQUIRE(ops.loss.size() == 1);
  REQUIRE((ops.loss[0].v[0] - w1).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("residual is zero at zero and quadratically homogeneous") {
  auto tc = find_case("m1");
  auto mesh = tensor_mesh({uniform_axis(tc.x_min, tc.x_max, 10)});
  auto ops = assemble_operators(mesh, 2, tc.gamma, tc.beta);
  VectorXd zero = VectorXd::Zero(ops.dofs());
  REQUIRE(nonlinear_residual(ops, zero).norm() == 0.0);
  std::mt19937_64 rng(17);
  VectorXd a = random_nonneg(rng, ops.dofs());
  VectorXd r1 = nonlinear_residual(ops, a);
  VectorXd r2 = nonlinear_residual(ops, 2.0 * a);
  REQUIRE((r2 - 4.0 * r1).norm() <= 1e-12 * r1.norm());
}

TEST_CASE("volume-balance functional annihilates the residual") {
  std::mt19937_64 rng(23);
  for (const auto& id : {"m1", "m2", "m4", "m5"}) {
    auto tc = find_case(id);
    int n = tc.dim == 1 ? 16 : 4;
    std::vector<Axis1D> axes(tc.dim, uniform_axis(tc.x_min, tc.x_max, n));
    auto mesh = tensor_mesh(axes);
    auto ops = assemble_operators(mesh, 1, tc.gamma, tc.beta);
    VectorXd c = nodal_coordinate_product(ops.dof);
    for (int trial = 0; trial < 20; ++trial) {
      VectorXd a = random_nonneg(rng, ops.dofs());
      VectorXd res = nonlinear_residual(ops, a);
      double lossmag = 0;
      for (const auto& t : ops.loss)
        lossmag += std::abs(t.coeff * t.v_full.dot(a)) * kron_apply(t.A, a).cwiseAbs().dot(c);
      REQUIRE(std::abs(c.dot(res)) <= 1e-10 * std::max(1e-30, lossmag));
    }
  }
}

TEST_CASE("number functional is nondecreasing for two-or-more fragment kernels") {
  std::mt19937_64 rng(29);
  for (const auto& id : {"m1", "m2", "m5"}) {
    auto tc = find_case(id);
    int n = tc.dim == 1 ? 12 : 4;
    std::vector<Axis1D> axes(tc.dim, uniform_axis(tc.x_min, tc.x_max, n));
    auto ops = assemble_operators(tensor_mesh(axes), 1, tc.gamma, tc.beta);
    VectorXd ones = VectorXd::Ones(ops.dofs());
    for (int trial = 0; trial < 20; ++trial) {
      VectorXd a = random_nonneg(rng, ops.dofs());
      // gain minus loss tested against 1: growth rate of the particle count
      double growth = -ones.dot(nonlinear_residual(ops, a));
      REQUIRE(growth >= -1e-12);
    }
  }
}

TEST_CASE("jacobian matches central finite differences") {
  std::mt19937_64 rng(31);
  for (const auto& id : {"m1", "m2", "m4"}) {
    auto tc = find_case(id);
    auto mesh = tensor_mesh({uniform_axis(tc.x_min, tc.x_max, 6)});
    for (int r : {1, 2}) {
      auto ops = assemble_operators(mesh, r, tc.gamma, tc.beta);
      VectorXd a = random_nonneg(rng, ops.dofs());
      VectorXd dvec = random_nonneg(rng, ops.dofs());
      MatrixXd J = nonlinear_jacobian(ops, a);
      VectorXd jd = J * dvec;
      REQUIRE((nonlinear_jacobian_apply(ops, a, dvec) - jd).norm() <= 1e-12 * jd.norm());
      double eps = 1e-5;
      VectorXd fd = (nonlinear_residual(ops, a + eps * dvec) -
                     nonlinear_residual(ops, a - eps * dvec)) /
                    (2 * eps);
      REQUIRE((fd - jd).norm() <= 1e-6 * jd.norm());
    }
  }
}

TEST_CASE("jacobian at zero is the zero matrix") {
  auto tc = find_case("m1");
  auto mesh = tensor_mesh({uniform_axis(tc.x_min, tc.x_max, 5)});
  auto ops = assemble_operators(mesh, 1, tc.gamma, tc.beta);
  MatrixXd J = nonlinear_jacobian(ops, VectorXd::Zero(ops.dofs()));
  REQUIRE(J.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("jacobian minus scaled operators has small rank") {
  auto tc = find_case("m1");
  auto mesh = tensor_mesh({uniform_axis(tc.x_min, tc.x_max, 8)});
  auto ops = assemble_operators(mesh, 1, tc.gamma, tc.beta);
  std::mt19937_64 rng(37);
  VectorXd a = random_nonneg(rng, ops.dofs());
  MatrixXd J = nonlinear_jacobian(ops, a);
  for (const auto& t : ops.loss) J -= t.coeff * t.v_full.dot(a) * kron_matrix(t.A);
  for (const auto& t : ops.gain) J += t.coeff * t.v_full.dot(a) * kron_matrix(t.A);
  Eigen::JacobiSVD<MatrixXd> svd(J);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
  REQUIRE(rank <= int(ops.loss.size() + ops.gain.size()));
}

TEST_CASE("comb gain rows vanish beyond the largest ratio") {
  auto tc = find_case("m2");
  auto mesh = tensor_mesh({uniform_axis(tc.x_min, tc.x_max, 10)});
  auto ops = assemble_operators(mesh, 1, tc.gamma, tc.beta);
  REQUIRE(ops.gain.size() == 1);
  const MatrixXd& D = ops.gain[0].A[0];
  double amax = 0.6, xmax = tc.x_max;
  for (int j = 0; j < D.rows(); ++j) {
    double node = ops.dof.axis_node_coord(0, j);
    // rows whose basis support starts beyond a_max * xmax receive nothing
    double support_left = node - mesh.axes[0].element_size(0);
    if (support_left > amax * xmax + 1e-12) REQUIRE(D.row(j).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("hadamard mode keeps only diagonal interactions") {
  auto tc = find_case("m1");
  auto mesh = tensor_mesh({uniform_axis(tc.x_min, tc.x_max, 6)});
  auto ops = assemble_operators(mesh, 1, tc.gamma, tc.beta);
  std::mt19937_64 rng(41);
  VectorXd a = random_nonneg(rng, ops.dofs());
  VectorXd got = nonlinear_residual(ops, a, NonlinearityMode::Hadamard);
  VectorXd want = VectorXd::Zero(ops.dofs());
  for (const auto& t : ops.loss) {
    MatrixXd A = kron_matrix(t.A);
    for (int j = 0; j < A.rows(); ++j)
      for (int i = 0; i < A.cols(); ++i)
        want[j] += t.coeff * A(j, i) * t.v_full[i] * a[i] * a[i];
  }
  for (const auto& t : ops.gain) {
    MatrixXd A = kron_matrix(t.A);
    for (int j = 0; j < A.rows(); ++j)
      for (int i = 0; i < A.cols(); ++i)
        want[j] -= t.coeff * A(j, i) * t.v_full[i] * a[i] * a[i];
  }
  REQUIRE((got - want).norm() <= 1e-12 * std::max(1.0, want.norm()));
}

TEST_CASE("operator dump round-trips") {
  auto tc = find_case("m4");
  auto mesh = tensor_mesh({uniform_axis(tc.x_min, tc.x_max, 7)});
  auto ops = assemble_operators(mesh, 2, tc.gamma, tc.beta);
  std::string path = "ops_dump_test.bin";
  save_operator_set(ops, path);
  auto back = load_operator_set(path);
  REQUIRE(back.kernel_id == ops.kernel_id);
  REQUIRE(back.dofs() == ops.dofs());
  std::mt19937_64 rng(43);
  VectorXd a = random_nonneg(rng, ops.dofs());
  REQUIRE((nonlinear_residual(back, a) - nonlinear_residual(ops, a)).norm() <= 1e-14);
  std::remove(path.c_str());
}

TEST_CASE("stability constant combines the kernel bounds") {
  auto tc = find_case("m2");
  auto mesh = tensor_mesh({uniform_axis(tc.x_min, tc.x_max, 4)});
  auto ops = assemble_operators(mesh, 1, tc.gamma, tc.beta);
  REQUIRE(std::isinf(ops.bound_K));  // comb kernels have no pointwise bound
  auto tc1 = find_case("m1");
  auto mesh1 = tensor_mesh({uniform_axis(tc1.x_min, tc1.x_max, 4)});
  auto ops1 = assemble_operators(mesh1, 1, tc1.gamma, tc1.beta);
  double C0 = tc1.x_max * tc1.x_max;
  double b0 = 2.0 / 1e-9;
  double measure = tc1.x_max;
  REQUIRE_THAT(ops1.bound_K,
               Catch::Matchers::WithinRel(C0 * b0 * std::pow(measure, 1.5) + C0 * std::sqrt(measure),
                                          1e-12));
}
