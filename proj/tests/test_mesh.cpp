#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ncbe/mesh.hpp"

using namespace ncbe;

TEST_CASE("uniform axis basics") {
  auto a = uniform_axis(0, 5, 5);
  REQUIRE(a.nodes == std::vector<double>{0, 1, 2, 3, 4, 5});
  auto b = uniform_axis(1e-9, 5, 320);
  REQUIRE(b.nodes.size() == 321);
  REQUIRE(b.max_element_size() == Catch::Approx((5 - 1e-9) / 320).epsilon(1e-11));
  auto c = uniform_axis(1e-9, 2, 80);
  REQUIRE(c.nodes.size() == 81);
}

TEST_CASE("uniform axis element sizes are equal to machine precision") {
  auto a = uniform_axis(1e-9, 5, 320);
  double h0 = a.element_size(0);
  for (int i = 0; i < a.num_elements(); ++i)
    REQUIRE(a.element_size(i) == Catch::Approx(h0).epsilon(1e-13));
}

TEST_CASE("invalid axis configuration") {
  REQUIRE_THROWS_AS(uniform_axis(0, 5, 0), config_error);
  REQUIRE_THROWS_AS(uniform_axis(5, 5, 4), config_error);
  REQUIRE_THROWS_AS(uniform_axis(-1, 5, 4), config_error);
}

TEST_CASE("geometric grading with end-to-end ratio 2") {
  auto a = nonuniform_axis(0, 1, 2, GridMode::Geometric, 0, 2.0);
  REQUIRE(a.nodes.size() == 3);
  REQUIRE(a.nodes[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
  REQUIRE(a.element_size(1) / a.element_size(0) == Catch::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("random grids are reproducible per seed") {
  auto a = nonuniform_axis(1e-9, 5, 60, GridMode::Random, 7);
  auto b = nonuniform_axis(1e-9, 5, 60, GridMode::Random, 7);
  REQUIRE(a.nodes.size() == 61);
  REQUIRE(a.nodes == b.nodes);
  auto c = nonuniform_axis(1e-9, 5, 60, GridMode::Random, 8);
  REQUIRE(a.nodes != c.nodes);
  auto big = nonuniform_axis(1e-9, 5, 960, GridMode::Random, 1);
  REQUIRE(big.nodes.size() == 961);
  big.validate();
}

TEST_CASE("mesh size on tensor grids") {
  TensorMesh m1 = tensor_mesh({uniform_axis(0, 1, 4)});
  REQUIRE(mesh_size(m1) == Catch::Approx(0.25).epsilon(1e-14));
  TensorMesh m2 = tensor_mesh({uniform_axis(0, 2, 2), uniform_axis(0, 2, 2)});
  REQUIRE(mesh_size(m2) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));
  TensorMesh m3 = tensor_mesh({uniform_axis(0, 2, 1), uniform_axis(0, 2, 1), uniform_axis(0, 2, 1)});
  REQUIRE(mesh_size(m3) == Catch::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("mesh size halves when element count doubles") {
  for (int n : {4, 8, 16, 32}) {
    TensorMesh coarse = tensor_mesh({uniform_axis(1e-9, 5, n)});
    TensorMesh fine = tensor_mesh({uniform_axis(1e-9, 5, 2 * n)});
    REQUIRE(mesh_size(coarse) / mesh_size(fine) == Catch::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("mesh csv dump has one coordinate column per axis") {
  TensorMesh m = tensor_mesh({uniform_axis(0, 1, 2), uniform_axis(0, 2, 1)});
  std::string csv = mesh_to_csv(m);
  REQUIRE(csv.rfind("x1,x2\n", 0) == 0);
  REQUIRE(csv.find("0.5") != std::string::npos);
}
