#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "colbreak/mesh.hpp"
#include "test_util.hpp"

using namespace colbreak;

TEST_CASE("single uniform cell") {
  auto m = build_mesh(1.0, 2.0, 1, MeshKind::Uniform);
  REQUIRE(m->size() == 1);
  CHECK(m->left(0) == 1.0);
  CHECK(m->right(0) == 2.0);
  CHECK(m->center(0) == 1.5);
  CHECK(m->width(0) == 1.0);
}

TEST_CASE("geometric edge ratio") {
  auto m = build_mesh(1e-4, 10.0, 128, MeshKind::Geometric);
  const double rho = std::pow(1e5, 1.0 / 128.0);
  CHECK(m->right(0) / m->left(0) == Catch::Approx(rho).epsilon(1e-12));
  CHECK(m->right(64) / m->left(64) == Catch::Approx(rho).epsilon(1e-12));
  CHECK(m->edges().front() == 1e-4);
  CHECK(m->edges().back() == 10.0);
}

TEST_CASE("mesh structural invariants") {
  for (auto kind : {MeshKind::Uniform, MeshKind::Geometric}) {
    auto m = build_mesh(1e-3, 25.0, 200, kind);
    double total = 0.0;
    for (std::size_t i = 0; i < m->size(); ++i) {
      CHECK(m->left(i) < m->center(i));
      CHECK(m->center(i) < m->right(i));
      CHECK(m->width(i) > 0.0);
      if (i > 0) CHECK(m->left(i) == m->right(i - 1));
      total += m->width(i);
    }
    CHECK(total == Catch::Approx(25.0 - 1e-3).epsilon(1e-12));
  }
}

TEST_CASE("mesh construction errors") {
  CHECK_THROWS_AS(build_mesh(0.0, 1.0, 8, MeshKind::Uniform), ConstraintError);
  CHECK_THROWS_AS(build_mesh(2.0, 1.0, 8, MeshKind::Uniform), ConstraintError);
  CHECK_THROWS_AS(build_mesh(1.0, 2.0, 0, MeshKind::Uniform), ConstraintError);
}

TEST_CASE("locate finds containing cell") {
  auto m = build_mesh(1e-2, 10.0, 64, MeshKind::Geometric);
  for (std::size_t i = 0; i < m->size(); ++i) {
    CHECK(m->locate(m->center(i)) == i);
    CHECK(m->locate(m->right(i)) == i);  // half-open (left, right]
  }
  CHECK(m->locate(m->n()) == m->size() - 1);
}

TEST_CASE("quad on constant, linear and zero fields") {
  auto m = build_mesh(1.0, 2.0, 1000000, MeshKind::Uniform);
  std::vector<double> ones(m->size(), 1.0);
  CHECK(quad(ones, *m) == Catch::Approx(1.0).epsilon(1e-12));

  // midpoint x width integrates z exactly up to rounding
  CHECK(quad(m->centers(), *m) == Catch::Approx(1.5).epsilon(1e-6));

  std::vector<double> zero(m->size(), 0.0);
  CHECK(quad(zero, *m) == 0.0);

  std::vector<double> wrong(3, 1.0);
  CHECK_THROWS_AS(quad(wrong, *m), std::invalid_argument);
}

TEST_CASE("quad error order under uniform refinement") {
  const double exact = std::exp(-0.5) - std::exp(-4.0);
  auto err = [&](std::size_t cells) {
    auto m = build_mesh(0.5, 4.0, cells, MeshKind::Uniform);
    std::vector<double> v(cells);
    for (std::size_t i = 0; i < cells; ++i) v[i] = std::exp(-m->center(i));
    return std::abs(quad(v, *m) - exact);
  };
  CHECK(err(64) / err(128) >= 3.5);
  CHECK(err(128) / err(256) >= 3.5);
}

TEST_CASE("sample interpolation and zero extension") {
  auto m = build_mesh(0.1, 5.0, 10, MeshKind::Uniform);
  std::vector<double> v(m->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  DensityField f(m, v, 0.0);

  CHECK(sample(f, 5.0 + 1.0) == 0.0);
  CHECK(sample(f, 0.05) == 0.0);
  for (std::size_t i = 0; i < m->size(); ++i)
    CHECK(sample(f, m->center(i)) == f.values[i]);

  // midpoint of two centers with values 2 and 4 interpolates to 3
  f.values[2] = 2.0;
  f.values[3] = 4.0;
  CHECK(sample(f, 0.5 * (m->center(2) + m->center(3))) ==
        Catch::Approx(3.0).epsilon(1e-15));

  // boundary half-cells clamp to the nearest center value
  CHECK(sample(f, m->z_min()) == f.values.front());
  CHECK(sample(f, m->n()) == f.values.back());
}

TEST_CASE("sample is continuous at interior centers") {
  auto m = build_mesh(1e-3, 8.0, 100, MeshKind::Geometric);
  std::vector<double> v(m->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-m->center(i));
  DensityField f(m, v, 0.0);
  for (std::size_t i = 1; i + 1 < m->size(); ++i) {
    const double c = m->center(i);
    const double eps = 1e-9 * c;
    const double gap_left = std::abs(sample(f, c - eps) - f.values[i]);
    const double gap_right = std::abs(sample(f, c + eps) - f.values[i]);
    CHECK(gap_left <= 1e-6 * (std::abs(f.values[i]) + 1e-30));
    CHECK(gap_right <= 1e-6 * (std::abs(f.values[i]) + 1e-30));
  }
}

TEST_CASE("density field construction checks") {
  auto m = build_mesh(0.1, 5.0, 10, MeshKind::Uniform);
  CHECK_THROWS_AS(DensityField(m, std::vector<double>(3, 1.0), 0.0),
                  std::invalid_argument);
  auto zero = DensityField::zero(m);
  CHECK(zero.values.size() == 10);
  CHECK(quad(zero.values, *m) == 0.0);
}

TEST_CASE("moment of an exponential field") {
  auto m = build_mesh(1e-8, 40.0, 4096, MeshKind::Geometric);
  std::vector<double> v(m->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-m->center(i));
  DensityField f(m, v, 0.0);
  CHECK(moment(f, 1.0) == Catch::Approx(1.0).epsilon(1e-4));
  CHECK(moment(f, 2.0) == Catch::Approx(2.0).epsilon(1e-4));
  CHECK(moment(f, -0.5) == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-3));
}
