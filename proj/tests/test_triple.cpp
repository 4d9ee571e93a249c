#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

#include "msee/errors.hpp"
#include "msee/triple.hpp"

using namespace msee;

namespace {

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace

TEST_CASE("laplacian spectrum matches an independent eigensolver") {
  for (auto flavor : {Flavor::PorousMedium, Flavor::ReactionDiffusion}) {
    const DiscreteTriple t(flavor, 24);
    const Eigen::MatrixXd& L = t.laplacian();
    CHECK((L - L.transpose()).norm() == doctest::Approx(0.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-L);
    const Eigen::VectorXd oracle = es.eigenvalues();
    for (Eigen::Index i = 0; i < oracle.size(); ++i) {
      CHECK(oracle[i] > 0.0);
      CHECK(t.eigenvalues()[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
      const double closed = 4.0 / (t.h() * t.h()) *
                            std::pow(std::sin(static_cast<double>(i + 1) * std::numbers::pi * t.h() / 2.0), 2);
      CHECK(t.eigenvalues()[i] == doctest::Approx(closed).epsilon(1e-10));
    }
    CHECK(t.h() * static_cast<double>(t.n_grid() + 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("basis is H-orthonormal") {
  for (auto flavor : {Flavor::PorousMedium, Flavor::ReactionDiffusion}) {
    const DiscreteTriple t(flavor, 16, 3.0, 3.0);
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 16; ++j)
        CHECK(std::abs(t.inner(t.basis().col(i), t.basis().col(j)) - (i == j ? 1.0 : 0.0)) < 1e-10);
  }
}

TEST_CASE("h_inner examples") {
  const DiscreteTriple rd(Flavor::ReactionDiffusion, 9);
  const GridFunction zero = make_grid_function(rd, Eigen::VectorXd::Zero(9));
  CHECK(h_inner(zero, zero, rd) == 0.0);
  const GridFunction one = make_grid_function(rd, Eigen::VectorXd::Ones(9));
  CHECK(h_inner(one, one, rd) == doctest::Approx(1.0 - rd.h()).epsilon(1e-14));

  const DiscreteTriple pm(Flavor::PorousMedium, 12, 3.0, 3.0);
  const GridFunction e1 = make_grid_function(pm, pm.basis().col(0));
  CHECK(h_inner(e1, e1, pm) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("make_grid_function rejects bad input") {
  const DiscreteTriple rd(Flavor::ReactionDiffusion, 5);
  CHECK_THROWS_AS(make_grid_function(rd, Eigen::VectorXd::Zero(4)), DimensionError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(5);
  bad[2] = std::nan("");
  CHECK_THROWS(make_grid_function(rd, bad));
}

TEST_CASE("x_norm examples") {
  const DiscreteTriple pm(Flavor::PorousMedium, 10, 3.0, 3.0);
  const GridFunction zero = make_grid_function(pm, Eigen::VectorXd::Zero(10));
  CHECK(x_norm(zero, pm, Space::X1) == 0.0);
  const double c = -1.7;
  const GridFunction cst = make_grid_function(pm, Eigen::VectorXd::Constant(10, c));
  CHECK(x_norm(cst, pm, Space::X1) ==
        doctest::Approx(std::abs(c) * std::pow(pm.h() * 10.0, 1.0 / 3.0)).epsilon(1e-13));

  // hat function on a 3-point grid, brute-force W^{1,2}_0 sum
  const DiscreteTriple rd(Flavor::ReactionDiffusion, 3, 2.0, 2.0);
  const double h = rd.h();
  Eigen::VectorXd u(3);
  u << 0.25, 0.5, 0.25;
  double sum = 0.0;
  const double padded[5] = {0.0, u[0], u[1], u[2], 0.0};
  for (int k = 0; k < 4; ++k) sum += h * std::pow((padded[k + 1] - padded[k]) / h, 2);
  CHECK(x_norm(make_grid_function(rd, u), rd, Space::X1) == doctest::Approx(std::sqrt(sum)).epsilon(1e-13));
}

TEST_CASE("pairing equals the inner product") {
  std::mt19937_64 rng(7);
  for (auto flavor : {Flavor::PorousMedium, Flavor::ReactionDiffusion}) {
    const DiscreteTriple t(flavor, 14, 3.0, 3.0);
    const GridFunction zero = make_grid_function(t, Eigen::VectorXd::Zero(14));
    for (int i = 0; i < 100; ++i) {
      const GridFunction x = make_grid_function(t, random_vector(rng, 14));
      const GridFunction f = make_grid_function(t, random_vector(rng, 14));
      const double a = dual_pairing(x, f, t), b = h_inner(x, f, t);
      CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)));
      CHECK(dual_pairing(x, zero, t) == 0.0);
    }
  }
}

TEST_CASE("porous medium pairing of e1 with -L e1 is the eigenvalue") {
  const DiscreteTriple pm(Flavor::PorousMedium, 20, 3.0, 3.0);
  const Eigen::VectorXd e1 = pm.basis().col(0);
  const GridFunction x = make_grid_function(pm, e1);
  const GridFunction f = make_grid_function(pm, -pm.laplacian() * e1);
  // oracle: h e1ᵀ(-L)^{-1}(-L)e1 = h |e1|²
  CHECK(dual_pairing(x, f, pm) == doctest::Approx(pm.h() * e1.squaredNorm()).epsilon(1e-10));
  CHECK(dual_pairing(x, f, pm) == doctest::Approx(pm.eigenvalues()[0]).epsilon(1e-10));
}

TEST_CASE("projection examples") {
  std::mt19937_64 rng(11);
  for (auto flavor : {Flavor::PorousMedium, Flavor::ReactionDiffusion}) {
    const DiscreteTriple t(flavor, 12);
    const GridFunction u = make_grid_function(t, random_vector(rng, 12));
    CHECK((project(u, 12, t).values - u.values).norm() < 1e-12 * u.values.norm());
    const GridFunction e2 = make_grid_function(t, t.basis().col(1));
    CHECK(project(e2, 1, t).values.norm() < 1e-12 * e2.values.norm());
    const GridFunction p3 = project(u, 3, t);
    CHECK((project(p3, 3, t).values - p3.values).norm() < 1e-12 * (1.0 + p3.values.norm()));
    const Eigen::VectorXd c = t.coordinates(u.values, 12);
    CHECK(c.squaredNorm() == doctest::Approx(h_inner(u, u, t)).epsilon(1e-12));
  }
}

TEST_CASE("operations on mismatched triples throw") {
  const DiscreteTriple a(Flavor::ReactionDiffusion, 6);
  const DiscreteTriple b(Flavor::ReactionDiffusion, 6);
  const GridFunction u = make_grid_function(a, Eigen::VectorXd::Ones(6));
  CHECK_THROWS_AS(h_inner(u, u, b), DimensionError);
}
