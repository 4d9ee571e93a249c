#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "msee/errors.hpp"
#include "msee/operators.hpp"

using namespace msee;

TEST_CASE("linear porous medium drift is the discrete heat operator") {
  auto t = std::make_shared<const DiscreteTriple>(Flavor::PorousMedium, 15);
  const Drift heat = make_porous_medium_drift(t, 2.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::VectorXd u(15);
  for (auto& x : u) x = g(rng);
  const GridFunction out = eval_drift(*heat, 0.0, {}, make_grid_function(*t, u));
  CHECK((out.values - t->laplacian() * u).norm() < 1e-10 * (t->laplacian() * u).norm());
}

TEST_CASE("built-in drifts vanish at zero") {
  const auto pm = make_porous_medium_problem(12, 3.0);
  const auto rd = make_reaction_diffusion_problem(12, 3.0);
  const NoiseContext ctx{0.3, 0.7, 0};
  CHECK(pm.drift->apply(ctx, Eigen::VectorXd::Zero(12)).norm() == 0.0);
  CHECK(rd.drift->apply(ctx, Eigen::VectorXd::Zero(12)).norm() == 0.0);
  CHECK(rd.diffusion->apply(ctx, Eigen::VectorXd::Zero(12)).norm() == 0.0);
}

TEST_CASE("porous medium spike pairing") {
  auto t = std::make_shared<const DiscreteTriple>(Flavor::PorousMedium, 11, 3.0, 3.0);
  const Drift pm = make_porous_medium_drift(t, 3.0);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(11);
  u[5] = 2.0;
  const Eigen::VectorXd a = pm->apply({}, u);
  // -h Σ u·|u|·u computed pointwise
  double oracle = 0.0;
  for (double x : u) oracle -= t->h() * x * std::abs(x) * x;
  CHECK(oracle == doctest::Approx(-8.0 * t->h()));
  CHECK(t->pairing(u, a) == doctest::Approx(oracle).epsilon(1e-10));
  const DriftParts parts = pm->parts({}, u);
  CHECK((parts.a1 + parts.a2 - a).norm() < 1e-12 * a.norm());
}

TEST_CASE("reaction-diffusion splits into divergence and reaction parts") {
  auto t = std::make_shared<const DiscreteTriple>(Flavor::ReactionDiffusion, 9, 2.0, 3.0);
  const Drift rd = make_reaction_diffusion_drift(t, 3.0);
  Eigen::VectorXd u(9);
  for (int i = 0; i < 9; ++i) u[i] = std::sin(0.7 * i) + 0.3;
  const DriftParts parts = rd->parts({}, u);
  CHECK((parts.a1 - t->laplacian() * u).norm() < 1e-9 * (1.0 + parts.a1.norm()));
  for (int i = 0; i < 9; ++i) CHECK(parts.a2[i] == doctest::Approx(-u[i] * std::abs(u[i])));
  // tridiagonal analytic jacobian against central differences
  const Eigen::MatrixXd J = rd->jacobian({}, u);
  for (int j = 0; j < 9; ++j) {
    Eigen::VectorXd up = u, dn = u;
    up[j] += 1e-6, dn[j] -= 1e-6;
    const Eigen::VectorXd fd = (rd->apply({}, up) - rd->apply({}, dn)) / 2e-6;
    CHECK((J.col(j) - fd).norm() < 1e-5 * (1.0 + fd.norm()));
  }
}

TEST_CASE("diffusion examples") {
  auto t = std::make_shared<const DiscreteTriple>(Flavor::ReactionDiffusion, 8);
  const Diffusion zero = make_constant_diffusion(t, Eigen::MatrixXd::Zero(8, 2));
  const GridFunction one = make_grid_function(*t, Eigen::VectorXd::Ones(8));
  CHECK(eval_diffusion(*zero, 0.0, {}, one).norm() == 0.0);

  const Diffusion sqrt_w = make_sqrt_brownian_diffusion(t);
  const Eigen::MatrixXd B = eval_diffusion(*sqrt_w, 0.0, NoiseContext{0.0, 4.0, 0}, one);
  REQUIRE(B.cols() == 1);
  for (Eigen::Index i = 0; i < 8; ++i) CHECK(B(i, 0) == doctest::Approx(2.0));

  Eigen::MatrixXd M(8, 3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = g(rng);
  double direct = 0.0;
  for (Eigen::Index j = 0; j < 3; ++j)
    for (Eigen::Index i = 0; i < 8; ++i) direct += t->h() * M(i, j) * M(i, j);
  CHECK(hs_norm2(M, *t) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("profiles") {
  const Profile c = Profile::constant(2.5);
  CHECK(c.integral(0.0, 2.0) == doctest::Approx(5.0));
  const Profile tab = Profile::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
  CHECK(tab.at(0.5) == doctest::Approx(0.5));
  CHECK(tab.integral(0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  const Profile f = Profile::function([](double t) { return t * t; }, "t^2");
  CHECK(f.integral(0.0, 3.0) == doctest::Approx(9.0).epsilon(1e-12));
  const Profile w = Profile::abs_brownian();
  CHECK(w(NoiseContext{0.0, -3.0, 0}) == 3.0);
  CHECK_FALSE(w.deterministic());
  CHECK_THROWS_AS(w.integral(0.0, 1.0), DomainError);
}

TEST_CASE("nonlinearities") {
  CHECK_THROWS_AS(Nonlinearity::power(1.5), ConfigError);
  const Nonlinearity p3 = Nonlinearity::power(3.0);
  CHECK(p3(-2.0) == doctest::Approx(-4.0));
  CHECK(p3.slope(2.0) == doctest::Approx(4.0));
  const Nonlinearity st = Nonlinearity::step();
  CHECK(st(0.0) - st(-1e-12) == doctest::Approx(1.0));
}

TEST_CASE("rescaled drift subtracts lambda0/2 in total") {
  auto t = std::make_shared<const DiscreteTriple>(Flavor::ReactionDiffusion, 6);
  const Drift zero = std::make_shared<LinearDrift>(t, Eigen::MatrixXd::Zero(6, 6));
  const RescaledDrift r(zero, Profile::constant(2.0));
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(6, 1.0, 2.0);
  const Eigen::VectorXd out = r.apply(NoiseContext{0.5, 0.0, 0}, u);
  CHECK((out + u).norm() < 1e-12);
  CHECK(rescale_gamma(Profile::constant(2.0), 1.0) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("non-finite values are reported with their index") {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
  v[2] = std::numeric_limits<double>::infinity();
  try {
    require_finite(v, "test");
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.location() == 2);
  }
}

TEST_CASE("bundle validation") {
  HypothesisBundle b;
  b.q1 = 1.5;
  CHECK_THROWS_AS(b.validate(), ConfigError);
}
