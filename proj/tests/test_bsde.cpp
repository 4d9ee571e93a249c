#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "msee/bsde.hpp"

using namespace msee;

namespace {

BsdeProblem linear_problem(double a) {
  BsdeProblem bp;
  bp.drift = MonotoneMap::linear(Eigen::MatrixXd::Constant(1, 1, a));
  bp.terminal = [](const Eigen::VectorXd& w) { return Eigen::VectorXd(w.head(1)); };
  return bp;
}

// RMS over paths of X(t_k) - g·W(t_k)
double rms_x(const BsdeSolution& s, const BsdePaths& p, std::size_t k, double g) {
  return std::sqrt((s.x_values[k].col(0) - g * p.W[k].col(0)).squaredNorm() /
                   static_cast<double>(p.paths()));
}

}  // namespace

TEST_CASE("paths are reproducible and prefix-stable") {
  const BsdePaths a = simulate_bsde_paths(4, 1.0, 8, 2, 10);
  const BsdePaths b = simulate_bsde_paths(4, 1.0, 8, 2, 20);
  CHECK(a.W[8] == b.W[8].topRows(10));
  CHECK(a.W[0].norm() == 0.0);
  const Eigen::MatrixXd F = regression_features(Eigen::MatrixXd::Constant(1, 2, 2.0), 2);
  CHECK(F.cols() == 6);
}

TEST_CASE("trivial problems") {
  const BsdePaths paths = simulate_bsde_paths(1, 1.0, 16, 1, 500);
  BsdeProblem bp;
  bp.drift = MonotoneMap::zero();
  bp.terminal = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, 2.0); };
  const BsdeSolution s = solve_bsde_autonomous_C(bp, paths);
  for (const auto& x : s.x_values) CHECK((x.array() - 2.0).abs().maxCoeff() < 1e-10);
  for (const auto& z : s.z_values) CHECK(z[0].cwiseAbs().maxCoeff() < 1e-10);

  // A = -x with constant terminal: X(t) = 2 e^{-(T-t)} up to the implicit step
  bp.drift = MonotoneMap::linear(Eigen::MatrixXd::Constant(1, 1, -1.0));
  const BsdeSolution d = solve_bsde_autonomous_C(bp, paths);
  CHECK(d.mean_x(0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(0.05));
  CHECK(std::abs(d.mean_x(0) - 2.0 * std::pow(1.0 + 1.0 / 16, -16)) < 1e-10);
}

TEST_CASE("linear closed form") {
  const std::size_t N = 32;
  const BsdePaths paths = simulate_bsde_paths(2, 1.0, N, 1, 4000);
  const BsdeSolution s = solve_bsde_autonomous_C(linear_problem(-1.0), paths);
  for (std::size_t k : {N / 4, N / 2, 3 * N / 4}) {
    const double g = std::exp(-(1.0 - paths.times[k]));
    CHECK(rms_x(s, paths, k, g) < 5.0 * (1.0 / N + s.regression_error[k]));
  }
}

TEST_CASE("Picard on z with a z-free driver stops after one sweep") {
  const BsdePaths paths = simulate_bsde_paths(3, 1.0, 16, 1, 500);
  BsdeProblem bp = linear_problem(-1.0);
  bp.driver = Driver::autonomous([](double t) { return Eigen::VectorXd::Constant(1, t); }, 1, "t");
  const BsdeSolution s = picard_in_z(bp, paths);
  CHECK(s.iterations == 1);
  const BsdeSolution x = picard_in_x(bp, paths);
  CHECK(x.outer_iterations == 1);
}

TEST_CASE("kappa z driver closed form") {
  const std::size_t N = 32;
  const double kappa = 0.5;
  const BsdePaths paths = simulate_bsde_paths(5, 1.0, N, 1, 4000);
  BsdeProblem bp = linear_problem(-1.0);
  bp.driver = Driver::linear_z(kappa);
  const BsdeSolution s = picard_in_z(bp, paths);
  const double exact = std::exp(-1.0) * kappa;
  CHECK(std::abs(s.mean_x(0) - exact) < 5.0 * (1.0 / N + s.regression_error[1]));
  std::size_t rises = 0;
  for (std::size_t i = 1; i < s.picard_residuals.size(); ++i)
    rises += s.picard_residuals[i] > s.picard_residuals[i - 1];
  CHECK(rises <= 1);
}

TEST_CASE("kappa x driver closed form") {
  const std::size_t N = 32;
  const double kappa = 0.4;
  const BsdePaths paths = simulate_bsde_paths(6, 1.0, N, 1, 4000);
  BsdeProblem bp = linear_problem(-1.0);
  bp.driver = Driver::linear_x(kappa);
  const BsdeSolution s = picard_in_x(bp, paths);
  const std::size_t k = N / 2;
  const double g = std::exp(-(1.0 - kappa) * (1.0 - paths.times[k]));
  CHECK(rms_x(s, paths, k, g) < 5.0 * (1.0 / N + s.regression_error[k]));
  CHECK(s.outer_iterations > 1);
}

TEST_CASE("a priori check") {
  const BsdePaths paths = simulate_bsde_paths(7, 1.0, 16, 1, 1000);
  BsdeProblem zero;
  zero.drift = MonotoneMap::zero();
  zero.terminal = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };
  const BsdeAprioriReport z = apriori_bound_check(solve_bsde_autonomous_C(zero, paths), 2.0);
  CHECK(z.sup_x == 0.0);
  CHECK_FALSE(z.flagged);

  const BsdeSolution s = solve_bsde_autonomous_C(linear_problem(-1.0), paths);
  const BsdeAprioriReport r2 = apriori_bound_check(s, 2.0);
  const BsdeAprioriReport r4 = apriori_bound_check(s, 4.0);
  CHECK(r4.sup_x >= r2.sup_x * r2.sup_x * (1.0 - 1e-12));
  CHECK(r4.terminal >= r2.terminal * r2.terminal * (1.0 - 1e-12));
  CHECK_FALSE(r2.flagged);
}
