#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "msee/errors.hpp"
#include "msee/resolvent.hpp"

using namespace msee;

namespace {

double bisect(const std::function<double(double)>& g, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((g(lo) < 0.0) == (g(mid) < 0.0))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("linear and zero resolvents") {
  const MonotoneMap neg = MonotoneMap::linear(-Eigen::MatrixXd::Identity(3, 3));
  const Eigen::VectorXd x = Eigen::Vector3d(1.0, -2.0, 0.5);
  CHECK((resolvent(neg, 0.0, 1.0, x) - x / 2.0).norm() < 1e-14);
  CHECK((yosida(neg, 0.0, 1.0, x) + x / 2.0).norm() < 1e-12);
  CHECK((resolvent(MonotoneMap::zero(), 0.0, 0.7, x) - x).norm() == 0.0);
}

TEST_CASE("cubic resolvent against bisection") {
  const MonotoneMap cubic = MonotoneMap::cubic();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 3.0);
  const double y = resolvent(cubic, 0.0, 0.5, x)[0];
  const double oracle = bisect([](double v) { return v + 0.5 * v * v * v - 3.0; }, 0.0, 3.0);
  CHECK(std::abs(y - oracle) < 1e-10);

  // the general Newton path must agree with the componentwise path
  const MonotoneMap general = MonotoneMap::general(
      [](double, const Eigen::VectorXd& v) { return Eigen::VectorXd(-v.array().cube()); },
      [](double, const Eigen::VectorXd& v) {
        return Eigen::MatrixXd((-3.0 * v.array().square()).matrix().asDiagonal());
      },
      "cubic-general");
  CHECK(std::abs(resolvent(general, 0.0, 0.5, x)[0] - oracle) < 1e-10);
}

TEST_CASE("Yosida approximation converges for the cubic map") {
  const MonotoneMap cubic = MonotoneMap::cubic();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int e = 0; e <= 6; ++e) {
    const double eps = std::pow(10.0, -e);
    const double err = (yosida(cubic, 0.0, eps, x) - cubic(0.0, x)).norm();
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("sampled Yosida properties") {
  CHECK(check_yosida_properties(MonotoneMap::linear(-Eigen::MatrixXd::Identity(4, 4)), 4, 1, 1000).passed());
  CHECK(check_yosida_properties(MonotoneMap::cubic(), 4, 2, 1000).passed());
  const YosidaReport sine = check_yosida_properties(MonotoneMap::sine(), 4, 3, 1000);
  CHECK_FALSE(sine.monotone.passed());
}

TEST_CASE("invalid epsilon") {
  CHECK_THROWS(resolvent(MonotoneMap::cubic(), 0.0, 0.0, Eigen::VectorXd::Ones(2)));
  CHECK_THROWS(resolvent(MonotoneMap::cubic(), 0.0, -1.0, Eigen::VectorXd::Ones(2)));
}
