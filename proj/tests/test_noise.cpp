#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "msee/errors.hpp"
#include "msee/noise.hpp"

using namespace msee;

namespace {

struct Moments {
  double mean = 0.0, var = 0.0;
  std::size_t n = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = v.size();
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(m.n - 1);
  return m;
}

}  // namespace

TEST_CASE("single increment has variance T") {
  const double T = 2.0;
  std::vector<double> xs;
  for (std::uint64_t s = 0; s < 100000; ++s) xs.push_back(sample_path(s, T, 1, 1).increments(0, 0));
  const Moments m = moments(xs);
  const double se_var = T * std::sqrt(2.0 / static_cast<double>(m.n - 1));
  CHECK(std::abs(m.var - T) < 3.0 * se_var);
  CHECK(std::abs(m.mean) < 3.0 * std::sqrt(T / static_cast<double>(m.n)));
}

TEST_CASE("modes are uncorrelated") {
  const std::size_t n = 100000;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::uint64_t s = 0; s < n; ++s) {
    const NoisePath p = sample_path(s, 1.0, 1, 2);
    const double x = p.increments(0, 0), y = p.increments(0, 1);
    sxy += x * y, sxx += x * x, syy += y * y;
  }
  const double corr = sxy / std::sqrt(sxx * syy);
  CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("determinism and path bookkeeping") {
  const NoisePath a = sample_path(42, 1.0, 64, 3, 5);
  const NoisePath b = sample_path(42, 1.0, 64, 3, 5);
  CHECK(a.increments == b.increments);
  CHECK(a.scalar_path == b.scalar_path);
  CHECK(a.scalar_path.front() == 0.0);
  double w = 0.0;
  for (std::size_t k = 0; k < a.steps(); ++k) {
    w += a.increments(static_cast<Eigen::Index>(k), 0);
    CHECK(a.scalar_path[k + 1] == w);
  }
  CHECK(a.times.size() == 65);
  CHECK(a.times.back() == doctest::Approx(1.0));
  const NoisePath other = sample_path(42, 1.0, 64, 3, 6);
  CHECK(other.increments != a.increments);
}

TEST_CASE("refinement keeps coarse increments exactly") {
  const NoisePath p = sample_path(3, 1.0, 32, 2);
  const NoisePath f = refine_path(p);
  REQUIRE(f.steps() == 64);
  for (Eigen::Index k = 0; k < 32; ++k)
    for (Eigen::Index j = 0; j < 2; ++j)
      CHECK(f.increments(2 * k, j) + f.increments(2 * k + 1, j) == p.increments(k, j));
  const NoisePath ff = refine_path(f);
  CHECK(aggregate_path(aggregate_path(ff, 2), 2).increments == p.increments);
  CHECK_THROWS_AS(aggregate_path(p, 3), ConfigError);
}

TEST_CASE("bridge midpoint has conditional variance dt/4") {
  const double T = 1.0;
  std::vector<double> d;
  for (std::uint64_t s = 0; s < 100000; ++s) {
    const NoisePath p = sample_path(s, T, 1, 1);
    const NoisePath f = refine_path(p);
    d.push_back(f.increments(0, 0) - 0.5 * p.increments(0, 0));
  }
  const Moments m = moments(d);
  const double target = T / 4.0;
  CHECK(std::abs(m.var - target) < 3.0 * target * std::sqrt(2.0 / static_cast<double>(m.n - 1)));
}

TEST_CASE("increment files round-trip") {
  const NoisePath p = sample_path(9, 0.5, 16, 2);
  const auto file = std::filesystem::temp_directory_path() / "msee_noise_roundtrip.bin";
  write_increments(p, file);
  const NoisePath q = read_increments(file);
  CHECK(q.increments == p.increments);
  CHECK(q.T == p.T);
  CHECK(q.seed == p.seed);
  std::filesystem::remove(file);
}

TEST_CASE("invalid arguments") {
  CHECK_THROWS_AS(sample_path(1, 0.0, 4, 1), ConfigError);
  CHECK_THROWS_AS(sample_path(1, 1.0, 0, 1), ConfigError);
  CHECK_THROWS_AS(sample_path(1, 1.0, 4, 0), ConfigError);
}
