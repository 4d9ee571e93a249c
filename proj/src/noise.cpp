#include "msee/noise.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "msee/errors.hpp"

namespace msee {

namespace {

constexpr std::array<char, 8> kMagic{'M', 'S', 'E', 'E', 'N', 'S', 'E', '1'};

void rebuild_scalar_path(NoisePath& p) {
  p.scalar_path.assign(p.steps() + 1, 0.0);
  for (std::size_t k = 0; k < p.steps(); ++k)
    p.scalar_path[k + 1] = p.scalar_path[k] + p.increments(static_cast<Eigen::Index>(k), 0);
}

void uniform_times(NoisePath& p) {
  const std::size_t n = p.steps();
  p.times.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    p.times[k] = p.T * static_cast<double>(k) / static_cast<double>(n);
}

template <class T>
void put(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little,
                "increment dumps assume a little-endian host");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ConfigError("truncated increment file");
  return value;
}

// Increments live on a fixed-point grid so that bridge splits and pairwise
// sums are exact in double precision (|x| < 64·2^⌈log2 √T⌉).
double increment_quantum(double T) {
  return std::ldexp(1.0, static_cast<int>(std::ceil(std::log2(std::sqrt(T)))) - 47);
}

double quantize(double x, double q) { return std::nearbyint(x / q) * q; }

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replica,
                            std::uint64_t channel, std::uint64_t level) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replica),
                    static_cast<std::uint32_t>(replica >> 32),
                    static_cast<std::uint32_t>(channel), static_cast<std::uint32_t>(level),
                    0x6d736565u};
  return std::mt19937_64(seq);
}

Eigen::VectorXd NoisePath::value_at(std::size_t k) const {
  if (k > steps()) throw DomainError("noise index beyond path end");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(increments.cols());
  for (std::size_t i = 0; i < k; ++i) w += increments.row(static_cast<Eigen::Index>(i)).transpose();
  return w;
}

NoisePath sample_path(std::uint64_t seed, double T, std::size_t N, std::size_t n_modes,
                      std::uint64_t replica) {
  if (!(T > 0.0)) throw ConfigError("noise horizon T must be positive");
  if (N < 1) throw ConfigError("noise step count N must be at least 1");
  if (n_modes < 1) throw ConfigError("noise mode count must be at least 1");

  NoisePath p;
  p.seed = seed;
  p.replica = replica;
  p.T = T;
  p.increments.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(n_modes));
  const double sd = std::sqrt(T / static_cast<double>(N));
  const double q = increment_quantum(T);
  for (std::size_t j = 0; j < n_modes; ++j) {
    auto rng = make_stream(seed, replica, j, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < N; ++k)
      p.increments(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = quantize(sd * normal(rng), q);
  }
  uniform_times(p);
  rebuild_scalar_path(p);
  return p;
}

NoisePath refine_path(const NoisePath& p) {
  NoisePath fine;
  fine.seed = p.seed;
  fine.replica = p.replica;
  fine.level = p.level + 1;
  fine.T = p.T;
  const auto N = p.increments.rows();
  const auto m = p.increments.cols();
  fine.increments.resize(2 * N, m);
  const double half_sd = 0.5 * std::sqrt(p.dt());
  const double q = increment_quantum(p.T);
  for (Eigen::Index j = 0; j < m; ++j) {
    auto rng = make_stream(p.seed, p.replica, static_cast<std::uint64_t>(j), fine.level);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index k = 0; k < N; ++k) {
      const double coarse = p.increments(k, j);
      const double first = quantize(0.5 * coarse + half_sd * normal(rng), q);
      const double second = coarse - first;
      fine.increments(2 * k, j) = first;
      fine.increments(2 * k + 1, j) = second;
    }
  }
  uniform_times(fine);
  rebuild_scalar_path(fine);
  return fine;
}

NoisePath aggregate_path(const NoisePath& p, std::size_t factor) {
  if (factor < 1 || p.steps() % factor != 0)
    throw ConfigError("aggregation factor must divide the step count");
  NoisePath coarse;
  coarse.seed = p.seed;
  coarse.replica = p.replica;
  coarse.level = p.level;
  coarse.T = p.T;
  const auto N = static_cast<Eigen::Index>(p.steps() / factor);
  coarse.increments = Eigen::MatrixXd::Zero(N, p.increments.cols());
  for (Eigen::Index k = 0; k < N; ++k)
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(factor); ++i)
      coarse.increments.row(k) += p.increments.row(k * static_cast<Eigen::Index>(factor) + i);
  uniform_times(coarse);
  rebuild_scalar_path(coarse);
  return coarse;
}

void write_increments(const NoisePath& p, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + file.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(os, p.steps());
  put<std::uint64_t>(os, p.n_modes());
  put<std::uint64_t>(os, p.seed);
  put<double>(os, p.T);
  for (Eigen::Index k = 0; k < p.increments.rows(); ++k)
    for (Eigen::Index j = 0; j < p.increments.cols(); ++j) put<double>(os, p.increments(k, j));
}

NoisePath read_increments(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + file.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ConfigError(file.string() + " is not an increment dump");
  NoisePath p;
  const auto N = get<std::uint64_t>(is);
  const auto m = get<std::uint64_t>(is);
  p.seed = get<std::uint64_t>(is);
  p.T = get<double>(is);
  if (N == 0 || m == 0 || !(p.T > 0.0)) throw ConfigError("corrupt increment header");
  p.increments.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(m));
  for (Eigen::Index k = 0; k < p.increments.rows(); ++k)
    for (Eigen::Index j = 0; j < p.increments.cols(); ++j) p.increments(k, j) = get<double>(is);
  uniform_times(p);
  rebuild_scalar_path(p);
  return p;
}

}  // namespace msee
