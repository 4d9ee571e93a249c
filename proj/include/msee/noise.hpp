#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace msee {

/// Deterministic random stream keyed by (seed, replica, channel, level).
/// Distinct keys give statistically independent streams, so replicas can be
/// generated in any order or in parallel with identical results.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replica,
                            std::uint64_t channel, std::uint64_t level);

/// Truncated cylindrical Wiener path on a uniform grid of [0, T].
struct NoisePath {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::uint32_t level = 0;  // number of refinements applied
  double T = 0.0;
  std::vector<double> times;  // N + 1 points
  Eigen::MatrixXd increments;  // N x n_modes, row k spans [t_k, t_{k+1}]
  std::vector<double> scalar_path;  // cumulative mode-1 path, w(t_0) = 0

  std::size_t steps() const { return static_cast<std::size_t>(increments.rows()); }
  std::size_t n_modes() const { return static_cast<std::size_t>(increments.cols()); }
  double dt() const { return T / static_cast<double>(steps()); }
  /// Cumulative path of every mode at grid index k.
  Eigen::VectorXd value_at(std::size_t k) const;
};

NoisePath sample_path(std::uint64_t seed, double T, std::size_t N,
                      std::size_t n_modes, std::uint64_t replica = 0);

/// Halves the step. Midpoints are drawn from the Brownian bridge, and each
/// coarse increment equals the sum of its two fine increments exactly.
NoisePath refine_path(const NoisePath& p);

/// Sums groups of `factor` consecutive increments (coarsening).
NoisePath aggregate_path(const NoisePath& p, std::size_t factor);

/// Little-endian dump: magic "MSEENSE1", u64 N, u64 n_modes, u64 seed,
/// f64 T, then N * n_modes float64 increments in row-major order.
void write_increments(const NoisePath& p, const std::filesystem::path& file);
NoisePath read_increments(const std::filesystem::path& file);

}  // namespace msee
