#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "msee/operators.hpp"

namespace msee {

/// One sampled point (t, w_t, u, v, z) at which hypotheses are evaluated.
struct StateSample {
  NoiseContext ctx;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  Eigen::VectorXd z;
};

/// Deterministic sampler: sample i depends only on (seed, i).
///
/// t is uniform in (0, T], w_t ~ N(0, t) (every 50th sample, offset 1, pins
/// w_t = 0 to probe degenerate coefficients), amplitudes are log-uniform in
/// [amp_lo, amp_hi]. Sample 0 has u = 0. A quarter of the samples draw v as
/// a small perturbation of u.
class StateSampler {
 public:
  StateSampler(std::size_t n_grid, std::uint64_t seed, std::size_t count, double T = 1.0,
               double amp_lo = 1e-3, double amp_hi = 1e3);

  std::size_t size() const { return count_; }
  double horizon() const { return T_; }
  StateSample operator()(std::size_t i) const;

 private:
  std::size_t n_grid_;
  std::uint64_t seed_;
  std::size_t count_;
  double T_;
  double amp_lo_;
  double amp_hi_;
};

struct Violation {
  std::size_t sample = 0;
  double t = 0.0;
  double excess = 0.0;  // positive amount by which the inequality fails
  double scale = 0.0;   // sum of magnitudes of the terms involved
  std::string detail;
};

struct ViolationReport {
  std::string hypothesis;
  std::size_t samples = 0;
  std::vector<Violation> violations;
  double max_excess = 0.0;  // largest excess / scale seen, including non-violations

  bool passed() const { return violations.empty(); }
};

/// Relative tolerance applied to every sampled inequality.
inline constexpr double kHypothesisRelTol = 1e-9;

/// 2[u-v, A(u)-A(v)] + ‖B(u)-B(v)‖²_HS - λ0‖u-v‖²_H ≤ 0.
ViolationReport check_monotonicity(const DriftOperator& drift, const DiffusionOperator& diff,
                                   const HypothesisBundle& bundle,
                                   const StateSampler& sampler);

/// 2[u, A(u)] + ‖B(u)‖²_HS ≤ -Σ λ_i ‖u‖^{q_i}_{X_i} + λ3‖u‖²_H + ξ.
ViolationReport check_coercivity(const DriftOperator& drift, const DiffusionOperator& diff,
                                 const HypothesisBundle& bundle, const StateSampler& sampler);

/// ‖A_i(u)‖_{X_i*} ≤ η_i λ_i^{1/q_i} + c_{A_i} λ_i ‖u‖^{q_i-1}_{X_i}, i = 1, 2.
ViolationReport check_boundedness(const DriftOperator& drift, const HypothesisBundle& bundle,
                                  const StateSampler& sampler);

/// Continuity of ε ↦ [x, A(y + εz)] on [0, 1], with (x, y, z) = (u, v, z).
ViolationReport check_hemicontinuity(const DriftOperator& drift, const StateSampler& sampler);

/// ‖B(u) - B(v)‖²_HS ≤ λ0‖u-v‖²_H and ‖B(u)‖²_HS ≤ λ3‖u‖²_H + ξ.
ViolationReport check_diffusion_bounds(const DiffusionOperator& diff,
                                       const HypothesisBundle& bundle,
                                       const StateSampler& sampler);

/// Sampled 0 ≤ λ0 < c1·min(λ1, λ2) (equality allowed when both vanish) and
/// finiteness of ∫_0^T λ_i, by quadrature or along sampled paths.
ViolationReport check_bundle(const HypothesisBundle& bundle, const StateSampler& sampler);

std::string format_report(const ViolationReport& r);

}  // namespace msee
