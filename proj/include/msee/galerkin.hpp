#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "msee/noise.hpp"
#include "msee/operators.hpp"

namespace msee {

enum class Scheme { DriftImplicit, SemiImplicit };

/// How the nonlinear solve of each implicit step is started.
enum class InitialGuess { Previous, Predictor };

struct SolverConfig {
  std::size_t n_modes_galerkin = 8;
  double dt = 0.0;  // 0: take the noise step
  Scheme scheme = Scheme::DriftImplicit;
  double resolvent_tol = 1e-10;
  int resolvent_max_iter = 50;
  bool rescale_lambda0 = false;
  InitialGuess initial_guess = InitialGuess::Previous;

  void validate() const;
};

/// Finite-dimensional Itô SDE dx = b(t, x) dt + σ(t, x) dW in Galerkin
/// coordinates. The context carries the time and the frozen scalar path.
struct GalerkinSystem {
  using Vector = std::function<Eigen::VectorXd(const NoiseContext&, const Eigen::VectorXd&)>;
  using Matrix = std::function<Eigen::MatrixXd(const NoiseContext&, const Eigen::VectorXd&)>;

  std::size_t dim = 0;
  std::size_t n_modes = 0;
  Vector drift;
  Matrix jacobian;   // optional; finite differences otherwise
  Matrix diffusion;  // dim x n_modes
  std::optional<Eigen::MatrixXd> linear;  // set when b(t, x) = M x
  bool additive = false;                  // σ independent of x

  Eigen::MatrixXd jacobian_at(const NoiseContext& ctx, const Eigen::VectorXd& x) const;
};

/// b^i(x) = [e_i, A(x·e)], σ = (e_i-coordinates of B(x·e) ℓ_j) for j below the
/// diffusion's mode count.
GalerkinSystem galerkin_coefficients(const Drift& drift, const Diffusion& diff, std::size_t n);

/// One drift-implicit step: y - dt·b(t+dt, y) = x + σ(t, x)·dW.
/// `ctx` is the left endpoint context; the drift sees t + dt with w frozen.
Eigen::VectorXd step_implicit(const GalerkinSystem& sys, const Eigen::VectorXd& x,
                              const NoiseContext& ctx, double dt, const Eigen::VectorXd& dW,
                              const SolverConfig& cfg);

struct SolutionPath {
  std::shared_ptr<const DiscreteTriple> triple;  // null for bare systems
  std::size_t n = 0;
  double q1 = 2.0;
  double q2 = 2.0;
  std::vector<double> times;
  std::vector<double> w;                  // scalar driving path at each time
  std::vector<Eigen::VectorXd> coords;    // Galerkin coordinates at each time
  std::vector<double> h_norm2;            // ‖X‖²_H
  std::vector<double> x1_norm_q;          // ‖X‖^{q1}_{X1}
  std::vector<double> x2_norm_q;          // ‖X‖^{q2}_{X2}
  std::vector<double> energy_residual;    // per-step defect, entry 0 is 0
  std::vector<std::size_t> solver_iterations;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  NoiseContext context(std::size_t k) const { return {times[k], w[k], k}; }
  GridFunction state(std::size_t k) const;
  double cumulative_residual() const;
};

/// Integrates a bare system from x0 on the noise path.
SolutionPath solve_system(const SolverConfig& cfg, const GalerkinSystem& sys,
                          const NoisePath& noise, const Eigen::VectorXd& x0);

/// Galerkin solve of dX = A(X) dt + B(X) dW from the projection of X0. With
/// cfg.rescale_lambda0 the discounted problem is solved and transformed back.
SolutionPath solve_forward(const SolverConfig& cfg, const Drift& drift, const Diffusion& diff,
                           const NoisePath& noise, const GridFunction& X0,
                           const HypothesisBundle* bundle = nullptr);

struct RescaledProblem {
  Drift drift;
  Diffusion diffusion;
  HypothesisBundle bundle;
};

/// γ = exp(½∫λ0): Ã = γ⁻¹A(γ·) - λ0/2, B̃ = γ⁻¹B(γ·), λ̃0 = 0,
/// λ̃_i = λ_i γ^{q_i-2}, λ̃3 = λ3 + λ0. λ0 must be deterministic.
RescaledProblem rescale_problem(const Drift& drift, const Diffusion& diff,
                                const HypothesisBundle& bundle);

/// θ_m = inf{t : ∫_0^t λ3 ≥ m}, or times.back() when never reached.
double clock_theta(const std::vector<double>& times, const std::vector<double>& lambda3,
                   double m);

/// Recomputes the per-step energy defect of a path produced on `noise`.
std::vector<double> energy_residual(const SolutionPath& path, const GalerkinSystem& sys,
                                    const NoisePath& noise);

struct AprioriReport {
  double sup_h2 = 0.0;
  double weighted_x1 = 0.0;  // ∫ λ1 ‖X‖^{q1}
  double weighted_x2 = 0.0;  // ∫ λ2 ‖X‖^{q2}
  double weighted_h = 0.0;   // ∫ λ3 ‖X‖²
  double lhs = 0.0;
  double budget = 0.0;       // e^m (‖X0‖² + ∫ξ + Σ ∫η_i^{q_i/(q_i-1)})
  double m = 1.0;

  bool within_budget() const { return lhs <= budget * (1.0 + 1e-12); }
};

AprioriReport apriori_norms(const SolutionPath& path, const HypothesisBundle& bundle);

/// Header: t, w, c_1..c_n, h_norm2, x1_norm, x2_norm, energy_residual.
void write_path_csv(const SolutionPath& path, std::ostream& os);

}  // namespace msee
