#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "msee/analysis.hpp"
#include "msee/galerkin.hpp"
#include "msee/hypotheses.hpp"
#include "msee/noise.hpp"

namespace msee {

/// A path on [-S, t_end] on a uniform dt grid: the initial segment X_0(·) on
/// [-S, 0] followed by the trajectory on [0, t_end]. history.back() and
/// trajectory.front() are the same state.
struct SegmentPath {
  double S = 0.0;
  double dt = 0.0;
  std::vector<Eigen::VectorXd> history;     // θ_j = -S + j·dt, j = 0..S/dt
  std::vector<Eigen::VectorXd> trajectory;  // t_k = k·dt

  /// Path that only holds the initial segment; S must be a multiple of dt.
  static SegmentPath from_history(double S, double dt,
                                  const std::function<Eigen::VectorXd(double)>& x0);

  std::size_t dim() const { return history.empty() ? 0 : static_cast<std::size_t>(history[0].size()); }
  std::size_t lag() const { return history.size() - 1; }  // S / dt
  std::size_t steps() const { return trajectory.empty() ? 0 : trajectory.size() - 1; }
  double t_end() const { return dt * static_cast<double>(steps()); }

  /// X(τ) for τ ∈ [-S, t_end], linear between grid points.
  Eigen::VectorXd value(double tau) const;
  /// X at combined grid index i (i = 0 is τ = -S).
  const Eigen::VectorXd& node(std::size_t i) const;
  /// sup ‖X(τ)‖_H over [a, b].
  double sup_norm(double a, double b) const;
  /// Throws ConfigError when the seam or the grid is broken.
  void validate() const;
};

/// X_t(θ) = X(t + θ), θ ∈ [-S, 0]. A view: the path must outlive it.
class Segment {
 public:
  Segment(const SegmentPath& path, double t);

  double t() const { return t_; }
  double horizon() const { return path_->S; }
  Eigen::VectorXd operator()(double theta) const;
  /// X_t(0) = X(t).
  Eigen::VectorXd head() const { return (*this)(0.0); }
  /// ‖X_t‖ in the sup norm over [-S, 0].
  double sup_norm() const { return path_->sup_norm(t_ - path_->S, t_); }

 private:
  const SegmentPath* path_;
  double t_;
};

/// Throws DomainError unless 0 ≤ t ≤ path.t_end().
Segment segment(const SegmentPath& path, double t);

/// Coefficients of the functional equation in Galerkin coordinates:
///   dX = [A(X) + C1(t, X_t) + ∫_0^t C2(t, s, X_s) ds + ∫_0^t D2(t, s, X_s) dW_s] dt
///        + D1(t, X_t) dW.
struct FunctionalCoefficients {
  using Vec1 = std::function<Eigen::VectorXd(double, const Segment&)>;
  using Vec2 = std::function<Eigen::VectorXd(double, double, const Segment&)>;
  using Mat1 = std::function<Eigen::MatrixXd(double, const Segment&)>;
  using Mat2 = std::function<Eigen::MatrixXd(double, double, const Segment&)>;
  using Kernel = std::function<double(double, double)>;

  std::size_t dim = 1;
  std::size_t n_modes = 1;
  Vec1 C1;  // empty means zero
  Vec2 C2;
  Mat1 D1;
  Mat2 D2;

  // (HF2)/(HF3): squared increments ≤ λ3·ρ(‖x-y‖²) and λ5·ρ(‖x-y‖²)
  ModulusSpec rho = ModulusSpec::linear(1.0);
  Profile lambda3;
  Kernel lambda5;
  // (HF4): growth bounds
  double c0 = 1.0;
  Profile zeta;
  Kernel lambda6;
  Kernel lambda7;

  bool has_memory() const { return static_cast<bool>(C2) || static_cast<bool>(D2); }
};

/// Volterra kernels C(t, s, X_s), D(t, s, X_s) and their t-partials.
struct VolterraCoefficients {
  std::size_t dim = 1;
  std::size_t n_modes = 1;
  FunctionalCoefficients::Vec2 C, dC;
  FunctionalCoefficients::Mat2 D, dD;
  // Optional closed forms of C(s, s, ·), D(s, s, ·).
  FunctionalCoefficients::Vec1 C_diag;
  FunctionalCoefficients::Mat1 D_diag;

  ModulusSpec rho = ModulusSpec::linear(1.0);
  Profile lambda3;
  FunctionalCoefficients::Kernel lambda5;
};

/// C1(s) = C(s, s), C2(s, r) = ∂C(s, r), D1(s) = D(s, s), D2(s, r) = ∂D(s, r).
FunctionalCoefficients volterra_to_functional(const VolterraCoefficients& v);

enum class FirstIterate { ConstantExtension, Zero, Custom };

struct FunctionalOptions {
  std::size_t max_iter = 50;
  double tol = 1e-10;
  FirstIterate first = FirstIterate::ConstantExtension;
  std::vector<Eigen::VectorXd> custom_first;  // trajectory for FirstIterate::Custom
};

struct FunctionalSolution {
  SegmentPath path;
  SolutionPath forward;  // last Galerkin solve
  std::size_t iterations = 0;
  std::vector<double> differences;  // sup_t ‖X^{n+1} - X^n‖_H
  // d_n(t_k) = sup_{s ≤ t_k} ‖X^{n+1}(s) - X^n(s)‖²_H per iteration
  std::vector<std::vector<double>> difference_profiles;
};

/// Picard iteration: each sweep freezes the functional terms on the previous
/// iterate and integrates dX = [A(X) + G^n] dt + D1(X^n_t) dW with the
/// implicit scheme. `system` provides A; its diffusion is ignored.
/// Throws NonconvergenceError with the difference history.
FunctionalSolution picard_solve_functional(const GalerkinSystem& system,
                                           const FunctionalCoefficients& coeffs,
                                           const NoisePath& noise, const SegmentPath& X0,
                                           const SolverConfig& cfg,
                                           const FunctionalOptions& opts = {});

/// Σ_{j<k} C(t_k, s_j, X_{s_j}) dt + Σ_{j<k} D(t_k, s_j, X_{s_j}) ΔW_j.
Eigen::VectorXd volterra_direct_eval(const VolterraCoefficients& v, const SegmentPath& path,
                                     const NoisePath& noise, std::size_t k);

/// Same quantity after the reduction, accumulated as a functional integral.
Eigen::VectorXd volterra_functional_eval(const FunctionalCoefficients& f,
                                         const SegmentPath& path, const NoisePath& noise,
                                         std::size_t k);

/// sup_k of the difference of the two evaluations.
double volterra_consistency(const VolterraCoefficients& v, const SegmentPath& path,
                            const NoisePath& noise);

/// Centered differences of C and D in t against the supplied partials.
ViolationReport check_volterra_partials(const VolterraCoefficients& v, const SegmentPath& path,
                                        std::uint64_t seed, std::size_t count,
                                        double rel_tol = 1e-6);

/// Sampled (HF2)-(HF4) on random segment pairs. The growth of C1, D1 is
/// measured against c0·min(λ1, λ2)^{2/q1}.
ViolationReport check_functional_hypotheses(const FunctionalCoefficients& f,
                                            const Profile& lambda1, const Profile& lambda2,
                                            double q1, double S, double dt, double T,
                                            std::uint64_t seed, std::size_t count);

/// Bihari iterate bounds matching the Picard differences: g0 = sup d_1,
/// λ8(s) = λ3(s) + ∫_0^s λ5(s, r) dr.
std::vector<std::vector<double>> picard_bihari_bounds(const FunctionalSolution& sol,
                                                      const FunctionalCoefficients& f, double c0);

/// Header: block, t, c_1..c_n, h_norm2. History rows come first.
void write_segment_csv(const SegmentPath& path, std::ostream& os);

/// Scalar delay toy dX = (-μX + κX(t-S)) dt + σ dW with n = 1.
struct DelayToy {
  GalerkinSystem system;
  FunctionalCoefficients coeffs;
};

DelayToy make_delay_toy(double mu, double kappa, double sigma, double S);

}  // namespace msee
