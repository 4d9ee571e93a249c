#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "msee/analysis.hpp"
#include "msee/resolvent.hpp"

namespace msee {

/// Driver C(t, x, z) of the backward equation; z is dim x n_modes.
struct Driver {
  using Eval =
      std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const Eigen::MatrixXd&)>;
  Eval eval;
  bool uses_x = true;
  bool uses_z = true;
  std::string name;

  static Driver zero();
  /// C(t) independent of x and z.
  static Driver autonomous(std::function<Eigen::VectorXd(double)> c, std::size_t dim,
                           std::string name);
  /// C = κ z ℓ_1 (first noise mode).
  static Driver linear_z(double kappa);
  /// C = κ x.
  static Driver linear_x(double kappa);
  /// C(x) = x/‖x‖ · sqrt(ρ(‖x‖²)), the modulus-driven toy (zero at x = 0).
  static Driver rho_field(const ModulusSpec& rho);
};

/// -dX = (A(X) + C(t, X, Z)) dt - Z dW on [0, T], X(T) = terminal(W(T)).
struct BsdeProblem {
  MonotoneMap drift;
  Driver driver = Driver::zero();
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> terminal;  // of W(T)
  double T = 1.0;
  std::size_t dim = 1;
  std::size_t n_modes = 1;
  double lambda0 = 0.0;  // discounted away up front when positive
  ModulusSpec rho = ModulusSpec::linear(1.0);
  double c1 = 1.0;
  double c2 = 1.0;

  void validate() const;
};

/// Monte-Carlo Brownian paths on a shared uniform grid.
struct BsdePaths {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> W;   // N + 1 entries, each paths x n_modes
  std::vector<Eigen::MatrixXd> dW;  // N entries

  std::size_t paths() const { return W.empty() ? 0 : static_cast<std::size_t>(W[0].rows()); }
  std::size_t steps() const { return dW.size(); }
  double dt() const { return times[1] - times[0]; }
};

/// Path p uses the noise stream of replica p, so results do not depend on
/// how many paths are drawn.
BsdePaths simulate_bsde_paths(std::uint64_t seed, double T, std::size_t N,
                              std::size_t n_modes, std::size_t n_paths);

/// Polynomial features {1, s_j, s_j s_k} of the Markov state up to `degree`.
Eigen::MatrixXd regression_features(const Eigen::MatrixXd& states, int degree);

struct BsdeSolution {
  std::vector<double> times;
  int degree = 2;
  std::vector<Eigen::MatrixXd> x_values;               // N + 1, paths x dim
  std::vector<std::vector<Eigen::MatrixXd>> z_values;  // N, per mode paths x dim
  std::vector<Eigen::MatrixXd> x_coef;                 // N + 1, features x dim
  std::vector<std::vector<Eigen::MatrixXd>> z_coef;    // N, per mode
  std::vector<double> regression_error;                // standard error of fitted X
  std::vector<double> picard_residuals;                // Z-loop (last outer sweep)
  std::vector<double> outer_residuals;                 // X-loop
  std::size_t iterations = 0;
  std::size_t outer_iterations = 0;
  double terminal_fit_error = 0.0;

  /// X(t_k) as a function of the Markov state (rows of `states`).
  Eigen::MatrixXd evaluate_x(std::size_t k, const Eigen::MatrixXd& states) const;
  /// Mean of X(t_k) across paths, component i.
  double mean_x(std::size_t k, std::size_t i = 0) const;
};

struct PicardOptions {
  std::size_t max_iter = 50;
  double tol = 1e-10;
};

/// One backward LSMC sweep. The driver is evaluated pathwise with its x- and
/// z-arguments frozen at `x_frozen` / `z_frozen` when given (else 0).
BsdeSolution solve_bsde_autonomous_C(const BsdeProblem& problem, const BsdePaths& paths,
                                     int degree = 2);

/// Picard loop on Z: Z_0 = 0, Z_n from the sweep with C(·, Z_{n-1}).
BsdeSolution picard_in_z(const BsdeProblem& problem, const BsdePaths& paths, int degree = 2,
                         const PicardOptions& opts = {});

/// Outer Picard loop on X: X_0 = 0, X_n from picard_in_z with C(·, X_{n-1}, ·).
BsdeSolution picard_in_x(const BsdeProblem& problem, const BsdePaths& paths, int degree = 2,
                         const PicardOptions& opts = {}, const PicardOptions& inner = {});

struct BsdeAprioriReport {
  double q = 2.0;
  double sup_x = 0.0;       // E sup_k ‖X(t_k)‖^q
  double z_energy = 0.0;    // E (Σ dt ‖Z‖²)^{q/2}
  double terminal = 0.0;    // E ‖X_T‖^q
  double c0_fit = 0.0;      // (sup_x + z_energy) / terminal
  bool flagged = false;     // c0_fit beyond two orders of magnitude
};

BsdeAprioriReport apriori_bound_check(const BsdeSolution& sol, double q);

/// Header: t, x_coef..., z<mode>_coef..., regression_error.
void write_bsde_csv(const BsdeSolution& sol, std::ostream& os);
/// Header: loop, iteration, residual.
void write_picard_csv(const BsdeSolution& sol, std::ostream& os);

}  // namespace msee
