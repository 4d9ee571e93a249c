#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "msee/hypotheses.hpp"

namespace msee {

/// Continuous map F(t, ·) on R^n, dissipative: <x - y, F(x) - F(y)> ≤ 0.
///
/// Sign convention: resolvents are J_ε = (I - εF)^{-1}, the orientation in
/// which the drift itself is monotone decreasing (not the convex-analysis
/// I + εA form).
struct MonotoneMap {
  using Eval = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
  using Jacobian = std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)>;
  using Scalar = std::function<double(double, double)>;  // (t, r)

  Eval eval;
  Jacobian jacobian;  // optional; finite differences otherwise
  /// When set, F acts componentwise as F(x)_i = f(t, x_i).
  Scalar f;
  Scalar df;
  double growth_q = 2.0;
  double growth_c = 1.0;
  std::string name;

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const { return eval(t, x); }
  bool componentwise() const { return static_cast<bool>(f); }
  Eigen::MatrixXd jacobian_at(double t, const Eigen::VectorXd& x) const;

  static MonotoneMap linear(Eigen::MatrixXd M, std::string name = "linear");
  static MonotoneMap pointwise(Scalar f, Scalar df, std::string name, double q = 2.0);
  static MonotoneMap general(Eval eval, Jacobian jac, std::string name);
  /// F(x) = -x^3 componentwise.
  static MonotoneMap cubic();
  /// F(x) = sin(x) componentwise (not monotone).
  static MonotoneMap sine();
  static MonotoneMap zero();
};

struct ResolventOptions {
  double tol = 1e-12;  // relative to 1 + ‖x‖ + ε‖F(y)‖
  int max_iter = 100;
  Eigen::VectorXd initial_guess;  // empty: start from x
  int* iterations = nullptr;      // receives the Newton iteration count
};

/// y = J_ε(x) solving y - εF(t, y) = x. Throws NonconvergenceError.
Eigen::VectorXd resolvent(const MonotoneMap& F, double t, double eps, const Eigen::VectorXd& x,
                          const ResolventOptions& opts = {});

/// A_ε(x) = (J_ε(x) - x)/ε, cross-checked against F(J_ε(x)).
Eigen::VectorXd yosida(const MonotoneMap& F, double t, double eps, const Eigen::VectorXd& x,
                       const ResolventOptions& opts = {});

/// Sampled check of the Yosida properties on random (ε, x, y):
/// (I) <x-y, A_ε x - A_ε y> ≤ 0, (II) ‖A_ε x - A_ε y‖ ≤ ε^{-1}‖x-y‖,
/// (III) ‖A_ε x‖ ≤ ‖F x‖, (IV) ‖A_ε x - F x‖ decreases along ε = 10^0..10^-6.
/// (I)-(III) use a relative tolerance of 1e-10.
struct YosidaReport {
  ViolationReport monotone;     // (I)
  ViolationReport lipschitz;    // (II)
  ViolationReport domination;   // (III)
  ViolationReport convergence;  // (IV)

  bool passed() const {
    return monotone.passed() && lipschitz.passed() && domination.passed() &&
           convergence.passed();
  }
};

YosidaReport check_yosida_properties(const MonotoneMap& F, std::size_t dim, std::uint64_t seed,
                                     std::size_t count, double t = 0.0);

}  // namespace msee
