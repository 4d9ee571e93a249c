#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "msee/galerkin.hpp"

namespace msee {

/// Concave modulus ρ used in Bihari-type estimates.
///
/// Linear:  ρ(x) = slope·x.
/// RhoK:    ρ(x) = c0·x·Π_{j=1}^k log^j(1/x) for x ≤ η (log^j the j-fold
///          iterated logarithm), continued linearly with slope ρ'(η-) above η.
/// Power:   ρ(x) = c·x^α, 0 < α ≤ 1 (α < 1 violates the Osgood condition).
struct ModulusSpec {
  enum class Kind { Linear, RhoK, Power };
  Kind kind = Kind::Linear;
  double slope = 1.0;
  int k = 1;
  double c0 = 1.0;
  double eta = 0.0;
  double alpha = 1.0;

  static ModulusSpec linear(double slope);
  static ModulusSpec rho_k(int k, double c0, double eta);
  static ModulusSpec power(double c, double alpha);

  /// Throws ConfigError on parameters outside the admissible ranges.
  void validate() const;
  /// True when ∫_0 dx/ρ(x) diverges.
  bool osgood() const;
  std::string name() const;
};

/// ρ(x). Throws DomainError for x < 0.
double rho_eval(double x, const ModulusSpec& spec);
/// Left derivative ρ'(x-), x > 0.
double rho_slope(double x, const ModulusSpec& spec);

/// G(x) = ∫_{x0}^x dy/ρ(y).
double bihari_G(double x0, double x, const ModulusSpec& spec);

struct BihariBound {
  double g0 = 0.0;
  ModulusSpec spec;
  std::vector<double> times;
  std::vector<double> lambda;
  std::vector<double> Lambda;  // ∫_0^t λ, trapezoid
  std::vector<double> bound;   // G^{-1}(G(g0) + Λ(t)); NaN after blow-up
  std::optional<double> blowup_time;
};

/// g(t) ≤ G^{-1}(G(g0) + ∫_0^t λ) with base point x0 = g0. Linear specs use
/// g0·exp(slope·Λ) directly.
BihariBound bihari_bound(double g0, const std::vector<double>& times,
                         const std::vector<double>& lambda, const ModulusSpec& spec);

/// Single value of the bound for an integrated weight Λ; +inf on blow-up.
double bihari_value(double g0, double Lambda, const ModulusSpec& spec);

struct ZeroLimitReport {
  std::vector<double> g0;
  std::vector<double> final_bound;
  bool decreasing = false;
  bool vanishes = false;  // last bound below threshold
  double threshold = 1e-3;

  bool passed() const { return decreasing && vanishes; }
};

/// Bounds at t = T for g0 ∈ {1e-2, 1e-4, ..., 1e-12}.
ZeroLimitReport zero_limit_check(const std::vector<double>& times,
                                 const std::vector<double>& lambda, const ModulusSpec& spec,
                                 double threshold = 1e-3);

/// Iterated comparison sequence B_1 ≡ g0,
/// B_{n+1}(t_k) = c0·Σ_{j<k} dt·λ(t_j)·ρ(B_n(t_j)). Returns B_1..B_count.
std::vector<std::vector<double>> bihari_iterates(double g0, const std::vector<double>& times,
                                                 const std::vector<double>& lambda, double c0,
                                                 const ModulusSpec& spec, std::size_t count);

/// [Σ_k dt·λ_i(t_k)·‖X(t_k)‖^{q_i}_{X_i}]^{1/q_i} over t_k < θ (left points),
/// averaged over the given replicas inside the root.
double k_norm(const std::vector<SolutionPath>& paths, int which, const Profile& lambda,
              double theta = -1.0);
double k_norm(const SolutionPath& path, int which, const Profile& lambda, double theta = -1.0);

/// sup_k ‖X1(t_k) - X2(t_k)‖_H. Coordinates beyond the shorter path count as 0.
double sup_h_distance(const SolutionPath& a, const SolutionPath& b);
/// sup_k ‖X_n(t_k) - Π_n X_m(t_k)‖_H with n = coarse.n ≤ fine.n.
double projected_distance(const SolutionPath& coarse, const SolutionPath& fine);

/// Least-squares slope of log(error) against log(step). Needs ≥ 3 points.
double convergence_order(const std::vector<double>& errors, const std::vector<double>& steps);

/// Header: t, lambda, Lambda, bound.
void write_bound_csv(const BihariBound& b, std::ostream& os);

}  // namespace msee
