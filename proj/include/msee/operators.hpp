#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "msee/triple.hpp"

namespace msee {

/// Where an operator is evaluated: time, the scalar driving path w_t, and the
/// grid step (used by tabulated per-step terms).
struct NoiseContext {
  double t = 0.0;
  double w = 0.0;
  std::size_t step = 0;
};

/// A scalar process λ(t, ω), realized as a function of the noise context.
class Profile {
 public:
  Profile();  // identically zero

  static Profile constant(double value);
  /// scale * |w_t|
  static Profile abs_brownian(double scale = 1.0);
  /// Piecewise-linear interpolation of (times, values), constant beyond the ends.
  static Profile tabulated(std::vector<double> times, std::vector<double> values);
  static Profile function(std::function<double(double)> f, std::string name);
  static Profile process(std::function<double(const NoiseContext&)> f, std::string name);

  double operator()(const NoiseContext& ctx) const { return eval_(ctx); }
  double at(double t) const { return eval_(NoiseContext{t, 0.0, 0}); }
  /// True when the value does not depend on the path.
  bool deterministic() const { return deterministic_; }
  /// ∫_a^b λ(s) ds for deterministic profiles.
  double integral(double a, double b) const;
  Profile scaled(double factor) const;
  const std::string& description() const { return name_; }

 private:
  std::function<double(const NoiseContext&)> eval_;
  bool deterministic_ = true;
  std::string name_;
  std::vector<double> knots_;  // non-empty for tabulated profiles
  std::vector<double> values_;
};

/// Pointwise nonlinearity r -> f(r) with optional analytic derivative.
struct Nonlinearity {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::string name;

  double operator()(double r) const { return value(r); }
  double slope(double r) const;

  static Nonlinearity linear(double slope = 1.0);
  /// |r|^{p-2} r
  static Nonlinearity power(double p);
  static Nonlinearity sine();
  /// r + 1{r >= 0}: monotone but discontinuous at 0.
  static Nonlinearity step();
  static Nonlinearity zero();
};

/// A = A1 + A2 with A_i in X_i^*, both in grid coordinates of X*.
struct DriftParts {
  Eigen::VectorXd a1;
  Eigen::VectorXd a2;
};

/// Drift A(t, ω, u) of the evolution equation. Outputs are X*-grid
/// coordinates: [v, A(u)]_X = triple.pairing(v, apply(u)).
class DriftOperator {
 public:
  explicit DriftOperator(std::shared_ptr<const DiscreteTriple> triple);
  virtual ~DriftOperator() = default;

  const DiscreteTriple& triple() const { return *triple_; }
  const std::shared_ptr<const DiscreteTriple>& triple_ptr() const { return triple_; }

  Eigen::VectorXd apply(const NoiseContext& ctx, const Eigen::VectorXd& u) const;
  virtual DriftParts parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const = 0;
  /// d apply / du. The default uses central differences.
  virtual Eigen::MatrixXd jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const;
  virtual std::string name() const = 0;

 private:
  std::shared_ptr<const DiscreteTriple> triple_;
};

using Drift = std::shared_ptr<const DriftOperator>;

/// A(u) = Δ φ(t, u) with φ(t, r) = c(t) f(r); returned as L·Φ(u) and split
/// evenly between X1 and X2 (which coincide for this flavor).
class PorousMediumDrift final : public DriftOperator {
 public:
  PorousMediumDrift(std::shared_ptr<const DiscreteTriple> triple, Nonlinearity phi,
                    Profile coeff);
  DriftParts parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  std::string name() const override;

  const Nonlinearity& phi() const { return phi_; }
  const Profile& coeff() const { return coeff_; }

 private:
  Nonlinearity phi_;
  Profile coeff_;
};

/// A1(u) = div_h c(t) a(∂_h u),  A2(u) = -c(t) b(u).
class ReactionDiffusionDrift final : public DriftOperator {
 public:
  ReactionDiffusionDrift(std::shared_ptr<const DiscreteTriple> triple, Nonlinearity flux,
                         Nonlinearity reaction, Profile coeff);
  DriftParts parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  std::string name() const override;

  const Nonlinearity& flux() const { return flux_; }
  const Nonlinearity& reaction() const { return reaction_; }

 private:
  Nonlinearity flux_;
  Nonlinearity reaction_;
  Profile coeff_;
};

/// A(u) = M u for a fixed matrix in X*-grid coordinates (all in A1).
class LinearDrift final : public DriftOperator {
 public:
  LinearDrift(std::shared_ptr<const DiscreteTriple> triple, Eigen::MatrixXd matrix,
              std::string label = "linear");
  DriftParts parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  std::string name() const override { return label_; }

 private:
  Eigen::MatrixXd matrix_;
  std::string label_;
};

/// A(u) + s(t) u, with u read as an H-element (identity in grid coordinates).
class ShiftedDrift final : public DriftOperator {
 public:
  ShiftedDrift(Drift base, Profile shift);
  DriftParts parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  std::string name() const override;

 private:
  Drift base_;
  Profile shift_;
};

/// Hilbert–Schmidt diffusion B(t, ω, u): U -> H, one column per noise mode.
class DiffusionOperator {
 public:
  DiffusionOperator(std::shared_ptr<const DiscreteTriple> triple, std::size_t n_modes);
  virtual ~DiffusionOperator() = default;

  const DiscreteTriple& triple() const { return *triple_; }
  const std::shared_ptr<const DiscreteTriple>& triple_ptr() const { return triple_; }
  std::size_t n_modes() const { return n_modes_; }
  /// n_grid x n_modes matrix, column j = B(u) ℓ_j.
  virtual Eigen::MatrixXd apply(const NoiseContext& ctx, const Eigen::VectorXd& u) const = 0;
  /// True when the output does not depend on u.
  virtual bool state_independent() const { return false; }
  virtual std::string name() const = 0;

 private:
  std::shared_ptr<const DiscreteTriple> triple_;
  std::size_t n_modes_;
};

using Diffusion = std::shared_ptr<const DiffusionOperator>;

/// Built-in diffusion: a fixed matrix or pointwise Nemytskii functions σ_j.
class DiffusionMap final : public DiffusionOperator {
 public:
  enum class Kind { ConstantB, Multiplicative };
  using ModeFunction = std::function<double(const NoiseContext&, double)>;

  static std::shared_ptr<DiffusionMap> constant(std::shared_ptr<const DiscreteTriple> triple,
                                                Eigen::MatrixXd B);
  static std::shared_ptr<DiffusionMap> multiplicative(
      std::shared_ptr<const DiscreteTriple> triple, std::vector<ModeFunction> sigma,
      std::string label);

  Eigen::MatrixXd apply(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  bool state_independent() const override { return kind_ == Kind::ConstantB; }
  std::string name() const override { return label_; }
  Kind kind() const { return kind_; }

 private:
  DiffusionMap(std::shared_ptr<const DiscreteTriple> triple, std::size_t n_modes);
  Kind kind_ = Kind::ConstantB;
  Eigen::MatrixXd B_;
  std::vector<ModeFunction> sigma_;
  std::string label_;
};

/// Discounting γ(t) = exp(½ ∫_0^t λ0) used to remove λ0 from (H2).
double rescale_gamma(const Profile& lambda0, double t);

/// Ã(t, x) = γ^{-1} A(t, γ x) - λ0(t) x / 2.
class RescaledDrift final : public DriftOperator {
 public:
  RescaledDrift(Drift base, Profile lambda0);
  DriftParts parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  std::string name() const override;

 private:
  Drift base_;
  Profile lambda0_;
};

/// B̃(t, x) = γ^{-1} B(t, γ x).
class RescaledDiffusion final : public DiffusionOperator {
 public:
  RescaledDiffusion(Diffusion base, Profile lambda0);
  Eigen::MatrixXd apply(const NoiseContext& ctx, const Eigen::VectorXd& u) const override;
  bool state_independent() const override { return false; }
  std::string name() const override;

 private:
  Diffusion base_;
  Profile lambda0_;
};

/// Constants and processes of (H1)–(H4).
struct HypothesisBundle {
  Profile lambda0;
  Profile lambda1 = Profile::constant(1.0);
  Profile lambda2 = Profile::constant(1.0);
  Profile lambda3;
  Profile xi;
  Profile eta1;
  Profile eta2;
  double q1 = 2.0;
  double q2 = 2.0;
  double c_A1 = 1.0;
  double c_A2 = 1.0;
  double c1 = 1.0;

  /// Throws ConfigError on exponents below 2 or non-positive constants.
  void validate() const;
};

/// Column-wise Σ_j ‖B ℓ_j‖²_H.
double hs_norm2(const Eigen::MatrixXd& B, const DiscreteTriple& triple);

GridFunction eval_drift(const DriftOperator& drift, double t, const NoiseContext& ctx,
                        const GridFunction& u);
Eigen::MatrixXd eval_diffusion(const DiffusionOperator& diff, double t,
                               const NoiseContext& ctx, const GridFunction& u);

/// Throws NumericError naming the first non-finite entry.
void require_finite(const Eigen::VectorXd& v, const char* what);

// Named built-ins. Porous medium: du = |w_t| Δ(|u|^{p-2}u) dt + dw_t.
// Reaction-diffusion: du = |w_t|(Δu - |u|^{p-2}u) dt + sqrt(|w_t|) u dw_t.
Drift make_heat_drift(std::shared_ptr<const DiscreteTriple> triple);
Drift make_porous_medium_drift(std::shared_ptr<const DiscreteTriple> triple, double p,
                               Profile coeff = Profile::constant(1.0));
Drift make_reaction_diffusion_drift(std::shared_ptr<const DiscreteTriple> triple, double p,
                                    Profile coeff = Profile::constant(1.0));
Diffusion make_constant_diffusion(std::shared_ptr<const DiscreteTriple> triple,
                                  const Eigen::MatrixXd& B);
/// B ℓ_1 = the constant function 1 (additive forcing).
Diffusion make_unit_forcing(std::shared_ptr<const DiscreteTriple> triple, double scale = 1.0);
/// σ_1(t, r) = sqrt(|w_t|) r.
Diffusion make_sqrt_brownian_diffusion(std::shared_ptr<const DiscreteTriple> triple);

struct BuiltinProblem {
  Drift drift;
  Diffusion diffusion;
  HypothesisBundle bundle;
  std::string name;
};

BuiltinProblem make_porous_medium_problem(std::size_t n_grid, double p);
BuiltinProblem make_reaction_diffusion_problem(std::size_t n_grid, double p);

}  // namespace msee
