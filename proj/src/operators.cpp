#include "msee/operators.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "msee/errors.hpp"

namespace msee {

// ---------------------------------------------------------------- Profile

Profile::Profile() : eval_([](const NoiseContext&) { return 0.0; }), name_("0") {}

Profile Profile::constant(double value) {
  Profile p;
  p.eval_ = [value](const NoiseContext&) { return value; };
  std::ostringstream os;
  os << value;
  p.name_ = os.str();
  return p;
}

Profile Profile::abs_brownian(double scale) {
  Profile p;
  p.eval_ = [scale](const NoiseContext& c) { return scale * std::abs(c.w); };
  p.deterministic_ = false;
  std::ostringstream os;
  os << scale << "*|w_t|";
  p.name_ = os.str();
  return p;
}

Profile Profile::tabulated(std::vector<double> times, std::vector<double> values) {
  if (times.size() != values.size() || times.empty())
    throw ConfigError("tabulated profile needs matching, non-empty knots and values");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("profile knots must increase");
  Profile p;
  p.knots_ = std::move(times);
  p.values_ = std::move(values);
  p.eval_ = [k = p.knots_, v = p.values_](const NoiseContext& c) {
    if (c.t <= k.front()) return v.front();
    if (c.t >= k.back()) return v.back();
    const auto it = std::upper_bound(k.begin(), k.end(), c.t);
    const auto i = static_cast<std::size_t>(it - k.begin());
    const double s = (c.t - k[i - 1]) / (k[i] - k[i - 1]);
    return (1.0 - s) * v[i - 1] + s * v[i];
  };
  p.name_ = "tabulated[" + std::to_string(p.knots_.size()) + "]";
  return p;
}

Profile Profile::function(std::function<double(double)> f, std::string name) {
  Profile p;
  p.eval_ = [f = std::move(f)](const NoiseContext& c) { return f(c.t); };
  p.name_ = std::move(name);
  return p;
}

Profile Profile::process(std::function<double(const NoiseContext&)> f, std::string name) {
  Profile p;
  p.eval_ = std::move(f);
  p.deterministic_ = false;
  p.name_ = std::move(name);
  return p;
}

double Profile::integral(double a, double b) const {
  if (!deterministic_)
    throw DomainError("profile '" + name_ + "' depends on the path; integrate along a path");
  if (b < a) return -integral(b, a);
  if (a == b) return 0.0;
  if (!knots_.empty()) {
    // Exact for the piecewise-linear interpolant.
    std::vector<double> pts{a};
    for (double k : knots_)
      if (k > a && k < b) pts.push_back(k);
    pts.push_back(b);
    double sum = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
      sum += 0.5 * (pts[i] - pts[i - 1]) * (at(pts[i - 1]) + at(pts[i]));
    return sum;
  }
  auto f = [this](double s) { return at(s); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13);
}

Profile Profile::scaled(double factor) const {
  Profile p = *this;
  p.eval_ = [e = eval_, factor](const NoiseContext& c) { return factor * e(c); };
  p.values_.clear();
  for (double v : values_) p.values_.push_back(factor * v);
  std::ostringstream os;
  os << factor << "*(" << name_ << ")";
  p.name_ = os.str();
  return p;
}

// ----------------------------------------------------------- Nonlinearity

double Nonlinearity::slope(double r) const {
  if (derivative) return derivative(r);
  const double step = 1e-6 * std::max(1.0, std::abs(r));
  return (value(r + step) - value(r - step)) / (2.0 * step);
}

Nonlinearity Nonlinearity::linear(double slope) {
  return {[slope](double r) { return slope * r; }, [slope](double) { return slope; },
          "linear"};
}

Nonlinearity Nonlinearity::power(double p) {
  if (!(p >= 2.0)) throw ConfigError("porous/reaction exponent p must satisfy p >= 2");
  if (p == 2.0) return linear(1.0);
  if (p == 3.0)
    return {[](double r) { return std::abs(r) * r; },
            [](double r) { return 2.0 * std::abs(r); }, "|r|r"};
  return {[p](double r) { return std::pow(std::abs(r), p - 2.0) * r; },
          [p](double r) { return (p - 1.0) * std::pow(std::abs(r), p - 2.0); },
          "|r|^(p-2)r"};
}

Nonlinearity Nonlinearity::sine() {
  return {[](double r) { return std::sin(r); }, [](double r) { return std::cos(r); }, "sin"};
}

Nonlinearity Nonlinearity::step() {
  return {[](double r) { return r + (r >= 0.0 ? 1.0 : 0.0); }, [](double) { return 1.0; },
          "step"};
}

Nonlinearity Nonlinearity::zero() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }, "0"};
}

// ---------------------------------------------------------------- drifts

void require_finite(const Eigen::VectorXd& v, const char* what) {
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (!std::isfinite(v(j)))
      throw NumericError(std::string(what) + ": non-finite state", static_cast<std::size_t>(j));
}

DriftOperator::DriftOperator(std::shared_ptr<const DiscreteTriple> triple)
    : triple_(std::move(triple)) {
  if (!triple_) throw ConfigError("drift requires a triple");
}

Eigen::VectorXd DriftOperator::apply(const NoiseContext& ctx, const Eigen::VectorXd& u) const {
  DriftParts p = parts(ctx, u);
  return p.a1 + p.a2;
}

Eigen::MatrixXd DriftOperator::jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const {
  const auto n = u.size();
  Eigen::MatrixXd J(n, n);
  Eigen::VectorXd x = u;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(u(j)));
    x(j) = u(j) + step;
    const Eigen::VectorXd plus = apply(ctx, x);
    x(j) = u(j) - step;
    const Eigen::VectorXd minus = apply(ctx, x);
    x(j) = u(j);
    J.col(j) = (plus - minus) / (2.0 * step);
  }
  return J;
}

PorousMediumDrift::PorousMediumDrift(std::shared_ptr<const DiscreteTriple> triple,
                                     Nonlinearity phi, Profile coeff)
    : DriftOperator(std::move(triple)), phi_(std::move(phi)), coeff_(std::move(coeff)) {
  if (this->triple().flavor() != Flavor::PorousMedium)
    throw ConfigError("porous medium drift needs the porous-medium triple");
}

DriftParts PorousMediumDrift::parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const {
  require_grid(triple(), u, "porous medium drift");
  require_finite(u, "porous medium drift");
  const double c = coeff_(ctx);
  Eigen::VectorXd density = u.unaryExpr([&](double r) { return c * phi_(r); });
  Eigen::VectorXd half = 0.5 * triple().apply_laplacian(density);
  return {half, half};
}

Eigen::MatrixXd PorousMediumDrift::jacobian(const NoiseContext& ctx,
                                            const Eigen::VectorXd& u) const {
  const double c = coeff_(ctx);
  Eigen::VectorXd d = u.unaryExpr([&](double r) { return c * phi_.slope(r); });
  return triple().laplacian() * d.asDiagonal();
}

std::string PorousMediumDrift::name() const {
  return "porous_medium[phi=" + phi_.name + ", c=" + coeff_.description() + "]";
}

ReactionDiffusionDrift::ReactionDiffusionDrift(std::shared_ptr<const DiscreteTriple> triple,
                                               Nonlinearity flux, Nonlinearity reaction,
                                               Profile coeff)
    : DriftOperator(std::move(triple)),
      flux_(std::move(flux)),
      reaction_(std::move(reaction)),
      coeff_(std::move(coeff)) {
  if (this->triple().flavor() != Flavor::ReactionDiffusion)
    throw ConfigError("reaction-diffusion drift needs the reaction-diffusion triple");
}

DriftParts ReactionDiffusionDrift::parts(const NoiseContext& ctx,
                                         const Eigen::VectorXd& u) const {
  require_grid(triple(), u, "reaction-diffusion drift");
  require_finite(u, "reaction-diffusion drift");
  const double c = coeff_(ctx);
  const double h = triple().h();
  const Eigen::VectorXd grad = triple().gradient(u);
  const Eigen::VectorXd G = grad.unaryExpr([&](double r) { return c * flux_(r); });
  const auto n = u.size();
  DriftParts out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.a1(j) = (G(j + 1) - G(j)) / h;
    out.a2(j) = -c * reaction_(u(j));
  }
  return out;
}

Eigen::MatrixXd ReactionDiffusionDrift::jacobian(const NoiseContext& ctx,
                                                 const Eigen::VectorXd& u) const {
  const double c = coeff_(ctx);
  const double h2 = triple().h() * triple().h();
  const Eigen::VectorXd grad = triple().gradient(u);
  const auto n = u.size();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double right = c * flux_.slope(grad(j + 1)) / h2;
    const double left = c * flux_.slope(grad(j)) / h2;
    J(j, j) = -right - left - c * reaction_.slope(u(j));
    if (j + 1 < n) J(j, j + 1) = right;
    if (j > 0) J(j, j - 1) = left;
  }
  return J;
}

std::string ReactionDiffusionDrift::name() const {
  return "reaction_diffusion[a=" + flux_.name + ", b=" + reaction_.name +
         ", c=" + coeff_.description() + "]";
}

LinearDrift::LinearDrift(std::shared_ptr<const DiscreteTriple> triple, Eigen::MatrixXd matrix,
                         std::string label)
    : DriftOperator(std::move(triple)), matrix_(std::move(matrix)), label_(std::move(label)) {
  const auto n = static_cast<Eigen::Index>(this->triple().n_grid());
  if (matrix_.rows() != n || matrix_.cols() != n)
    throw DimensionError("linear drift matrix must be n_grid x n_grid");
}

DriftParts LinearDrift::parts(const NoiseContext&, const Eigen::VectorXd& u) const {
  require_grid(triple(), u, "linear drift");
  require_finite(u, "linear drift");
  return {matrix_ * u, Eigen::VectorXd::Zero(u.size())};
}

Eigen::MatrixXd LinearDrift::jacobian(const NoiseContext&, const Eigen::VectorXd&) const {
  return matrix_;
}

ShiftedDrift::ShiftedDrift(Drift base, Profile shift)
    : DriftOperator(base->triple_ptr()), base_(std::move(base)), shift_(std::move(shift)) {}

DriftParts ShiftedDrift::parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const {
  DriftParts p = base_->parts(ctx, u);
  p.a1 += shift_(ctx) * u;
  return p;
}

Eigen::MatrixXd ShiftedDrift::jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const {
  Eigen::MatrixXd J = base_->jacobian(ctx, u);
  J.diagonal().array() += shift_(ctx);
  return J;
}

std::string ShiftedDrift::name() const {
  return base_->name() + " + (" + shift_.description() + ")u";
}

// ------------------------------------------------------------- diffusion

DiffusionOperator::DiffusionOperator(std::shared_ptr<const DiscreteTriple> triple,
                                     std::size_t n_modes)
    : triple_(std::move(triple)), n_modes_(n_modes) {
  if (!triple_) throw ConfigError("diffusion requires a triple");
  if (n_modes_ < 1) throw ConfigError("diffusion needs at least one noise mode");
}

DiffusionMap::DiffusionMap(std::shared_ptr<const DiscreteTriple> triple, std::size_t n_modes)
    : DiffusionOperator(std::move(triple), n_modes) {}

std::shared_ptr<DiffusionMap> DiffusionMap::constant(
    std::shared_ptr<const DiscreteTriple> triple, Eigen::MatrixXd B) {
  if (static_cast<std::size_t>(B.rows()) != triple->n_grid() || B.cols() < 1)
    throw DimensionError("constant diffusion must be n_grid x n_modes");
  std::shared_ptr<DiffusionMap> d(new DiffusionMap(triple, static_cast<std::size_t>(B.cols())));
  d->kind_ = Kind::ConstantB;
  d->B_ = std::move(B);
  d->label_ = "constant_B";
  return d;
}

std::shared_ptr<DiffusionMap> DiffusionMap::multiplicative(
    std::shared_ptr<const DiscreteTriple> triple, std::vector<ModeFunction> sigma,
    std::string label) {
  std::shared_ptr<DiffusionMap> d(new DiffusionMap(triple, sigma.size()));
  d->kind_ = Kind::Multiplicative;
  d->sigma_ = std::move(sigma);
  d->label_ = std::move(label);
  return d;
}

Eigen::MatrixXd DiffusionMap::apply(const NoiseContext& ctx, const Eigen::VectorXd& u) const {
  require_grid(triple(), u, "diffusion");
  if (kind_ == Kind::ConstantB) return B_;
  Eigen::MatrixXd out(u.size(), static_cast<Eigen::Index>(sigma_.size()));
  for (std::size_t j = 0; j < sigma_.size(); ++j)
    for (Eigen::Index i = 0; i < u.size(); ++i)
      out(i, static_cast<Eigen::Index>(j)) = sigma_[j](ctx, u(i));
  return out;
}

// ------------------------------------------------------------- rescaling

double rescale_gamma(const Profile& lambda0, double t) {
  return std::exp(0.5 * lambda0.integral(0.0, t));
}

RescaledDrift::RescaledDrift(Drift base, Profile lambda0)
    : DriftOperator(base->triple_ptr()), base_(std::move(base)), lambda0_(std::move(lambda0)) {
  if (!lambda0_.deterministic())
    throw ConfigError("rescaling requires a deterministic lambda0 profile");
}

DriftParts RescaledDrift::parts(const NoiseContext& ctx, const Eigen::VectorXd& u) const {
  const double g = rescale_gamma(lambda0_, ctx.t);
  DriftParts p = base_->parts(ctx, g * u);
  const double l0 = lambda0_(ctx);
  p.a1 = p.a1 / g - 0.25 * l0 * u;
  p.a2 = p.a2 / g - 0.25 * l0 * u;
  return p;
}

Eigen::MatrixXd RescaledDrift::jacobian(const NoiseContext& ctx, const Eigen::VectorXd& u) const {
  const double g = rescale_gamma(lambda0_, ctx.t);
  Eigen::MatrixXd J = base_->jacobian(ctx, g * u);
  J.diagonal().array() -= 0.5 * lambda0_(ctx);
  return J;
}

std::string RescaledDrift::name() const { return "rescaled(" + base_->name() + ")"; }

RescaledDiffusion::RescaledDiffusion(Diffusion base, Profile lambda0)
    : DiffusionOperator(base->triple_ptr(), base->n_modes()),
      base_(std::move(base)),
      lambda0_(std::move(lambda0)) {
  if (!lambda0_.deterministic())
    throw ConfigError("rescaling requires a deterministic lambda0 profile");
}

Eigen::MatrixXd RescaledDiffusion::apply(const NoiseContext& ctx,
                                         const Eigen::VectorXd& u) const {
  const double g = rescale_gamma(lambda0_, ctx.t);
  return base_->apply(ctx, g * u) / g;
}

std::string RescaledDiffusion::name() const { return "rescaled(" + base_->name() + ")"; }

// ---------------------------------------------------------------- bundle

void HypothesisBundle::validate() const {
  if (!(q1 >= 2.0) || !(q2 >= 2.0)) throw ConfigError("bundle exponents q1, q2 must be >= 2");
  if (!(c_A1 > 0.0) || !(c_A2 > 0.0)) throw ConfigError("bundle constants c_A1, c_A2 must be > 0");
  if (!(c1 > 0.0)) throw ConfigError("bundle constant c1 must be > 0");
}

double hs_norm2(const Eigen::MatrixXd& B, const DiscreteTriple& triple) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    const Eigen::VectorXd col = B.col(j);
    sum += triple.inner(col, col);
  }
  return sum;
}

GridFunction eval_drift(const DriftOperator& drift, double t, const NoiseContext& ctx,
                        const GridFunction& u) {
  if (u.triple_id != drift.triple().id())
    throw DimensionError("state belongs to a different triple than the drift");
  NoiseContext c = ctx;
  c.t = t;
  return GridFunction{u.triple_id, drift.apply(c, u.values)};
}

Eigen::MatrixXd eval_diffusion(const DiffusionOperator& diff, double t, const NoiseContext& ctx,
                               const GridFunction& u) {
  if (u.triple_id != diff.triple().id())
    throw DimensionError("state belongs to a different triple than the diffusion");
  NoiseContext c = ctx;
  c.t = t;
  return diff.apply(c, u.values);
}

// -------------------------------------------------------------- built-ins

Drift make_heat_drift(std::shared_ptr<const DiscreteTriple> triple) {
  Eigen::MatrixXd L = triple->laplacian();
  return std::make_shared<LinearDrift>(std::move(triple), std::move(L), "heat");
}

Drift make_porous_medium_drift(std::shared_ptr<const DiscreteTriple> triple, double p,
                               Profile coeff) {
  return std::make_shared<PorousMediumDrift>(std::move(triple), Nonlinearity::power(p),
                                             std::move(coeff));
}

Drift make_reaction_diffusion_drift(std::shared_ptr<const DiscreteTriple> triple, double p,
                                    Profile coeff) {
  return std::make_shared<ReactionDiffusionDrift>(std::move(triple), Nonlinearity::linear(),
                                                  Nonlinearity::power(p), std::move(coeff));
}

Diffusion make_constant_diffusion(std::shared_ptr<const DiscreteTriple> triple,
                                  const Eigen::MatrixXd& B) {
  return DiffusionMap::constant(std::move(triple), B);
}

Diffusion make_unit_forcing(std::shared_ptr<const DiscreteTriple> triple, double scale) {
  const auto n = static_cast<Eigen::Index>(triple->n_grid());
  return DiffusionMap::constant(std::move(triple), Eigen::MatrixXd::Constant(n, 1, scale));
}

Diffusion make_sqrt_brownian_diffusion(std::shared_ptr<const DiscreteTriple> triple) {
  return DiffusionMap::multiplicative(
      std::move(triple),
      {[](const NoiseContext& c, double r) { return std::sqrt(std::abs(c.w)) * r; }},
      "sqrt|w_t|*r");
}

BuiltinProblem make_porous_medium_problem(std::size_t n_grid, double p) {
  auto triple = std::make_shared<const DiscreteTriple>(Flavor::PorousMedium, n_grid, p, p);
  BuiltinProblem out;
  out.drift = make_porous_medium_drift(triple, p, Profile::abs_brownian());
  out.diffusion = make_unit_forcing(triple);
  const double b2 = hs_norm2(out.diffusion->apply({}, Eigen::VectorXd::Zero(
                                                         static_cast<Eigen::Index>(n_grid))),
                             *triple);
  out.bundle.lambda0 = Profile::constant(0.0);
  out.bundle.lambda1 = Profile::abs_brownian();
  out.bundle.lambda2 = Profile::abs_brownian();
  out.bundle.lambda3 = Profile::constant(0.0);
  out.bundle.xi = Profile::constant(b2);
  out.bundle.q1 = p;
  out.bundle.q2 = p;
  out.bundle.c_A1 = 0.5;
  out.bundle.c_A2 = 0.5;
  out.bundle.c1 = 1.0;
  out.name = "eq_1_1";
  return out;
}

BuiltinProblem make_reaction_diffusion_problem(std::size_t n_grid, double p) {
  auto triple = std::make_shared<const DiscreteTriple>(Flavor::ReactionDiffusion, n_grid, 2.0, p);
  BuiltinProblem out;
  out.drift = make_reaction_diffusion_drift(triple, p, Profile::abs_brownian());
  out.diffusion = make_sqrt_brownian_diffusion(triple);
  out.bundle.lambda0 = Profile::abs_brownian();
  out.bundle.lambda1 = Profile::abs_brownian();
  out.bundle.lambda2 = Profile::abs_brownian();
  out.bundle.lambda3 = Profile::abs_brownian();
  out.bundle.q1 = 2.0;
  out.bundle.q2 = p;
  out.bundle.c_A1 = 1.0;
  out.bundle.c_A2 = 1.0;
  out.bundle.c1 = 2.0;
  out.name = "eq_1_2";
  return out;
}

}  // namespace msee
