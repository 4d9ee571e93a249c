#include "msee/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msee/csv.hpp"
#include "msee/errors.hpp"
#include "msee/resolvent.hpp"

namespace msee {

void SolverConfig::validate() const {
  if (n_modes_galerkin < 1) throw ConfigError("Galerkin dimension must be at least 1");
  if (dt < 0.0 || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(resolvent_tol > 0.0)) throw ConfigError("resolvent_tol must be positive");
  if (resolvent_max_iter < 1) throw ConfigError("resolvent_max_iter must be at least 1");
}

Eigen::MatrixXd GalerkinSystem::jacobian_at(const NoiseContext& ctx,
                                            const Eigen::VectorXd& x) const {
  if (linear) return *linear;
  if (jacobian) return jacobian(ctx, x);
  const auto n = x.size();
  Eigen::MatrixXd J(n, n);
  Eigen::VectorXd y = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-7 * std::max(1.0, std::abs(x(j)));
    y(j) = x(j) + step;
    const Eigen::VectorXd plus = drift(ctx, y);
    y(j) = x(j) - step;
    const Eigen::VectorXd minus = drift(ctx, y);
    y(j) = x(j);
    J.col(j) = (plus - minus) / (2.0 * step);
  }
  return J;
}

GalerkinSystem galerkin_coefficients(const Drift& drift, const Diffusion& diff, std::size_t n) {
  if (!drift || !diff) throw ConfigError("Galerkin system needs a drift and a diffusion");
  const auto triple = drift->triple_ptr();
  if (diff->triple().id() != triple->id())
    throw DimensionError("drift and diffusion live on different triples");
  if (n < 1 || n > triple->n_grid())
    throw DomainError("Galerkin dimension " + std::to_string(n) + " outside [1, " +
                      std::to_string(triple->n_grid()) + "]");

  const auto cols = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd E = triple->basis().leftCols(cols);
  const Eigen::MatrixXd Dt = triple->dual_basis().leftCols(cols).transpose();

  GalerkinSystem sys;
  sys.dim = n;
  sys.n_modes = diff->n_modes();
  sys.drift = [drift, E, Dt](const NoiseContext& ctx, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Dt * drift->apply(ctx, E * x));
  };
  sys.jacobian = [drift, E, Dt](const NoiseContext& ctx, const Eigen::VectorXd& x) {
    return Eigen::MatrixXd(Dt * drift->jacobian(ctx, E * x) * E);
  };
  sys.diffusion = [diff, E, Dt](const NoiseContext& ctx, const Eigen::VectorXd& x) {
    return Eigen::MatrixXd(Dt * diff->apply(ctx, E * x));
  };
  if (const auto* lin = dynamic_cast<const LinearDrift*>(drift.get()))
    sys.linear = Dt * lin->jacobian({}, Eigen::VectorXd::Zero(E.rows())) * E;
  sys.additive = diff->state_independent();
  return sys;
}

namespace {

NoiseContext right_context(const NoiseContext& ctx, double dt) {
  return {ctx.t + dt, ctx.w, ctx.step + 1};
}

// Solves y - dt·b(t+dt, y) = x + s.
Eigen::VectorXd implicit_solve(const GalerkinSystem& sys, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& s, const NoiseContext& ctx, double dt,
                               const SolverConfig& cfg, int* iterations) {
  const NoiseContext right = right_context(ctx, dt);
  const Eigen::VectorXd r = x + s;
  const auto n = x.size();
  if (sys.linear) {
    if (iterations) *iterations = 1;
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - dt * (*sys.linear);
    if (n == 1) return r / M(0, 0);
    return M.partialPivLu().solve(r);
  }
  if (cfg.scheme == Scheme::SemiImplicit) {
    if (iterations) *iterations = 1;
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - dt * sys.jacobian_at(right, x);
    return x + M.partialPivLu().solve(dt * sys.drift(right, x) + s);
  }
  MonotoneMap F = MonotoneMap::general(
      [&](double, const Eigen::VectorXd& y) { return sys.drift(right, y); },
      [&](double, const Eigen::VectorXd& y) { return sys.jacobian_at(right, y); }, "galerkin");
  ResolventOptions opts;
  opts.tol = cfg.resolvent_tol;
  opts.max_iter = cfg.resolvent_max_iter;
  opts.iterations = iterations;
  opts.initial_guess =
      cfg.initial_guess == InitialGuess::Predictor ? Eigen::VectorXd(r + dt * sys.drift(right, x)) : x;
  return resolvent(F, right.t, dt, r, opts);
}

double step_defect(const GalerkinSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& s, const NoiseContext& ctx, double dt) {
  const Eigen::VectorXd by = sys.drift(right_context(ctx, dt), y);
  return y.squaredNorm() - x.squaredNorm() - 2.0 * dt * y.dot(by) - 2.0 * x.dot(s) -
         s.squaredNorm();
}

NoisePath align_noise(const NoisePath& noise, double dt, std::size_t n_modes) {
  if (noise.steps() == 0) throw ConfigError("empty noise path");
  if (noise.n_modes() < n_modes)
    throw ConfigError("noise path has " + std::to_string(noise.n_modes()) +
                      " modes, diffusion needs " + std::to_string(n_modes));
  if (dt <= 0.0) return noise;
  const double ratio = dt / noise.dt();
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio)
    throw ConfigError("dt must be an integer multiple of the noise step");
  return factor == 1 ? noise : aggregate_path(noise, factor);
}

}  // namespace

Eigen::VectorXd step_implicit(const GalerkinSystem& sys, const Eigen::VectorXd& x,
                              const NoiseContext& ctx, double dt, const Eigen::VectorXd& dW,
                              const SolverConfig& cfg) {
  if (static_cast<std::size_t>(x.size()) != sys.dim) throw DimensionError("state dimension");
  require_finite(x, "step_implicit");
  const Eigen::VectorXd s = sys.diffusion(ctx, x) * dW.head(static_cast<Eigen::Index>(sys.n_modes));
  return implicit_solve(sys, x, s, ctx, dt, cfg, nullptr);
}

GridFunction SolutionPath::state(std::size_t k) const {
  if (!triple) throw ConfigError("bare system paths have no grid representation");
  return GridFunction{triple->id(), triple->synthesize(coords.at(k))};
}

double SolutionPath::cumulative_residual() const {
  double sum = 0.0;
  for (double r : energy_residual) sum += r;
  return sum;
}

SolutionPath solve_system(const SolverConfig& cfg, const GalerkinSystem& sys,
                          const NoisePath& noise_in, const Eigen::VectorXd& x0) {
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != sys.dim)
    throw DimensionError("initial state has the wrong dimension");
  const NoisePath noise = align_noise(noise_in, cfg.dt, sys.n_modes);
  const std::size_t N = noise.steps();
  const double dt = noise.dt();
  const auto m = static_cast<Eigen::Index>(sys.n_modes);

  SolutionPath path;
  path.n = sys.dim;
  path.times = noise.times;
  path.w = noise.scalar_path;
  path.coords.reserve(N + 1);
  path.coords.push_back(x0);
  path.energy_residual.assign(N + 1, 0.0);
  path.solver_iterations.assign(N + 1, 0);

  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < N; ++k) {
    const NoiseContext ctx{noise.times[k], noise.scalar_path[k], k};
    const Eigen::VectorXd dW = noise.increments.row(static_cast<Eigen::Index>(k)).head(m).transpose();
    const Eigen::VectorXd s = sys.diffusion(ctx, x) * dW;
    int iters = 0;
    Eigen::VectorXd y;
    try {
      y = implicit_solve(sys, x, s, ctx, dt, cfg, &iters);
    } catch (const NonconvergenceError& e) {
      throw NonconvergenceError(std::string(e.what()) + " at step " + std::to_string(k),
                                e.residuals(), k);
    }
    require_finite(y, "solve_forward");
    path.energy_residual[k + 1] = step_defect(sys, x, y, s, ctx, dt);
    path.solver_iterations[k + 1] = static_cast<std::size_t>(iters);
    path.coords.push_back(y);
    x = std::move(y);
  }
  for (const auto& c : path.coords) path.h_norm2.push_back(c.squaredNorm());
  path.x1_norm_q = path.h_norm2;
  path.x2_norm_q = path.h_norm2;
  return path;
}

SolutionPath solve_forward(const SolverConfig& cfg, const Drift& drift, const Diffusion& diff,
                           const NoisePath& noise, const GridFunction& X0,
                           const HypothesisBundle* bundle) {
  cfg.validate();
  const auto triple = drift->triple_ptr();
  if (X0.triple_id != triple->id()) throw DimensionError("X0 belongs to a different triple");
  const Eigen::VectorXd x0 = triple->coordinates(X0.values, cfg.n_modes_galerkin);

  SolutionPath path;
  Profile lambda0;
  if (cfg.rescale_lambda0) {
    if (!bundle) throw ConfigError("rescaling needs a hypothesis bundle");
    const RescaledProblem rp = rescale_problem(drift, diff, *bundle);
    path = solve_system(cfg, galerkin_coefficients(rp.drift, rp.diffusion, cfg.n_modes_galerkin),
                        noise, x0);
    lambda0 = bundle->lambda0;
    for (std::size_t k = 0; k < path.coords.size(); ++k)
      path.coords[k] *= rescale_gamma(lambda0, path.times[k]);
  } else {
    path = solve_system(cfg, galerkin_coefficients(drift, diff, cfg.n_modes_galerkin), noise, x0);
  }

  path.triple = triple;
  path.q1 = triple->q1();
  path.q2 = triple->q2();
  path.h_norm2.clear();
  path.x1_norm_q.clear();
  path.x2_norm_q.clear();
  for (const auto& c : path.coords) {
    const Eigen::VectorXd u = triple->synthesize(c);
    path.h_norm2.push_back(c.squaredNorm());
    path.x1_norm_q.push_back(std::pow(triple->norm_x(u, Space::X1), path.q1));
    path.x2_norm_q.push_back(std::pow(triple->norm_x(u, Space::X2), path.q2));
  }
  return path;
}

RescaledProblem rescale_problem(const Drift& drift, const Diffusion& diff,
                                const HypothesisBundle& bundle) {
  const Profile l0 = bundle.lambda0;
  if (!l0.deterministic()) throw ConfigError("rescaling supports deterministic lambda0 only");
  RescaledProblem out;
  out.drift = std::make_shared<RescaledDrift>(drift, l0);
  out.diffusion = std::make_shared<RescaledDiffusion>(diff, l0);
  out.bundle = bundle;
  out.bundle.lambda0 = Profile::constant(0.0);
  auto boost = [l0](const Profile& lam, double q, const char* name) {
    return Profile::process(
        [l0, lam, q](const NoiseContext& c) {
          return lam(c) * std::pow(rescale_gamma(l0, c.t), q - 2.0);
        },
        std::string(name) + "*gamma^(q-2)");
  };
  out.bundle.lambda1 = boost(bundle.lambda1, bundle.q1, "lambda1");
  out.bundle.lambda2 = boost(bundle.lambda2, bundle.q2, "lambda2");
  const Profile l3 = bundle.lambda3;
  out.bundle.lambda3 =
      Profile::process([l0, l3](const NoiseContext& c) { return l3(c) + l0(c); }, "lambda3+lambda0");
  return out;
}

double clock_theta(const std::vector<double>& times, const std::vector<double>& lambda3,
                   double m) {
  if (times.size() != lambda3.size() || times.empty())
    throw ConfigError("clock_theta needs matching, non-empty grids");
  if (m <= 0.0) return times.front();
  double H = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double dt = times[k] - times[k - 1];
    const double inc = 0.5 * dt * (lambda3[k - 1] + lambda3[k]);
    if (H + inc >= m && inc > 0.0) return times[k - 1] + dt * (m - H) / inc;
    H += inc;
  }
  return times.back();
}

std::vector<double> energy_residual(const SolutionPath& path, const GalerkinSystem& sys,
                                    const NoisePath& noise_in) {
  const NoisePath noise =
      align_noise(noise_in, path.steps() ? path.times[1] - path.times[0] : 0.0, sys.n_modes);
  if (noise.steps() != path.steps()) throw DimensionError("path and noise grids differ");
  const auto m = static_cast<Eigen::Index>(sys.n_modes);
  std::vector<double> out(path.steps() + 1, 0.0);
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const NoiseContext ctx{path.times[k], path.w[k], k};
    const Eigen::VectorXd dW = noise.increments.row(static_cast<Eigen::Index>(k)).head(m).transpose();
    const Eigen::VectorXd s = sys.diffusion(ctx, path.coords[k]) * dW;
    out[k + 1] = step_defect(sys, path.coords[k], path.coords[k + 1], s, ctx, noise.dt());
  }
  return out;
}

AprioriReport apriori_norms(const SolutionPath& path, const HypothesisBundle& bundle) {
  AprioriReport r;
  if (path.coords.empty()) return r;
  double int_l3 = 0.0;
  double int_xi = 0.0;
  double int_eta = 0.0;
  auto eta_pow = [](double eta, double q) { return std::pow(std::abs(eta), q / (q - 1.0)); };
  for (std::size_t k = 0; k < path.coords.size(); ++k) {
    r.sup_h2 = std::max(r.sup_h2, path.h_norm2[k]);
    if (k == 0) continue;
    const double dt = path.times[k] - path.times[k - 1];
    const NoiseContext a = path.context(k - 1);
    const NoiseContext b = path.context(k);
    auto trap = [&](double fa, double fb) { return 0.5 * dt * (fa + fb); };
    r.weighted_x1 += trap(bundle.lambda1(a) * path.x1_norm_q[k - 1],
                          bundle.lambda1(b) * path.x1_norm_q[k]);
    r.weighted_x2 += trap(bundle.lambda2(a) * path.x2_norm_q[k - 1],
                          bundle.lambda2(b) * path.x2_norm_q[k]);
    r.weighted_h += trap(bundle.lambda3(a) * path.h_norm2[k - 1],
                         bundle.lambda3(b) * path.h_norm2[k]);
    int_l3 += trap(bundle.lambda3(a), bundle.lambda3(b));
    int_xi += trap(bundle.xi(a), bundle.xi(b));
    int_eta += trap(eta_pow(bundle.eta1(a), bundle.q1), eta_pow(bundle.eta1(b), bundle.q1)) +
               trap(eta_pow(bundle.eta2(a), bundle.q2), eta_pow(bundle.eta2(b), bundle.q2));
  }
  r.lhs = r.sup_h2 + r.weighted_x1 + r.weighted_x2;
  r.m = std::max(1.0, std::ceil(int_l3));
  r.budget = std::exp(r.m) * (path.h_norm2.front() + int_xi + int_eta);
  return r;
}

void write_path_csv(const SolutionPath& path, std::ostream& os) {
  CsvWriter csv(os);
  std::vector<std::string> head{"t", "w"};
  for (std::size_t i = 1; i <= path.n; ++i) head.push_back("c" + std::to_string(i));
  for (const char* s : {"h_norm2", "x1_norm", "x2_norm", "energy_residual"}) head.emplace_back(s);
  csv.header(head);
  for (std::size_t k = 0; k < path.coords.size(); ++k) {
    std::vector<double> row{path.times[k], path.w[k]};
    for (Eigen::Index i = 0; i < path.coords[k].size(); ++i) row.push_back(path.coords[k](i));
    row.push_back(path.h_norm2[k]);
    row.push_back(std::pow(path.x1_norm_q[k], 1.0 / path.q1));
    row.push_back(std::pow(path.x2_norm_q[k], 1.0 / path.q2));
    row.push_back(path.energy_residual[k]);
    csv.row(row);
  }
}

}  // namespace msee
