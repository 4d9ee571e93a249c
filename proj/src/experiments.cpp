#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "msee/analysis.hpp"
#include "msee/bsde.hpp"
#include "msee/csv.hpp"
#include "msee/errors.hpp"
#include "msee/functional.hpp"
#include "msee/galerkin.hpp"
#include "msee/harness.hpp"
#include "msee/hypotheses.hpp"
#include "msee/resolvent.hpp"

namespace msee {

namespace {

using Problems = std::vector<std::string>;
using Series = std::vector<std::pair<double, double>>;

std::string fmt(double v) { return CsvWriter::number(v); }

void need(Problems& out, bool ok, const std::string& msg) {
  if (!ok) out.push_back(msg);
}

std::size_t step_count(const ExperimentConfig& c, double dt) {
  const double T = c.num("problem.T");
  const double r = T / dt;
  const auto N = static_cast<std::size_t>(std::llround(r));
  if (N < 1 || std::abs(r - static_cast<double>(N)) > 1e-9 * r)
    throw ConfigError("problem.T must be a positive multiple of numerics.dt");
  return N;
}

void common_checks(const ExperimentConfig& c, Problems& out) {
  need(out, c.num("problem.T") > 0.0, "problem.T: must be positive");
  need(out, c.num("numerics.dt") > 0.0, "numerics.dt: must be positive");
  need(out, c.integer("monte_carlo.replicas") >= 1, "monte_carlo.replicas: must be >= 1");
  need(out, c.integer("monte_carlo.seed") >= 0, "monte_carlo.seed: must be non-negative");
  need(out, c.integer("monte_carlo.threads") >= 0, "monte_carlo.threads: must be >= 0");
  if (c.num("problem.T") > 0.0 && c.num("numerics.dt") > 0.0) {
    try {
      step_count(c, c.num("numerics.dt"));
    } catch (const ConfigError& e) {
      out.push_back(e.what());
    }
  }
}

void grid_checks(const ExperimentConfig& c, Problems& out, std::size_t mode_factor = 1) {
  const long long n_grid = c.integer("problem.n_grid");
  const long long n = c.integer("numerics.n_modes");
  need(out, n_grid >= 2, "problem.n_grid: must be >= 2");
  need(out, n >= 1, "numerics.n_modes: must be >= 1");
  need(out, n * static_cast<long long>(mode_factor) <= n_grid,
       "numerics.n_modes: " + std::to_string(n) + " x " + std::to_string(mode_factor) +
           " modes exceed problem.n_grid");
  need(out, c.num("numerics.resolvent_tol") > 0.0, "numerics.resolvent_tol: must be positive");
  need(out, c.integer("numerics.resolvent_max_iter") >= 1,
       "numerics.resolvent_max_iter: must be >= 1");
}

void exponent_check(const ExperimentConfig& c, Problems& out) {
  need(out, c.num("problem.p") >= 2.0, "problem.p: the exponent must satisfy p >= 2");
}

SolverConfig solver_config(const ExperimentConfig& c) {
  SolverConfig s;
  s.n_modes_galerkin = c.count("numerics.n_modes");
  s.dt = 0.0;
  s.scheme = c.str("numerics.scheme") == "semi_implicit" ? Scheme::SemiImplicit
                                                         : Scheme::DriftImplicit;
  s.initial_guess = c.str("numerics.initial_guess") == "predictor" ? InitialGuess::Predictor
                                                                   : InitialGuess::Previous;
  s.resolvent_tol = c.num("numerics.resolvent_tol");
  s.resolvent_max_iter = static_cast<int>(c.integer("numerics.resolvent_max_iter"));
  s.rescale_lambda0 = c.flag("numerics.rescale_lambda0");
  s.validate();
  return s;
}

GridFunction bump(const DiscreteTriple& triple, double amp) {
  const Eigen::VectorXd& x = triple.nodes();
  Eigen::VectorXd v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) v[i] = amp * std::sin(std::numbers::pi * x[i]);
  return make_grid_function(triple, v);
}

GridFunction hat(const DiscreteTriple& triple, double amp) {
  const Eigen::VectorXd& x = triple.nodes();
  Eigen::VectorXd v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) v[i] = 2.0 * amp * std::min(x[i], 1.0 - x[i]);
  return make_grid_function(triple, v);
}

void write_report_rows(CsvWriter& w, const ViolationReport& r) {
  w.fields({r.hypothesis, std::to_string(r.samples), std::to_string(r.violations.size()),
            fmt(r.max_excess)});
}

std::vector<ViolationReport> all_checks(const BuiltinProblem& prob, std::size_t samples,
                                        std::uint64_t seed, double T) {
  const StateSampler sampler(prob.drift->triple().n_grid(), seed, samples, T);
  return {check_monotonicity(*prob.drift, *prob.diffusion, prob.bundle, sampler),
          check_coercivity(*prob.drift, *prob.diffusion, prob.bundle, sampler),
          check_boundedness(*prob.drift, prob.bundle, sampler),
          check_hemicontinuity(*prob.drift, sampler),
          check_diffusion_bounds(*prob.diffusion, prob.bundle, sampler),
          check_bundle(prob.bundle, sampler)};
}

// ---------------------------------------------------------------------------

void run_demo(RunContext& ctx, const BuiltinProblem& prob) {
  const auto& c = ctx.config();
  const SolverConfig sc = solver_config(c);
  const double T = c.num("problem.T");
  const double dt = c.num("numerics.dt");
  const std::size_t N = step_count(c, dt);
  const std::size_t R = c.count("monte_carlo.replicas");
  const std::uint64_t seed = c.seed();
  const auto& triple = prob.drift->triple();
  const GridFunction X0 = bump(triple, c.num("problem.u0"));
  const std::size_t modes = prob.diffusion->n_modes();

  std::vector<SolutionPath> paths(R);
  std::vector<AprioriReport> apriori(R);
  parallel_for(R, ctx.threads(), [&](std::size_t r) {
    const NoisePath noise = sample_path(seed, T, N, modes, r);
    paths[r] = solve_forward(sc, prob.drift, prob.diffusion, noise, X0, &prob.bundle);
    apriori[r] = apriori_norms(paths[r], prob.bundle);
  });

  ctx.write("path_replica0.csv", [&](std::ostream& os) { write_path_csv(paths[0], os); });
  std::vector<double> mean_h(N + 1);
  ctx.write("moments.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"t", "mean_h_norm2", "mean_x1_norm", "mean_x2_norm"});
    std::vector<double> a(R), b(R), d(R);
    for (std::size_t k = 0; k <= N; ++k) {
      for (std::size_t r = 0; r < R; ++r) {
        a[r] = paths[r].h_norm2[k];
        b[r] = paths[r].x1_norm_q[k];
        d[r] = paths[r].x2_norm_q[k];
      }
      const double n = static_cast<double>(R);
      mean_h[k] = pairwise_sum(a) / n;
      w.row({paths[0].times[k], mean_h[k], pairwise_sum(b) / n, pairwise_sum(d) / n});
    }
  });
  Series s;
  for (std::size_t k = 0; k <= N; ++k) s.emplace_back(paths[0].times[k], mean_h[k]);
  ctx.plot("moments.svg", prob.name + ": E|X|_H^2", {{"mean h_norm2", s}});

  std::vector<double> lhs(R), budget(R), resid(R);
  for (std::size_t r = 0; r < R; ++r) {
    lhs[r] = apriori[r].lhs;
    budget[r] = apriori[r].budget;
    resid[r] = std::abs(paths[r].cumulative_residual());
  }
  const double mean_lhs = pairwise_sum(lhs) / static_cast<double>(R);
  const double mean_budget = pairwise_sum(budget) / static_cast<double>(R);
  ctx.stat("mean_apriori_lhs", mean_lhs);
  ctx.stat("mean_apriori_budget", mean_budget);
  ctx.stat("final_mean_h_norm2", mean_h.back());
  ctx.stat("max_abs_energy_residual", *std::max_element(resid.begin(), resid.end()));
  ctx.check("apriori estimate (replica mean)", mean_lhs <= mean_budget,
            fmt(mean_lhs) + " <= " + fmt(mean_budget));
  bool finite = true;
  for (const auto& p : paths)
    for (double v : p.h_norm2) finite = finite && std::isfinite(v);
  ctx.check("finite trajectories", finite);

  const auto reports = all_checks(prob, std::min<std::size_t>(c.count("numerics.samples"), 200),
                                  seed, T);
  ctx.write("hypotheses.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"hypothesis", "samples", "violations", "max_excess"});
    for (const auto& r : reports) write_report_rows(w, r);
  });
  for (const auto& r : reports)
    ctx.check("hypothesis " + r.hypothesis, r.passed(), std::to_string(r.violations.size()) +
                                                            " violations");
}

void validate_demo(const ExperimentConfig& c, Problems& out) {
  common_checks(c, out);
  grid_checks(c, out);
  exponent_check(c, out);
}

// ---------------------------------------------------------------------------

void run_galerkin_convergence(RunContext& ctx) {
  const auto& c = ctx.config();
  const double p = c.num("problem.p");
  const std::size_t n_grid = c.count("problem.n_grid");
  const std::size_t n0 = c.count("numerics.n_modes");
  const std::size_t L = c.count("numerics.levels");
  const double T = c.num("problem.T");
  const double dt = c.num("numerics.dt");
  const std::size_t N = step_count(c, dt);
  auto triple = std::make_shared<const DiscreteTriple>(Flavor::PorousMedium, n_grid, p, p);
  const Drift drift = make_porous_medium_drift(triple, p);
  const Diffusion diff = make_unit_forcing(triple, c.num("problem.forcing"));
  const NoisePath noise = sample_path(c.seed(), T, N, diff->n_modes());
  const GridFunction X0 = hat(*triple, c.num("problem.u0"));

  std::vector<SolutionPath> paths(L);
  std::vector<std::size_t> ns(L);
  for (std::size_t l = 0; l < L; ++l) ns[l] = n0 << l;
  parallel_for(L, ctx.threads(), [&](std::size_t l) {
    SolverConfig sc = solver_config(c);
    sc.n_modes_galerkin = ns[l];
    paths[l] = solve_forward(sc, drift, diff, noise, X0);
  });
  std::vector<double> dist;
  for (std::size_t l = 0; l + 1 < L; ++l) dist.push_back(projected_distance(paths[l], paths[l + 1]));
  ctx.write("galerkin_convergence.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"n", "sup_h_distance_to_2n"});
    for (std::size_t l = 0; l < dist.size(); ++l) w.row({static_cast<double>(ns[l]), dist[l]});
  });
  bool dec = true;
  for (std::size_t l = 1; l < dist.size(); ++l) dec = dec && dist[l] <= 1.1 * dist[l - 1];
  for (std::size_t l = 0; l < dist.size(); ++l) ctx.stat("distance_n" + std::to_string(ns[l]), dist[l]);
  ctx.check("Galerkin distances decrease", dec);
}

void validate_galerkin_convergence(const ExperimentConfig& c, Problems& out) {
  common_checks(c, out);
  exponent_check(c, out);
  const long long L = c.integer("numerics.levels");
  need(out, L >= 2 && L <= 6, "numerics.levels: must lie in [2, 6]");
  grid_checks(c, out, L >= 1 && L <= 6 ? (std::size_t{1} << (L - 1)) : 1);
}

// ---------------------------------------------------------------------------

void run_timestep_convergence(RunContext& ctx) {
  const auto& c = ctx.config();
  const std::size_t n_grid = c.count("problem.n_grid");
  const std::size_t L = c.count("numerics.levels");
  const double T = c.num("problem.T");
  const double dt0 = c.num("numerics.dt");
  auto triple = std::make_shared<const DiscreteTriple>(Flavor::ReactionDiffusion, n_grid);
  const Drift drift = make_heat_drift(triple);
  const Diffusion diff =
      make_constant_diffusion(triple, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_grid), 1));
  const double mu1 = triple->eigenvalues()[0];
  const GridFunction X0 = make_grid_function(*triple, triple->basis().col(0));

  std::vector<double> dts, errors;
  for (std::size_t l = 0; l < L; ++l) {
    const double dt = dt0 / static_cast<double>(1u << l);
    const NoisePath noise = sample_path(c.seed(), T, step_count(c, dt), 1);
    const SolutionPath path = solve_forward(solver_config(c), drift, diff, noise, X0);
    double err = 0.0;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
      Eigen::VectorXd exact = Eigen::VectorXd::Zero(path.coords[k].size());
      exact[0] = std::exp(-mu1 * path.times[k]);
      err = std::max(err, (path.coords[k] - exact).norm());
    }
    dts.push_back(dt);
    errors.push_back(err);
  }
  ctx.write("timestep_convergence.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"dt", "sup_error", "ratio"});
    for (std::size_t l = 0; l < L; ++l)
      w.row({dts[l], errors[l], l == 0 ? std::nan("") : errors[l - 1] / errors[l]});
  });
  for (std::size_t l = 1; l < L; ++l) {
    const double r = errors[l - 1] / errors[l];
    ctx.check("halving ratio " + std::to_string(l), r >= 1.7 && r <= 2.3, fmt(r));
  }
  if (L >= 3) ctx.stat("order", convergence_order(errors, dts));
}

void validate_timestep(const ExperimentConfig& c, Problems& out) {
  common_checks(c, out);
  grid_checks(c, out);
  const long long L = c.integer("numerics.levels");
  need(out, L >= 2 && L <= 8, "numerics.levels: must lie in [2, 8]");
}

// ---------------------------------------------------------------------------

void run_pathwise_uniqueness(RunContext& ctx) {
  const auto& c = ctx.config();
  const BuiltinProblem prob = make_porous_medium_problem(c.count("problem.n_grid"), c.num("problem.p"));
  const double T = c.num("problem.T");
  const std::size_t N = step_count(c, c.num("numerics.dt"));
  const NoisePath noise = sample_path(c.seed(), T, N, prob.diffusion->n_modes());
  const auto& triple = prob.drift->triple();
  const GridFunction X0 = bump(triple, c.num("problem.u0"));
  GridFunction Y0 = X0;
  Y0.values += hat(triple, 0.1 * c.num("problem.u0")).values;

  SolverConfig a = solver_config(c), b = a;
  a.initial_guess = InitialGuess::Previous;
  b.initial_guess = InitialGuess::Predictor;
  const SolutionPath pa = solve_forward(a, prob.drift, prob.diffusion, noise, X0);
  const SolutionPath pb = solve_forward(b, prob.drift, prob.diffusion, noise, X0);
  const SolutionPath py = solve_forward(a, prob.drift, prob.diffusion, noise, Y0);

  double sup = 0.0;
  for (double v : pa.h_norm2) sup = std::max(sup, v);
  const double solver_gap = sup_h_distance(pa, pb);
  const double allowed = 1e3 * a.resolvent_tol * (1.0 + std::sqrt(sup));
  ctx.check("solver-start independence", solver_gap <= allowed,
            fmt(solver_gap) + " <= " + fmt(allowed));

  std::vector<double> dist;
  double max_rise = 0.0;
  for (std::size_t k = 0; k <= N; ++k) {
    dist.push_back((pa.coords[k] - py.coords[k]).norm());
    if (k > 0) max_rise = std::max(max_rise, dist[k] - dist[k - 1]);
  }
  ctx.write("distance.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"t", "h_distance"});
    for (std::size_t k = 0; k <= N; ++k) w.row({pa.times[k], dist[k]});
  });
  ctx.stat("solver_gap", solver_gap);
  ctx.stat("initial_distance", dist.front());
  ctx.stat("final_distance", dist.back());
  ctx.check("H-distance non-increasing", max_rise <= 1e-8 * (1.0 + dist.front()), fmt(max_rise));
}

// ---------------------------------------------------------------------------

BuiltinProblem hypothesis_target(const ExperimentConfig& c) {
  const std::string target = c.str("problem.target");
  const std::size_t n = c.count("problem.n_grid");
  const double p = c.num("problem.p");
  if (target == "reaction_diffusion") return make_reaction_diffusion_problem(n, p);
  BuiltinProblem prob = make_porous_medium_problem(n, p);
  if (target == "planted_sine") {
    prob.drift = std::make_shared<PorousMediumDrift>(prob.drift->triple_ptr(), Nonlinearity::sine(),
                                                     Profile::abs_brownian());
    prob.name = "planted_sine";
  }
  return prob;
}

void run_hypothesis_report(RunContext& ctx) {
  const auto& c = ctx.config();
  const BuiltinProblem prob = hypothesis_target(c);
  const auto reports = all_checks(prob, c.count("numerics.samples"), c.seed(), c.num("problem.T"));
  ctx.write("hypotheses.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"hypothesis", "samples", "violations", "max_excess"});
    for (const auto& r : reports) write_report_rows(w, r);
  });
  std::size_t total = 0;
  for (const auto& r : reports) {
    total += r.violations.size();
    ctx.stat("violations " + r.hypothesis, static_cast<double>(r.violations.size()));
  }
  if (prob.name == "planted_sine")
    ctx.check("planted defect detected", total > 0, std::to_string(total) + " violations");
  else
    ctx.check("no violations for " + prob.name, total == 0, std::to_string(total) + " violations");
}

void validate_hypothesis_report(const ExperimentConfig& c, Problems& out) {
  need(out, c.num("problem.T") > 0.0, "problem.T: must be positive");
  need(out, c.integer("problem.n_grid") >= 2, "problem.n_grid: must be >= 2");
  need(out, c.integer("numerics.samples") >= 1, "numerics.samples: must be >= 1");
  exponent_check(c, out);
}

// ---------------------------------------------------------------------------

BsdeProblem linear_bsde(double T) {
  BsdeProblem bp;
  bp.drift = MonotoneMap::linear(Eigen::MatrixXd::Constant(1, 1, -1.0));
  bp.terminal = [](const Eigen::VectorXd& w) { return Eigen::VectorXd(w.head(1)); };
  bp.T = T;
  return bp;
}

void run_bsde_linear(RunContext& ctx) {
  const auto& c = ctx.config();
  const double T = c.num("problem.T");
  const double dt = c.num("numerics.dt");
  const std::size_t N = step_count(c, dt);
  const BsdeProblem bp = linear_bsde(T);
  const BsdePaths paths = simulate_bsde_paths(c.seed(), T, N, 1, c.count("monte_carlo.replicas"));
  const BsdeSolution sol =
      solve_bsde_autonomous_C(bp, paths, static_cast<int>(c.integer("numerics.degree")));
  ctx.write("bsde.csv", [&](std::ostream& os) { write_bsde_csv(sol, os); });

  const double P = static_cast<double>(paths.paths());
  std::vector<std::vector<double>> rows;
  for (double frac : {0.25, 0.5, 0.75}) {
    const auto k = static_cast<std::size_t>(std::llround(frac * static_cast<double>(N)));
    const double t = paths.times[k];
    const double g = std::exp(-(T - t));
    double ex = 0.0, ez = 0.0;
    for (Eigen::Index p = 0; p < paths.W[k].rows(); ++p) {
      ex += std::pow(sol.x_values[k](p, 0) - g * paths.W[k](p, 0), 2);
      ez += std::pow(sol.z_values[k][0](p, 0) - g, 2);
    }
    ex = std::sqrt(ex / P);
    ez = std::sqrt(ez / P);
    const double budget = 5.0 * (dt + sol.regression_error[k]);
    rows.push_back({t, ex, ez, budget});
    ctx.check("X error at t=" + fmt(t), ex < budget, fmt(ex) + " < " + fmt(budget));
    ctx.check("Z error at t=" + fmt(t), ez < budget, fmt(ez) + " < " + fmt(budget));
  }
  ctx.write("errors.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"t", "rms_error_x", "rms_error_z", "budget"});
    for (const auto& r : rows) w.row(r);
  });
  ctx.stat("mean_x0", sol.mean_x(0));
  ctx.stat("terminal_fit_error", sol.terminal_fit_error);
}

void validate_bsde(const ExperimentConfig& c, Problems& out) {
  common_checks(c, out);
  const long long d = c.integer("numerics.degree");
  need(out, d >= 0 && d <= 2, "numerics.degree: must lie in [0, 2]");
  need(out, c.integer("monte_carlo.replicas") >= 16, "monte_carlo.replicas: need >= 16 paths");
  need(out, c.num("numerics.picard_tol") > 0.0, "numerics.picard_tol: must be positive");
  need(out, c.integer("numerics.picard_max_iter") >= 1, "numerics.picard_max_iter: must be >= 1");
  need(out, c.num("problem.eta") > 0.0 && c.num("problem.eta") <= std::exp(-1.0),
       "problem.eta: must lie in (0, 1/e]");
}

void run_bsde_picard(RunContext& ctx) {
  const auto& c = ctx.config();
  const double T = c.num("problem.T");
  const std::size_t N = step_count(c, c.num("numerics.dt"));
  const int degree = static_cast<int>(c.integer("numerics.degree"));
  const BsdePaths paths = simulate_bsde_paths(c.seed(), T, N, 1, c.count("monte_carlo.replicas"));
  PicardOptions opts;
  opts.tol = c.num("numerics.picard_tol");
  opts.max_iter = c.count("numerics.picard_max_iter");

  BsdeProblem pz = linear_bsde(T);
  const double kappa = c.num("problem.kappa");
  pz.driver = Driver::linear_z(kappa);
  const BsdeSolution sz = picard_in_z(pz, paths, degree, opts);
  ctx.write("picard_z.csv", [&](std::ostream& os) { write_picard_csv(sz, os); });
  std::size_t rises = 0;
  for (std::size_t i = 1; i < sz.picard_residuals.size(); ++i)
    if (sz.picard_residuals[i] > sz.picard_residuals[i - 1]) ++rises;
  ctx.check("z-loop eventually decreasing", rises <= 1, std::to_string(rises) + " rises");
  const double x0 = sz.mean_x(0);
  const double exact = std::exp(-T) * kappa * T;
  ctx.stat("z_loop_iterations", static_cast<double>(sz.iterations));
  ctx.stat("z_loop_mean_x0", x0);
  ctx.stat("z_loop_exact_x0", exact);
  const double budget0 = 5.0 * (c.num("numerics.dt") + sz.regression_error[1]);
  ctx.check("z-loop X(0) matches the closed form", std::abs(x0 - exact) < budget0,
            fmt(std::abs(x0 - exact)) + " < " + fmt(budget0));

  BsdeProblem px = linear_bsde(T);
  px.rho = ModulusSpec::rho_k(1, 1.0, c.num("problem.eta"));
  px.driver = Driver::rho_field(px.rho);
  const BsdeSolution sx = picard_in_x(px, paths, degree, opts, opts);
  ctx.write("picard_x.csv", [&](std::ostream& os) { write_picard_csv(sx, os); });
  ctx.check("x-loop converges within 20 sweeps", sx.outer_iterations <= 20,
            std::to_string(sx.outer_iterations) + " sweeps");
  ctx.stat("x_loop_iterations", static_cast<double>(sx.outer_iterations));
}

// ---------------------------------------------------------------------------

SegmentPath delay_history(const ExperimentConfig& c, double dt) {
  const double u0 = c.num("problem.u0");
  return SegmentPath::from_history(c.num("problem.S"), dt, [u0](double theta) {
    return Eigen::VectorXd::Constant(1, u0 * std::cos(theta));
  });
}

void run_functional_delay(RunContext& ctx) {
  const auto& c = ctx.config();
  const double T = c.num("problem.T");
  const double dt = c.num("numerics.dt");
  const std::size_t N = step_count(c, dt);
  const double mu = c.num("problem.mu"), kappa = c.num("problem.kappa");
  const double sigma = c.num("problem.sigma"), S = c.num("problem.S");
  const DelayToy toy = make_delay_toy(mu, kappa, sigma, S);
  const NoisePath noise = sample_path(c.seed(), T, N, 1);
  const SegmentPath X0 = delay_history(c, dt);
  SolverConfig sc = solver_config(c);
  sc.n_modes_galerkin = 1;
  FunctionalOptions opts;
  opts.tol = c.num("numerics.picard_tol");
  opts.max_iter = c.count("numerics.picard_max_iter");

  const FunctionalSolution a = picard_solve_functional(toy.system, toy.coeffs, noise, X0, sc, opts);
  opts.first = FirstIterate::Zero;
  const FunctionalSolution b = picard_solve_functional(toy.system, toy.coeffs, noise, X0, sc, opts);
  double gap = 0.0;
  for (std::size_t k = 0; k <= N; ++k)
    gap = std::max(gap, (a.path.trajectory[k] - b.path.trajectory[k]).norm());
  ctx.check("fixed point independent of the first iterate", gap <= 10.0 * opts.tol, fmt(gap));

  // direct stepping that reads the lagged value from the stored path
  const std::size_t H = X0.lag();
  std::vector<double> x(N + 1);
  x[0] = X0.history.back()[0];
  auto lagged = [&](std::size_t k) { return k >= H ? x[k - H] : X0.history[k][0]; };
  for (std::size_t k = 0; k < N; ++k)
    x[k + 1] = (x[k] + dt * kappa * lagged(k) + sigma * noise.increments(static_cast<Eigen::Index>(k), 0)) /
               (1.0 + mu * dt);
  double oracle_gap = 0.0;
  for (std::size_t k = 0; k <= N; ++k) oracle_gap = std::max(oracle_gap, std::abs(a.path.trajectory[k][0] - x[k]));
  ctx.check("agrees with direct delay stepping", oracle_gap <= 10.0 * opts.tol, fmt(oracle_gap));

  const auto bounds = picard_bihari_bounds(a, toy.coeffs, T);
  double worst = 0.0;
  for (std::size_t n = 0; n < a.difference_profiles.size(); ++n)
    for (std::size_t k = 0; k <= N; ++k) {
      const double d = a.difference_profiles[n][k];
      if (d > 1.2 * bounds[n][k] && d > 1e-300) worst = std::max(worst, d / bounds[n][k]);
    }
  ctx.check("Picard differences below the Bihari iterates", worst == 0.0, fmt(worst));

  ctx.write("segment.csv", [&](std::ostream& os) { write_segment_csv(a.path, os); });
  ctx.write("picard.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"iteration", "t", "difference", "bihari_bound"});
    for (std::size_t n = 0; n < a.difference_profiles.size(); ++n)
      for (std::size_t k = 0; k <= N; ++k)
        w.row({static_cast<double>(n + 1), static_cast<double>(k) * dt,
               a.difference_profiles[n][k], bounds[n][k]});
  });
  ctx.stat("iterations", static_cast<double>(a.iterations));
  ctx.stat("oracle_gap", oracle_gap);
  Series s;
  for (std::size_t k = 0; k <= N; ++k) s.emplace_back(static_cast<double>(k) * dt, a.path.trajectory[k][0]);
  ctx.plot("delay.svg", "delay toy", {{"X", s}});
}

void validate_functional(const ExperimentConfig& c, Problems& out) {
  common_checks(c, out);
  need(out, c.num("problem.S") >= 0.0, "problem.S: must be non-negative");
  need(out, c.num("problem.mu") >= 0.0, "problem.mu: must be non-negative");
  need(out, c.num("numerics.picard_tol") > 0.0, "numerics.picard_tol: must be positive");
  need(out, c.integer("numerics.picard_max_iter") >= 1, "numerics.picard_max_iter: must be >= 1");
  const double dt = c.num("numerics.dt");
  if (dt > 0.0) {
    const double r = c.num("problem.S") / dt;
    need(out, std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r),
         "problem.S: must be a multiple of numerics.dt");
  }
}

// ---------------------------------------------------------------------------

VolterraCoefficients volterra_kernel(const std::string& kind) {
  VolterraCoefficients v;
  if (kind == "exp") {
    v.D = [](double t, double s, const Segment&) { return Eigen::MatrixXd::Constant(1, 1, std::exp(-(t - s))); };
    v.dD = [](double t, double s, const Segment&) { return Eigen::MatrixXd::Constant(1, 1, -std::exp(-(t - s))); };
  } else {
    v.D = [](double, double, const Segment&) { return Eigen::MatrixXd::Constant(1, 1, 1.0); };
    v.dD = [](double, double, const Segment&) { return Eigen::MatrixXd::Zero(1, 1); };
  }
  v.lambda3 = Profile::constant(0.0);
  return v;
}

SegmentPath noise_as_path(const NoisePath& noise) {
  SegmentPath p = SegmentPath::from_history(0.0, noise.dt(), [](double) {
    return Eigen::VectorXd::Zero(1);
  });
  for (std::size_t k = 1; k <= noise.steps(); ++k)
    p.trajectory.push_back(Eigen::VectorXd::Constant(1, noise.scalar_path[k]));
  return p;
}

void run_volterra_consistency(RunContext& ctx) {
  const auto& c = ctx.config();
  const std::string kind = c.str("problem.kernel");
  const VolterraCoefficients v = volterra_kernel(kind);
  const std::size_t L = c.count("numerics.levels");
  NoisePath noise = sample_path(c.seed(), c.num("problem.T"), step_count(c, c.num("numerics.dt")), 1);
  std::vector<double> dts, disc;
  for (std::size_t l = 0; l < L; ++l) {
    if (l > 0) noise = refine_path(noise);
    const SegmentPath path = noise_as_path(noise);
    dts.push_back(noise.dt());
    disc.push_back(volterra_consistency(v, path, noise));
    if (l == 0) {
      const auto partials = check_volterra_partials(v, path, c.seed(), 64);
      ctx.check("supplied partials match finite differences", partials.passed());
    }
  }
  ctx.write("volterra_consistency.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"dt", "sup_discrepancy"});
    for (std::size_t l = 0; l < L; ++l) w.row({dts[l], disc[l]});
  });
  if (kind == "constant") {
    ctx.check("t-independent kernel reduces exactly", *std::max_element(disc.begin(), disc.end()) <= 1e-12);
  } else {
    for (std::size_t l = 1; l < L; ++l) {
      const double r = disc[l - 1] / disc[l];
      ctx.check("halving ratio " + std::to_string(l), r >= 1.6 && r <= 2.4, fmt(r));
    }
  }
}

void validate_volterra(const ExperimentConfig& c, Problems& out) {
  common_checks(c, out);
  const long long L = c.integer("numerics.levels");
  need(out, L >= 2 && L <= 8, "numerics.levels: must lie in [2, 8]");
}

// ---------------------------------------------------------------------------

ModulusSpec modulus_from(const ExperimentConfig& c) {
  const std::string m = c.str("problem.modulus");
  ModulusSpec s;
  if (m == "rho_k")
    s = ModulusSpec::rho_k(static_cast<int>(c.integer("problem.k")), c.num("problem.slope"),
                           c.num("problem.eta"));
  else if (m == "power")
    s = ModulusSpec::power(c.num("problem.slope"), c.num("problem.alpha"));
  else
    s = ModulusSpec::linear(c.num("problem.slope"));
  s.validate();
  return s;
}

void run_bihari_table(RunContext& ctx) {
  const auto& c = ctx.config();
  const ModulusSpec spec = modulus_from(c);
  const double dt = c.num("numerics.dt");
  const std::size_t N = step_count(c, dt);
  std::vector<double> times(N + 1), lambda(N + 1, c.num("problem.lambda"));
  for (std::size_t k = 0; k <= N; ++k) times[k] = static_cast<double>(k) * dt;
  const double g0 = c.num("problem.g0");
  const BihariBound b = bihari_bound(g0, times, lambda, spec);
  ctx.write("bound.csv", [&](std::ostream& os) { write_bound_csv(b, os); });
  if (spec.kind == ModulusSpec::Kind::Linear) {
    const double gronwall = g0 * std::exp(spec.slope * b.Lambda.back());
    const double err = std::abs(b.bound.back() - gronwall);
    ctx.check("linear modulus equals Gronwall", err <= 1e-10 * std::max(1.0, gronwall), fmt(err));
  }
  const ZeroLimitReport z = zero_limit_check(times, lambda, spec);
  ctx.write("zero_limit.csv", [&](std::ostream& os) {
    CsvWriter w(os);
    w.header({"g0", "bound_at_T"});
    for (std::size_t i = 0; i < z.g0.size(); ++i) w.row({z.g0[i], z.final_bound[i]});
  });
  ctx.check("zero limit agrees with the Osgood condition", z.passed() == spec.osgood());
  ctx.stat("bound_at_T", b.bound.back());
  if (b.blowup_time) ctx.stat("blowup_time", *b.blowup_time);
  ctx.note("modulus", spec.name());
}

void validate_bihari(const ExperimentConfig& c, Problems& out) {
  common_checks(c, out);
  need(out, c.num("problem.g0") > 0.0, "problem.g0: must be positive");
  need(out, c.num("problem.lambda") >= 0.0, "problem.lambda: must be non-negative");
  try {
    modulus_from(c);
  } catch (const ConfigError& e) {
    out.push_back(std::string("problem.modulus: ") + e.what());
  }
}

}  // namespace

const std::vector<Experiment>& experiment_registry() {
  static const std::vector<Experiment> registry = {
      {"porous_medium_demo", "porous medium equation with |w_t| coefficient, Monte Carlo moments",
       validate_demo,
       [](RunContext& ctx) {
         const auto& c = ctx.config();
         run_demo(ctx, make_porous_medium_problem(c.count("problem.n_grid"), c.num("problem.p")));
       }},
      {"reaction_diffusion_demo", "reaction-diffusion equation with multiplicative noise",
       validate_demo,
       [](RunContext& ctx) {
         const auto& c = ctx.config();
         run_demo(ctx, make_reaction_diffusion_problem(c.count("problem.n_grid"), c.num("problem.p")));
       }},
      {"galerkin_convergence", "sup-H distance between nested Galerkin solutions",
       validate_galerkin_convergence, run_galerkin_convergence},
      {"timestep_convergence", "implicit Euler error for the heat equation under dt halving",
       validate_timestep, run_timestep_convergence},
      {"pathwise_uniqueness", "stability of the porous medium flow in H on fixed noise",
       validate_demo, run_pathwise_uniqueness},
      {"hypothesis_report", "sampled hypothesis checks for a built-in problem",
       validate_hypothesis_report, run_hypothesis_report},
      {"bsde_linear_validation", "LSMC backward solver against the closed form",
       validate_bsde, run_bsde_linear},
      {"bsde_picard_demo", "Picard loops in z and x", validate_bsde, run_bsde_picard},
      {"functional_delay_demo", "delay equation through the functional Picard solver",
       validate_functional, run_functional_delay},
      {"volterra_consistency", "Volterra kernel reduction against direct sums",
       validate_volterra, run_volterra_consistency},
      {"bihari_table", "Bihari bounds and zero-limit table", validate_bihari, run_bihari_table},
  };
  return registry;
}

const Experiment* find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return &e;
  return nullptr;
}

}  // namespace msee
