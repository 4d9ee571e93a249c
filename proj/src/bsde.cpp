#include "msee/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msee/csv.hpp"
#include "msee/errors.hpp"
#include "msee/noise.hpp"

namespace msee {

Driver Driver::zero() {
  return {[](double, const Eigen::VectorXd& x, const Eigen::MatrixXd&) {
            return Eigen::VectorXd(Eigen::VectorXd::Zero(x.size()));
          },
          false, false, "0"};
}

Driver Driver::autonomous(std::function<Eigen::VectorXd(double)> c, std::size_t dim,
                          std::string name) {
  return {[c = std::move(c), dim](double t, const Eigen::VectorXd&, const Eigen::MatrixXd&) {
            Eigen::VectorXd v = c(t);
            if (static_cast<std::size_t>(v.size()) != dim)
              throw DimensionError("driver output has the wrong dimension");
            return v;
          },
          false, false, std::move(name)};
}

Driver Driver::linear_z(double kappa) {
  return {[kappa](double, const Eigen::VectorXd&, const Eigen::MatrixXd& z) {
            return Eigen::VectorXd(kappa * z.col(0));
          },
          false, true, "kappa*z"};
}

Driver Driver::linear_x(double kappa) {
  return {[kappa](double, const Eigen::VectorXd& x, const Eigen::MatrixXd&) {
            return Eigen::VectorXd(kappa * x);
          },
          true, false, "kappa*x"};
}

Driver Driver::rho_field(const ModulusSpec& rho) {
  rho.validate();
  return {[rho](double, const Eigen::VectorXd& x, const Eigen::MatrixXd&) {
            const double n = x.norm();
            if (n == 0.0) return Eigen::VectorXd(Eigen::VectorXd::Zero(x.size()));
            return Eigen::VectorXd(x * (std::sqrt(rho_eval(n * n, rho)) / n));
          },
          true, false, "sqrt(rho(|x|^2)) x/|x|"};
}

void BsdeProblem::validate() const {
  if (!drift.eval) throw ConfigError("BSDE drift is not set");
  if (!driver.eval) throw ConfigError("BSDE driver is not set");
  if (!terminal) throw ConfigError("BSDE terminal value is not set");
  if (!(T > 0.0)) throw ConfigError("BSDE horizon must be positive");
  if (dim < 1 || n_modes < 1) throw ConfigError("BSDE dimensions must be at least 1");
  if (lambda0 < 0.0) throw ConfigError("lambda0 must be >= 0");
}

BsdePaths simulate_bsde_paths(std::uint64_t seed, double T, std::size_t N, std::size_t n_modes,
                              std::size_t n_paths) {
  if (n_paths < 2) throw ConfigError("BSDE regression needs at least 2 paths");
  BsdePaths out;
  const auto P = static_cast<Eigen::Index>(n_paths);
  const auto m = static_cast<Eigen::Index>(n_modes);
  out.W.assign(N + 1, Eigen::MatrixXd::Zero(P, m));
  out.dW.assign(N, Eigen::MatrixXd::Zero(P, m));
  for (Eigen::Index p = 0; p < P; ++p) {
    const NoisePath path = sample_path(seed, T, N, n_modes, static_cast<std::uint64_t>(p));
    if (p == 0) out.times = path.times;
    for (std::size_t k = 0; k < N; ++k) {
      out.dW[k].row(p) = path.increments.row(static_cast<Eigen::Index>(k));
      out.W[k + 1].row(p) = out.W[k].row(p) + out.dW[k].row(p);
    }
  }
  return out;
}

Eigen::MatrixXd regression_features(const Eigen::MatrixXd& states, int degree) {
  if (degree < 0 || degree > 2) throw ConfigError("regression degree must be 0, 1 or 2");
  const auto P = states.rows();
  const auto m = states.cols();
  Eigen::Index K = 1;
  if (degree >= 1) K += m;
  if (degree >= 2) K += m * (m + 1) / 2;
  Eigen::MatrixXd phi(P, K);
  phi.col(0).setOnes();
  Eigen::Index c = 1;
  if (degree >= 1)
    for (Eigen::Index j = 0; j < m; ++j) phi.col(c++) = states.col(j);
  if (degree >= 2)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index l = j; l < m; ++l)
        phi.col(c++) = states.col(j).cwiseProduct(states.col(l));
  return phi;
}

namespace {

using FrozenX = std::vector<Eigen::MatrixXd>;
using FrozenZ = std::vector<std::vector<Eigen::MatrixXd>>;

bool degenerate(const Eigen::MatrixXd& states) {
  return (states.rowwise() - states.row(0)).cwiseAbs().maxCoeff() == 0.0;
}

struct Design {
  Eigen::MatrixXd phi;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
};

Design make_design(const Eigen::MatrixXd& states, int degree, std::size_t k) {
  Design d;
  d.phi = degenerate(states) ? Eigen::MatrixXd(Eigen::MatrixXd::Ones(states.rows(), 1))
                             : regression_features(states, degree);
  d.qr.compute(d.phi);
  if (d.qr.rank() < d.phi.cols())
    throw RegressionError("rank-deficient design for polynomial basis of degree " +
                          std::to_string(degree) + " at step " + std::to_string(k));
  return d;
}

BsdeSolution sweep(const BsdeProblem& pr, const BsdePaths& paths, int degree,
                   const FrozenX* x_frozen, const FrozenZ* z_frozen) {
  const std::size_t N = paths.steps();
  if (N < 1) throw ConfigError("BSDE needs at least one time step");
  if (paths.W[0].cols() != static_cast<Eigen::Index>(pr.n_modes))
    throw DimensionError("paths and problem disagree on the noise dimension");
  const double dt = paths.dt();
  const auto P = static_cast<Eigen::Index>(paths.paths());
  const auto d = static_cast<Eigen::Index>(pr.dim);
  const auto m = static_cast<Eigen::Index>(pr.n_modes);

  BsdeSolution sol;
  sol.times = paths.times;
  sol.degree = degree;
  sol.x_values.assign(N + 1, Eigen::MatrixXd());
  sol.x_coef.assign(N + 1, Eigen::MatrixXd());
  sol.z_values.assign(N, {});
  sol.z_coef.assign(N, {});
  sol.regression_error.assign(N + 1, 0.0);

  Eigen::MatrixXd XT(P, d);
  for (Eigen::Index p = 0; p < P; ++p) {
    const Eigen::VectorXd v = pr.terminal(paths.W[N].row(p).transpose());
    if (v.size() != d) throw DimensionError("terminal value has the wrong dimension");
    XT.row(p) = v.transpose();
  }
  {
    const Design des = make_design(paths.W[N], degree, N);
    sol.x_coef[N] = des.qr.solve(XT);
    sol.terminal_fit_error =
        std::sqrt((des.phi * sol.x_coef[N] - XT).squaredNorm() / static_cast<double>(P * d));
  }
  sol.x_values[N] = std::move(XT);

  ResolventOptions ropts;
  ropts.tol = 1e-13;
  Eigen::VectorXd x_arg = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd z_arg = Eigen::MatrixXd::Zero(d, m);

  for (std::size_t kk = N; kk-- > 0;) {
    const Design des = make_design(paths.W[kk], degree, kk);
    const Eigen::MatrixXd& next = sol.x_values[kk + 1];
    const Eigen::MatrixXd coefY = des.qr.solve(next);
    const Eigen::MatrixXd Y = des.phi * coefY;

    const auto K = des.phi.cols();
    const double rss = (next - Y).squaredNorm() / static_cast<double>(d);
    const double sigma2 = P > K ? rss / static_cast<double>(P - K) : 0.0;
    sol.regression_error[kk] = std::sqrt(sigma2 * static_cast<double>(K) / static_cast<double>(P));

    sol.z_values[kk].resize(static_cast<std::size_t>(m));
    sol.z_coef[kk].resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
      // E[Y ΔW | F_k] = 0, so centering only removes variance
      const Eigen::MatrixXd target = (next - Y).array().colwise() * paths.dW[kk].col(j).array();
      sol.z_coef[kk][static_cast<std::size_t>(j)] = des.qr.solve(target) / dt;
      sol.z_values[kk][static_cast<std::size_t>(j)] =
          des.phi * sol.z_coef[kk][static_cast<std::size_t>(j)];
    }

    const double t = paths.times[kk];
    Eigen::MatrixXd X(P, d);
    for (Eigen::Index p = 0; p < P; ++p) {
      if (pr.driver.uses_x && x_frozen) x_arg = (*x_frozen)[kk].row(p).transpose();
      if (pr.driver.uses_z && z_frozen)
        for (Eigen::Index j = 0; j < m; ++j)
          z_arg.col(j) = (*z_frozen)[kk][static_cast<std::size_t>(j)].row(p).transpose();
      const Eigen::VectorXd r = Y.row(p).transpose() + dt * pr.driver.eval(t, x_arg, z_arg);
      // X = r + dt·A_dt(r) = J_dt(r).
      X.row(p) = resolvent(pr.drift, paths.times[kk + 1], dt, r, ropts).transpose();
    }
    sol.x_coef[kk] = des.qr.solve(X);
    sol.x_values[kk] = std::move(X);
  }
  sol.iterations = 1;
  sol.outer_iterations = 1;
  return sol;
}

double z_distance(const FrozenZ& a, const FrozenZ& b, double dt, Eigen::Index P) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j < a[k].size(); ++j) sum += dt * (a[k][j] - b[k][j]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(P));
}

double x_distance(const FrozenX& a, const FrozenX& b, Eigen::Index P) {
  double sup = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    sup = std::max(sup, (a[k] - b[k]).squaredNorm() / static_cast<double>(P));
  return sup;
}

BsdeSolution picard_z_impl(const BsdeProblem& pr, const BsdePaths& paths, int degree,
                           const PicardOptions& opts, const FrozenX* x_frozen) {
  if (!pr.driver.uses_z) {
    BsdeSolution sol = sweep(pr, paths, degree, x_frozen, nullptr);
    sol.picard_residuals = {0.0};
    return sol;
  }
  const auto P = static_cast<Eigen::Index>(paths.paths());
  const auto d = static_cast<Eigen::Index>(pr.dim);
  FrozenZ z_prev(paths.steps(),
                 std::vector<Eigen::MatrixXd>(pr.n_modes, Eigen::MatrixXd::Zero(P, d)));
  std::vector<double> history;
  for (std::size_t n = 1; n <= opts.max_iter; ++n) {
    BsdeSolution sol = sweep(pr, paths, degree, x_frozen, &z_prev);
    history.push_back(z_distance(sol.z_values, z_prev, paths.dt(), P));
    if (history.back() < opts.tol) {
      sol.picard_residuals = history;
      sol.iterations = n;
      return sol;
    }
    z_prev = std::move(sol.z_values);
  }
  throw NonconvergenceError("picard_in_z: no convergence within " +
                                std::to_string(opts.max_iter) + " iterations",
                            history);
}

BsdeSolution picard_x_impl(const BsdeProblem& pr, const BsdePaths& paths, int degree,
                           const PicardOptions& opts, const PicardOptions& inner) {
  if (!pr.driver.uses_x) {
    BsdeSolution sol = picard_z_impl(pr, paths, degree, inner, nullptr);
    sol.outer_residuals = {0.0};
    return sol;
  }
  const auto P = static_cast<Eigen::Index>(paths.paths());
  FrozenX x_prev(paths.steps() + 1, Eigen::MatrixXd::Zero(P, static_cast<Eigen::Index>(pr.dim)));
  std::vector<double> history;
  for (std::size_t n = 1; n <= opts.max_iter; ++n) {
    BsdeSolution sol = picard_z_impl(pr, paths, degree, inner, &x_prev);
    history.push_back(x_distance(sol.x_values, x_prev, P));
    if (history.back() < opts.tol) {
      sol.outer_residuals = history;
      sol.outer_iterations = n;
      return sol;
    }
    x_prev = sol.x_values;
  }
  throw NonconvergenceError("picard_in_x: no convergence within " +
                                std::to_string(opts.max_iter) + " iterations",
                            history);
}

// With γ(t) = e^{λ0 t/2}: X̃ = γX solves the problem with Ã(x) = γA(x/γ) - λ0 x/2,
// C̃(t, x, z) = γC(t, x/γ, z/γ) and X̃_T = γ(T) X_T.
BsdeProblem discount(const BsdeProblem& pr) {
  if (pr.lambda0 == 0.0) return pr;
  const double l0 = pr.lambda0;
  auto gamma = [l0](double t) { return std::exp(0.5 * l0 * t); };
  BsdeProblem out = pr;
  const MonotoneMap A = pr.drift;
  out.drift = MonotoneMap::general(
      [A, gamma, l0](double t, const Eigen::VectorXd& x) {
        const double g = gamma(t);
        return Eigen::VectorXd(g * A(t, x / g) - 0.5 * l0 * x);
      },
      [A, gamma, l0](double t, const Eigen::VectorXd& x) {
        const double g = gamma(t);
        Eigen::MatrixXd J = A.jacobian_at(t, x / g);
        J.diagonal().array() -= 0.5 * l0;
        return J;
      },
      "discounted(" + A.name + ")");
  const Driver C = pr.driver;
  out.driver.eval = [C, gamma](double t, const Eigen::VectorXd& x, const Eigen::MatrixXd& z) {
    const double g = gamma(t);
    return Eigen::VectorXd(g * C.eval(t, x / g, z / g));
  };
  const auto term = pr.terminal;
  const double gT = gamma(pr.T);
  out.terminal = [term, gT](const Eigen::VectorXd& w) { return Eigen::VectorXd(gT * term(w)); };
  out.lambda0 = 0.0;
  return out;
}

void undiscount(BsdeSolution& sol, double lambda0) {
  if (lambda0 == 0.0) return;
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const double g = std::exp(0.5 * lambda0 * sol.times[k]);
    sol.x_values[k] /= g;
    sol.x_coef[k] /= g;
    if (k < sol.z_values.size()) {
      for (auto& z : sol.z_values[k]) z /= g;
      for (auto& z : sol.z_coef[k]) z /= g;
    }
    sol.regression_error[k] /= g;
  }
}

}  // namespace

Eigen::MatrixXd BsdeSolution::evaluate_x(std::size_t k, const Eigen::MatrixXd& states) const {
  const Eigen::MatrixXd& c = x_coef.at(k);
  const Eigen::MatrixXd phi = c.rows() == 1
                                  ? Eigen::MatrixXd(Eigen::MatrixXd::Ones(states.rows(), 1))
                                  : regression_features(states, degree);
  return phi * c;
}

double BsdeSolution::mean_x(std::size_t k, std::size_t i) const {
  return x_values.at(k).col(static_cast<Eigen::Index>(i)).mean();
}

BsdeSolution solve_bsde_autonomous_C(const BsdeProblem& problem, const BsdePaths& paths,
                                     int degree) {
  problem.validate();
  if (problem.driver.uses_x || problem.driver.uses_z)
    throw ConfigError("solve_bsde_autonomous_C needs a driver independent of x and z");
  BsdeSolution sol = sweep(discount(problem), paths, degree, nullptr, nullptr);
  undiscount(sol, problem.lambda0);
  return sol;
}

BsdeSolution picard_in_z(const BsdeProblem& problem, const BsdePaths& paths, int degree,
                         const PicardOptions& opts) {
  problem.validate();
  BsdeSolution sol = picard_z_impl(discount(problem), paths, degree, opts, nullptr);
  undiscount(sol, problem.lambda0);
  return sol;
}

BsdeSolution picard_in_x(const BsdeProblem& problem, const BsdePaths& paths, int degree,
                         const PicardOptions& opts, const PicardOptions& inner) {
  problem.validate();
  BsdeSolution sol = picard_x_impl(discount(problem), paths, degree, opts, inner);
  undiscount(sol, problem.lambda0);
  return sol;
}

BsdeAprioriReport apriori_bound_check(const BsdeSolution& sol, double q) {
  if (!(q >= 1.0)) throw ConfigError("a-priori check needs q >= 1");
  BsdeAprioriReport r;
  r.q = q;
  if (sol.x_values.empty()) return r;
  const Eigen::Index P = sol.x_values[0].rows();
  const std::size_t N = sol.z_values.size();
  for (Eigen::Index p = 0; p < P; ++p) {
    double sup = 0.0;
    for (const auto& X : sol.x_values) sup = std::max(sup, X.row(p).norm());
    double energy = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      const double dt = sol.times[k + 1] - sol.times[k];
      for (const auto& Z : sol.z_values[k]) energy += dt * Z.row(p).squaredNorm();
    }
    r.sup_x += std::pow(sup, q);
    r.z_energy += std::pow(energy, 0.5 * q);
    r.terminal += std::pow(sol.x_values.back().row(p).norm(), q);
  }
  r.sup_x /= static_cast<double>(P);
  r.z_energy /= static_cast<double>(P);
  r.terminal /= static_cast<double>(P);
  r.c0_fit = r.terminal > 0.0 ? (r.sup_x + r.z_energy) / r.terminal : 0.0;
  r.flagged = r.c0_fit > 100.0;
  return r;
}

void write_bsde_csv(const BsdeSolution& sol, std::ostream& os) {
  CsvWriter csv(os);
  std::size_t K = 0;
  for (const auto& c : sol.x_coef) K = std::max(K, static_cast<std::size_t>(c.size()));
  const std::size_t modes = sol.z_coef.empty() ? 0 : sol.z_coef.back().size();
  std::vector<std::string> head{"t"};
  for (std::size_t i = 0; i < K; ++i) head.push_back("x_coef" + std::to_string(i));
  for (std::size_t j = 0; j < modes; ++j)
    for (std::size_t i = 0; i < K; ++i)
      head.push_back("z" + std::to_string(j + 1) + "_coef" + std::to_string(i));
  head.emplace_back("regression_error");
  csv.header(head);
  auto flat = [K](const Eigen::MatrixXd& c, std::vector<double>& row) {
    // Degenerate steps carry a constant-only fit; pad the rest with zeros.
    const Eigen::Map<const Eigen::VectorXd> v(c.data(), c.size());
    for (std::size_t i = 0; i < K; ++i)
      row.push_back(i < static_cast<std::size_t>(v.size()) ? v(static_cast<Eigen::Index>(i)) : 0.0);
  };
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    std::vector<double> row{sol.times[k]};
    flat(sol.x_coef[k], row);
    for (std::size_t j = 0; j < modes; ++j) {
      if (k < sol.z_coef.size())
        flat(sol.z_coef[k][j], row);
      else
        row.insert(row.end(), K, 0.0);
    }
    row.push_back(sol.regression_error[k]);
    csv.row(row);
  }
}

void write_picard_csv(const BsdeSolution& sol, std::ostream& os) {
  CsvWriter csv(os);
  csv.header({"loop", "iteration", "residual"});
  for (std::size_t i = 0; i < sol.picard_residuals.size(); ++i)
    csv.fields({"z", std::to_string(i + 1), CsvWriter::number(sol.picard_residuals[i])});
  for (std::size_t i = 0; i < sol.outer_residuals.size(); ++i)
    csv.fields({"x", std::to_string(i + 1), CsvWriter::number(sol.outer_residuals[i])});
}

}  // namespace msee
