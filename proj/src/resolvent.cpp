#include "msee/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "msee/errors.hpp"
#include "msee/noise.hpp"

namespace msee {

Eigen::MatrixXd MonotoneMap::jacobian_at(double t, const Eigen::VectorXd& x) const {
  if (jacobian) return jacobian(t, x);
  const auto n = x.size();
  if (componentwise() && df) {
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = df(t, x(i));
    return d.asDiagonal();
  }
  Eigen::MatrixXd J(n, n);
  Eigen::VectorXd y = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-7 * std::max(1.0, std::abs(x(j)));
    y(j) = x(j) + step;
    const Eigen::VectorXd plus = eval(t, y);
    y(j) = x(j) - step;
    const Eigen::VectorXd minus = eval(t, y);
    y(j) = x(j);
    J.col(j) = (plus - minus) / (2.0 * step);
  }
  return J;
}

MonotoneMap MonotoneMap::linear(Eigen::MatrixXd M, std::string name) {
  MonotoneMap F;
  F.eval = [M](double, const Eigen::VectorXd& x) -> Eigen::VectorXd { return M * x; };
  F.jacobian = [M](double, const Eigen::VectorXd&) { return M; };
  F.name = std::move(name);
  return F;
}

MonotoneMap MonotoneMap::pointwise(Scalar f, Scalar df, std::string name, double q) {
  MonotoneMap F;
  F.eval = [f](double t, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(x.unaryExpr([&](double r) { return f(t, r); }));
  };
  F.f = std::move(f);
  F.df = std::move(df);
  F.growth_q = q;
  F.name = std::move(name);
  return F;
}

MonotoneMap MonotoneMap::general(Eval eval, Jacobian jac, std::string name) {
  MonotoneMap F;
  F.eval = std::move(eval);
  F.jacobian = std::move(jac);
  F.name = std::move(name);
  return F;
}

MonotoneMap MonotoneMap::cubic() {
  return pointwise([](double, double r) { return -r * r * r; },
                   [](double, double r) { return -3.0 * r * r; }, "-x^3", 4.0);
}

MonotoneMap MonotoneMap::sine() {
  return pointwise([](double, double r) { return std::sin(r); },
                   [](double, double r) { return std::cos(r); }, "sin");
}

MonotoneMap MonotoneMap::zero() {
  return pointwise([](double, double) { return 0.0; }, [](double, double) { return 0.0; }, "0");
}

namespace {

// Root of g(y) = y - eps*f(t, y) - x by Newton steps kept inside a bracket.
double scalar_resolvent(const MonotoneMap& F, double t, double eps, double x, double tol,
                        int max_iter) {
  auto g = [&](double y) { return y - eps * F.f(t, y) - x; };
  const double g0 = g(x);
  if (g0 == 0.0) return x;

  double lo = x;
  double hi = x;
  double glo = g0;
  double ghi = g0;
  double step = std::max(1.0, std::abs(x));
  for (int k = 0; k < 2100; ++k) {
    if (g0 > 0.0) {
      lo = x - step;
      glo = g(lo);
      if (glo <= 0.0) break;
    } else {
      hi = x + step;
      ghi = g(hi);
      if (ghi >= 0.0) break;
    }
    step *= 2.0;
    if (!std::isfinite(step)) break;
  }
  if (!(glo <= 0.0 && ghi >= 0.0))
    throw NonconvergenceError("resolvent: could not bracket the root", {std::abs(g0)});
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;

  double y = std::clamp(x, lo, hi);
  double gy = g(y);
  std::vector<double> history;
  for (int it = 0; it < max_iter + 200; ++it) {
    const double scale = 1.0 + std::abs(x) + std::abs(eps * F.f(t, y));
    history.push_back(std::abs(gy));
    if (std::abs(gy) <= tol * scale) return y;
    if (gy < 0.0) {
      lo = y;
    } else {
      hi = y;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(y)))
      return y;
    const double slope = F.df ? 1.0 - eps * F.df(t, y) : 0.0;
    double next = slope > 0.0 ? y - gy / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    y = next;
    gy = g(y);
  }
  throw NonconvergenceError("resolvent: scalar iteration did not converge", history);
}

}  // namespace

Eigen::VectorXd resolvent(const MonotoneMap& F, double t, double eps, const Eigen::VectorXd& x,
                          const ResolventOptions& opts) {
  if (!(eps > 0.0)) throw DomainError("resolvent requires eps > 0");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x(i))) throw NumericError("resolvent: non-finite input", static_cast<std::size_t>(i));

  if (F.componentwise()) {
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      y(i) = scalar_resolvent(F, t, eps, x(i), opts.tol, opts.max_iter);
    return y;
  }

  // Damped Newton on g(y) = y - εF(y) - x with backtracking on ‖g‖.
  const auto n = x.size();
  Eigen::VectorXd y = opts.initial_guess.size() == n ? opts.initial_guess : x;
  auto residual = [&](const Eigen::VectorXd& v, Eigen::VectorXd& Fv) {
    Fv = F(t, v);
    return Eigen::VectorXd(v - eps * Fv - x);
  };
  Eigen::VectorXd Fy;
  Eigen::VectorXd g = residual(y, Fy);
  std::vector<double> history;
  for (int it = 0; it < opts.max_iter; ++it) {
    const double gn = g.norm();
    history.push_back(gn);
    if (!std::isfinite(gn)) break;
    if (opts.iterations) *opts.iterations = it;
    if (gn <= opts.tol * (1.0 + x.norm() + eps * Fy.norm())) return y;
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - eps * F.jacobian_at(t, y);
    const Eigen::VectorXd dy = M.partialPivLu().solve(g);
    double damping = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd trial = y - damping * dy;
      Eigen::VectorXd Ft;
      const Eigen::VectorXd gt = residual(trial, Ft);
      if (gt.norm() < gn || ls == 39) {
        improved = gt.norm() < gn;
        y = trial;
        Fy = Ft;
        g = gt;
        break;
      }
      damping *= 0.5;
    }
    if (!improved && g.norm() <= 4.0 * std::numeric_limits<double>::epsilon() *
                                      (1.0 + x.norm() + eps * Fy.norm()))
      return y;
  }
  throw NonconvergenceError("resolvent: Newton iteration did not converge", history);
}

Eigen::VectorXd yosida(const MonotoneMap& F, double t, double eps, const Eigen::VectorXd& x,
                       const ResolventOptions& opts) {
  const Eigen::VectorXd J = resolvent(F, t, eps, x, opts);
  const Eigen::VectorXd A = (J - x) / eps;
  Eigen::VectorXd FJ = F(t, J);
  const double scale = FJ.norm() + (1.0 + x.norm()) / eps;
  if ((A - FJ).norm() > 1e-8 * scale)
    throw NumericError("yosida: (J - x)/eps and F(J) disagree", 0);
  // F(J) carries no 1/eps amplification of the solver residual
  return FJ;
}

YosidaReport check_yosida_properties(const MonotoneMap& F, std::size_t dim, std::uint64_t seed,
                                     std::size_t count, double t) {
  YosidaReport rep;
  rep.monotone.hypothesis = "(I) monotone";
  rep.lipschitz.hypothesis = "(II) Lipschitz 1/eps";
  rep.domination.hypothesis = "(III) domination";
  rep.convergence.hypothesis = "(IV) convergence";
  for (ViolationReport* r : {&rep.monotone, &rep.lipschitz, &rep.domination, &rep.convergence})
    r->samples = count;

  constexpr double kTol = 1e-10;
  auto note = [](ViolationReport& r, std::size_t i, double t0, double excess, double scale,
                 const char* detail) {
    const double rel = scale > 0.0 ? excess / scale : std::max(excess, 0.0);
    r.max_excess = std::max(r.max_excess, rel);
    if (!std::isfinite(excess) || excess > kTol * scale)
      r.violations.push_back({i, t0, excess, scale, detail});
  };

  const auto n = static_cast<Eigen::Index>(dim);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = make_stream(seed, i, 0x594f5349, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double eps = std::pow(10.0, -3.0 * unif(rng));
    auto draw = [&] {
      const double amp = std::pow(10.0, -2.0 + 3.0 * unif(rng));
      Eigen::VectorXd v(n);
      for (Eigen::Index k = 0; k < n; ++k) v(k) = amp * normal(rng);
      return v;
    };
    const Eigen::VectorXd x = draw();
    const Eigen::VectorXd y = draw();

    const Eigen::VectorXd ax = yosida(F, t, eps, x);
    const Eigen::VectorXd ay = yosida(F, t, eps, y);
    const Eigen::VectorXd dx = x - y;
    const Eigen::VectorXd da = ax - ay;

    note(rep.monotone, i, t, dx.dot(da), dx.norm() * da.norm(), "");
    note(rep.lipschitz, i, t, da.norm() - dx.norm() / eps, da.norm() + dx.norm() / eps, "");
    const double fx = F(t, x).norm();
    note(rep.domination, i, t, ax.norm() - fx, ax.norm() + fx, "");

    // (IV): errors along ε = 1, 0.1, ..., 1e-6 fall with at most one rise,
    // and the last decade is in the linear-in-ε regime (or at round-off).
    const Eigen::VectorXd Fx = F(t, x);
    std::vector<double> err;
    for (int k = 0; k <= 6; ++k)
      err.push_back((yosida(F, t, std::pow(10.0, -k), x) - Fx).norm());
    int rises = 0;
    for (std::size_t k = 1; k < err.size(); ++k)
      if (err[k] > err[k - 1] * (1.0 + 1e-8) + 1e-14 * (1.0 + Fx.norm())) ++rises;
    const double floor = 1e-12 * (1.0 + Fx.norm());
    const bool fell = err.back() <= 0.2 * err[err.size() - 2] + floor && err.back() < err.front() + floor;
    const double scale = err.front() + floor;
    rep.convergence.max_excess = std::max(rep.convergence.max_excess, err.back() / scale);
    if (rises > 1 || !fell)
      rep.convergence.violations.push_back({i, t, err.back(), err.front(), "no decreasing trend"});
  }
  return rep;
}

}  // namespace msee
