#include "msee/functional.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "msee/csv.hpp"
#include "msee/errors.hpp"

namespace msee {

namespace {

constexpr std::uint64_t kPartialsChannel = 0x50415254;  // "PART"
constexpr std::uint64_t kSegmentChannel = 0x53454753;   // "SEGS"

std::size_t grid_count(double length, double dt, const char* what) {
  if (!(dt > 0.0)) throw ConfigError("segment grid step must be positive");
  if (!(length >= 0.0)) throw ConfigError(std::string(what) + " must be non-negative");
  const double ratio = length / dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError(std::string(what) + " must be a multiple of the grid step");
  return n;
}

NoisePath match_noise(const NoisePath& noise, double dt) {
  if (noise.steps() == 0) throw ConfigError("empty noise path");
  if (dt <= 0.0) return noise;
  const double ratio = dt / noise.dt();
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio)
    throw ConfigError("dt must be an integer multiple of the noise step");
  return factor == 1 ? noise : aggregate_path(noise, factor);
}

void require_grid(const SegmentPath& path, const NoisePath& noise) {
  if (std::abs(path.dt - noise.dt()) > 1e-12 * noise.dt())
    throw DimensionError("segment path and noise use different steps");
}

Eigen::VectorXd dW_row(const NoisePath& noise, std::size_t k, std::size_t m) {
  if (noise.n_modes() < m) throw DimensionError("noise path has too few modes");
  return noise.increments.row(static_cast<Eigen::Index>(k))
      .head(static_cast<Eigen::Index>(m))
      .transpose();
}

class Recorder {
 public:
  Recorder(std::string name, std::size_t samples) {
    report_.hypothesis = std::move(name);
    report_.samples = samples;
  }
  void record(std::size_t i, double t, double excess, double scale, const std::string& detail) {
    const double rel = scale > 0.0 ? excess / scale : std::max(excess, 0.0);
    report_.max_excess = std::max(report_.max_excess, rel);
    if (!std::isfinite(excess) || excess > kHypothesisRelTol * scale)
      report_.violations.push_back({i, t, excess, scale, detail});
  }
  ViolationReport take() { return std::move(report_); }

 private:
  ViolationReport report_;
};

double trapezoid(const std::function<double(double)>& f, double a, double b, int n = 64) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

}  // namespace

// ---------------------------------------------------------------------------
// SegmentPath

SegmentPath SegmentPath::from_history(double S, double dt,
                                      const std::function<Eigen::VectorXd(double)>& x0) {
  const std::size_t H = grid_count(S, dt, "memory horizon");
  SegmentPath p;
  p.S = static_cast<double>(H) * dt;
  p.dt = dt;
  p.history.reserve(H + 1);
  for (std::size_t j = 0; j <= H; ++j) {
    const double theta = j == H ? 0.0 : -p.S + static_cast<double>(j) * dt;
    p.history.push_back(x0(theta));
  }
  const auto d = p.history[0].size();
  for (const auto& h : p.history)
    if (h.size() != d) throw DimensionError("history states differ in dimension");
  p.trajectory = {p.history.back()};
  return p;
}

const Eigen::VectorXd& SegmentPath::node(std::size_t i) const {
  const std::size_t H = lag();
  if (i <= H) return history[i];
  return trajectory.at(i - H);
}

Eigen::VectorXd SegmentPath::value(double tau) const {
  const double lo = -S;
  const double hi = t_end();
  const double slack = 1e-9 * dt;
  if (tau < lo - slack || tau > hi + slack)
    throw DomainError("time " + std::to_string(tau) + " outside the stored range");
  const std::size_t last = lag() + steps();
  const double p = std::clamp((tau - lo) / dt, 0.0, static_cast<double>(last));
  const double r = std::round(p);
  if (std::abs(p - r) < 1e-9) return node(static_cast<std::size_t>(r));
  const auto i = static_cast<std::size_t>(std::floor(p));
  const double a = p - static_cast<double>(i);
  return (1.0 - a) * node(i) + a * node(i + 1);
}

double SegmentPath::sup_norm(double a, double b) const {
  if (b < a) std::swap(a, b);
  double s = std::max(value(a).norm(), value(b).norm());
  const std::size_t last = lag() + steps();
  for (std::size_t i = 0; i <= last; ++i) {
    const double tau = -S + static_cast<double>(i) * dt;
    if (tau > a && tau < b) s = std::max(s, node(i).norm());
  }
  return s;
}

void SegmentPath::validate() const {
  if (history.empty() || trajectory.empty()) throw ConfigError("segment path is empty");
  if (!(dt > 0.0)) throw ConfigError("segment grid step must be positive");
  if (grid_count(S, dt, "memory horizon") != lag())
    throw ConfigError("history length does not match S / dt");
  if (history.back() != trajectory.front()) throw ConfigError("history and trajectory disagree at 0");
}

Segment::Segment(const SegmentPath& path, double t) : path_(&path), t_(t) {}

Eigen::VectorXd Segment::operator()(double theta) const {
  if (theta > 1e-12 || theta < -path_->S - 1e-12)
    throw DomainError("segment argument outside [-S, 0]");
  return path_->value(t_ + theta);
}

Segment segment(const SegmentPath& path, double t) {
  if (t < -1e-12 || t > path.t_end() + 1e-9 * path.dt)
    throw DomainError("segment time " + std::to_string(t) + " outside [0, " +
                      std::to_string(path.t_end()) + "]");
  return Segment(path, t);
}

// ---------------------------------------------------------------------------
// Reduction

FunctionalCoefficients volterra_to_functional(const VolterraCoefficients& v) {
  FunctionalCoefficients f;
  f.dim = v.dim;
  f.n_modes = v.n_modes;
  if (v.C_diag) {
    f.C1 = v.C_diag;
  } else if (v.C) {
    f.C1 = [C = v.C](double s, const Segment& x) { return C(s, s, x); };
  }
  if (v.D_diag) {
    f.D1 = v.D_diag;
  } else if (v.D) {
    f.D1 = [D = v.D](double s, const Segment& x) { return D(s, s, x); };
  }
  if (v.C && !v.dC) throw ConfigError("Volterra kernel C needs its t-partial");
  if (v.D && !v.dD) throw ConfigError("Volterra kernel D needs its t-partial");
  f.C2 = v.dC;
  f.D2 = v.dD;
  f.rho = v.rho;
  f.lambda3 = v.lambda3;
  f.lambda5 = v.lambda5;
  return f;
}

// ---------------------------------------------------------------------------
// Picard

FunctionalSolution picard_solve_functional(const GalerkinSystem& system,
                                           const FunctionalCoefficients& coeffs,
                                           const NoisePath& noise_in, const SegmentPath& X0,
                                           const SolverConfig& cfg,
                                           const FunctionalOptions& opts) {
  cfg.validate();
  X0.validate();
  if (X0.dim() != system.dim || coeffs.dim != system.dim)
    throw DimensionError("functional coefficients and system differ in dimension");
  if (opts.max_iter == 0) throw ConfigError("max_iter must be positive");
  const NoisePath noise = match_noise(noise_in, cfg.dt);
  require_grid(X0, noise);
  const std::size_t N = noise.steps();
  const double dt = noise.dt();
  const std::size_t m = coeffs.n_modes;
  const auto dim = static_cast<Eigen::Index>(system.dim);

  SegmentPath X;
  X.S = X0.S;
  X.dt = dt;
  X.history = X0.history;
  X.trajectory.assign(N + 1, X0.history.back());
  switch (opts.first) {
    case FirstIterate::ConstantExtension:
      break;
    case FirstIterate::Zero:
      for (std::size_t k = 1; k <= N; ++k) X.trajectory[k] = Eigen::VectorXd::Zero(dim);
      break;
    case FirstIterate::Custom:
      if (opts.custom_first.size() != N + 1) throw DimensionError("custom first iterate length");
      for (std::size_t k = 1; k <= N; ++k) X.trajectory[k] = opts.custom_first[k];
      break;
  }

  std::vector<double> times(N + 1);
  for (std::size_t k = 0; k <= N; ++k) times[k] = static_cast<double>(k) * dt;

  std::vector<Eigen::VectorXd> G(N, Eigen::VectorXd::Zero(dim));
  std::vector<Eigen::MatrixXd> Dn(N, Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(m)));

  GalerkinSystem aug;
  aug.dim = system.dim;
  aug.n_modes = m;
  aug.additive = true;
  aug.drift = [&system, &G, N](const NoiseContext& ctx, const Eigen::VectorXd& y) {
    const std::size_t k = ctx.step == 0 ? 0 : std::min(ctx.step - 1, N - 1);
    return Eigen::VectorXd(system.drift(ctx, y) + G[k]);
  };
  aug.jacobian = [&system](const NoiseContext& ctx, const Eigen::VectorXd& y) {
    return system.jacobian_at(ctx, y);
  };
  aug.diffusion = [&Dn, N](const NoiseContext& ctx, const Eigen::VectorXd&) {
    return Dn[std::min(ctx.step, N - 1)];
  };
  SolverConfig inner = cfg;
  inner.dt = 0.0;

  FunctionalSolution sol;
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    std::vector<Segment> segs;
    segs.reserve(N + 1);
    for (std::size_t k = 0; k <= N; ++k) segs.emplace_back(X, times[k]);
    for (std::size_t k = 0; k < N; ++k) {
      Eigen::VectorXd g = coeffs.C1 ? coeffs.C1(times[k], segs[k]) : Eigen::VectorXd::Zero(dim);
      if (coeffs.has_memory()) {
        for (std::size_t j = 0; j < k; ++j) {
          if (coeffs.C2) g += dt * coeffs.C2(times[k], times[j], segs[j]);
          if (coeffs.D2) g += coeffs.D2(times[k], times[j], segs[j]) * dW_row(noise, j, m);
        }
      }
      require_finite(g, "functional drift");
      G[k] = std::move(g);
      if (coeffs.D1) Dn[k] = coeffs.D1(times[k], segs[k]);
    }

    SolutionPath fwd = solve_system(inner, aug, noise, X0.history.back());

    std::vector<double> profile(N + 1, 0.0);
    double run = 0.0;
    for (std::size_t k = 0; k <= N; ++k) {
      run = std::max(run, (fwd.coords[k] - X.trajectory[k]).squaredNorm());
      profile[k] = run;
    }
    sol.differences.push_back(std::sqrt(run));
    sol.difference_profiles.push_back(std::move(profile));
    X.trajectory = fwd.coords;
    sol.forward = std::move(fwd);
    if (sol.differences.back() < opts.tol) {
      // the final sweep only confirms the previous iterate
      sol.iterations = it > 1 ? it - 1 : 1;
      sol.path = std::move(X);
      return sol;
    }
  }
  throw NonconvergenceError("functional Picard iteration did not converge in " +
                                std::to_string(opts.max_iter) + " sweeps",
                            sol.differences);
}

// ---------------------------------------------------------------------------
// Volterra evaluations

Eigen::VectorXd volterra_direct_eval(const VolterraCoefficients& v, const SegmentPath& path,
                                     const NoisePath& noise, std::size_t k) {
  require_grid(path, noise);
  if (k > path.steps() || k > noise.steps()) throw DomainError("evaluation index out of range");
  const double dt = path.dt;
  const double t = static_cast<double>(k) * dt;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.dim));
  for (std::size_t j = 0; j < k; ++j) {
    const double s = static_cast<double>(j) * dt;
    const Segment seg(path, s);
    if (v.C) out += dt * v.C(t, s, seg);
    if (v.D) out += v.D(t, s, seg) * dW_row(noise, j, v.n_modes);
  }
  return out;
}

namespace {

// Running values F(t_0..t_k) of the reduced accumulation.
std::vector<Eigen::VectorXd> functional_prefix(const FunctionalCoefficients& f,
                                               const SegmentPath& path, const NoisePath& noise,
                                               std::size_t k) {
  require_grid(path, noise);
  if (k > path.steps() || k > noise.steps()) throw DomainError("evaluation index out of range");
  const double dt = path.dt;
  const auto dim = static_cast<Eigen::Index>(f.dim);
  std::vector<Segment> segs;
  segs.reserve(k + 1);
  for (std::size_t j = 0; j <= k; ++j) segs.emplace_back(path, static_cast<double>(j) * dt);

  std::vector<Eigen::VectorXd> out(k + 1, Eigen::VectorXd::Zero(dim));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (std::size_t j = 0; j < k; ++j) {
    const double s = static_cast<double>(j) * dt;
    const Eigen::VectorXd dW = dW_row(noise, j, f.n_modes);
    if (f.C1) acc += dt * f.C1(s, segs[j]);
    if (f.D1) acc += f.D1(s, segs[j]) * dW;
    if (f.has_memory()) {
      Eigen::VectorXd inner = Eigen::VectorXd::Zero(dim);
      for (std::size_t i = 0; i < j; ++i) {
        const double r = static_cast<double>(i) * dt;
        if (f.C2) inner += dt * f.C2(s, r, segs[i]);
        if (f.D2) inner += f.D2(s, r, segs[i]) * dW_row(noise, i, f.n_modes);
      }
      acc += dt * inner;
    }
    out[j + 1] = acc;
  }
  return out;
}

}  // namespace

Eigen::VectorXd volterra_functional_eval(const FunctionalCoefficients& f,
                                         const SegmentPath& path, const NoisePath& noise,
                                         std::size_t k) {
  return functional_prefix(f, path, noise, k).back();
}

double volterra_consistency(const VolterraCoefficients& v, const SegmentPath& path,
                            const NoisePath& noise) {
  const std::size_t N = std::min(path.steps(), noise.steps());
  const auto reduced = functional_prefix(volterra_to_functional(v), path, noise, N);
  double sup = 0.0;
  for (std::size_t k = 0; k <= N; ++k)
    sup = std::max(sup, (volterra_direct_eval(v, path, noise, k) - reduced[k]).norm());
  return sup;
}

// ---------------------------------------------------------------------------
// Checks

ViolationReport check_volterra_partials(const VolterraCoefficients& v, const SegmentPath& path,
                                        std::uint64_t seed, std::size_t count, double rel_tol) {
  Recorder rec("volterra partials", count);
  const double T = path.t_end();
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = make_stream(seed, i, kPartialsChannel, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double t = T > 0.0 ? T * unif(rng) : 0.5;
    const double s = T > 0.0 ? std::min(t, T) * unif(rng) : 0.0;
    const Segment seg(path, std::min(s, T));
    const double h = 1e-4 * std::max(1.0, std::abs(t));
    auto check = [&](const Eigen::MatrixXd& fd, const Eigen::MatrixXd& given,
                     const Eigen::MatrixXd& base, const char* what) {
      const double err = (fd - given).norm();
      const double scale = std::max(fd.norm(), given.norm()) + 1e-8 * (1.0 + base.norm());
      rec.record(i, t, err - rel_tol * scale, 0.0,
                 std::string(what) + " partial mismatch " + std::to_string(err));
    };
    if (v.C && v.dC) {
      const Eigen::VectorXd fd = (v.C(t + h, s, seg) - v.C(t - h, s, seg)) / (2.0 * h);
      check(fd, v.dC(t, s, seg), v.C(t, s, seg), "C");
    }
    if (v.D && v.dD) {
      const Eigen::MatrixXd fd = (v.D(t + h, s, seg) - v.D(t - h, s, seg)) / (2.0 * h);
      check(fd, v.dD(t, s, seg), v.D(t, s, seg), "D");
    }
  }
  return rec.take();
}

ViolationReport check_functional_hypotheses(const FunctionalCoefficients& f,
                                            const Profile& lambda1, const Profile& lambda2,
                                            double q1, double S, double dt, double T,
                                            std::uint64_t seed, std::size_t count) {
  Recorder rec("HF2-HF4", count);
  const std::size_t H = grid_count(S, dt, "memory horizon");
  const auto dim = static_cast<Eigen::Index>(f.dim);

  auto random_path = [&](std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    const double amp = std::pow(10.0, unif(rng));
    std::vector<Eigen::VectorXd> nodes;
    Eigen::VectorXd x(dim);
    for (Eigen::Index d = 0; d < dim; ++d) x[d] = normal(rng);
    for (std::size_t j = 0; j <= H; ++j) {
      nodes.push_back(amp * x);
      for (Eigen::Index d = 0; d < dim; ++d) x[d] += std::sqrt(dt) * normal(rng);
    }
    return SegmentPath::from_history(S, dt, [&](double theta) {
      const auto j = static_cast<std::size_t>(std::llround((theta + S) / dt));
      return nodes[std::min(j, H)];
    });
  };

  for (std::size_t i = 0; i < count; ++i) {
    auto rng = make_stream(seed, i, kSegmentChannel, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double t = T * (1.0 - unif(rng));
    const double s = t * unif(rng);
    const SegmentPath px = random_path(rng);
    SegmentPath py = random_path(rng);
    if (i % 4 == 1) {
      // nearby pair
      for (std::size_t j = 0; j < py.history.size(); ++j)
        py.history[j] = px.history[j] + 1e-3 * py.history[j];
      py.trajectory = {py.history.back()};
    }
    const Segment x(px, 0.0), y(py, 0.0);
    SegmentPath pd = px;
    for (std::size_t j = 0; j < pd.history.size(); ++j) pd.history[j] -= py.history[j];
    pd.trajectory = {pd.history.back()};
    const double dist2 = std::pow(Segment(pd, 0.0).sup_norm(), 2);
    const double rho = rho_eval(dist2, f.rho);
    const NoiseContext ctx{t, 0.0, 0};

    if (f.C1 || f.D1) {
      const double bound = f.lambda3(ctx) * rho;
      if (f.C1) {
        const double lhs = (f.C1(t, x) - f.C1(t, y)).squaredNorm();
        rec.record(i, t, lhs - bound, lhs + bound, "C1 increment");
      }
      if (f.D1) {
        const double lhs = (f.D1(t, x) - f.D1(t, y)).squaredNorm();
        rec.record(i, t, lhs - bound, lhs + bound, "D1 increment");
      }
      const double lam = std::min(lambda1(ctx), lambda2(ctx));
      const double x2 = std::pow(x.sup_norm(), 2);
      const double growth = f.c0 * std::pow(lam, 2.0 / q1) * (f.zeta(ctx) + x2);
      double lhs = 0.0;
      if (f.C1) lhs += f.C1(t, x).squaredNorm();
      if (f.D1) lhs += f.D1(t, x).squaredNorm();
      rec.record(i, t, lhs - growth, lhs + growth, "C1/D1 growth");
    }
    if (f.has_memory()) {
      if (!f.lambda5 || !f.lambda6 || !f.lambda7)
        throw ConfigError("memory kernels need lambda5, lambda6 and lambda7");
      const double bound = f.lambda5(t, s) * rho;
      if (f.C2) {
        const double lhs = (f.C2(t, s, x) - f.C2(t, s, y)).squaredNorm();
        rec.record(i, t, lhs - bound, lhs + bound, "C2 increment");
      }
      if (f.D2) {
        const double lhs = (f.D2(t, s, x) - f.D2(t, s, y)).squaredNorm();
        rec.record(i, t, lhs - bound, lhs + bound, "D2 increment");
      }
      const double x2 = std::pow(x.sup_norm(), 2);
      const double growth = f.lambda6(t, s) + f.lambda7(t, s) * x2;
      double lhs = 0.0;
      if (f.C2) lhs += f.C2(t, s, x).squaredNorm();
      if (f.D2) lhs += f.D2(t, s, x).squaredNorm();
      rec.record(i, t, lhs - growth, lhs + growth, "C2/D2 growth");

      const double lam = std::min(lambda1(ctx), lambda2(ctx));
      const double integral =
          trapezoid([&](double r) { return f.lambda6(t, r) + f.lambda7(t, r); }, 0.0, t);
      const double cap = f.c0 * std::pow(lam, 2.0 / q1);
      rec.record(i, t, integral - cap, integral + cap, "memory weight integral");
    }
  }
  return rec.take();
}

std::vector<std::vector<double>> picard_bihari_bounds(const FunctionalSolution& sol,
                                                      const FunctionalCoefficients& f,
                                                      double c0) {
  if (sol.difference_profiles.empty()) return {};
  const std::size_t N = sol.path.steps();
  const double dt = sol.path.dt;
  std::vector<double> times(N + 1), lambda8(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const double t = static_cast<double>(k) * dt;
    times[k] = t;
    double l = f.lambda3.at(t);
    if (f.lambda5) l += trapezoid([&](double r) { return f.lambda5(t, r); }, 0.0, t);
    lambda8[k] = l;
  }
  const auto& d1 = sol.difference_profiles.front();
  const double g0 = *std::max_element(d1.begin(), d1.end());
  return bihari_iterates(g0, times, lambda8, c0, f.rho, sol.difference_profiles.size());
}

void write_segment_csv(const SegmentPath& path, std::ostream& os) {
  CsvWriter w(os);
  std::vector<std::string> head{"block", "t"};
  for (std::size_t i = 1; i <= path.dim(); ++i) head.push_back("c" + std::to_string(i));
  head.push_back("h_norm2");
  w.header(head);
  auto emit = [&](const char* block, double t, const Eigen::VectorXd& x) {
    std::vector<std::string> f{block, CsvWriter::number(t)};
    for (Eigen::Index i = 0; i < x.size(); ++i) f.push_back(CsvWriter::number(x[i]));
    f.push_back(CsvWriter::number(x.squaredNorm()));
    w.fields(f);
  };
  for (std::size_t j = 0; j < path.history.size(); ++j)
    emit("history", -path.S + static_cast<double>(j) * path.dt, path.history[j]);
  for (std::size_t k = 0; k < path.trajectory.size(); ++k)
    emit("trajectory", static_cast<double>(k) * path.dt, path.trajectory[k]);
}

DelayToy make_delay_toy(double mu, double kappa, double sigma, double S) {
  DelayToy toy;
  toy.system.dim = 1;
  toy.system.n_modes = 1;
  toy.system.linear = Eigen::MatrixXd::Constant(1, 1, -mu);
  toy.system.drift = [mu](const NoiseContext&, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-mu * x);
  };
  toy.system.jacobian = [mu](const NoiseContext&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -mu);
  };
  toy.system.diffusion = [sigma](const NoiseContext&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, sigma);
  };
  toy.system.additive = true;

  auto& c = toy.coeffs;
  c.dim = 1;
  c.n_modes = 1;
  c.C1 = [kappa, S](double, const Segment& x) { return Eigen::VectorXd(kappa * x(-S)); };
  c.D1 = [sigma](double, const Segment&) { return Eigen::MatrixXd::Constant(1, 1, sigma); };
  c.rho = ModulusSpec::linear(1.0);
  c.lambda3 = Profile::constant(kappa * kappa);
  c.c0 = std::max(kappa * kappa, 1.0);
  c.zeta = Profile::constant(sigma * sigma);
  return toy;
}

}  // namespace msee
