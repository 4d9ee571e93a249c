#include "msee/analysis.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "msee/csv.hpp"
#include "msee/errors.hpp"

namespace msee {

namespace {

// Iterated logarithms L_1 = log(1/x), L_j = log(L_{j-1}).
void iterated_logs(double x, int k, double* out) {
  double v = -std::log(x);
  for (int j = 0; j < k; ++j) {
    out[j] = v;
    v = std::log(v);
  }
}

double rho_k_inner(double x, const ModulusSpec& s) {
  double L[16];
  iterated_logs(x, s.k, L);
  double p = 1.0;
  for (int j = 0; j < s.k; ++j) p *= L[j];
  return s.c0 * x * p;
}

// ρ'_k(x) = c0 [Π_j L_j - Σ_j Π_{i>j} L_i].
double rho_k_slope_inner(double x, const ModulusSpec& s) {
  double L[16];
  iterated_logs(x, s.k, L);
  double prod = 1.0;
  for (int j = 0; j < s.k; ++j) prod *= L[j];
  double sum = 0.0;
  for (int j = 0; j < s.k; ++j) {
    double tail = 1.0;
    for (int i = j + 1; i < s.k; ++i) tail *= L[i];
    sum += tail;
  }
  return s.c0 * (prod - sum);
}

// ∫ dy/ρ(y) over [a, b] for RhoK, in u = log y.
double rho_k_G(double a, double b, const ModulusSpec& s) {
  if (a == b) return 0.0;
  if (b < a) return -rho_k_G(b, a, s);
  auto f = [&s](double u) {
    const double y = std::exp(u);
    return y / rho_eval(y, s);
  };
  auto piece = [&](double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, std::log(lo), std::log(hi), 20, 1e-13);
  };
  double total = 0.0;
  if (a < s.eta) total += piece(a, std::min(b, s.eta));
  if (b > s.eta) {
    // Linear piece ρ(η) + m(y - η): closed form.
    const double r = rho_eval(s.eta, s);
    const double m = rho_slope(s.eta, s);
    const double lo = std::max(a, s.eta);
    total += std::log((r + m * (b - s.eta)) / (r + m * (lo - s.eta))) / m;
  }
  return total;
}

}  // namespace

ModulusSpec ModulusSpec::linear(double slope) {
  ModulusSpec s;
  s.kind = Kind::Linear;
  s.slope = slope;
  s.validate();
  return s;
}

ModulusSpec ModulusSpec::rho_k(int k, double c0, double eta) {
  ModulusSpec s;
  s.kind = Kind::RhoK;
  s.k = k;
  s.c0 = c0;
  s.eta = eta;
  s.validate();
  return s;
}

ModulusSpec ModulusSpec::power(double c, double alpha) {
  ModulusSpec s;
  s.kind = Kind::Power;
  s.c0 = c;
  s.alpha = alpha;
  s.validate();
  return s;
}

void ModulusSpec::validate() const {
  switch (kind) {
    case Kind::Linear:
      if (!(slope >= 0.0) || !std::isfinite(slope)) throw ConfigError("linear slope must be >= 0");
      break;
    case Kind::RhoK: {
      if (k < 1 || k > 8) throw ConfigError("rho_k needs 1 <= k <= 8");
      if (!(c0 > 0.0)) throw ConfigError("rho_k needs c0 > 0");
      if (!(eta > 0.0) || eta > std::exp(-static_cast<double>(k)) * (1.0 + 1e-12))
        throw ConfigError("rho_k needs 0 < eta <= e^{-k}");
      double L[16];
      iterated_logs(eta, k, L);
      for (int j = 0; j < k; ++j)
        if (!(L[j] > 0.0)) throw ConfigError("rho_k: iterated logarithm not positive at eta");
      if (!(rho_k_slope_inner(eta, *this) > 0.0))
        throw ConfigError("rho_k: extension slope at eta must be positive");
      break;
    }
    case Kind::Power:
      if (!(c0 > 0.0)) throw ConfigError("power modulus needs c > 0");
      if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("power modulus needs 0 < alpha <= 1");
      break;
  }
}

bool ModulusSpec::osgood() const {
  switch (kind) {
    case Kind::Linear:
      return true;
    case Kind::RhoK:
      return true;
    case Kind::Power:
      return alpha >= 1.0;
  }
  return false;
}

std::string ModulusSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Linear:
      os << "linear(" << slope << ")";
      break;
    case Kind::RhoK:
      os << "rho_" << k << "(c0=" << c0 << ", eta=" << eta << ")";
      break;
    case Kind::Power:
      os << c0 << "*x^" << alpha;
      break;
  }
  return os.str();
}

double rho_eval(double x, const ModulusSpec& s) {
  if (x < 0.0 || std::isnan(x)) throw DomainError("rho is defined on x >= 0");
  if (x == 0.0) return 0.0;
  switch (s.kind) {
    case ModulusSpec::Kind::Linear:
      return s.slope * x;
    case ModulusSpec::Kind::Power:
      return s.c0 * std::pow(x, s.alpha);
    case ModulusSpec::Kind::RhoK:
      if (x <= s.eta) return rho_k_inner(x, s);
      return rho_k_inner(s.eta, s) + rho_k_slope_inner(s.eta, s) * (x - s.eta);
  }
  return 0.0;
}

double rho_slope(double x, const ModulusSpec& s) {
  if (!(x > 0.0)) throw DomainError("rho slope needs x > 0");
  switch (s.kind) {
    case ModulusSpec::Kind::Linear:
      return s.slope;
    case ModulusSpec::Kind::Power:
      return s.c0 * s.alpha * std::pow(x, s.alpha - 1.0);
    case ModulusSpec::Kind::RhoK:
      return rho_k_slope_inner(std::min(x, s.eta), s);
  }
  return 0.0;
}

double bihari_G(double x0, double x, const ModulusSpec& s) {
  if (!(x0 > 0.0) || !(x > 0.0)) throw DomainError("G needs positive arguments");
  switch (s.kind) {
    case ModulusSpec::Kind::Linear:
      if (s.slope == 0.0) return x == x0 ? 0.0 : std::copysign(INFINITY, x - x0);
      return std::log(x / x0) / s.slope;
    case ModulusSpec::Kind::Power:
      if (s.alpha == 1.0) return std::log(x / x0) / s.c0;
      return (std::pow(x, 1.0 - s.alpha) - std::pow(x0, 1.0 - s.alpha)) /
             (s.c0 * (1.0 - s.alpha));
    case ModulusSpec::Kind::RhoK:
      return rho_k_G(x0, x, s);
  }
  return 0.0;
}

double bihari_value(double g0, double Lambda, const ModulusSpec& s) {
  if (g0 < 0.0) throw DomainError("Bihari bound needs g0 >= 0");
  if (Lambda < 0.0) throw DomainError("Bihari bound needs a nonnegative weight integral");
  switch (s.kind) {
    case ModulusSpec::Kind::Linear:
      return g0 * std::exp(s.slope * Lambda);
    case ModulusSpec::Kind::Power: {
      if (s.alpha == 1.0) return g0 * std::exp(s.c0 * Lambda);
      const double e = 1.0 - s.alpha;
      return std::pow(std::pow(g0, e) + s.c0 * e * Lambda, 1.0 / e);
    }
    case ModulusSpec::Kind::RhoK:
      break;
  }
  if (g0 == 0.0 || Lambda == 0.0) return g0;

  // Solve G(g0, x) = Λ for u = log x.
  const double u0 = std::log(g0);
  auto f = [&](double u) { return rho_k_G(g0, std::exp(u), s) - Lambda; };
  double hi = u0 + 1.0;
  while (f(hi) < 0.0) {
    hi = u0 + 2.0 * (hi - u0);
    if (hi > 690.0) return std::numeric_limits<double>::infinity();
  }
  boost::math::tools::eps_tolerance<double> tol(48);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, u0, hi, f(u0), f(hi), tol, iters);
  return std::exp(0.5 * (r.first + r.second));
}

BihariBound bihari_bound(double g0, const std::vector<double>& times,
                         const std::vector<double>& lambda, const ModulusSpec& spec) {
  spec.validate();
  if (times.size() != lambda.size() || times.empty())
    throw ConfigError("Bihari bound needs matching, non-empty grids");
  if (spec.kind == ModulusSpec::Kind::RhoK && !(g0 > 0.0) && g0 != 0.0)
    throw DomainError("Bihari bound needs g0 >= 0");
  BihariBound b;
  b.g0 = g0;
  b.spec = spec;
  b.times = times;
  b.lambda = lambda;
  b.Lambda.assign(times.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (lambda[k] < 0.0 || lambda[k - 1] < 0.0) throw DomainError("lambda must be >= 0");
    b.Lambda[k] = b.Lambda[k - 1] + 0.5 * (times[k] - times[k - 1]) * (lambda[k] + lambda[k - 1]);
  }
  b.bound.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (b.blowup_time) {
      b.bound[k] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double v = bihari_value(g0, b.Lambda[k], spec);
    if (std::isinf(v)) {
      b.blowup_time = times[k];
      b.bound[k] = std::numeric_limits<double>::quiet_NaN();
    } else {
      b.bound[k] = v;
    }
  }
  return b;
}

ZeroLimitReport zero_limit_check(const std::vector<double>& times,
                                 const std::vector<double>& lambda, const ModulusSpec& spec,
                                 double threshold) {
  ZeroLimitReport r;
  r.threshold = threshold;
  for (int e = 2; e <= 12; e += 2) {
    const double g0 = std::pow(10.0, -e);
    const BihariBound b = bihari_bound(g0, times, lambda, spec);
    r.g0.push_back(g0);
    r.final_bound.push_back(b.blowup_time ? std::numeric_limits<double>::infinity()
                                          : b.bound.back());
  }
  r.decreasing = true;
  for (std::size_t i = 1; i < r.final_bound.size(); ++i)
    if (!(r.final_bound[i] < r.final_bound[i - 1])) r.decreasing = false;
  r.vanishes = r.final_bound.back() < threshold;
  return r;
}

std::vector<std::vector<double>> bihari_iterates(double g0, const std::vector<double>& times,
                                                 const std::vector<double>& lambda, double c0,
                                                 const ModulusSpec& spec, std::size_t count) {
  if (times.size() != lambda.size() || times.empty())
    throw ConfigError("Bihari iterates need matching, non-empty grids");
  std::vector<std::vector<double>> out;
  if (count == 0) return out;
  out.emplace_back(times.size(), g0);
  for (std::size_t n = 1; n < count; ++n) {
    const std::vector<double>& prev = out.back();
    std::vector<double> next(times.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
      acc += (times[k] - times[k - 1]) * lambda[k - 1] * rho_eval(prev[k - 1], spec);
      next[k] = c0 * acc;
    }
    out.push_back(std::move(next));
  }
  return out;
}

double k_norm(const std::vector<SolutionPath>& paths, int which, const Profile& lambda,
              double theta) {
  if (which != 1 && which != 2) throw ConfigError("k_norm index must be 1 or 2");
  if (paths.empty()) return 0.0;
  double q = 2.0;
  double mean = 0.0;
  for (const SolutionPath& p : paths) {
    q = which == 1 ? p.q1 : p.q2;
    const std::vector<double>& vals = which == 1 ? p.x1_norm_q : p.x2_norm_q;
    const double stop = theta < 0.0 ? p.times.back() : theta;
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < p.times.size() && p.times[k] < stop; ++k) {
      const double dt = std::min(p.times[k + 1], stop) - p.times[k];
      sum += dt * lambda(p.context(k)) * vals[k];
    }
    mean += sum;
  }
  mean /= static_cast<double>(paths.size());
  return std::pow(mean, 1.0 / q);
}

double k_norm(const SolutionPath& path, int which, const Profile& lambda, double theta) {
  return k_norm(std::vector<SolutionPath>{path}, which, lambda, theta);
}

namespace {

void require_same_grid(const SolutionPath& a, const SolutionPath& b) {
  if (a.times.size() != b.times.size())
    throw DimensionError("paths are on different time grids");
  for (std::size_t k = 0; k < a.times.size(); ++k)
    if (std::abs(a.times[k] - b.times[k]) > 1e-12 * (1.0 + std::abs(a.times[k])))
      throw DimensionError("paths are on different time grids");
}

}  // namespace

double sup_h_distance(const SolutionPath& a, const SolutionPath& b) {
  require_same_grid(a, b);
  double sup = 0.0;
  for (std::size_t k = 0; k < a.coords.size(); ++k) {
    const Eigen::VectorXd& x = a.coords[k];
    const Eigen::VectorXd& y = b.coords[k];
    const Eigen::Index m = std::min(x.size(), y.size());
    double d2 = (x.head(m) - y.head(m)).squaredNorm();
    d2 += x.tail(x.size() - m).squaredNorm() + y.tail(y.size() - m).squaredNorm();
    sup = std::max(sup, std::sqrt(d2));
  }
  return sup;
}

double projected_distance(const SolutionPath& coarse, const SolutionPath& fine) {
  require_same_grid(coarse, fine);
  if (coarse.n > fine.n) throw DimensionError("projection target has more modes than source");
  const auto n = static_cast<Eigen::Index>(coarse.n);
  double sup = 0.0;
  for (std::size_t k = 0; k < coarse.coords.size(); ++k)
    sup = std::max(sup, (coarse.coords[k] - fine.coords[k].head(n)).norm());
  return sup;
}

double convergence_order(const std::vector<double>& errors, const std::vector<double>& steps) {
  if (errors.size() != steps.size()) throw DimensionError("errors and steps differ in length");
  if (errors.size() < 3) throw ConfigError("convergence order needs at least 3 points");
  const auto n = static_cast<double>(errors.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0.0) || !(steps[i] > 0.0))
      throw DomainError("convergence order needs positive errors and steps");
    const double x = std::log(steps[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw DomainError("convergence order needs distinct steps");
  return (n * sxy - sx * sy) / den;
}

void write_bound_csv(const BihariBound& b, std::ostream& os) {
  CsvWriter csv(os);
  csv.header({"t", "lambda", "Lambda", "bound"});
  for (std::size_t k = 0; k < b.times.size(); ++k)
    csv.row({b.times[k], b.lambda[k], b.Lambda[k], b.bound[k]});
}

}  // namespace msee
