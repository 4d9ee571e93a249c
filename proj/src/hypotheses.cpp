#include "msee/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "msee/errors.hpp"
#include "msee/noise.hpp"

namespace msee {

namespace {

constexpr std::uint64_t kSamplerChannel = 0x53414d50;  // "SAMP"

Eigen::VectorXd random_state(std::mt19937_64& rng, std::size_t n, double amplitude) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = normal(rng);
  const double m = x.cwiseAbs().maxCoeff();
  return m > 0.0 ? Eigen::VectorXd(amplitude * x / m) : x;
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

  void flag(std::size_t i, double t, double excess, const std::string& detail) {
    report_.violations.push_back({i, t, excess, 0.0, detail});
    report_.max_excess = std::max(report_.max_excess, excess);
  }

  ViolationReport take() { return std::move(report_); }

 private:
  ViolationReport report_;
};

double pow_norm(double norm, double q) { return std::pow(norm, q); }

}  // namespace

StateSampler::StateSampler(std::size_t n_grid, std::uint64_t seed, std::size_t count, double T,
                           double amp_lo, double amp_hi)
    : n_grid_(n_grid), seed_(seed), count_(count), T_(T), amp_lo_(amp_lo), amp_hi_(amp_hi) {
  if (n_grid < 1) throw ConfigError("sampler needs a non-empty grid");
  if (!(T > 0.0)) throw ConfigError("sampler horizon must be positive");
  if (!(amp_lo > 0.0) || !(amp_hi >= amp_lo)) throw ConfigError("invalid amplitude range");
}

StateSample StateSampler::operator()(std::size_t i) const {
  auto rng = make_stream(seed_, i, kSamplerChannel, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double log_lo = std::log(amp_lo_);
  const double log_hi = std::log(amp_hi_);
  auto amplitude = [&] { return std::exp(log_lo + (log_hi - log_lo) * unif(rng)); };

  StateSample s;
  s.ctx.t = T_ * (1.0 - unif(rng));
  s.ctx.w = std::sqrt(s.ctx.t) * normal(rng);
  if (i % 50 == 1) s.ctx.w = 0.0;
  s.u = random_state(rng, n_grid_, amplitude());
  if (i == 0) s.u.setZero();
  if (unif(rng) < 0.25) {
    const double a = 1e-3 * std::max(s.u.cwiseAbs().maxCoeff(), amp_lo_);
    s.v = s.u + random_state(rng, n_grid_, a);
  } else {
    s.v = random_state(rng, n_grid_, amplitude());
  }
  s.z = random_state(rng, n_grid_, amplitude());
  return s;
}

ViolationReport check_monotonicity(const DriftOperator& drift, const DiffusionOperator& diff,
                                   const HypothesisBundle& bundle,
                                   const StateSampler& sampler) {
  const DiscreteTriple& tr = drift.triple();
  Recorder rec("H2 monotonicity", sampler.size());
  for (std::size_t i = 0; i < sampler.size(); ++i) {
    const StateSample s = sampler(i);
    const Eigen::VectorXd d = s.u - s.v;
    const double pair = 2.0 * tr.pairing(d, drift.apply(s.ctx, s.u) - drift.apply(s.ctx, s.v));
    const double noise = hs_norm2(diff.apply(s.ctx, s.u) - diff.apply(s.ctx, s.v), tr);
    const double damp = bundle.lambda0(s.ctx) * tr.inner(d, d);
    const double excess = pair + noise - damp;
    rec.record(i, s.ctx.t, excess, std::abs(pair) + noise + std::abs(damp), "");
  }
  return rec.take();
}

ViolationReport check_coercivity(const DriftOperator& drift, const DiffusionOperator& diff,
                                 const HypothesisBundle& bundle, const StateSampler& sampler) {
  const DiscreteTriple& tr = drift.triple();
  Recorder rec("H3 coercivity", sampler.size());
  for (std::size_t i = 0; i < sampler.size(); ++i) {
    const StateSample s = sampler(i);
    const double pair = 2.0 * tr.pairing(s.u, drift.apply(s.ctx, s.u));
    const double noise = hs_norm2(diff.apply(s.ctx, s.u), tr);
    const double c1 = bundle.lambda1(s.ctx) * pow_norm(tr.norm_x(s.u, Space::X1), bundle.q1);
    const double c2 = bundle.lambda2(s.ctx) * pow_norm(tr.norm_x(s.u, Space::X2), bundle.q2);
    const double growth = bundle.lambda3(s.ctx) * tr.inner(s.u, s.u);
    const double xi = bundle.xi(s.ctx);
    const double excess = pair + noise + c1 + c2 - growth - xi;
    rec.record(i, s.ctx.t, excess,
               std::abs(pair) + noise + std::abs(c1) + std::abs(c2) + std::abs(growth) +
                   std::abs(xi),
               "");
  }
  return rec.take();
}

ViolationReport check_boundedness(const DriftOperator& drift, const HypothesisBundle& bundle,
                                  const StateSampler& sampler) {
  const DiscreteTriple& tr = drift.triple();
  Recorder rec("H4 boundedness", sampler.size());
  for (std::size_t i = 0; i < sampler.size(); ++i) {
    const StateSample s = sampler(i);
    const DriftParts parts = drift.parts(s.ctx, s.u);
    struct Piece {
      const Eigen::VectorXd* a;
      Space space;
      const Profile* lambda;
      const Profile* eta;
      double q;
      double c;
      const char* name;
    };
    const Piece pieces[] = {
        {&parts.a1, Space::X1, &bundle.lambda1, &bundle.eta1, bundle.q1, bundle.c_A1, "A1"},
        {&parts.a2, Space::X2, &bundle.lambda2, &bundle.eta2, bundle.q2, bundle.c_A2, "A2"}};
    for (const Piece& p : pieces) {
      const double lhs = tr.dual_norm(*p.a, p.space);
      const double lam = (*p.lambda)(s.ctx);
      const double rhs = (*p.eta)(s.ctx) * std::pow(lam, 1.0 / p.q) +
                         p.c * lam * std::pow(tr.norm_x(s.u, p.space), p.q - 1.0);
      rec.record(i, s.ctx.t, lhs - rhs, lhs + std::abs(rhs), p.name);
    }
  }
  return rec.take();
}

ViolationReport check_hemicontinuity(const DriftOperator& drift, const StateSampler& sampler) {
  const DiscreteTriple& tr = drift.triple();
  Recorder rec("H1 hemicontinuity", sampler.size());
  constexpr int kCoarse = 32;
  constexpr int kLevels = 30;
  for (std::size_t i = 0; i < sampler.size(); ++i) {
    const StateSample s = sampler(i);
    auto f = [&](double eps) {
      return tr.pairing(s.u, drift.apply(s.ctx, s.v + eps * s.z));
    };
    std::vector<double> vals(kCoarse + 1);
    double peak = 0.0;
    for (int k = 0; k <= kCoarse; ++k) {
      vals[static_cast<std::size_t>(k)] = f(static_cast<double>(k) / kCoarse);
      peak = std::max(peak, std::abs(vals[static_cast<std::size_t>(k)]));
    }
    double coarse_jump = 0.0;
    double final_jump = 0.0;
    double where = 0.0;
    for (int k = 0; k < kCoarse; ++k) {
      double a = static_cast<double>(k) / kCoarse;
      double b = static_cast<double>(k + 1) / kCoarse;
      double fa = vals[static_cast<std::size_t>(k)];
      double fb = vals[static_cast<std::size_t>(k + 1)];
      coarse_jump = std::max(coarse_jump, std::abs(fb - fa));
      for (int level = 0; level < kLevels; ++level) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (std::abs(fm - fa) >= std::abs(fb - fm)) {
          b = m;
          fb = fm;
        } else {
          a = m;
          fa = fm;
        }
      }
      if (std::abs(fb - fa) > final_jump) {
        final_jump = std::abs(fb - fa);
        where = a;
      }
    }
    const double scale = peak + coarse_jump;
    std::ostringstream os;
    os << "jump near eps=" << where;
    rec.record(i, s.ctx.t, final_jump - 1e-6 * scale, scale, os.str());
  }
  return rec.take();
}

ViolationReport check_diffusion_bounds(const DiffusionOperator& diff,
                                       const HypothesisBundle& bundle,
                                       const StateSampler& sampler) {
  const DiscreteTriple& tr = diff.triple();
  Recorder rec("diffusion Lipschitz/growth", sampler.size());
  for (std::size_t i = 0; i < sampler.size(); ++i) {
    const StateSample s = sampler(i);
    const Eigen::VectorXd d = s.u - s.v;
    const double lip = hs_norm2(diff.apply(s.ctx, s.u) - diff.apply(s.ctx, s.v), tr);
    const double lip_rhs = bundle.lambda0(s.ctx) * tr.inner(d, d);
    rec.record(i, s.ctx.t, lip - lip_rhs, lip + std::abs(lip_rhs), "Lipschitz");
    const double grow = hs_norm2(diff.apply(s.ctx, s.u), tr);
    const double grow_rhs = bundle.lambda3(s.ctx) * tr.inner(s.u, s.u) + bundle.xi(s.ctx);
    rec.record(i, s.ctx.t, grow - grow_rhs, grow + std::abs(grow_rhs), "growth");
  }
  return rec.take();
}

ViolationReport check_bundle(const HypothesisBundle& bundle, const StateSampler& sampler) {
  bundle.validate();
  Recorder rec("bundle", sampler.size());
  for (std::size_t i = 0; i < sampler.size(); ++i) {
    const StateSample s = sampler(i);
    const double l0 = bundle.lambda0(s.ctx);
    const double lmin = std::min(bundle.lambda1(s.ctx), bundle.lambda2(s.ctx));
    const double bound = bundle.c1 * lmin;
    if (l0 < 0.0) rec.flag(i, s.ctx.t, -l0, "lambda0 < 0");
    if (l0 >= bound && !(l0 == 0.0 && bound == 0.0))
      rec.flag(i, s.ctx.t, l0 - bound, "lambda0 >= c1*min(lambda1, lambda2)");
  }

  // Integrability along 16 sampled paths (or exactly, for deterministic profiles).
  const Profile* profiles[] = {&bundle.lambda0, &bundle.lambda1, &bundle.lambda2,
                               &bundle.lambda3, &bundle.xi};
  const double T = sampler.horizon();
  constexpr std::size_t kPaths = 16;
  constexpr std::size_t kSteps = 256;
  for (std::size_t k = 0; k < std::size(profiles); ++k) {
    const Profile& p = *profiles[k];
    double value = 0.0;
    if (p.deterministic()) {
      value = p.integral(0.0, T);
    } else {
      for (std::size_t r = 0; r < kPaths; ++r) {
        const NoisePath path = sample_path(0x494e54 + r, T, kSteps, 1, r);
        double sum = 0.0;
        for (std::size_t j = 0; j < kSteps; ++j) {
          const NoiseContext a{path.times[j], path.scalar_path[j], j};
          const NoiseContext b{path.times[j + 1], path.scalar_path[j + 1], j + 1};
          sum += 0.5 * path.dt() * (p(a) + p(b));
        }
        value = std::max(value, sum);
      }
    }
    if (!std::isfinite(value))
      rec.flag(sampler.size() + k, T, 1.0, "non-integrable profile " + p.description());
  }
  return rec.take();
}

std::string format_report(const ViolationReport& r) {
  std::ostringstream os;
  os << r.hypothesis << ": " << r.violations.size() << " violation(s) in " << r.samples
     << " samples, max relative excess " << r.max_excess;
  if (!r.violations.empty()) {
    const Violation& v = r.violations.front();
    os << "; first at sample " << v.sample << " (t=" << v.t << ", excess=" << v.excess
       << (v.detail.empty() ? "" : ", " + v.detail) << ")";
  }
  return os.str();
}

}  // namespace msee
