#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "msee/hypotheses.hpp"

using namespace msee;

namespace {

// porous medium with c ≡ 1 and constant forcing
BuiltinProblem pm_constant(double p, std::size_t n = 16) {
  BuiltinProblem prob = make_porous_medium_problem(n, p);
  prob.drift = make_porous_medium_drift(prob.drift->triple_ptr(), p);
  prob.bundle.lambda1 = Profile::constant(1.0);
  prob.bundle.lambda2 = Profile::constant(1.0);
  return prob;
}

BuiltinProblem with_phi(const BuiltinProblem& base, Nonlinearity phi) {
  BuiltinProblem prob = base;
  prob.drift = std::make_shared<PorousMediumDrift>(base.drift->triple_ptr(), std::move(phi),
                                                   Profile::constant(1.0));
  return prob;
}

}  // namespace

TEST_CASE("sampler is deterministic and covers degenerate cases") {
  const StateSampler s(10, 3, 100);
  const StateSample a = s(17), b = s(17);
  CHECK(a.u == b.u);
  CHECK(a.ctx.t == b.ctx.t);
  CHECK(s(0).u.norm() == 0.0);
  CHECK(s(1).ctx.w == 0.0);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(s(i).ctx.t > 0.0);
    CHECK(s(i).ctx.t <= 1.0);
  }
}

TEST_CASE("monotonicity") {
  const StateSampler sampler(16, 1, 500);
  const auto pm = pm_constant(3.0);
  CHECK(check_monotonicity(*pm.drift, *pm.diffusion, pm.bundle, sampler).passed());
  const auto bad = with_phi(pm, Nonlinearity::sine());
  const ViolationReport r = check_monotonicity(*bad.drift, *bad.diffusion, bad.bundle, sampler);
  CHECK_FALSE(r.passed());
  CHECK(r.samples == 500);

  // oracle for the sign check: r ↦ |r| r is nondecreasing on a dense grid
  bool mono = true;
  for (int i = -1000; i < 1000; ++i) {
    const double a = i * 0.01, b = a + 0.01;
    mono = mono && (std::abs(b) * b - std::abs(a) * a) >= 0.0;
  }
  CHECK(mono);
}

TEST_CASE("coercivity") {
  const StateSampler sampler(16, 2, 500);
  const auto pm = pm_constant(3.0);
  CHECK(check_coercivity(*pm.drift, *pm.diffusion, pm.bundle, sampler).passed());
  auto low = pm;
  low.bundle.xi = Profile::constant(0.5 * hs_norm2(pm.diffusion->apply({}, Eigen::VectorXd::Zero(16)),
                                                   pm.drift->triple()));
  CHECK_FALSE(check_coercivity(*low.drift, *low.diffusion, low.bundle, sampler).passed());
  const auto builtin = make_porous_medium_problem(16, 3.0);
  CHECK(check_coercivity(*builtin.drift, *builtin.diffusion, builtin.bundle, sampler).passed());
}

TEST_CASE("boundedness") {
  const StateSampler sampler(16, 3, 500);
  const auto pm = pm_constant(3.0);
  CHECK(check_boundedness(*pm.drift, pm.bundle, sampler).passed());
  auto wrong = pm;
  wrong.bundle.q1 = 2.0;
  wrong.bundle.q2 = 2.0;
  CHECK_FALSE(check_boundedness(*wrong.drift, wrong.bundle, sampler).passed());
}

TEST_CASE("hemicontinuity") {
  const StateSampler sampler(16, 4, 200);
  auto t = std::make_shared<const DiscreteTriple>(Flavor::PorousMedium, 16);
  const LinearDrift heat(t, t->laplacian());
  CHECK(check_hemicontinuity(heat, sampler).passed());
  const auto pm = pm_constant(3.0);
  CHECK(check_hemicontinuity(*pm.drift, sampler).passed());
  const auto step = with_phi(pm, Nonlinearity::step());
  CHECK_FALSE(check_hemicontinuity(*step.drift, sampler).passed());
}

TEST_CASE("built-in problems pass all checks") {
  const StateSampler sampler(16, 5, 500);
  for (const auto& prob : {make_porous_medium_problem(16, 3.0), make_reaction_diffusion_problem(16, 3.0)}) {
    CHECK(check_monotonicity(*prob.drift, *prob.diffusion, prob.bundle, sampler).passed());
    CHECK(check_coercivity(*prob.drift, *prob.diffusion, prob.bundle, sampler).passed());
    CHECK(check_boundedness(*prob.drift, prob.bundle, sampler).passed());
    CHECK(check_hemicontinuity(*prob.drift, sampler).passed());
    CHECK(check_diffusion_bounds(*prob.diffusion, prob.bundle, sampler).passed());
    CHECK(check_bundle(prob.bundle, sampler).passed());
  }
}

TEST_CASE("bundle consistency is flagged") {
  const StateSampler sampler(16, 6, 100);
  auto prob = make_porous_medium_problem(16, 3.0);
  prob.bundle.lambda0 = Profile::constant(5.0);
  prob.bundle.lambda1 = Profile::constant(1.0);
  prob.bundle.lambda2 = Profile::constant(1.0);
  CHECK_FALSE(check_bundle(prob.bundle, sampler).passed());
  CHECK_FALSE(format_report(check_bundle(prob.bundle, sampler)).empty());
}
