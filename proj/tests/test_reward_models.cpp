#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "gmab/io.hpp"
#include "gmab/presets.hpp"
#include "gmab/reward_models.hpp"

using namespace gmab;

namespace {

const ParameterSpace kUnit{0.0, 1.0};

/// Test-only inversion oracle: plain bisection on a monotone callable,
/// independent of the library's inversion path.
double oracle_bisect(const std::function<double(double)>& f, double y,
                     double lo, double hi) {
  const bool inc = f(hi) > f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < y) == inc)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<RewardModel> invertible_family_samples() {
  const NoiseSpec det{NoiseKind::Deterministic, 0.0};
  return {
      RewardModel{LinearFn{0.8, 0.0}, det},
      RewardModel{LinearFn{-0.6, 0.9}, det},
      RewardModel{PiecewiseLinearFn{{0.0, 0.3, 1.0}, {0.1, 0.5, 0.9}}, det},
      RewardModel{PowerFn{1.0, 2.0}, det},
      RewardModel{PowerFn{0.9, 0.7}, det},
      RewardModel{ExponentialFn{0.15, 1.5}, det},
      RewardModel{ExponentialFn{0.8, -1.2}, det},
      RewardModel{LogisticFn{4.0, 0.5}, det},
      RewardModel{OneMinusSqrtFn{}, det},
  };
}

}  // namespace

TEST_CASE("eval_mean closed forms") {
  const NoiseSpec det{NoiseKind::Deterministic, 0.0};
  CHECK(eval_mean(RewardModel{OneMinusSqrtFn{}, det}, 0.25, kUnit) ==
        Catch::Approx(0.5).epsilon(1e-14));
  CHECK(eval_mean(RewardModel{PowerFn{1.0, 2.0}, det}, 0.9, kUnit) ==
        Catch::Approx(0.81).epsilon(1e-14));
  // Logistic evaluated at its midpoint is exactly 1/2 regardless of slope.
  for (double steepness : {0.5, 3.0, 11.0})
    CHECK(eval_mean(RewardModel{LogisticFn{steepness, 0.4}, det}, 0.4, kUnit) ==
          Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("eval_mean rejects theta outside the space") {
  const RewardModel m{LinearFn{1.0, 0.0}, NoiseSpec{}};
  CHECK_THROWS_AS(eval_mean(m, -0.01, kUnit), std::domain_error);
  CHECK_THROWS_AS(eval_mean(m, 1.01, kUnit), std::domain_error);
}

TEST_CASE("invert_mean closed forms") {
  const NoiseSpec det{NoiseKind::Deterministic, 0.0};
  CHECK(invert_mean(RewardModel{LinearFn{0.8, 0.0}, det}, 0.4, kUnit) ==
        Catch::Approx(0.5).epsilon(1e-12));
  CHECK(invert_mean(RewardModel{PowerFn{1.0, 2.0}, det}, 0.25, kUnit) ==
        Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("invert_mean matches the bisection oracle for 1 - sqrt") {
  const RewardModel m{OneMinusSqrtFn{}, NoiseSpec{}};
  const double via_oracle = oracle_bisect(
      [](double th) { return 1.0 - std::sqrt(th); }, 0.5, 0.0, 1.0);
  const double analytic = (1.0 - 0.5) * (1.0 - 0.5);
  REQUIRE(via_oracle == Catch::Approx(analytic).margin(1e-10));
  CHECK(invert_mean(m, 0.5, kUnit) == Catch::Approx(0.25).margin(1e-9));
}

TEST_CASE("invert_mean rejects the step family") {
  const auto inst = make_counterexample(2, {0.3, 0.7});
  CHECK_THROWS_AS(invert_mean(inst.arms[0], 0.3, kUnit), std::runtime_error);
}

TEST_CASE("inversion round-trip on 1000 grid values per family") {
  for (const RewardModel& m : invertible_family_samples()) {
    for (int i = 0; i <= 1000; ++i) {
      const double th = static_cast<double>(i) / 1000.0;
      const double back = invert_mean(m, eval_mean(m, th, kUnit), kUnit);
      REQUIRE_THAT(back, Catch::Matchers::WithinAbs(th, 1e-8));
    }
  }
}

TEST_CASE("invert_mean clamps out-of-image targets into the space") {
  for (const RewardModel& m : invertible_family_samples()) {
    for (double y : {-5.0, -0.1, 0.0, 0.5, 1.0, 1.1, 5.0}) {
      const double th = invert_mean(m, y, kUnit);
      REQUIRE(th >= kUnit.lo);
      REQUIRE(th <= kUnit.hi);
    }
  }
}

TEST_CASE("verify_holder accepts exact Lipschitz constants") {
  const RewardModel m{LinearFn{0.8, 0.0}, NoiseSpec{}};
  const auto rep = verify_holder(m, {1.25, 1.0, 0.8, 1.0}, 200, kUnit);
  CHECK(rep.pass);
}

TEST_CASE("verify_holder forward check for the square arm") {
  const RewardModel m{PowerFn{1.0, 2.0}, NoiseSpec{}};
  // Oracle: max grid secant slope of theta^2 on [0,1] is below 2.
  double max_slope = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double a = i / 200.0, b = (i + 1) / 200.0;
    max_slope = std::max(max_slope, std::abs(b * b - a * a) / (b - a));
  }
  REQUIRE(max_slope <= 2.0);
  CHECK(verify_holder(m, {1.0, 0.5, 2.0, 1.0}, 200, kUnit).pass);
}

TEST_CASE("verify_holder inverse check: sqrt is 1/2-Hoelder") {
  // Oracle: |sqrt(y)-sqrt(y')| <= |y-y'|^(1/2) on a dense pair sample.
  for (int i = 0; i <= 50; ++i)
    for (int j = i + 1; j <= 50; ++j) {
      const double y1 = i / 50.0, y2 = j / 50.0;
      REQUIRE(std::abs(std::sqrt(y1) - std::sqrt(y2)) <=
              std::sqrt(std::abs(y1 - y2)) + 1e-12);
    }
  const RewardModel m{PowerFn{1.0, 2.0}, NoiseSpec{}};
  CHECK(verify_holder(m, {1.0, 0.5, 2.0, 1.0}, 500, kUnit).pass);
}

TEST_CASE("verify_holder reports the first violating pair") {
  const RewardModel m{PowerFn{1.0, 2.0}, NoiseSpec{}};
  const auto rep = verify_holder(m, {1.0, 0.5, 1.5, 1.0}, 200, kUnit);
  REQUIRE_FALSE(rep.pass);
  REQUIRE(rep.violation.has_value());
  CHECK_FALSE(rep.violation->inverse_side);
  CHECK(rep.violation->lhs > rep.violation->rhs);
}

TEST_CASE("verify_holder is monotone in the constants") {
  Rng rng(99);
  const auto models = invertible_family_samples();
  for (int trial = 0; trial < 40; ++trial) {
    const RewardModel& m = models[rng.below(models.size())];
    HolderCertificate cert{0.5 + 3.0 * rng.uniform01(),
                           0.2 + 0.8 * rng.uniform01(),
                           0.5 + 3.0 * rng.uniform01(),
                           0.2 + 0.8 * rng.uniform01()};
    const bool base = verify_holder(m, cert, 120, kUnit).pass;
    HolderCertificate inflated = cert;
    inflated.d1 *= 2.0;
    inflated.d2 *= 2.0;
    if (base) CHECK(verify_holder(m, inflated, 120, kUnit).pass);
  }
}

TEST_CASE("sample_reward deterministic noise is exact") {
  Rng rng(7);
  const RewardModel m{LogisticFn{4.0, 0.5}, NoiseSpec{NoiseKind::Deterministic, 0.0}};
  for (double th : {0.0, 0.2, 0.77, 1.0})
    CHECK(sample_reward(m, th, rng, kUnit) == eval_mean(m, th, kUnit));
}

TEST_CASE("uniform band clamps its half-width near the boundary") {
  // mu = 0.05 forces the effective half-width down to 0.05.
  Rng rng(11);
  const RewardModel m{LinearFn{1.0, 0.0},
                      NoiseSpec{NoiseKind::UniformBand, 0.1}};
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = sample_reward(m, 0.05, rng, kUnit);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 0.1 + 1e-12);
  }
  CHECK(lo < 0.005);
  CHECK(hi > 0.095);
}

TEST_CASE("bernoulli large-sample mean") {
  Rng rng(5);
  const RewardModel m{LinearFn{1.0, 0.0}, NoiseSpec{NoiseKind::Bernoulli, 0.0}};
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += sample_reward(m, 0.3, rng, kUnit);
  CHECK(sum / n == Catch::Approx(0.3).margin(0.002));
}

TEST_CASE("noise is mean-preserving across families and noise kinds") {
  const int n = 100000;
  int stream = 0;
  for (RewardModel m : invertible_family_samples()) {
    for (NoiseKind kind : {NoiseKind::Bernoulli, NoiseKind::UniformBand,
                           NoiseKind::Deterministic}) {
      m.noise = NoiseSpec{kind, 0.2};
      for (double th : {0.1, 0.5, 0.9}) {
        Rng rng(1000 + stream++);
        const double mu = eval_mean(m, th, kUnit);
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
          const double x = sample_reward(m, th, rng, kUnit);
          sum += x;
          sum2 += x * x;
        }
        const double mean = sum / n;
        const double var = std::max(1e-12, (sum2 - sum * sum / n) / (n - 1));
        const double se = std::sqrt(var / n);
        REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(mu, 4.0 * se + 1e-9));
      }
    }
  }
}

TEST_CASE("make_instance validates the three-arm demo") {
  const auto inst = three_arm_demo_instance();
  CHECK(inst.num_arms() == 3);
  CHECK(inst.invertible);
  CHECK(inst.mean(0, 0.25) == Catch::Approx(0.5));
}

TEST_CASE("make_instance accepts a single arm") {
  const auto inst = make_instance({RewardModel{LinearFn{1.0, 0.0}, NoiseSpec{}}},
                                  kUnit, HolderCertificate{1.0, 1.0, 1.0, 1.0});
  CHECK(inst.num_arms() == 1);
}

TEST_CASE("make_instance rejects step arms and names the arm") {
  std::vector<RewardModel> arms{
      RewardModel{LinearFn{1.0, 0.0}, NoiseSpec{}},
      RewardModel{StepFn{{0.0, 0.5, 1.0}, {0.2, 0.8}}, NoiseSpec{}},
  };
  try {
    make_instance(std::move(arms), kUnit, HolderCertificate{});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "arms[1]");
  }
}

TEST_CASE("make_instance rejects non-monotone and out-of-range means") {
  CHECK_THROWS_AS(make_instance({RewardModel{LinearFn{0.0, 0.5}, NoiseSpec{}}},
                                kUnit, HolderCertificate{}),
                  ConfigError);
  CHECK_THROWS_AS(make_instance({RewardModel{LinearFn{2.0, 0.0}, NoiseSpec{}}},
                                kUnit, HolderCertificate{}),
                  ConfigError);
}

TEST_CASE("make_instance rejects a certificate the arms violate") {
  // theta^2 has forward slope up to 2; D2=1.5 with gamma2=1 cannot hold.
  CHECK_THROWS_AS(make_instance({RewardModel{PowerFn{1.0, 2.0}, NoiseSpec{}}},
                                kUnit, HolderCertificate{1.0, 0.5, 1.5, 1.0}),
                  ConfigError);
}

TEST_CASE("counter-example layout for K=2") {
  const auto inst = make_counterexample(2, {0.3, 0.7});
  REQUIRE(inst.num_arms() == 2);
  CHECK_FALSE(inst.invertible);
  CHECK(inst.mean(0, 0.25) == 0.3);
  CHECK(inst.mean(1, 0.25) == 0.7);
  CHECK(inst.mean(0, 0.75) == 0.7);
  CHECK(inst.mean(1, 0.75) == 0.3);
  // Interval convention: [0, 0.5) then [0.5, 1].
  CHECK(inst.mean(0, 0.5) == 0.7);
  CHECK(inst.mean(0, 1.0) == 0.7);
}

TEST_CASE("counter-example has K! intervals") {
  const auto inst = make_counterexample(3, {0.2, 0.5, 0.8});
  const auto& fn = std::get<StepFn>(inst.arms[0].fn);
  CHECK(fn.values.size() == 6);
  CHECK(fn.edges.size() == 7);
  CHECK(fn.edges[1] == Catch::Approx(1.0 / 6.0));
}

TEST_CASE("counter-example rejects duplicate values") {
  CHECK_THROWS_AS(make_counterexample(2, {0.5, 0.5}), ConfigError);
  CHECK_THROWS_AS(make_counterexample(1, {0.5}), ConfigError);
}

TEST_CASE("counter-example arms take every value and are not injective") {
  const auto inst = make_counterexample(3, {0.2, 0.5, 0.8});
  for (const RewardModel& arm : inst.arms) {
    const auto& fn = std::get<StepFn>(arm.fn);
    for (double v : {0.2, 0.5, 0.8})
      CHECK(std::count(fn.values.begin(), fn.values.end(), v) >= 1);
    // Repeated values mean the arm's mean function is not injective.
    for (double v : {0.2, 0.5, 0.8})
      CHECK(std::count(fn.values.begin(), fn.values.end(), v) >= 2);
  }
}

TEST_CASE("verify_holder needs at least two grid points") {
  const RewardModel m{LinearFn{1.0, 0.0}, NoiseSpec{}};
  CHECK_THROWS_AS(verify_holder(m, {1, 1, 1, 1}, 1, kUnit),
                  std::invalid_argument);
}

TEST_CASE("counter-example construction on a shifted space") {
  const ParameterSpace sp{0.5, 2.5};
  const auto inst = make_counterexample(2, {0.3, 0.7}, sp);
  CHECK(inst.space.lo == 0.5);
  CHECK(inst.mean(0, 0.6) == 0.3);   // first half [0.5, 1.5)
  CHECK(inst.mean(0, 2.0) == 0.7);   // second half [1.5, 2.5]
  CHECK(generalized_invert(inst.arms[0], 0.7, sp) == 1.5);
}

TEST_CASE("piecewise-linear knots must span the space") {
  // Knots stopping at 0.6 leave the mean constant beyond, which fails the
  // strict-monotonicity check.
  CHECK_THROWS_AS(
      make_instance({RewardModel{PiecewiseLinearFn{{0.0, 0.6}, {0.1, 0.9}},
                                 NoiseSpec{}}},
                    kUnit, HolderCertificate{2.0, 1.0, 2.0, 1.0}),
      ConfigError);
}

TEST_CASE("generalized inverse returns the infimum of the preimage") {
  const auto inst = make_counterexample(2, {0.3, 0.7});
  // Value 0.7: arm 0 carries it on [0.5, 1], arm 1 on [0, 0.5).
  CHECK(generalized_invert(inst.arms[0], 0.7, kUnit) == 0.5);
  CHECK(generalized_invert(inst.arms[1], 0.7, kUnit) == 0.0);
  // A y between the two achieved values snaps to the nearest one.
  CHECK(generalized_invert(inst.arms[0], 0.68, kUnit) == 0.5);
  CHECK(generalized_invert(inst.arms[0], 0.31, kUnit) == 0.0);
}

TEST_CASE("instance JSON description round-trips losslessly") {
  auto base = three_arm_demo_instance();
  base.arms.push_back(RewardModel{
      PiecewiseLinearFn{{0.0, 0.4, 1.0}, {0.05, 0.31, 0.93}},
      NoiseSpec{NoiseKind::UniformBand, 0.07}});
  // The extended instance needs a certificate covering the extra arm; reuse
  // construction to keep the fixture honest.
  auto inst = make_instance(base.arms, base.space,
                            HolderCertificate{4.0, 0.5, 2.0, 0.5});
  const json j = instance_to_json(inst);
  const BanditInstance back = instance_from_json(j);
  REQUIRE(instance_to_json(back) == j);

  const auto ce = make_counterexample(3, {0.25, 0.5, 0.75});
  const json jc = instance_to_json(ce);
  const BanditInstance ce_back = instance_from_json(jc);
  REQUIRE(instance_to_json(ce_back) == jc);
  CHECK_FALSE(ce_back.invertible);
}
