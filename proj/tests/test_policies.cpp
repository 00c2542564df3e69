#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gmab/policies.hpp"
#include "gmab/presets.hpp"

using namespace gmab;

namespace {

GreedyState run_updates(const BanditInstance& inst,
                        const std::vector<std::pair<std::size_t, double>>& pulls) {
  GreedyState st(inst.num_arms());
  for (const auto& [arm, reward] : pulls) greedy_update(st, arm, reward, inst);
  return st;
}

}  // namespace

TEST_CASE("greedy first selection is uniformly random") {
  const auto inst = three_arm_demo_instance();
  GreedyState st(3);
  std::vector<int> counts(3, 0);
  for (int seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    const ArmChoice c = greedy_select(st, inst, rng);
    CHECK(c.reason == SelectionReason::RandomInit);
    counts[c.arm]++;
  }
  for (int k = 0; k < 3; ++k) CHECK(counts[k] > 50);
}

TEST_CASE("greedy argmax at a fixed estimate") {
  const auto inst = three_arm_demo_instance();
  GreedyState st(3);
  greedy_update(st, 2, 0.81, inst);  // deterministic-equivalent pull at 0.9
  REQUIRE(st.blended_estimate == Catch::Approx(0.9).margin(1e-9));
  // Means at 0.9 are 0.051317, 0.72, 0.81, so the square arm wins.
  CHECK(inst.mean(0, 0.9) == Catch::Approx(0.0513167019).margin(1e-9));
  CHECK(inst.mean(1, 0.9) == Catch::Approx(0.72).margin(1e-12));
  Rng rng(1);
  const ArmChoice c = greedy_select(st, inst, rng);
  CHECK(c.arm == 2);
  CHECK(c.reason == SelectionReason::GreedyArgmax);
  CHECK_FALSE(c.tie_broken);
}

TEST_CASE("greedy ties break to the lowest index and are flagged") {
  const auto inst =
      make_instance({RewardModel{LinearFn{1.0, 0.0}, NoiseSpec{}},
                     RewardModel{LinearFn{1.0, 0.0}, NoiseSpec{}}},
                    ParameterSpace{}, HolderCertificate{1, 1, 1, 1});
  GreedyState st(2);
  greedy_update(st, 0, 0.25, inst);
  Rng rng(3);
  const ArmChoice c = greedy_select(st, inst, rng);
  CHECK(c.arm == 0);
  CHECK(c.tie_broken);
}

TEST_CASE("greedy update examples on the three-arm demo") {
  const auto inst = three_arm_demo_instance();

  // Pull the 1 - sqrt arm with reward 0: its inverse at 0 is theta = 1.
  auto st = run_updates(inst, {{0, 0.0}});
  CHECK(st.sample_mean(0) == 0.0);
  CHECK(st.weight == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(st.arm_estimate[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(st.blended_estimate == Catch::Approx(1.0).margin(1e-12));

  // Pull the linear arm with reward 0.4: estimate 0.4 / 0.8 = 0.5.
  st = run_updates(inst, {{1, 0.4}});
  CHECK(st.blended_estimate == Catch::Approx(0.5).margin(1e-12));

  // Second pull of the same arm with reward 0.6: mean 0.5, estimate 0.625.
  st = run_updates(inst, {{1, 0.4}, {1, 0.6}});
  CHECK(st.sample_mean(1) == Catch::Approx(0.5).margin(1e-15));
  CHECK(st.arm_estimate[1] == Catch::Approx(0.625).margin(1e-12));
  CHECK(st.weight[1] == 1.0);
  CHECK(st.blended_estimate == Catch::Approx(0.625).margin(1e-12));
}

TEST_CASE("greedy update rejects bad input") {
  const auto inst = three_arm_demo_instance();
  GreedyState st(3);
  CHECK_THROWS_AS(greedy_update(st, 7, 0.5, inst), std::invalid_argument);
  CHECK_THROWS_AS(greedy_update(st, 0, 1.5, inst), std::invalid_argument);
}

TEST_CASE("weights stay normalized and the estimate stays inside the space") {
  const auto inst = three_arm_demo_instance();
  Rng rng(42);
  GreedyState st(3);
  for (int t = 0; t < 500; ++t) {
    const ArmChoice c = greedy_select(st, inst, rng);
    const double x = sample_reward(inst.arms[c.arm], 0.2, rng, inst.space);
    greedy_update(st, c.arm, x, inst);
    double wsum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      wsum += st.weight[k];
      if (st.pulls[k] == 0) CHECK(st.weight[k] == 0.0);
    }
    REQUIRE_THAT(wsum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE(st.blended_estimate >= inst.space.lo);
    REQUIRE(st.blended_estimate <= inst.space.hi);
  }
}

TEST_CASE("zero-noise one-shot recovery") {
  auto inst = three_arm_demo_instance(NoiseKind::Deterministic);
  Rng outer(17);
  for (int trial = 0; trial < 25; ++trial) {
    const double theta = outer.uniform01();
    const auto optimal = inst.optimal_set(theta);
    GreedyState st(3);
    Rng rng(trial);
    const ArmChoice first = greedy_select(st, inst, rng);
    greedy_update(st, first.arm,
                  sample_reward(inst.arms[first.arm], theta, rng, inst.space),
                  inst);
    REQUIRE_THAT(st.blended_estimate,
                 Catch::Matchers::WithinAbs(theta, 1e-9));
    for (int t = 0; t < 5; ++t) {
      const ArmChoice c = greedy_select(st, inst, rng);
      CHECK(std::find(optimal.begin(), optimal.end(), c.arm) != optimal.end());
      greedy_update(st, c.arm,
                    sample_reward(inst.arms[c.arm], theta, rng, inst.space),
                    inst);
    }
  }
}

TEST_CASE("greedy choices replay identically for the same seed") {
  const auto inst = three_arm_demo_instance();
  auto run = [&](std::uint64_t seed) {
    std::vector<std::size_t> choices;
    Rng rng(seed);
    GreedyState st(3);
    for (int t = 0; t < 400; ++t) {
      const ArmChoice c = greedy_select(st, inst, rng);
      choices.push_back(c.arm);
      greedy_update(st, c.arm,
                    sample_reward(inst.arms[c.arm], 0.2, rng, inst.space),
                    inst);
    }
    return choices;
  };
  CHECK(run(123) == run(123));
}

TEST_CASE("selection depends on the blended estimate only") {
  const auto inst = three_arm_demo_instance();
  // Two different reward histories with identical sample means.
  auto a = run_updates(inst, {{1, 0.2}, {1, 0.6}});
  auto b = run_updates(inst, {{1, 0.0}, {1, 0.8}});
  REQUIRE(a.sample_mean(1) == b.sample_mean(1));
  REQUIRE(a.blended_estimate == b.blended_estimate);
  Rng r1(5), r2(5);
  CHECK(greedy_select(a, inst, r1).arm == greedy_select(b, inst, r2).arm);
}

TEST_CASE("ucb1 pulls unpulled arms first") {
  UcbState st(2);
  ucb1_update(st, 1, 0.5);
  for (int i = 0; i < 4; ++i) ucb1_update(st, 1, 0.5);
  Rng rng(1);
  CHECK(ucb1_select(st, rng).arm == 0);
}

TEST_CASE("ucb1 index argmax matches hand evaluation") {
  UcbState st(2);
  for (int i = 0; i < 10; ++i) ucb1_update(st, 0, 0.5);
  for (int i = 0; i < 10; ++i) ucb1_update(st, 1, 0.6);
  REQUIRE(st.t == 20);
  const double bonus = std::sqrt(2.0 * std::log(20.0) / 10.0);
  CHECK(bonus == Catch::Approx(0.7740455120).margin(1e-9));
  Rng rng(1);
  const ArmChoice c = ucb1_select(st, rng);
  CHECK(c.arm == 1);  // 1.374 beats 1.274
}

TEST_CASE("ucb1 ties break to the lowest index") {
  UcbState st(2);
  for (int i = 0; i < 3; ++i) {
    ucb1_update(st, 0, 0.5);
    ucb1_update(st, 1, 0.5);
  }
  Rng rng(1);
  const ArmChoice c = ucb1_select(st, rng);
  CHECK(c.arm == 0);
  CHECK(c.tie_broken);
}

TEST_CASE("ucb1 update bookkeeping") {
  UcbState st(2);
  ucb1_update(st, 0, 1.0);
  CHECK(st.sample_mean(0) == 1.0);
  CHECK(st.pulls[0] == 1);
  CHECK(st.t == 1);
  UcbState st2(2);
  ucb1_update(st2, 0, 0.5);
  ucb1_update(st2, 0, 0.0);
  CHECK(st2.sample_mean(0) == 0.25);  // running mean of {0.5, 0}
  CHECK(st2.pulls[0] == 2);
  CHECK(st2.t == 2);
  CHECK_THROWS_AS(ucb1_update(st2, 9, 0.5), std::invalid_argument);
}

TEST_CASE("hierarchical construction validates the partition") {
  const auto inst = groups_instance();
  CHECK_THROWS_AS(make_hierarchical(inst, {{0, 1}, {2, 3}}), ConfigError);
  CHECK_THROWS_AS(make_hierarchical(inst, {{0, 1, 2}, {2, 3}, {4, 5}}),
                  ConfigError);
  CHECK_THROWS_AS(make_hierarchical(inst, {{0, 1}, {}, {2, 3, 4, 5}}),
                  ConfigError);
  CHECK_NOTHROW(make_hierarchical(inst, {{0, 1}, {2, 3}, {4, 5}}));
}

TEST_CASE("hierarchical first pick is group one, then a random member") {
  const auto inst = groups_instance();
  auto hs = make_hierarchical(inst, {{0, 1}, {2, 3}, {4, 5}});
  Rng rng(2);
  const ArmChoice c = hier_select(hs, inst, rng);
  CHECK(c.reason == SelectionReason::GroupThenGreedy);
  CHECK(c.arm <= 1);  // member of group 0
}

TEST_CASE("single-group hierarchy reduces to plain greedy") {
  const auto inst = three_arm_demo_instance();
  // Replay both policies against the same recorded reward tape.
  std::vector<std::vector<double>> tape(600, std::vector<double>(3));
  Rng tape_rng(31);
  for (auto& row : tape)
    for (std::size_t k = 0; k < 3; ++k)
      row[k] = sample_reward(inst.arms[k], 0.2, tape_rng, inst.space);

  GreedyState plain(3);
  auto hs = make_hierarchical(inst, {{0, 1, 2}});
  std::vector<std::size_t> a, b;
  Rng r1(77), r2(77);
  for (std::size_t t = 0; t < tape.size(); ++t) {
    const ArmChoice ca = greedy_select(plain, inst, r1);
    a.push_back(ca.arm);
    greedy_update(plain, ca.arm, tape[t][ca.arm], inst);
    const ArmChoice cb = hier_select(hs, inst, r2);
    b.push_back(cb.arm);
    hier_update(hs, cb.arm, tape[t][cb.arm], inst);
  }
  CHECK(a == b);
}

TEST_CASE("singleton groups reduce to UCB1") {
  const auto inst =
      two_arm_linear_instance(NoiseSpec{NoiseKind::Bernoulli, 0.0});
  std::vector<std::vector<double>> tape(500, std::vector<double>(2));
  Rng tape_rng(8);
  for (auto& row : tape)
    for (std::size_t k = 0; k < 2; ++k)
      row[k] = sample_reward(inst.arms[k], 0.3, tape_rng, inst.space);

  UcbState ucb(2);
  auto hs = make_hierarchical(inst, {{0}, {1}});
  std::vector<std::size_t> a, b;
  Rng r1(9), r2(9);
  for (std::size_t t = 0; t < tape.size(); ++t) {
    const ArmChoice ca = ucb1_select(ucb, r1);
    a.push_back(ca.arm);
    ucb1_update(ucb, ca.arm, tape[t][ca.arm]);
    const ArmChoice cb = hier_select(hs, inst, r2);
    b.push_back(cb.arm);
    hier_update(hs, cb.arm, tape[t][cb.arm], inst);
  }
  CHECK(a == b);
}

TEST_CASE("hierarchical update bookkeeping conserves counts") {
  const auto inst = groups_instance();
  auto hs = make_hierarchical(inst, {{0, 1}, {2, 3}, {4, 5}});
  Rng rng(4);
  const int n = 300;
  for (int t = 0; t < n; ++t) {
    const ArmChoice c = hier_select(hs, inst, rng);
    hier_update(hs, c.arm,
                sample_reward(inst.arms[c.arm], 0.75, rng, inst.space), inst);
  }
  std::uint64_t group_total = 0;
  for (std::size_t g = 0; g < 3; ++g) {
    group_total += hs.group_ucb.pulls[g];
    const GreedyState& gs = hs.group_greedy[g];
    CHECK(gs.t == hs.group_ucb.pulls[g]);
    if (gs.t > 0) {
      double wsum = 0.0;
      for (double w : gs.weight) wsum += w;
      CHECK(wsum == Catch::Approx(1.0).margin(1e-12));
    }
  }
  CHECK(group_total == static_cast<std::uint64_t>(n));
  CHECK_THROWS_AS(hier_update(hs, 17, 0.5, inst), std::invalid_argument);
}
