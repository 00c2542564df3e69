#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gmab/reward_models.hpp"
#include "gmab/simulator.hpp"

namespace gmab {

/// Named experiment bundle: a validated instance plus policy, parameter,
/// horizon, replication, and checkpoint defaults, and a wall-clock budget the
/// run is expected to stay within on a desktop machine.
struct ScenarioPreset {
  std::string name;
  ExperimentConfig config;
  double budget_seconds = 120.0;
};

inline std::vector<std::string> preset_names() {
  return {"three-arm-demo", "linear-worstcase", "bayes-two-arm",
          "counterexample", "pricing", "groups"};
}

/// Three crossing arms on [0,1]: 1 - sqrt(theta), 0.8 theta, theta^2.
/// The joint certificate is the worst case over the arms: the sqrt arm is
/// only 1/2-Hölder forward, the square arm only 1/2-Hölder inverse.
inline BanditInstance three_arm_demo_instance(
    NoiseKind noise = NoiseKind::Bernoulli) {
  const NoiseSpec ns{noise, 0.0};
  std::vector<RewardModel> arms{
      RewardModel{OneMinusSqrtFn{}, ns},
      RewardModel{LinearFn{0.8, 0.0}, ns},
      RewardModel{PowerFn{1.0, 2.0}, ns},
  };
  return make_instance(std::move(arms), ParameterSpace{},
                       HolderCertificate{2.0, 0.5, 2.0, 0.5});
}

/// Two symmetric linear arms theta and 1 - theta, fully informative
/// (gamma1 = gamma2 = 1, unit constants).
inline BanditInstance two_arm_linear_instance(NoiseSpec ns) {
  std::vector<RewardModel> arms{
      RewardModel{LinearFn{1.0, 0.0}, ns},
      RewardModel{LinearFn{-1.0, 1.0}, ns},
  };
  return make_instance(std::move(arms), ParameterSpace{},
                       HolderCertificate{1.0, 1.0, 1.0, 1.0});
}

/// Demand curves for three price points: two logistic purchase-probability
/// curves and one exponential, all increasing in the market-size parameter.
/// Each price is optimal somewhere: roughly [0, 0.13], [0.13, 0.2], [0.2, 1].
inline BanditInstance pricing_instance() {
  const NoiseSpec ns{NoiseKind::Bernoulli, 0.0};
  std::vector<RewardModel> arms{
      RewardModel{LogisticFn{8.0, 0.35}, ns},
      RewardModel{LogisticFn{4.0, 0.5}, ns},
      RewardModel{ExponentialFn{0.15, 1.5}, ns},
  };
  return make_instance(std::move(arms), ParameterSpace{},
                       HolderCertificate{23.0, 1.0, 2.0, 1.0});
}

/// Six linear arms in three groups of two; within each group one increasing
/// and one decreasing arm. Group bests separate cleanly at theta = 0.75.
inline BanditInstance groups_instance() {
  const NoiseSpec ns{NoiseKind::Bernoulli, 0.0};
  std::vector<RewardModel> arms{
      RewardModel{LinearFn{0.8, 0.1}, ns},
      RewardModel{LinearFn{-0.8, 0.9}, ns},
      RewardModel{LinearFn{0.4, 0.15}, ns},
      RewardModel{LinearFn{-0.4, 0.65}, ns},
      RewardModel{LinearFn{0.3, 0.175}, ns},
      RewardModel{LinearFn{-0.3, 0.6}, ns},
  };
  return make_instance(std::move(arms), ParameterSpace{},
                       HolderCertificate{3.5, 1.0, 0.8, 1.0});
}

inline ScenarioPreset make_preset(std::string_view name) {
  ScenarioPreset p;
  p.name = std::string(name);
  ExperimentConfig& cfg = p.config;
  cfg.seed = 1;

  if (name == "three-arm-demo") {
    cfg.instance = three_arm_demo_instance();
    cfg.policy = PolicyConfig{PolicyKind::Greedy, {}};
    cfg.theta_star = 0.2;
    cfg.horizon = 200000;
    cfg.replications = 200;
    cfg.checkpoints = log_spaced_times(cfg.horizon, 21);
    cfg.checkpoints.push_back(cfg.horizon / 2);
    std::sort(cfg.checkpoints.begin(), cfg.checkpoints.end());
    cfg.checkpoints.erase(
        std::unique(cfg.checkpoints.begin(), cfg.checkpoints.end()),
        cfg.checkpoints.end());
    p.budget_seconds = 180.0;
  } else if (name == "linear-worstcase") {
    // theta just off the decision boundary; modest uniform noise keeps the
    // estimate-crossing phase inside the measured horizons.
    cfg.instance =
        two_arm_linear_instance(NoiseSpec{NoiseKind::UniformBand, 0.05});
    cfg.policy = PolicyConfig{PolicyKind::Greedy, {}};
    cfg.theta_star = 0.5 + 1e-3;
    cfg.horizon = 100000;
    cfg.replications = 400;
    cfg.checkpoints = {100, 1000, 10000, 100000};
    p.budget_seconds = 120.0;
  } else if (name == "bayes-two-arm") {
    cfg.instance = two_arm_linear_instance(NoiseSpec{NoiseKind::Bernoulli, 0.0});
    cfg.policy = PolicyConfig{PolicyKind::Greedy, {}};
    PriorSpec prior;
    prior.kind = PriorSpec::Kind::Uniform;
    prior.lo = 0.0;
    prior.hi = 1.0;
    prior.density_bound = 2.0;
    cfg.prior = prior;
    cfg.horizon = 100000;
    cfg.replications = 2000;
    cfg.checkpoints = {1, 10, 100, 1000, 10000, 100000};
    p.budget_seconds = 240.0;
  } else if (name == "counterexample") {
    cfg.instance = make_counterexample(3, {0.25, 0.5, 0.75});
    cfg.policy = PolicyConfig{PolicyKind::Greedy, {}};
    PriorSpec prior;
    prior.kind = PriorSpec::Kind::Uniform;
    prior.lo = 0.0;
    prior.hi = 1.0;
    prior.density_bound = 1.0;
    cfg.prior = prior;
    cfg.horizon = 10000;
    cfg.replications = 100;
    cfg.checkpoints = {5000, 10000};
    p.budget_seconds = 60.0;
  } else if (name == "pricing") {
    cfg.instance = pricing_instance();
    cfg.policy = PolicyConfig{PolicyKind::Greedy, {}};
    cfg.theta_star = 0.3;
    cfg.horizon = 50000;
    cfg.replications = 100;
    cfg.checkpoints = log_spaced_times(cfg.horizon, 21);
    p.budget_seconds = 120.0;
  } else if (name == "groups") {
    cfg.instance = groups_instance();
    cfg.policy =
        PolicyConfig{PolicyKind::Hierarchical, {{0, 1}, {2, 3}, {4, 5}}};
    cfg.theta_star = 0.75;
    cfg.horizon = 20000;
    cfg.replications = 200;
    cfg.checkpoints = {1000, 2000, 10000, 20000};
    p.budget_seconds = 60.0;
  } else {
    throw ConfigError("preset", "unknown preset '" + std::string(name) +
                                    "'; known presets: three-arm-demo, "
                                    "linear-worstcase, bayes-two-arm, "
                                    "counterexample, pricing, groups");
  }
  return p;
}

}  // namespace gmab
