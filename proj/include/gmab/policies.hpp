#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "gmab/random.hpp"
#include "gmab/reward_models.hpp"

namespace gmab {

enum class SelectionReason { RandomInit, GreedyArgmax, UcbIndex, GroupThenGreedy };

struct ArmChoice {
  std::size_t arm = 0;
  SelectionReason reason = SelectionReason::GreedyArgmax;
  bool tie_broken = false;
};

inline constexpr double kNoEstimate = std::numeric_limits<double>::quiet_NaN();

/// State of the greedy global-parameter policy. Sample means are kept as
/// (sum, count) so the running mean is always the exact sum/count quotient.
/// Parameter estimates of unpulled arms are a NaN sentinel; their weight is
/// zero so they never enter the blend.
struct GreedyState {
  std::vector<double> reward_sum;
  std::vector<std::uint64_t> pulls;
  std::vector<double> weight;
  std::vector<double> arm_estimate;
  double blended_estimate = kNoEstimate;
  std::uint64_t t = 0;

  explicit GreedyState(std::size_t num_arms)
      : reward_sum(num_arms, 0.0),
        pulls(num_arms, 0),
        weight(num_arms, 0.0),
        arm_estimate(num_arms, kNoEstimate) {}

  std::size_t num_arms() const { return pulls.size(); }

  double sample_mean(std::size_t k) const {
    return pulls[k] == 0
               ? kNoEstimate
               : reward_sum[k] / static_cast<double>(pulls[k]);
  }
};

/// Greedy selection: a uniformly random arm before the first pull, afterwards
/// the arm maximizing mu_k at the blended estimate. Exact-value ties go to the
/// lowest index and are flagged.
inline ArmChoice greedy_select(const GreedyState& state,
                               const BanditInstance& instance, Rng& rng) {
  const std::size_t K = instance.num_arms();
  if (state.t == 0)
    return ArmChoice{rng.below(K), SelectionReason::RandomInit, false};

  std::size_t best = 0;
  double best_mean = instance.mean(0, state.blended_estimate);
  bool tie = false;
  for (std::size_t k = 1; k < K; ++k) {
    const double m = instance.mean(k, state.blended_estimate);
    if (m > best_mean) {
      best = k;
      best_mean = m;
      tie = false;
    } else if (m == best_mean) {
      tie = true;
    }
  }
  return ArmChoice{best, SelectionReason::GreedyArgmax, tie};
}

/// Applies one observed reward: running mean, pull count, weights N_k/t, the
/// pulled arm's inverse-mean estimate, and the weight-blended global estimate.
inline void greedy_update(GreedyState& state, std::size_t arm, double reward,
                          const BanditInstance& instance) {
  if (arm >= state.num_arms())
    throw std::invalid_argument("greedy_update: arm index out of range");
  if (!(reward >= 0.0 && reward <= 1.0))
    throw std::invalid_argument("greedy_update: reward outside [0,1]");

  state.reward_sum[arm] += reward;
  state.pulls[arm] += 1;
  state.t += 1;
  state.arm_estimate[arm] =
      instance.estimate_parameter(arm, state.sample_mean(arm));

  const double t = static_cast<double>(state.t);
  double blend = 0.0;
  for (std::size_t k = 0; k < state.num_arms(); ++k) {
    state.weight[k] = static_cast<double>(state.pulls[k]) / t;
    if (state.pulls[k] > 0) blend += state.weight[k] * state.arm_estimate[k];
  }
  state.blended_estimate = instance.space.clamp(blend);
}

// ---------------------------------------------------------------------------
// UCB1 baseline
// ---------------------------------------------------------------------------

struct UcbState {
  std::vector<double> reward_sum;
  std::vector<std::uint64_t> pulls;
  std::uint64_t t = 0;

  explicit UcbState(std::size_t num_arms)
      : reward_sum(num_arms, 0.0), pulls(num_arms, 0) {}

  std::size_t num_arms() const { return pulls.size(); }

  double sample_mean(std::size_t k) const {
    return pulls[k] == 0
               ? kNoEstimate
               : reward_sum[k] / static_cast<double>(pulls[k]);
  }
};

/// UCB1: lowest-index unpulled arm first, then argmax of
/// mean + sqrt(2 ln t / N_k) with ties to the lowest index.
inline ArmChoice ucb1_select(const UcbState& state, Rng& /*rng*/) {
  const std::size_t K = state.num_arms();
  std::size_t unpulled = K;
  for (std::size_t k = 0; k < K; ++k) {
    if (state.pulls[k] == 0) {
      if (unpulled == K) unpulled = k;
    }
  }
  if (unpulled < K)
    return ArmChoice{unpulled, SelectionReason::UcbIndex, false};

  const double log_t = std::log(static_cast<double>(state.t));
  std::size_t best = 0;
  double best_index = -std::numeric_limits<double>::infinity();
  bool tie = false;
  for (std::size_t k = 0; k < K; ++k) {
    const double idx =
        state.sample_mean(k) +
        std::sqrt(2.0 * log_t / static_cast<double>(state.pulls[k]));
    if (idx > best_index) {
      best = k;
      best_index = idx;
      tie = false;
    } else if (idx == best_index) {
      tie = true;
    }
  }
  return ArmChoice{best, SelectionReason::UcbIndex, tie};
}

inline void ucb1_update(UcbState& state, std::size_t arm, double reward) {
  if (arm >= state.num_arms())
    throw std::invalid_argument("ucb1_update: arm index out of range");
  state.reward_sum[arm] += reward;
  state.pulls[arm] += 1;
  state.t += 1;
}

// ---------------------------------------------------------------------------
// Hierarchical policy: UCB1 over groups, greedy within the chosen group
// ---------------------------------------------------------------------------

/// Group partition with UCB1 statistics per group and an independent greedy
/// state (and restricted instance view) per group. The group-level reward is
/// the pulled member arm's reward.
struct HierarchicalState {
  std::vector<std::vector<std::size_t>> groups;
  UcbState group_ucb;
  std::vector<GreedyState> group_greedy;
  std::vector<BanditInstance> group_instances;
  std::vector<std::size_t> arm_to_group;
  std::vector<std::size_t> arm_local_index;

  HierarchicalState() : group_ucb(0) {}
};

inline HierarchicalState make_hierarchical(
    const BanditInstance& instance,
    std::vector<std::vector<std::size_t>> groups) {
  const std::size_t K = instance.num_arms();
  if (groups.empty()) throw ConfigError("groups", "need at least one group");
  HierarchicalState hs;
  hs.arm_to_group.assign(K, K);
  hs.arm_local_index.assign(K, K);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty())
      throw ConfigError("groups[" + std::to_string(g) + "]",
                        "groups must be nonempty");
    BanditInstance view;
    view.space = instance.space;
    view.cert = instance.cert;
    view.invertible = instance.invertible;
    for (std::size_t local = 0; local < groups[g].size(); ++local) {
      const std::size_t arm = groups[g][local];
      if (arm >= K)
        throw ConfigError("groups[" + std::to_string(g) + "]",
                          "arm index " + std::to_string(arm) +
                              " out of range");
      if (hs.arm_to_group[arm] != K)
        throw ConfigError("groups", "arm " + std::to_string(arm) +
                                        " appears in two groups");
      hs.arm_to_group[arm] = g;
      hs.arm_local_index[arm] = local;
      view.arms.push_back(instance.arms[arm]);
    }
    hs.group_instances.push_back(std::move(view));
    hs.group_greedy.emplace_back(groups[g].size());
  }
  for (std::size_t arm = 0; arm < K; ++arm)
    if (hs.arm_to_group[arm] == K)
      throw ConfigError("groups",
                        "arm " + std::to_string(arm) + " not covered");
  hs.groups = std::move(groups);
  hs.group_ucb = UcbState(hs.groups.size());
  return hs;
}

inline ArmChoice hier_select(const HierarchicalState& state,
                             const BanditInstance& /*instance*/, Rng& rng) {
  const ArmChoice gc = ucb1_select(state.group_ucb, rng);
  const std::size_t g = gc.arm;
  const ArmChoice local =
      greedy_select(state.group_greedy[g], state.group_instances[g], rng);
  return ArmChoice{state.groups[g][local.arm],
                   SelectionReason::GroupThenGreedy,
                   gc.tie_broken || local.tie_broken};
}

inline void hier_update(HierarchicalState& state, std::size_t arm,
                        double reward, const BanditInstance& /*instance*/) {
  if (arm >= state.arm_to_group.size())
    throw std::invalid_argument("hier_update: arm index out of range");
  const std::size_t g = state.arm_to_group[arm];
  ucb1_update(state.group_ucb, g, reward);
  greedy_update(state.group_greedy[g], state.arm_local_index[arm], reward,
                state.group_instances[g]);
}

// ---------------------------------------------------------------------------
// Policy wrapper used by the simulator
// ---------------------------------------------------------------------------

struct GreedyPolicy {
  GreedyState state;
  explicit GreedyPolicy(const BanditInstance& instance)
      : state(instance.num_arms()) {}
};

struct Ucb1Policy {
  UcbState state;
  explicit Ucb1Policy(const BanditInstance& instance)
      : state(instance.num_arms()) {}
};

struct HierarchicalPolicy {
  HierarchicalState state;
  HierarchicalPolicy(const BanditInstance& instance,
                     std::vector<std::vector<std::size_t>> groups)
      : state(make_hierarchical(instance, std::move(groups))) {}
};

using Policy = std::variant<GreedyPolicy, Ucb1Policy, HierarchicalPolicy>;

enum class PolicyKind { Greedy, Ucb1, Hierarchical };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Greedy;
  std::vector<std::vector<std::size_t>> groups;  // hierarchical only
};

inline Policy make_policy(const BanditInstance& instance,
                          const PolicyConfig& cfg) {
  switch (cfg.kind) {
    case PolicyKind::Greedy:
      return GreedyPolicy(instance);
    case PolicyKind::Ucb1:
      return Ucb1Policy(instance);
    case PolicyKind::Hierarchical:
      return HierarchicalPolicy(instance, cfg.groups);
  }
  throw std::logic_error("make_policy: unknown policy kind");
}

inline ArmChoice policy_select(Policy& policy, const BanditInstance& instance,
                               Rng& rng) {
  struct Select {
    const BanditInstance& instance;
    Rng& rng;
    ArmChoice operator()(GreedyPolicy& p) const {
      return greedy_select(p.state, instance, rng);
    }
    ArmChoice operator()(Ucb1Policy& p) const {
      return ucb1_select(p.state, rng);
    }
    ArmChoice operator()(HierarchicalPolicy& p) const {
      return hier_select(p.state, instance, rng);
    }
  };
  return std::visit(Select{instance, rng}, policy);
}

inline void policy_update(Policy& policy, std::size_t arm, double reward,
                          const BanditInstance& instance) {
  struct Update {
    std::size_t arm;
    double reward;
    const BanditInstance& instance;
    void operator()(GreedyPolicy& p) const {
      greedy_update(p.state, arm, reward, instance);
    }
    void operator()(Ucb1Policy& p) const {
      ucb1_update(p.state, arm, reward);
    }
    void operator()(HierarchicalPolicy& p) const {
      hier_update(p.state, arm, reward, instance);
    }
  };
  std::visit(Update{arm, reward, instance}, policy);
}

/// Blended global-parameter estimate when the policy maintains one.
inline double policy_estimate(const Policy& policy) {
  if (const auto* g = std::get_if<GreedyPolicy>(&policy))
    return g->state.blended_estimate;
  return kNoEstimate;
}

}  // namespace gmab
