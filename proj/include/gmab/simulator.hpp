#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gmab/analysis.hpp"
#include "gmab/policies.hpp"
#include "gmab/random.hpp"
#include "gmab/reward_models.hpp"

namespace gmab {

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

/// Prior over the global parameter: uniform on an interval, or a piecewise
/// density with value weights[i] on [breaks[i], breaks[i+1]]. `density_bound`
/// is the pointwise bound B used in the Bayesian risk envelope.
struct PriorSpec {
  enum class Kind { Uniform, PiecewiseDensity };
  Kind kind = Kind::Uniform;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> breaks;
  std::vector<double> weights;
  double density_bound = 1.0;

  void validate(const ParameterSpace& space) const {
    if (!(density_bound > 0.0))
      throw ConfigError("prior.bound", "must be > 0");
    if (kind == Kind::Uniform) {
      if (!(lo < hi)) throw ConfigError("prior", "requires lo < hi");
      if (lo < space.lo || hi > space.hi)
        throw ConfigError("prior", "support outside the parameter space");
      if (1.0 / (hi - lo) > density_bound * (1.0 + 1e-12))
        throw ConfigError("prior.bound",
                          "density 1/(hi-lo) exceeds the declared bound");
      return;
    }
    if (breaks.size() < 2 || weights.size() + 1 != breaks.size())
      throw ConfigError("prior.breaks",
                        "need n+1 sorted breaks for n density weights");
    if (!std::is_sorted(breaks.begin(), breaks.end()))
      throw ConfigError("prior.breaks", "must be sorted");
    if (breaks.front() < space.lo || breaks.back() > space.hi)
      throw ConfigError("prior", "support outside the parameter space");
    double mass = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] < 0.0)
        throw ConfigError("prior.weights", "density must be nonnegative");
      if (weights[i] > density_bound * (1.0 + 1e-12))
        throw ConfigError("prior.bound",
                          "density exceeds the declared bound");
      mass += weights[i] * (breaks[i + 1] - breaks[i]);
    }
    if (std::abs(mass - 1.0) > 1e-9)
      throw ConfigError("prior.weights",
                        "density integrates to " + std::to_string(mass) +
                            ", expected 1");
  }

  /// Inverse-CDF sample.
  double sample(Rng& rng) const {
    if (kind == Kind::Uniform) return rng.uniform(lo, hi);
    const double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double seg = weights[i] * (breaks[i + 1] - breaks[i]);
      if (u <= acc + seg || i + 1 == weights.size()) {
        const double frac = seg > 0.0 ? (u - acc) / seg : 0.0;
        return breaks[i] +
               std::min(1.0, std::max(0.0, frac)) * (breaks[i + 1] - breaks[i]);
      }
      acc += seg;
    }
    return breaks.back();
  }
};

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

struct RecordOptions {
  bool sequences = false;   // keep full choice/reward/regret vectors
  bool full_trace = false;  // keep per-step estimates, means, weights
};

struct CheckpointRow {
  std::int64_t t = 0;
  double cum_regret = 0.0;
  double estimate = kNoEstimate;  // blended estimate after step t
  double step_regret = 0.0;       // r_t at exactly this step
  bool subopt_at_t = false;
  std::int64_t subopt_pulls_window = 0;  // suboptimal pulls since previous row
};

/// Per-step snapshot used by the lemma checker (full-trace mode only).
struct StepTrace {
  std::uint32_t arm = 0;
  double reward = 0.0;
  double step_regret = 0.0;
  double estimate_before = kNoEstimate;  // estimate the selection used
  double estimate_after = kNoEstimate;
  std::vector<double> sample_means;
  std::vector<double> weights;
};

struct EpisodeResult {
  std::int64_t horizon = 0;
  double theta_star = 0.0;
  double total_regret = 0.0;
  std::int64_t total_subopt_pulls = 0;
  std::vector<CheckpointRow> checkpoints;
  std::vector<std::uint32_t> choices;
  std::vector<double> rewards;
  std::vector<double> step_regrets;
  std::vector<StepTrace> trace;
  // Ring of the most recent blended estimates (at most 100).
  std::array<double, 100> estimate_ring{};
  std::size_t estimate_ring_size = 0;
  std::size_t estimate_ring_next = 0;
};

/// Runs one seeded episode: select, draw the chosen arm's reward at
/// theta_star, update, accumulate regret against the optimal mean. Regret
/// uses true means of the chosen arms, never realized rewards.
inline EpisodeResult run_episode(const BanditInstance& instance,
                                 double theta_star, Policy policy,
                                 std::int64_t horizon, std::uint64_t seed,
                                 const std::vector<std::int64_t>& checkpoints = {},
                                 const RecordOptions& record = {}) {
  if (!instance.space.contains(theta_star))
    throw std::domain_error("run_episode: theta_star outside parameter space");
  if (horizon < 0)
    throw std::invalid_argument("run_episode: horizon must be >= 0");

  const std::size_t K = instance.num_arms();
  std::vector<double> true_mean(K);
  for (std::size_t k = 0; k < K; ++k)
    true_mean[k] = instance.mean(k, theta_star);
  const double best = *std::max_element(true_mean.begin(), true_mean.end());
  std::vector<bool> is_optimal(K);
  for (std::size_t k = 0; k < K; ++k) is_optimal[k] = true_mean[k] == best;

  Rng rng(seed);
  EpisodeResult res;
  res.horizon = horizon;
  res.theta_star = theta_star;
  if (record.sequences) {
    res.choices.reserve(static_cast<std::size_t>(horizon));
    res.rewards.reserve(static_cast<std::size_t>(horizon));
    res.step_regrets.reserve(static_cast<std::size_t>(horizon));
  }
  if (record.full_trace) res.trace.reserve(static_cast<std::size_t>(horizon));

  std::size_t next_cp = 0;
  std::int64_t window_subopt = 0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const double estimate_before = policy_estimate(policy);
    const ArmChoice choice = policy_select(policy, instance, rng);
    const double reward =
        sample_reward(instance.arms[choice.arm], theta_star, rng,
                      instance.space);
    policy_update(policy, choice.arm, reward, instance);

    const double r = best - true_mean[choice.arm];
    res.total_regret += r;
    if (!is_optimal[choice.arm]) {
      ++res.total_subopt_pulls;
      ++window_subopt;
    }

    const double estimate_after = policy_estimate(policy);
    res.estimate_ring[res.estimate_ring_next] = estimate_after;
    res.estimate_ring_next = (res.estimate_ring_next + 1) % res.estimate_ring.size();
    res.estimate_ring_size =
        std::min(res.estimate_ring_size + 1, res.estimate_ring.size());

    if (record.sequences) {
      res.choices.push_back(static_cast<std::uint32_t>(choice.arm));
      res.rewards.push_back(reward);
      res.step_regrets.push_back(r);
    }
    if (record.full_trace) {
      StepTrace st;
      st.arm = static_cast<std::uint32_t>(choice.arm);
      st.reward = reward;
      st.step_regret = r;
      st.estimate_before = estimate_before;
      st.estimate_after = estimate_after;
      if (const auto* g = std::get_if<GreedyPolicy>(&policy)) {
        st.sample_means.resize(K);
        for (std::size_t k = 0; k < K; ++k)
          st.sample_means[k] = g->state.sample_mean(k);
        st.weights = g->state.weight;
      }
      res.trace.push_back(std::move(st));
    }
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
      CheckpointRow row;
      row.t = t;
      row.cum_regret = res.total_regret;
      row.estimate = estimate_after;
      row.step_regret = r;
      row.subopt_at_t = !is_optimal[choice.arm];
      row.subopt_pulls_window = window_subopt;
      res.checkpoints.push_back(row);
      window_subopt = 0;
      ++next_cp;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  BanditInstance instance;
  PolicyConfig policy;
  std::optional<double> theta_star;
  std::optional<PriorSpec> prior;
  std::int64_t horizon = 1000;
  std::int64_t replications = 1;
  std::uint64_t seed = 1;
  std::vector<std::int64_t> checkpoints;  // defaulted to a log grid if empty
  bool lemma_checks = false;

  void validate() const {
    if (horizon < 1) throw ConfigError("horizon", "must be >= 1");
    if (replications < 1) throw ConfigError("replications", "must be >= 1");
    if (!theta_star && !prior)
      throw ConfigError("theta_star", "need theta_star or a prior");
    if (theta_star && !instance.space.contains(*theta_star))
      throw ConfigError("theta_star", "outside the parameter space");
    if (prior) prior->validate(instance.space);
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
      throw ConfigError("checkpoints", "must be sorted ascending");
    if (std::adjacent_find(checkpoints.begin(), checkpoints.end()) !=
        checkpoints.end())
      throw ConfigError("checkpoints", "entries must be distinct");
    for (std::int64_t t : checkpoints)
      if (t < 1 || t > horizon)
        throw ConfigError("checkpoints",
                          "entries must lie in [1, horizon]");
  }

  std::vector<std::int64_t> effective_checkpoints() const {
    if (!checkpoints.empty()) return checkpoints;
    return log_spaced_times(horizon, 21);
  }
};

struct AggregateStat {
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct AggregateCheckpoint {
  std::int64_t t = 0;
  AggregateStat cum_regret;
  AggregateStat step_regret;
  double prob_subopt = 0.0;
  double prob_subopt_se = 0.0;
  double mean_subopt_pulls_window = 0.0;
  // Bound overlays (theta-dependent ones only when applicable).
  double bound_cumulative_v = 0.0;
  double bound_one_step_v = 0.0;
  std::optional<double> bound_subopt_prob_v;  // capped
  std::optional<double> bound_bayes_v;
};

struct AggregateResult {
  std::vector<AggregateCheckpoint> rows;
  std::int64_t replications = 0;
  std::int64_t horizon = 0;
  std::optional<double> suboptimality_distance;  // filled for fixed theta runs
};

namespace detail {

/// Runs `count` independent jobs over a small thread pool, writing into
/// caller-provided slots keyed by job index. Deterministic regardless of the
/// number of workers or completion order. workers == 0 picks the hardware
/// concurrency.
inline void parallel_for(std::int64_t count,
                         const std::function<void(std::int64_t)>& job,
                         int requested_workers = 0) {
  const unsigned hw = std::thread::hardware_concurrency();
  const std::int64_t wanted =
      requested_workers > 0 ? requested_workers
                            : static_cast<std::int64_t>(hw ? hw : 1);
  const std::int64_t workers =
      std::max<std::int64_t>(1, std::min<std::int64_t>(wanted, count));
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::int64_t i = w; i < count; i += workers) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct RepSummary {
  std::vector<CheckpointRow> rows;
};

inline AggregateResult aggregate_reps(
    const ExperimentConfig& cfg, const std::vector<std::int64_t>& cps,
    const std::function<double(std::int64_t, Rng&)>& draw_theta,
    int workers = 0) {
  const std::int64_t R = cfg.replications;
  std::vector<RepSummary> slots(static_cast<std::size_t>(R));
  const auto run_rep = [&](std::int64_t rep) {
    Rng seeder = Rng::stream(cfg.seed, static_cast<std::uint64_t>(rep));
    const double theta = draw_theta(rep, seeder);
    // The episode stream is the remainder of the replication stream; fold the
    // engine state into a fresh seed so run_episode stays a pure function of
    // (seed, config).
    const std::uint64_t episode_seed = seeder.next_u64();
    EpisodeResult ep = run_episode(cfg.instance, theta,
                                   make_policy(cfg.instance, cfg.policy),
                                   cfg.horizon, episode_seed, cps);
    slots[static_cast<std::size_t>(rep)].rows = std::move(ep.checkpoints);
  };
  parallel_for(R, run_rep, workers);

  AggregateResult agg;
  agg.replications = R;
  agg.horizon = cfg.horizon;
  agg.rows.resize(cps.size());
  const double n = static_cast<double>(R);
  for (std::size_t c = 0; c < cps.size(); ++c) {
    AggregateCheckpoint& row = agg.rows[c];
    row.t = cps[c];
    double sum = 0.0, sum2 = 0.0, rsum = 0.0, rsum2 = 0.0;
    double subopt = 0.0, window = 0.0;
    for (std::int64_t rep = 0; rep < R; ++rep) {
      const CheckpointRow& cr = slots[static_cast<std::size_t>(rep)].rows[c];
      sum += cr.cum_regret;
      sum2 += cr.cum_regret * cr.cum_regret;
      rsum += cr.step_regret;
      rsum2 += cr.step_regret * cr.step_regret;
      subopt += cr.subopt_at_t ? 1.0 : 0.0;
      window += static_cast<double>(cr.subopt_pulls_window);
    }
    auto stat = [n](double s, double s2) {
      AggregateStat st;
      st.mean = s / n;
      if (n > 1.5) {
        const double var = std::max(0.0, (s2 - s * s / n) / (n - 1.0));
        st.stderr_ = std::sqrt(var / n);
      }
      return st;
    };
    row.cum_regret = stat(sum, sum2);
    row.step_regret = stat(rsum, rsum2);
    row.prob_subopt = subopt / n;
    row.prob_subopt_se =
        std::sqrt(row.prob_subopt * (1.0 - row.prob_subopt) / n);
    row.mean_subopt_pulls_window = window / n;
  }
  return agg;
}

}  // namespace detail

/// Monte Carlo experiment at a fixed global parameter. Replication r uses the
/// stream Rng::stream(seed, r); aggregation is an ordered reduction over
/// replication indices, so results are bit-identical for any worker count
/// (0 = hardware concurrency) and completion order. Bound overlays from the
/// instance certificate are attached per checkpoint.
inline AggregateResult run_monte_carlo(const ExperimentConfig& cfg,
                                       int workers = 0) {
  cfg.validate();
  if (!cfg.theta_star)
    throw ConfigError("theta_star",
                      "run_monte_carlo needs a fixed theta_star (use "
                      "estimate_bayes_risk for prior configs)");
  const auto cps = cfg.effective_checkpoints();
  AggregateResult agg = detail::aggregate_reps(
      cfg, cps, [&](std::int64_t, Rng&) { return *cfg.theta_star; }, workers);

  std::optional<double> delta;
  if (cfg.instance.invertible) {
    const auto part = optimality_partition(cfg.instance, 1e-4);
    const double d = subopt_distance(cfg.instance, *cfg.theta_star, part);
    if (d > 0.0) delta = d;
  }
  agg.suboptimality_distance = delta;
  const int K = static_cast<int>(cfg.instance.num_arms());
  for (auto& row : agg.rows) {
    row.bound_cumulative_v = bound_cumulative(row.t, K, cfg.instance.cert);
    row.bound_one_step_v = bound_one_step(row.t, K, cfg.instance.cert);
    if (delta)
      row.bound_subopt_prob_v =
          bound_subopt_prob_capped(row.t, *delta, K, cfg.instance.cert);
  }
  return agg;
}

/// Bayesian risk estimate: replication r draws theta from the prior using its
/// own stream, runs one episode, and cumulative regret is averaged per
/// checkpoint. The Bayesian risk envelope is attached as overlay.
inline AggregateResult estimate_bayes_risk(const BanditInstance& instance,
                                           const PriorSpec& prior,
                                           std::int64_t horizon,
                                           std::int64_t replications,
                                           std::uint64_t seed,
                                           std::vector<std::int64_t> checkpoints = {},
                                           int workers = 0) {
  prior.validate(instance.space);
  if (horizon == 0) {
    AggregateResult agg;
    agg.replications = replications;
    agg.horizon = 0;
    AggregateCheckpoint row;
    row.t = 0;
    agg.rows.push_back(row);
    return agg;
  }
  ExperimentConfig cfg;
  cfg.instance = instance;
  cfg.policy = PolicyConfig{PolicyKind::Greedy, {}};
  cfg.prior = prior;
  cfg.horizon = horizon;
  cfg.replications = replications;
  cfg.seed = seed;
  cfg.checkpoints = std::move(checkpoints);
  cfg.validate();
  const auto cps = cfg.effective_checkpoints();
  AggregateResult agg = detail::aggregate_reps(
      cfg, cps, [&](std::int64_t, Rng& rng) { return prior.sample(rng); },
      workers);
  const int K = static_cast<int>(instance.num_arms());
  for (auto& row : agg.rows) {
    row.bound_cumulative_v = bound_cumulative(row.t, K, instance.cert);
    row.bound_one_step_v = bound_one_step(row.t, K, instance.cert);
    row.bound_bayes_v =
        bayes_risk_bound(row.t, prior.density_bound, K, instance.cert);
  }
  return agg;
}

// ---------------------------------------------------------------------------
// Lemma checks
// ---------------------------------------------------------------------------

struct LemmaReport {
  std::int64_t steps_checked = 0;
  std::int64_t violations_estimate_gap = 0;   // blended-estimate decomposition
  std::int64_t violations_one_step = 0;       // one-step regret envelope
  std::int64_t violations_event_inclusion = 0;  // deviation event inclusion
  std::vector<double> event_thresholds;
  std::string first_violation;

  std::int64_t total_violations() const {
    return violations_estimate_gap + violations_one_step +
           violations_event_inclusion;
  }
};

/// Verifies, per step t >= 2 of a full-trace greedy episode:
///  (a) |est_t - theta*| <= sum_k w_k D1 |Xhat_k - mu_k(theta*)|^g1,
///  (b) r_t <= 2 D2 |theta* - est.|^g2 with the estimate the selection used,
///  (c) whenever |est_t - theta*| > x for x in {delta/2, delta, 2 delta},
///      at least one pulled arm has |Xhat_k - mu_k(theta*)| > (x/D1)^(1/g1).
/// Expected violation count is 0 for instances satisfying the certificate.
inline LemmaReport check_lemmas(const EpisodeResult& episode,
                                const BanditInstance& instance,
                                double theta_star,
                                const HolderCertificate& cert) {
  if (episode.trace.empty())
    throw std::invalid_argument(
        "check_lemmas: episode was not recorded with full_trace");
  constexpr double kTol = 1e-12;
  LemmaReport rep;

  double delta = 1.0;
  if (instance.invertible) {
    const auto part = optimality_partition(instance, 1e-4);
    delta = subopt_distance(instance, theta_star, part);
  }
  rep.event_thresholds = {0.5 * delta, delta, 2.0 * delta};

  const std::size_t K = instance.num_arms();
  std::vector<double> true_mean(K);
  for (std::size_t k = 0; k < K; ++k)
    true_mean[k] = instance.mean(k, theta_star);

  auto note = [&rep](const std::string& msg) {
    if (rep.first_violation.empty()) rep.first_violation = msg;
  };

  for (std::size_t i = 1; i < episode.trace.size(); ++i) {
    const StepTrace& st = episode.trace[i];
    if (st.sample_means.empty()) continue;  // non-greedy policy
    ++rep.steps_checked;
    const std::int64_t t = static_cast<std::int64_t>(i) + 1;

    const double est_gap = std::abs(st.estimate_after - theta_star);
    double decomposition = 0.0;
    double worst_mean_gap = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (st.weights[k] <= 0.0) continue;
      const double mean_gap = std::abs(st.sample_means[k] - true_mean[k]);
      decomposition +=
          st.weights[k] * cert.d1 * std::pow(mean_gap, cert.gamma1);
      worst_mean_gap = std::max(worst_mean_gap, mean_gap);
    }
    if (est_gap > decomposition + kTol) {
      ++rep.violations_estimate_gap;
      note("estimate-gap bound failed at t=" + std::to_string(t) + ": " +
           std::to_string(est_gap) + " > " + std::to_string(decomposition));
    }

    const double selection_gap = std::abs(theta_star - st.estimate_before);
    const double one_step_bound =
        2.0 * cert.d2 * std::pow(selection_gap, cert.gamma2);
    if (st.step_regret > one_step_bound + kTol) {
      ++rep.violations_one_step;
      note("one-step bound failed at t=" + std::to_string(t) + ": " +
           std::to_string(st.step_regret) + " > " +
           std::to_string(one_step_bound));
    }

    for (double x : rep.event_thresholds) {
      if (!(est_gap > x)) continue;
      const double needed =
          std::pow(x / cert.d1, 1.0 / cert.gamma1) * (1.0 - kTol);
      if (worst_mean_gap <= needed) {
        ++rep.violations_event_inclusion;
        note("event inclusion failed at t=" + std::to_string(t) +
             " for x=" + std::to_string(x));
      }
    }
  }
  return rep;
}

}  // namespace gmab
