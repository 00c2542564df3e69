#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmab/reward_models.hpp"

namespace gmab {

// ---------------------------------------------------------------------------
// Optimality partition
// ---------------------------------------------------------------------------

struct ArmRegion {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double theta) const { return theta >= lo && theta <= hi; }
};

/// Per-arm closed sub-intervals on which the arm is optimal. Regions of
/// different arms share boundary points; tie regions (several arms optimal on
/// a whole interval) appear in every tied arm's list.
struct OptimalityPartition {
  std::vector<std::vector<ArmRegion>> regions;
  double resolution = 0.0;
  bool has_ties = false;
};

namespace detail {

/// Refines an optimality boundary inside [lo, hi]: bisection on
/// mu_a - mu_b, which is >= 0 at lo and <= 0 at hi.
inline double refine_boundary(const BanditInstance& instance, std::size_t a,
                              std::size_t b, double lo, double hi) {
  double flo = instance.mean(a, lo) - instance.mean(b, lo);
  for (int i = 0; i < 200 && (hi - lo) > 1e-9; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = instance.mean(a, mid) - instance.mean(b, mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Scans the parameter space on a grid of step `resolution`, assigns each
/// grid point its argmax arm set, and refines every region boundary by
/// bisection on the difference of the two adjacent winners' means.
inline OptimalityPartition optimality_partition(const BanditInstance& instance,
                                                double resolution) {
  if (!(resolution > 0.0))
    throw std::invalid_argument("optimality_partition: resolution must be > 0");
  const ParameterSpace& sp = instance.space;
  const std::size_t n = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(sp.width() / resolution)) + 1);
  const double h = sp.width() / static_cast<double>(n - 1);

  auto grid_point = [&](std::size_t i) {
    return (i + 1 == n) ? sp.hi : sp.lo + static_cast<double>(i) * h;
  };

  std::vector<std::vector<std::size_t>> winners(n);
  for (std::size_t i = 0; i < n; ++i)
    winners[i] = instance.optimal_set(grid_point(i));

  // Cell boundaries: refined crossing wherever the winner set changes.
  std::vector<double> cuts;
  cuts.push_back(sp.lo);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (winners[i] == winners[i + 1]) continue;
    std::size_t a = winners[i].front();
    std::size_t b = winners[i + 1].front();
    if (a == b) {
      // Same leading arm but sets differ: a secondary arm enters or leaves.
      for (std::size_t k : winners[i + 1])
        if (std::find(winners[i].begin(), winners[i].end(), k) ==
            winners[i].end()) {
          b = k;
          break;
        }
      if (a == b)
        for (std::size_t k : winners[i])
          if (std::find(winners[i + 1].begin(), winners[i + 1].end(), k) ==
              winners[i + 1].end()) {
            a = winners[i + 1].front();
            b = k;
            break;
          }
    }
    cuts.push_back(a == b ? grid_point(i + 1)
                          : detail::refine_boundary(instance, a, b,
                                                    grid_point(i),
                                                    grid_point(i + 1)));
  }
  cuts.push_back(sp.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  OptimalityPartition part;
  part.resolution = resolution;
  part.regions.assign(instance.num_arms(), {});
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
    const auto cell_winners = instance.optimal_set(mid);
    if (cell_winners.size() > 1) part.has_ties = true;
    for (std::size_t k : cell_winners) {
      auto& regs = part.regions[k];
      if (!regs.empty() && regs.back().hi == cuts[c])
        regs.back().hi = cuts[c + 1];  // merge adjacent cells
      else
        regs.push_back(ArmRegion{cuts[c], cuts[c + 1]});
    }
  }
  return part;
}

// ---------------------------------------------------------------------------
// Gaps and distances
// ---------------------------------------------------------------------------

/// Pointwise suboptimality analysis at one parameter value. `delta_min` is
/// absent when every arm is optimal; `distance` and `epsilon` are filled by
/// the corresponding operations when their inputs are available.
struct GapReport {
  double theta = 0.0;
  std::vector<std::size_t> optimal_set;
  double optimal_mean = 0.0;
  std::vector<double> gap;  // per arm, 0 for optimal arms
  std::optional<double> delta_min;
  std::optional<double> distance;
  std::optional<double> epsilon;
};

inline GapReport subopt_gap(const BanditInstance& instance, double theta) {
  if (!instance.space.contains(theta))
    throw std::domain_error("subopt_gap: theta outside parameter space");
  GapReport rep;
  rep.theta = theta;
  rep.optimal_set = instance.optimal_set(theta);
  rep.optimal_mean = instance.best_mean(theta);
  rep.gap.resize(instance.num_arms(), 0.0);
  for (std::size_t k = 0; k < instance.num_arms(); ++k) {
    const double g = rep.optimal_mean - instance.mean(k, theta);
    rep.gap[k] = g;
    if (g > 0.0) rep.delta_min = rep.delta_min ? std::min(*rep.delta_min, g) : g;
  }
  return rep;
}

/// Distance from theta to the region where some currently suboptimal arm is
/// optimal; 1 when that region is empty.
inline double subopt_distance(const BanditInstance& instance, double theta,
                              const OptimalityPartition& partition) {
  if (!instance.space.contains(theta))
    throw std::domain_error("subopt_distance: theta outside parameter space");
  const auto optimal = instance.optimal_set(theta);
  double dist = std::numeric_limits<double>::infinity();
  bool any_region = false;
  for (std::size_t k = 0; k < instance.num_arms(); ++k) {
    if (std::find(optimal.begin(), optimal.end(), k) != optimal.end())
      continue;
    for (const ArmRegion& r : partition.regions[k]) {
      any_region = true;
      if (r.contains(theta)) return 0.0;
      dist = std::min(dist, std::min(std::abs(theta - r.lo),
                                     std::abs(theta - r.hi)));
    }
  }
  return any_region ? dist : 1.0;
}

/// Lower bound on the suboptimality distance: (delta_min / (2 D2))^(1/gamma2).
inline double epsilon_lower_bound(const GapReport& gap,
                                  const HolderCertificate& cert) {
  if (!gap.delta_min)
    throw std::invalid_argument(
        "epsilon_lower_bound: report has no suboptimal arm");
  return std::pow(*gap.delta_min / (2.0 * cert.d2), 1.0 / cert.gamma2);
}

// ---------------------------------------------------------------------------
// Regime constants
// ---------------------------------------------------------------------------

struct RegimeConstants {
  double delta = 0.0;
  int num_arms = 0;
  HolderCertificate cert;
  std::int64_t c1 = 1;
  std::int64_t c2 = 1;
};

namespace detail {

/// Least integer tau such that t >= c ln t for ALL t >= tau: the ceiling of
/// the upper root of x = c ln x, found by safeguarded Newton from above.
/// 1 when c <= e (the inequality then holds everywhere on [1, inf)).
inline std::int64_t least_forall_threshold(double c) {
  if (!(c > 0.0))
    throw std::invalid_argument("least_forall_threshold: c must be > 0");
  if (c <= std::numbers::e) return 1;
  double x = 2.0 * c * std::log(c);  // above the upper root for every c > e
  for (int i = 0; i < 200; ++i) {
    const double f = x - c * std::log(x);
    const double fp = 1.0 - c / x;
    const double next = x - f / fp;
    if (!(next > c)) break;  // keep the iterate right of the stationary point
    if (std::abs(next - x) < 1e-9 * std::max(1.0, std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  if (x > 4.0e18)
    throw std::overflow_error("least_forall_threshold: threshold exceeds int64");
  auto holds = [&](std::int64_t t) {
    return static_cast<double>(t) >= c * std::log(static_cast<double>(t));
  };
  std::int64_t tau = static_cast<std::int64_t>(std::ceil(x));
  while (tau > 1 && holds(tau - 1)) --tau;
  while (!holds(tau)) ++tau;
  return tau;
}

}  // namespace detail

/// C1 and C2 thresholds for the three growth regimes: the least integers tau
/// with tau >= c ln(tau) for all t >= tau, where c is
/// D1^(2/gamma1) K / (2 delta^(2/gamma1)) for C1 and twice that for C2.
inline RegimeConstants regime_constants(double delta, int num_arms,
                                        const HolderCertificate& cert) {
  if (!(delta > 0.0))
    throw std::invalid_argument("regime_constants: delta must be > 0");
  if (num_arms < 1)
    throw std::invalid_argument("regime_constants: need K >= 1");
  const double e1 = 2.0 / cert.gamma1;
  const double coeff = std::pow(cert.d1, e1) * static_cast<double>(num_arms) /
                       (2.0 * std::pow(delta, e1));
  RegimeConstants rc;
  rc.delta = delta;
  rc.num_arms = num_arms;
  rc.cert = cert;
  rc.c1 = detail::least_forall_threshold(coeff);
  rc.c2 = detail::least_forall_threshold(2.0 * coeff);
  return rc;
}

// ---------------------------------------------------------------------------
// Bound evaluators
// ---------------------------------------------------------------------------

/// Expected one-step regret envelope:
///   2 D1^g2 D2 (pi/2)^(g1 g2 / 2) K^(g1 g2 / 2) t^(-g1 g2 / 2).
inline double bound_one_step(std::int64_t t, int num_arms,
                             const HolderCertificate& cert) {
  if (t < 1) throw std::invalid_argument("bound_one_step: t must be >= 1");
  const double g = 0.5 * cert.gamma1 * cert.gamma2;
  return 2.0 * std::pow(cert.d1, cert.gamma2) * cert.d2 *
         std::pow(std::numbers::pi / 2.0, g) *
         std::pow(static_cast<double>(num_arms), g) *
         std::pow(static_cast<double>(t), -g);
}

/// Cumulative parameter-free regret envelope:
///   1 + C/(1 - g1 g2/2) (1 + T^(1 - g1 g2/2)),
/// with C the constant of the one-step envelope.
inline double bound_cumulative(std::int64_t horizon, int num_arms,
                               const HolderCertificate& cert) {
  if (horizon < 1)
    throw std::invalid_argument("bound_cumulative: T must be >= 1");
  const double g = 0.5 * cert.gamma1 * cert.gamma2;
  const double c = 2.0 * std::pow(cert.d1, cert.gamma2) * cert.d2 *
                   std::pow(std::numbers::pi / 2.0, g) *
                   std::pow(static_cast<double>(num_arms), g);
  return 1.0 +
         c / (1.0 - g) * (1.0 + std::pow(static_cast<double>(horizon), 1.0 - g));
}

/// Probability envelope for selecting a suboptimal arm, assuming pulls split
/// evenly across arms (N_k = t/K):
///   2 K exp(-2 (delta/D1)^(2/gamma1) t / K).
inline double bound_subopt_prob(std::int64_t t, double delta, int num_arms,
                                const HolderCertificate& cert) {
  if (t < 0) throw std::invalid_argument("bound_subopt_prob: t must be >= 0");
  if (!(delta > 0.0))
    throw std::invalid_argument("bound_subopt_prob: delta must be > 0");
  const double k = static_cast<double>(num_arms);
  const double rate = 2.0 * std::pow(delta / cert.d1, 2.0 / cert.gamma1) / k;
  return 2.0 * k * std::exp(-rate * static_cast<double>(t));
}

/// bound_subopt_prob capped at 1 for use as a probability.
inline double bound_subopt_prob_capped(std::int64_t t, double delta,
                                       int num_arms,
                                       const HolderCertificate& cert) {
  return std::min(1.0, bound_subopt_prob(t, delta, num_arms, cert));
}

/// Three-regime cumulative envelope stitched at C1 and C2: sublinear up to
/// C1, value at C1 plus 1 + 2K ln(T/C1) up to C2, then the regime-2 value at
/// C2 plus the constant tail K pi^2 / 3.
inline double three_regime_value(std::int64_t horizon,
                                 const RegimeConstants& rc, int num_arms,
                                 const HolderCertificate& cert) {
  if (horizon < 1)
    throw std::invalid_argument("three_regime_value: T must be >= 1");
  const double k = static_cast<double>(num_arms);
  if (horizon <= rc.c1) return bound_cumulative(horizon, num_arms, cert);
  const double at_c1 = bound_cumulative(rc.c1, num_arms, cert);
  if (horizon <= rc.c2)
    return at_c1 + 1.0 +
           2.0 * k *
               std::log(static_cast<double>(horizon) /
                        static_cast<double>(rc.c1));
  const double at_c2 =
      at_c1 + 1.0 +
      2.0 * k * std::log(static_cast<double>(rc.c2) /
                         static_cast<double>(rc.c1));
  return at_c2 + k * std::numbers::pi * std::numbers::pi / 3.0;
}

/// Bayesian risk envelope under a prior whose suboptimality-distance density
/// is bounded by B:
///   A = 2 D2 (B g1^2 D1^2 K^(1+g1) / 2^(1+g1)) Gamma(g1/2)^2,
///   1 + A (1 + 2 ln T)              when g1 g2 = 1,
///   1 + A (1 + T^(1-g1 g2)/(1-g1 g2)) otherwise.
inline double bayes_risk_bound(std::int64_t horizon, double density_bound,
                               int num_arms, const HolderCertificate& cert) {
  if (horizon < 1)
    throw std::invalid_argument("bayes_risk_bound: T must be >= 1");
  if (!(density_bound > 0.0))
    throw std::invalid_argument("bayes_risk_bound: B must be > 0");
  const double k = static_cast<double>(num_arms);
  const double g1 = cert.gamma1;
  const double gamma_half = std::tgamma(g1 / 2.0);
  const double a = 2.0 * cert.d2 *
                   (density_bound * g1 * g1 * cert.d1 * cert.d1 *
                    std::pow(k, 1.0 + g1) / std::pow(2.0, 1.0 + g1)) *
                   gamma_half * gamma_half;
  const double prod = g1 * cert.gamma2;
  const double T = static_cast<double>(horizon);
  if (std::abs(prod - 1.0) < 1e-12) return 1.0 + a * (1.0 + 2.0 * std::log(T));
  return 1.0 + a * (1.0 + std::pow(T, 1.0 - prod) / (1.0 - prod));
}

// ---------------------------------------------------------------------------
// Sampled bound curves (CSV export)
// ---------------------------------------------------------------------------

enum class BoundKind { OneStep, Cumulative, SuboptProb, ThreeRegime, BayesRisk };

inline const char* bound_kind_name(BoundKind kind) {
  switch (kind) {
    case BoundKind::OneStep: return "one_step";
    case BoundKind::Cumulative: return "cumulative";
    case BoundKind::SuboptProb: return "subopt_prob";
    case BoundKind::ThreeRegime: return "three_regime";
    case BoundKind::BayesRisk: return "bayes_risk";
  }
  return "?";
}

struct BoundCurve {
  BoundKind kind = BoundKind::Cumulative;
  std::string constants;  // human-readable constants, hashed in CSV output
  std::vector<std::pair<std::int64_t, double>> points;
};

/// Log-spaced integer grid from 1 to horizon (inclusive, deduplicated).
inline std::vector<std::int64_t> log_spaced_times(std::int64_t horizon,
                                                  int count = 33) {
  std::vector<std::int64_t> ts;
  if (horizon < 1) return ts;
  for (int i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / (count - 1);
    const auto t = static_cast<std::int64_t>(
        std::llround(std::pow(static_cast<double>(horizon), f)));
    if (ts.empty() || t > ts.back()) ts.push_back(std::max<std::int64_t>(1, t));
  }
  if (ts.back() != horizon) ts.push_back(horizon);
  return ts;
}

inline BoundCurve bound_three_regime(std::int64_t horizon,
                                     const RegimeConstants& rc, int num_arms,
                                     const HolderCertificate& cert) {
  BoundCurve curve;
  curve.kind = BoundKind::ThreeRegime;
  curve.constants = "C1=" + std::to_string(rc.c1) +
                    ";C2=" + std::to_string(rc.c2) +
                    ";K=" + std::to_string(num_arms) +
                    ";delta=" + std::to_string(rc.delta);
  auto ts = log_spaced_times(horizon);
  for (std::int64_t marker : {rc.c1, rc.c2})
    if (marker >= 1 && marker <= horizon) ts.push_back(marker);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  for (std::int64_t t : ts)
    curve.points.emplace_back(t, three_regime_value(t, rc, num_arms, cert));
  return curve;
}

}  // namespace gmab
