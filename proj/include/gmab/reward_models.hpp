#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gmab/random.hpp"

namespace gmab {

/// Error raised when an instance, configuration, or preset fails validation.
/// `field` names the offending entry so the CLI can report it precisely.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Closed interval the global parameter lives in.
struct ParameterSpace {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double theta) const { return theta >= lo && theta <= hi; }
  double clamp(double theta) const { return std::min(hi, std::max(lo, theta)); }
  void validate() const {
    if (!(lo < hi)) throw ConfigError("space", "requires lo < hi");
  }
};

/// Joint Hölder constants: D1,gamma1 bound the inverse mean functions,
/// D2,gamma2 bound the forward mean functions, worst case over all arms.
struct HolderCertificate {
  double d1 = 1.0;
  double gamma1 = 1.0;
  double d2 = 1.0;
  double gamma2 = 1.0;

  void validate() const {
    if (!(d1 > 0.0)) throw ConfigError("cert.d1", "must be > 0");
    if (!(d2 > 0.0)) throw ConfigError("cert.d2", "must be > 0");
    if (!(gamma1 > 0.0 && gamma1 <= 1.0))
      throw ConfigError("cert.gamma1", "must be in (0, 1]");
    if (!(gamma2 > 0.0 && gamma2 <= 1.0))
      throw ConfigError("cert.gamma2", "must be in (0, 1]");
  }
};

enum class NoiseKind { Bernoulli, UniformBand, Deterministic };

/// Mean-preserving reward noise with support inside [0,1].
/// UniformBand shrinks its half-width to min(halfwidth, mu, 1-mu) so the
/// support stays in [0,1] without shifting the mean.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::Bernoulli;
  double halfwidth = 0.0;

  void validate() const {
    if (kind == NoiseKind::UniformBand &&
        !(halfwidth >= 0.0 && halfwidth <= 0.5))
      throw ConfigError("noise.halfwidth", "must be in [0, 0.5]");
  }
};

// ---------------------------------------------------------------------------
// Mean-function families
// ---------------------------------------------------------------------------

struct LinearFn {
  double slope = 1.0;
  double intercept = 0.0;
};

/// Strictly monotone piecewise-linear interpolant through (x, y) knots.
/// Knots must span the parameter space.
struct PiecewiseLinearFn {
  std::vector<double> xs;
  std::vector<double> ys;
};

struct PowerFn {
  double scale = 1.0;
  double exponent = 1.0;
};

struct ExponentialFn {
  double scale = 1.0;
  double rate = 1.0;
};

struct LogisticFn {
  double steepness = 1.0;
  double midpoint = 0.5;
};

struct OneMinusSqrtFn {};

/// Step function: values[i] on [edges[i], edges[i+1]), last interval closed.
/// Not invertible; rejected by make_instance and only produced by
/// make_counterexample.
struct StepFn {
  std::vector<double> edges;
  std::vector<double> values;
};

using MeanFn = std::variant<LinearFn, PiecewiseLinearFn, PowerFn,
                            ExponentialFn, LogisticFn, OneMinusSqrtFn, StepFn>;

struct RewardModel {
  MeanFn fn;
  NoiseSpec noise;
};

inline const char* family_name(const MeanFn& fn) {
  struct Namer {
    const char* operator()(const LinearFn&) const { return "linear"; }
    const char* operator()(const PiecewiseLinearFn&) const {
      return "piecewise_linear";
    }
    const char* operator()(const PowerFn&) const { return "power"; }
    const char* operator()(const ExponentialFn&) const { return "exponential"; }
    const char* operator()(const LogisticFn&) const { return "logistic"; }
    const char* operator()(const OneMinusSqrtFn&) const {
      return "one_minus_sqrt";
    }
    const char* operator()(const StepFn&) const { return "piecewise_constant"; }
  };
  return std::visit(Namer{}, fn);
}

inline bool is_step_family(const RewardModel& m) {
  return std::holds_alternative<StepFn>(m.fn);
}

namespace detail {

inline double eval_fn(const MeanFn& fn, double theta) {
  struct Eval {
    double theta;
    double operator()(const LinearFn& f) const {
      return f.slope * theta + f.intercept;
    }
    double operator()(const PiecewiseLinearFn& f) const {
      const auto& xs = f.xs;
      if (theta <= xs.front()) return f.ys.front();
      if (theta >= xs.back()) return f.ys.back();
      auto it = std::upper_bound(xs.begin(), xs.end(), theta);
      std::size_t j = static_cast<std::size_t>(it - xs.begin());
      double t = (theta - xs[j - 1]) / (xs[j] - xs[j - 1]);
      return f.ys[j - 1] + t * (f.ys[j] - f.ys[j - 1]);
    }
    double operator()(const PowerFn& f) const {
      if (f.exponent == 2.0) return f.scale * theta * theta;
      if (f.exponent == 1.0) return f.scale * theta;
      if (f.exponent == 0.5) return f.scale * std::sqrt(theta);
      return f.scale * std::pow(theta, f.exponent);
    }
    double operator()(const ExponentialFn& f) const {
      return f.scale * std::exp(f.rate * theta);
    }
    double operator()(const LogisticFn& f) const {
      return 1.0 / (1.0 + std::exp(-f.steepness * (theta - f.midpoint)));
    }
    double operator()(const OneMinusSqrtFn&) const {
      return 1.0 - std::sqrt(theta);
    }
    double operator()(const StepFn& f) const {
      const auto& e = f.edges;
      if (theta >= e.back()) return f.values.back();
      auto it = std::upper_bound(e.begin(), e.end(), theta);
      std::size_t j = static_cast<std::size_t>(it - e.begin());
      return f.values[j == 0 ? 0 : j - 1];
    }
  };
  return std::visit(Eval{theta}, fn);
}

}  // namespace detail

/// Expected reward of a model at theta. Pure; throws std::domain_error when
/// theta lies outside the parameter space.
inline double eval_mean(const RewardModel& model, double theta,
                        const ParameterSpace& space) {
  if (!space.contains(theta))
    throw std::domain_error("eval_mean: theta " + std::to_string(theta) +
                            " outside parameter space");
  return detail::eval_fn(model.fn, theta);
}

/// Image endpoints of the mean function over the space, ordered low/high.
struct ImageInterval {
  double lo;
  double hi;
  double clamp(double y) const { return std::min(hi, std::max(lo, y)); }
};

inline ImageInterval mean_image(const RewardModel& model,
                                const ParameterSpace& space) {
  double a = detail::eval_fn(model.fn, space.lo);
  double b = detail::eval_fn(model.fn, space.hi);
  return {std::min(a, b), std::max(a, b)};
}

namespace detail {

constexpr double kInvertThetaTol = 1e-10;
constexpr int kInvertMaxIters = 200;

/// Bisection inverse of a strictly monotone mean function. Unconditionally
/// convergent on the bracketing interval; absolute tolerance on theta.
inline double bisect_invert(const MeanFn& fn, double y,
                            const ParameterSpace& space) {
  double lo = space.lo, hi = space.hi;
  double flo = eval_fn(fn, lo);
  double fhi = eval_fn(fn, hi);
  const bool increasing = fhi > flo;
  if (increasing) {
    if (y <= flo) return lo;
    if (y >= fhi) return hi;
  } else {
    if (y >= flo) return lo;
    if (y <= fhi) return hi;
  }
  for (int i = 0; i < kInvertMaxIters && (hi - lo) > kInvertThetaTol; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = eval_fn(fn, mid);
    if ((fm < y) == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Inverse mean: returns theta with mu(theta) = y after clamping y into the
/// image interval. Analytic for closed-form families, bisection for
/// piecewise-linear. Throws for the non-invertible step family.
inline double invert_mean(const RewardModel& model, double y,
                          const ParameterSpace& space) {
  if (is_step_family(model))
    throw std::runtime_error(
        "invert_mean: piecewise_constant family is not invertible");
  const ImageInterval im = mean_image(model, space);
  const double yc = im.clamp(y);

  struct Invert {
    double yc;
    const ParameterSpace& space;
    const MeanFn& fn;
    double operator()(const LinearFn& f) const {
      return (yc - f.intercept) / f.slope;
    }
    double operator()(const PiecewiseLinearFn&) const {
      return detail::bisect_invert(fn, yc, space);
    }
    double operator()(const PowerFn& f) const {
      return std::pow(yc / f.scale, 1.0 / f.exponent);
    }
    double operator()(const ExponentialFn& f) const {
      return std::log(yc / f.scale) / f.rate;
    }
    double operator()(const LogisticFn& f) const {
      return f.midpoint + std::log(yc / (1.0 - yc)) / f.steepness;
    }
    double operator()(const OneMinusSqrtFn&) const {
      double s = 1.0 - yc;
      return s * s;
    }
    double operator()(const StepFn&) const { return 0.0; }  // unreachable
  };
  double theta = std::visit(Invert{yc, space, model.fn}, model.fn);
  return space.clamp(theta);
}

/// Generalized inverse usable for any family. Monotone families defer to
/// invert_mean; for step functions it returns the infimum of the preimage of
/// the achieved value nearest to y (the smaller value on a midpoint tie).
inline double generalized_invert(const RewardModel& model, double y,
                                 const ParameterSpace& space) {
  if (!is_step_family(model)) return invert_mean(model, y, space);
  const auto& f = std::get<StepFn>(model.fn);
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    double gap = std::abs(f.values[i] - y);
    if (gap < best_gap - 1e-15 ||
        (std::abs(gap - best_gap) <= 1e-15 && f.values[i] < f.values[best])) {
      best_gap = gap;
      best = i;
    }
  }
  // Infimum of the preimage: the left edge of the first interval carrying
  // the matched value.
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (f.values[i] == f.values[best]) return f.edges[i];
  return f.edges[best];
}

// ---------------------------------------------------------------------------
// Hölder verification
// ---------------------------------------------------------------------------

struct HolderViolation {
  bool inverse_side = false;  // true: D1/gamma1 check, false: D2/gamma2 check
  double x1 = 0.0, x2 = 0.0;  // the violating pair (theta pair or y pair)
  double lhs = 0.0, rhs = 0.0;
};

struct HolderReport {
  bool pass = true;
  int grid_points = 0;
  std::optional<HolderViolation> violation;
};

/// Checks both Hölder inequalities on all pairs of an evenly spaced grid:
///   forward:  |mu(t) - mu(t')|          <= D2 |t - t'|^gamma2
///   inverse:  |mu^-1(y) - mu^-1(y')|    <= D1 |y - y'|^gamma1
/// using (theta_i, y_i = mu(theta_i)) as exact inverse pairs. Certificates
/// with exactly tight constants pass: comparisons carry a relative slack plus
/// an absolute one, since evaluation rounding (ulps of values near 1) can
/// exceed any relative margin when adjacent grid differences are small.
/// Report-only, never throws.
inline HolderReport verify_holder(const RewardModel& model,
                                  const HolderCertificate& cert,
                                  int grid_points,
                                  const ParameterSpace& space) {
  if (grid_points < 2)
    throw std::invalid_argument("verify_holder: grid_points must be >= 2");
  const std::size_t n = static_cast<std::size_t>(grid_points);
  const double h = space.width() / static_cast<double>(n - 1);
  constexpr double kRelSlack = 1e-12;
  constexpr double kAbsSlack = 1e-13;

  std::vector<double> theta(n), mu(n), inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = (i + 1 == n) ? space.hi : space.lo + static_cast<double>(i) * h;
    mu[i] = detail::eval_fn(model.fn, theta[i]);
    // mu^-1(mu[i]) is theta[i] for invertible families; step functions use
    // the generalized inverse, which honestly fails the check at jumps.
    inv[i] = is_step_family(model)
                 ? generalized_invert(model, mu[i], space)
                 : theta[i];
  }

  // Distance powers depend only on the index gap on an even grid.
  std::vector<double> fwd_rhs(n), inv_lhs(n);
  const double inv_gamma1 = 1.0 / cert.gamma1;
  const double d1_pow = std::pow(cert.d1, inv_gamma1);
  for (std::size_t d = 1; d < n; ++d) {
    const double dist = static_cast<double>(d) * h;
    fwd_rhs[d] = cert.d2 * std::pow(dist, cert.gamma2);
    inv_lhs[d] = std::pow(dist, inv_gamma1);
  }

  HolderReport report;
  report.grid_points = grid_points;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t d = j - i;
      const double dmu = std::abs(mu[i] - mu[j]);
      if (dmu > fwd_rhs[d] * (1.0 + kRelSlack) + kAbsSlack) {
        report.pass = false;
        report.violation = HolderViolation{
            false, theta[i], theta[j], dmu,
            cert.d2 * std::pow(std::abs(theta[i] - theta[j]), cert.gamma2)};
        return report;
      }
      // |inv_i - inv_j| <= D1 |y_i - y_j|^g1, compared with the power moved
      // to the evenly spaced side so the pow() is precomputable.
      const double dinv = std::abs(inv[i] - inv[j]);
      const double lhs = is_step_family(model)
                             ? std::pow(dinv, inv_gamma1)
                             : inv_lhs[d];
      if (lhs > d1_pow * (dmu * (1.0 + kRelSlack) + kAbsSlack)) {
        report.pass = false;
        report.violation =
            HolderViolation{true, mu[i], mu[j], dinv,
                            cert.d1 * std::pow(dmu, cert.gamma1)};
        return report;
      }
    }
  }
  return report;
}

/// Draws one reward with mean exactly mu(theta) and support inside [0,1].
inline double sample_reward(const RewardModel& model, double theta, Rng& rng,
                            const ParameterSpace& space) {
  const double mu = eval_mean(model, theta, space);
  switch (model.noise.kind) {
    case NoiseKind::Deterministic:
      return mu;
    case NoiseKind::Bernoulli:
      return rng.bernoulli(mu) ? 1.0 : 0.0;
    case NoiseKind::UniformBand: {
      const double w = std::min({model.noise.halfwidth, mu, 1.0 - mu});
      const double x = mu + w * (2.0 * rng.uniform01() - 1.0);
      return std::min(1.0, std::max(0.0, x));
    }
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

struct BanditInstance {
  ParameterSpace space;
  std::vector<RewardModel> arms;
  HolderCertificate cert;
  bool invertible = true;

  std::size_t num_arms() const { return arms.size(); }

  double mean(std::size_t k, double theta) const {
    return eval_mean(arms.at(k), theta, space);
  }

  /// Per-arm global-parameter estimate from a sample mean: clamped inversion
  /// for monotone arms, generalized inverse for step arms.
  double estimate_parameter(std::size_t k, double sample_mean) const {
    const RewardModel& m = arms.at(k);
    if (is_step_family(m)) return generalized_invert(m, sample_mean, space);
    return invert_mean(m, sample_mean, space);
  }

  double best_mean(double theta) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < arms.size(); ++k)
      best = std::max(best, mean(k, theta));
    return best;
  }

  /// Arms attaining the maximal mean at theta (exact double comparison).
  std::vector<std::size_t> optimal_set(double theta) const {
    const double best = best_mean(theta);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < arms.size(); ++k)
      if (mean(k, theta) == best) out.push_back(k);
    return out;
  }
};

namespace detail {

inline void check_monotone_in_unit(const RewardModel& model,
                                   const ParameterSpace& space,
                                   std::size_t arm_index, int grid) {
  double prev = eval_fn(model.fn, space.lo);
  const bool increasing =
      eval_fn(model.fn, space.hi) > prev;
  const double h = space.width() / static_cast<double>(grid - 1);
  for (int i = 0; i < grid; ++i) {
    const double th =
        (i + 1 == grid) ? space.hi : space.lo + static_cast<double>(i) * h;
    const double v = eval_fn(model.fn, th);
    if (v < 0.0 || v > 1.0)
      throw ConfigError("arms[" + std::to_string(arm_index) + "]",
                        "mean leaves [0,1] at theta=" + std::to_string(th) +
                            " (value " + std::to_string(v) + ")");
    if (i > 0) {
      const bool ok = increasing ? (v > prev) : (v < prev);
      if (!ok)
        throw ConfigError("arms[" + std::to_string(arm_index) + "]",
                          "mean is not strictly monotone near theta=" +
                              std::to_string(th));
      prev = v;
    } else {
      prev = v;
    }
  }
}

}  // namespace detail

/// Builds a validated invertible instance: every arm strictly monotone with
/// image in [0,1], inversion round-trips, and the shared certificate passes
/// verify_holder for every arm. Errors name the arm and the violating pair.
inline BanditInstance make_instance(std::vector<RewardModel> models,
                                    const ParameterSpace& space,
                                    const HolderCertificate& cert,
                                    int validation_grid = 512) {
  space.validate();
  cert.validate();
  if (models.empty()) throw ConfigError("arms", "instance needs K >= 1 arms");
  for (std::size_t k = 0; k < models.size(); ++k) {
    const std::string field = "arms[" + std::to_string(k) + "]";
    models[k].noise.validate();
    if (is_step_family(models[k]))
      throw ConfigError(field,
                        "piecewise_constant arms are not invertible; standard "
                        "instance construction rejects them");
    detail::check_monotone_in_unit(models[k], space, k, validation_grid);
    // Inversion round-trip.
    const double h = space.width() / (validation_grid - 1);
    for (int i = 0; i < validation_grid; ++i) {
      const double th = (i + 1 == validation_grid)
                            ? space.hi
                            : space.lo + static_cast<double>(i) * h;
      const double back =
          invert_mean(models[k], detail::eval_fn(models[k].fn, th), space);
      if (std::abs(back - th) > 1e-8)
        throw ConfigError(field, "inversion round-trip failed at theta=" +
                                     std::to_string(th));
    }
    const HolderReport rep =
        verify_holder(models[k], cert, validation_grid, space);
    if (!rep.pass) {
      const HolderViolation& v = *rep.violation;
      throw ConfigError(
          field, std::string("certificate violated on the ") +
                     (v.inverse_side ? "inverse" : "forward") + " side at (" +
                     std::to_string(v.x1) + ", " + std::to_string(v.x2) +
                     "): " + std::to_string(v.lhs) + " > " +
                     std::to_string(v.rhs));
    }
  }
  return BanditInstance{space, std::move(models), cert, true};
}

/// Non-invertible instance: the parameter space splits into K! equal
/// intervals, one per permutation of `values` in lexicographic order, and arm
/// k's mean on interval j is the k-th element of permutation j.
inline BanditInstance make_counterexample(
    int K, std::vector<double> values,
    const ParameterSpace& space = ParameterSpace{},
    const NoiseSpec& noise = NoiseSpec{NoiseKind::Bernoulli, 0.0}) {
  space.validate();
  if (K < 2) throw ConfigError("K", "counter-example needs K >= 2");
  if (K > 8) throw ConfigError("K", "counter-example capped at K <= 8");
  if (static_cast<int>(values.size()) != K)
    throw ConfigError("values", "expected exactly K values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0 || values[i] > 1.0)
      throw ConfigError("values[" + std::to_string(i) + "]",
                        "must lie in [0,1]");
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (values[i] == values[j])
        throw ConfigError("values", "must be distinct (duplicate " +
                                        std::to_string(values[i]) + ")");
  }

  std::sort(values.begin(), values.end());
  std::vector<std::vector<double>> perms;
  std::vector<double> perm = values;
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  const std::size_t m = perms.size();  // K!
  std::vector<double> edges(m + 1);
  for (std::size_t j = 0; j <= m; ++j)
    edges[j] = space.lo + space.width() * static_cast<double>(j) /
                              static_cast<double>(m);
  edges.back() = space.hi;

  std::vector<RewardModel> arms;
  arms.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    StepFn fn;
    fn.edges = edges;
    fn.values.reserve(m);
    for (std::size_t j = 0; j < m; ++j)
      fn.values.push_back(perms[j][static_cast<std::size_t>(k)]);
    arms.push_back(RewardModel{std::move(fn), noise});
  }
  return BanditInstance{space, std::move(arms), HolderCertificate{}, false};
}

}  // namespace gmab
