#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gmab/analysis.hpp"
#include "gmab/reward_models.hpp"
#include "gmab/simulator.hpp"

namespace gmab {

using json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic decimal formatting for CSV bodies: '.' decimal separator,
/// no grouping, 12 significant digits.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// ---------------------------------------------------------------------------
// JSON schema (documented in README.md, round-trips losslessly)
// ---------------------------------------------------------------------------

namespace detail {

inline const json& require(const json& j, const char* key,
                           const std::string& field) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(field, "missing required key");
  return *it;
}

inline double require_num(const json& j, const char* key,
                          const std::string& field) {
  const json& v = require(j, key, field);
  if (!v.is_number()) throw ConfigError(field, "must be a number");
  return v.get<double>();
}

}  // namespace detail

inline json noise_to_json(const NoiseSpec& n) {
  switch (n.kind) {
    case NoiseKind::Bernoulli: return json{{"kind", "bernoulli"}};
    case NoiseKind::Deterministic: return json{{"kind", "deterministic"}};
    case NoiseKind::UniformBand:
      return json{{"kind", "uniform_band"}, {"halfwidth", n.halfwidth}};
  }
  return json{};
}

inline NoiseSpec noise_from_json(const json& j, const std::string& field) {
  NoiseSpec n;
  const std::string kind =
      detail::require(j, "kind", field + ".kind").get<std::string>();
  if (kind == "bernoulli") {
    n.kind = NoiseKind::Bernoulli;
  } else if (kind == "deterministic") {
    n.kind = NoiseKind::Deterministic;
  } else if (kind == "uniform_band") {
    n.kind = NoiseKind::UniformBand;
    n.halfwidth = detail::require_num(j, "halfwidth", field + ".halfwidth");
  } else {
    throw ConfigError(field + ".kind", "unknown noise kind '" + kind + "'");
  }
  n.validate();
  return n;
}

inline json model_to_json(const RewardModel& m) {
  json j;
  j["family"] = family_name(m.fn);
  struct Fields {
    json& j;
    void operator()(const LinearFn& f) const {
      j["slope"] = f.slope;
      j["intercept"] = f.intercept;
    }
    void operator()(const PiecewiseLinearFn& f) const {
      j["knots_x"] = f.xs;
      j["knots_y"] = f.ys;
    }
    void operator()(const PowerFn& f) const {
      j["scale"] = f.scale;
      j["exponent"] = f.exponent;
    }
    void operator()(const ExponentialFn& f) const {
      j["scale"] = f.scale;
      j["rate"] = f.rate;
    }
    void operator()(const LogisticFn& f) const {
      j["steepness"] = f.steepness;
      j["midpoint"] = f.midpoint;
    }
    void operator()(const OneMinusSqrtFn&) const {}
    void operator()(const StepFn& f) const {
      j["edges"] = f.edges;
      j["values"] = f.values;
    }
  };
  std::visit(Fields{j}, m.fn);
  j["noise"] = noise_to_json(m.noise);
  return j;
}

inline RewardModel model_from_json(const json& j, const std::string& field) {
  RewardModel m;
  const std::string family =
      detail::require(j, "family", field + ".family").get<std::string>();
  auto num = [&](const char* key) {
    return detail::require_num(j, key, field + "." + key);
  };
  auto vec = [&](const char* key) {
    const json& v = detail::require(j, key, field + "." + key);
    if (!v.is_array()) throw ConfigError(field + "." + key, "must be an array");
    return v.get<std::vector<double>>();
  };
  if (family == "linear") {
    m.fn = LinearFn{num("slope"), num("intercept")};
  } else if (family == "piecewise_linear") {
    m.fn = PiecewiseLinearFn{vec("knots_x"), vec("knots_y")};
  } else if (family == "power") {
    m.fn = PowerFn{num("scale"), num("exponent")};
  } else if (family == "exponential") {
    m.fn = ExponentialFn{num("scale"), num("rate")};
  } else if (family == "logistic") {
    m.fn = LogisticFn{num("steepness"), num("midpoint")};
  } else if (family == "one_minus_sqrt") {
    m.fn = OneMinusSqrtFn{};
  } else if (family == "piecewise_constant") {
    m.fn = StepFn{vec("edges"), vec("values")};
  } else {
    throw ConfigError(field + ".family", "unknown family '" + family + "'");
  }
  if (j.contains("noise"))
    m.noise = noise_from_json(j.at("noise"), field + ".noise");
  return m;
}

inline json cert_to_json(const HolderCertificate& c) {
  return json{{"d1", c.d1}, {"gamma1", c.gamma1}, {"d2", c.d2},
              {"gamma2", c.gamma2}};
}

inline HolderCertificate cert_from_json(const json& j) {
  HolderCertificate c;
  c.d1 = detail::require_num(j, "d1", "cert.d1");
  c.gamma1 = detail::require_num(j, "gamma1", "cert.gamma1");
  c.d2 = detail::require_num(j, "d2", "cert.d2");
  c.gamma2 = detail::require_num(j, "gamma2", "cert.gamma2");
  c.validate();
  return c;
}

inline json instance_to_json(const BanditInstance& inst) {
  json arms = json::array();
  for (const RewardModel& m : inst.arms) arms.push_back(model_to_json(m));
  return json{{"space", {{"lo", inst.space.lo}, {"hi", inst.space.hi}}},
              {"arms", arms},
              {"cert", cert_to_json(inst.cert)},
              {"invertible", inst.invertible}};
}

/// Parses and validates an instance description. Invertible instances are
/// rebuilt through make_instance so every construction check reruns on load.
inline BanditInstance instance_from_json(const json& j) {
  ParameterSpace space;
  const json& sp = detail::require(j, "space", "space");
  space.lo = detail::require_num(sp, "lo", "space.lo");
  space.hi = detail::require_num(sp, "hi", "space.hi");
  space.validate();

  const json& arms_json = detail::require(j, "arms", "arms");
  if (!arms_json.is_array() || arms_json.empty())
    throw ConfigError("arms", "must be a nonempty array");
  std::vector<RewardModel> arms;
  for (std::size_t k = 0; k < arms_json.size(); ++k)
    arms.push_back(
        model_from_json(arms_json[k], "arms[" + std::to_string(k) + "]"));

  const HolderCertificate cert =
      cert_from_json(detail::require(j, "cert", "cert"));

  bool any_step = false;
  for (const RewardModel& m : arms) any_step = any_step || is_step_family(m);
  const bool invertible = j.value("invertible", !any_step);
  if (invertible) return make_instance(std::move(arms), space, cert);
  return BanditInstance{space, std::move(arms), cert, false};
}

inline json policy_to_json(const PolicyConfig& p) {
  switch (p.kind) {
    case PolicyKind::Greedy: return json{{"kind", "greedy"}};
    case PolicyKind::Ucb1: return json{{"kind", "ucb1"}};
    case PolicyKind::Hierarchical:
      return json{{"kind", "hierarchical"}, {"groups", p.groups}};
  }
  return json{};
}

inline PolicyConfig policy_from_json(const json& j) {
  PolicyConfig p;
  const std::string kind =
      detail::require(j, "kind", "policy.kind").get<std::string>();
  if (kind == "greedy") {
    p.kind = PolicyKind::Greedy;
  } else if (kind == "ucb1") {
    p.kind = PolicyKind::Ucb1;
  } else if (kind == "hierarchical") {
    p.kind = PolicyKind::Hierarchical;
    const json& g = detail::require(j, "groups", "policy.groups");
    if (!g.is_array()) throw ConfigError("policy.groups", "must be an array");
    p.groups = g.get<std::vector<std::vector<std::size_t>>>();
  } else {
    throw ConfigError("policy.kind", "unknown policy '" + kind + "'");
  }
  return p;
}

inline json prior_to_json(const PriorSpec& p) {
  if (p.kind == PriorSpec::Kind::Uniform)
    return json{{"kind", "uniform"}, {"lo", p.lo}, {"hi", p.hi},
                {"bound", p.density_bound}};
  return json{{"kind", "piecewise"}, {"breaks", p.breaks},
              {"weights", p.weights}, {"bound", p.density_bound}};
}

inline PriorSpec prior_from_json(const json& j) {
  PriorSpec p;
  const std::string kind =
      detail::require(j, "kind", "prior.kind").get<std::string>();
  p.density_bound = detail::require_num(j, "bound", "prior.bound");
  if (kind == "uniform") {
    p.kind = PriorSpec::Kind::Uniform;
    p.lo = detail::require_num(j, "lo", "prior.lo");
    p.hi = detail::require_num(j, "hi", "prior.hi");
  } else if (kind == "piecewise") {
    p.kind = PriorSpec::Kind::PiecewiseDensity;
    p.breaks = detail::require(j, "breaks", "prior.breaks")
                   .get<std::vector<double>>();
    p.weights = detail::require(j, "weights", "prior.weights")
                    .get<std::vector<double>>();
  } else {
    throw ConfigError("prior.kind", "unknown prior '" + kind + "'");
  }
  return p;
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["instance"] = instance_to_json(cfg.instance);
  j["policy"] = policy_to_json(cfg.policy);
  if (cfg.theta_star) j["theta_star"] = *cfg.theta_star;
  if (cfg.prior) j["prior"] = prior_to_json(*cfg.prior);
  j["horizon"] = cfg.horizon;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  if (!cfg.checkpoints.empty()) j["checkpoints"] = cfg.checkpoints;
  j["lemma_checks"] = cfg.lemma_checks;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.instance = instance_from_json(detail::require(j, "instance", "instance"));
  cfg.policy = policy_from_json(detail::require(j, "policy", "policy"));
  if (j.contains("theta_star")) {
    if (!j["theta_star"].is_number())
      throw ConfigError("theta_star", "must be a number");
    cfg.theta_star = j["theta_star"].get<double>();
  }
  if (j.contains("prior")) cfg.prior = prior_from_json(j["prior"]);
  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer())
      throw ConfigError("horizon", "must be an integer");
    cfg.horizon = j["horizon"].get<std::int64_t>();
  }
  if (j.contains("replications")) {
    if (!j["replications"].is_number_integer())
      throw ConfigError("replications", "must be an integer");
    cfg.replications = j["replications"].get<std::int64_t>();
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("checkpoints"))
    cfg.checkpoints = j["checkpoints"].get<std::vector<std::int64_t>>();
  if (j.contains("lemma_checks")) cfg.lemma_checks = j["lemma_checks"].get<bool>();
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// CSV bodies (LF line endings, '.' decimal, no separators)
// ---------------------------------------------------------------------------

/// One row per (checkpoint, statistic). `bound_overlay` is empty when no
/// envelope applies to the statistic.
inline std::string results_csv(const AggregateResult& agg, bool bayes_run) {
  std::string out = "t,mean,stderr,bound_overlay,kind\n";
  auto row = [&out](std::int64_t t, double mean, double se,
                    const std::string& overlay, const char* kind) {
    out += std::to_string(t) + "," + format_double(mean) + "," +
           format_double(se) + "," + overlay + "," + kind + "\n";
  };
  for (const AggregateCheckpoint& c : agg.rows) {
    if (bayes_run) {
      row(c.t, c.cum_regret.mean, c.cum_regret.stderr_,
          c.bound_bayes_v ? format_double(*c.bound_bayes_v) : "",
          "bayes_risk");
    } else {
      row(c.t, c.cum_regret.mean, c.cum_regret.stderr_,
          format_double(c.bound_cumulative_v), "cum_regret");
    }
    row(c.t, c.step_regret.mean, c.step_regret.stderr_,
        format_double(c.bound_one_step_v), "step_regret");
    row(c.t, c.prob_subopt, c.prob_subopt_se,
        c.bound_subopt_prob_v ? format_double(*c.bound_subopt_prob_v) : "",
        "prob_subopt");
    row(c.t, c.mean_subopt_pulls_window, 0.0, "", "subopt_pulls_window");
  }
  return out;
}

inline std::string bounds_csv(const std::vector<BoundCurve>& curves) {
  std::string out = "t,value,kind,constants_hash\n";
  for (const BoundCurve& c : curves) {
    const std::string hash = fnv1a64_hex(c.constants);
    for (const auto& [t, v] : c.points)
      out += std::to_string(t) + "," + format_double(v) + "," +
             bound_kind_name(c.kind) + "," + hash + "\n";
  }
  return out;
}

inline std::string partition_csv(const OptimalityPartition& part) {
  std::string out = "arm,lo,hi\n";
  for (std::size_t k = 0; k < part.regions.size(); ++k)
    for (const ArmRegion& r : part.regions[k])
      out += std::to_string(k) + "," + format_double(r.lo) + "," +
             format_double(r.hi) + "\n";
  return out;
}

inline std::string gap_csv(const GapReport& rep) {
  std::string out = "field,arm,value\n";
  out += "theta,," + format_double(rep.theta) + "\n";
  out += "mu_star,," + format_double(rep.optimal_mean) + "\n";
  for (std::size_t k : rep.optimal_set)
    out += "optimal," + std::to_string(k) + ",1\n";
  for (std::size_t k = 0; k < rep.gap.size(); ++k)
    out += "gap," + std::to_string(k) + "," + format_double(rep.gap[k]) + "\n";
  if (rep.delta_min)
    out += "delta_min,," + format_double(*rep.delta_min) + "\n";
  if (rep.distance)
    out += "distance,," + format_double(*rep.distance) + "\n";
  if (rep.epsilon) out += "epsilon,," + format_double(*rep.epsilon) + "\n";
  return out;
}

inline std::string regimes_csv(const RegimeConstants& rc) {
  std::string out = "delta,num_arms,d1,gamma1,d2,gamma2,c1,c2\n";
  out += format_double(rc.delta) + "," + std::to_string(rc.num_arms) + "," +
         format_double(rc.cert.d1) + "," + format_double(rc.cert.gamma1) +
         "," + format_double(rc.cert.d2) + "," +
         format_double(rc.cert.gamma2) + "," + std::to_string(rc.c1) + "," +
         std::to_string(rc.c2) + "\n";
  return out;
}

inline void write_file(const std::string& path, std::string_view body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string body((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return body;
}

}  // namespace gmab
