// Command-line harness: runs preset or config-file experiments and offline
// instance analysis, writing plot-ready CSV files plus a JSON manifest with
// content hashes of every emitted file.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmab/analysis.hpp"
#include "gmab/io.hpp"
#include "gmab/presets.hpp"
#include "gmab/simulator.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr const char* kVersion = "0.1.0";

struct CommonArgs {
  std::string preset;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> horizon;
  std::optional<std::int64_t> reps;
  std::string checkpoints;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("GMAB_OUT_DIR")) return env;
  return "./gmab-out";
}

std::vector<std::int64_t> parse_checkpoints(const std::string& list) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while (pos < list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string::npos) comma = list.size();
    const std::string tok = list.substr(pos, comma - pos);
    if (!tok.empty()) {
      try {
        out.push_back(std::stoll(tok));
      } catch (const std::exception&) {
        throw gmab::ConfigError("checkpoints", "not an integer: '" + tok + "'");
      }
    }
    pos = comma + 1;
  }
  return out;
}

struct ResolvedRun {
  gmab::ExperimentConfig config;
  double budget_seconds = 600.0;
  std::string source;  // preset name or config path
};

ResolvedRun resolve(const CommonArgs& args) {
  ResolvedRun run;
  if (!args.preset.empty() && !args.config_path.empty())
    throw gmab::ConfigError("preset", "give either --preset or --config");
  if (args.preset.empty() && args.config_path.empty())
    throw gmab::ConfigError("preset", "one of --preset or --config is required");
  if (!args.preset.empty()) {
    gmab::ScenarioPreset p = gmab::make_preset(args.preset);
    run.config = std::move(p.config);
    run.budget_seconds = p.budget_seconds;
    run.source = p.name;
  } else {
    const std::string body = gmab::read_file(args.config_path);
    gmab::json j;
    try {
      j = gmab::json::parse(body);
    } catch (const std::exception& e) {
      throw gmab::ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    try {
      run.config = gmab::config_from_json(j);
    } catch (const gmab::json::exception& e) {
      // Wrong JSON types surface as library exceptions; report them as
      // validation failures rather than crashing.
      throw gmab::ConfigError("config", e.what());
    }
    run.source = args.config_path;
  }
  if (args.seed) run.config.seed = *args.seed;
  if (args.horizon) run.config.horizon = *args.horizon;
  if (args.reps) run.config.replications = *args.reps;
  if (!args.checkpoints.empty())
    run.config.checkpoints = parse_checkpoints(args.checkpoints);
  if (args.horizon && args.checkpoints.empty()) {
    // Keep overridden horizons consistent with preset checkpoint lists.
    std::vector<std::int64_t> kept;
    for (std::int64_t t : run.config.checkpoints)
      if (t <= *args.horizon) kept.push_back(t);
    if (kept.empty() || kept.back() != *args.horizon)
      kept.push_back(*args.horizon);
    run.config.checkpoints = std::move(kept);
  }
  run.config.validate();
  return run;
}

struct OutputSet {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> written;  // name, hash

  void emit(const std::string& name, const std::string& body) {
    gmab::write_file((dir / name).string(), body);
    written.emplace_back(name, gmab::fnv1a64_hex(body));
  }
};

std::vector<gmab::BoundCurve> standard_curves(const gmab::BanditInstance& inst,
                                              std::int64_t horizon,
                                              std::optional<double> delta,
                                              std::optional<double> prior_bound) {
  const int K = static_cast<int>(inst.num_arms());
  std::vector<gmab::BoundCurve> curves;
  const auto ts = gmab::log_spaced_times(horizon);

  gmab::BoundCurve one_step;
  one_step.kind = gmab::BoundKind::OneStep;
  one_step.constants = "K=" + std::to_string(K);
  gmab::BoundCurve cumulative;
  cumulative.kind = gmab::BoundKind::Cumulative;
  cumulative.constants = one_step.constants;
  for (std::int64_t t : ts) {
    one_step.points.emplace_back(t, gmab::bound_one_step(t, K, inst.cert));
    cumulative.points.emplace_back(t, gmab::bound_cumulative(t, K, inst.cert));
  }
  curves.push_back(std::move(one_step));
  curves.push_back(std::move(cumulative));

  if (delta && *delta > 0.0) {
    gmab::BoundCurve prob;
    prob.kind = gmab::BoundKind::SuboptProb;
    prob.constants =
        "K=" + std::to_string(K) + ";delta=" + gmab::format_double(*delta);
    for (std::int64_t t : ts)
      prob.points.emplace_back(
          t, gmab::bound_subopt_prob_capped(t, *delta, K, inst.cert));
    curves.push_back(std::move(prob));
    const auto rc = gmab::regime_constants(*delta, K, inst.cert);
    curves.push_back(gmab::bound_three_regime(horizon, rc, K, inst.cert));
  }
  if (prior_bound) {
    gmab::BoundCurve bayes;
    bayes.kind = gmab::BoundKind::BayesRisk;
    bayes.constants = "K=" + std::to_string(K) +
                      ";B=" + gmab::format_double(*prior_bound);
    for (std::int64_t t : ts)
      bayes.points.emplace_back(
          t, gmab::bayes_risk_bound(t, *prior_bound, K, inst.cert));
    curves.push_back(std::move(bayes));
  }
  return curves;
}

/// Dedicated full-trace greedy episodes for the per-step inequality checks;
/// the Monte Carlo replications themselves stay trace-free.
std::string run_lemma_suite(const gmab::ExperimentConfig& cfg) {
  const std::int64_t episodes = 10;
  const std::int64_t T = std::min<std::int64_t>(cfg.horizon, 1000);
  gmab::RecordOptions rec;
  rec.full_trace = true;
  std::string csv = "episode,theta_star,steps_checked,violations\n";
  for (std::int64_t e = 0; e < episodes; ++e) {
    gmab::Rng seeder = gmab::Rng::stream(cfg.seed ^ 0x1e3a5ULL, e);
    const double theta = cfg.theta_star ? *cfg.theta_star
                                        : cfg.prior->sample(seeder);
    const auto ep = gmab::run_episode(
        cfg.instance, theta,
        gmab::make_policy(cfg.instance, {gmab::PolicyKind::Greedy, {}}), T,
        seeder.next_u64(), {T}, rec);
    const auto rep = gmab::check_lemmas(ep, cfg.instance, theta,
                                        cfg.instance.cert);
    csv += std::to_string(e) + "," + gmab::format_double(theta) + "," +
           std::to_string(rep.steps_checked) + "," +
           std::to_string(rep.total_violations()) + "\n";
  }
  return csv;
}

int cmd_run(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  ResolvedRun run = resolve(args);
  const gmab::ExperimentConfig& cfg = run.config;

  OutputSet out;
  out.dir = args.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(out.dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '" << args.out_dir
              << "': " << ec.message() << "\n";
    return kExitIo;
  }

  const bool bayes_run = cfg.prior && !cfg.theta_star;
  gmab::AggregateResult agg;
  if (bayes_run) {
    agg = gmab::estimate_bayes_risk(cfg.instance, *cfg.prior, cfg.horizon,
                                    cfg.replications, cfg.seed,
                                    cfg.checkpoints);
  } else {
    agg = gmab::run_monte_carlo(cfg);
  }
  out.emit("results.csv", gmab::results_csv(agg, bayes_run));

  if (cfg.lemma_checks) {
    if (!cfg.instance.invertible)
      throw gmab::ConfigError("lemma_checks",
                              "requires an invertible instance");
    out.emit("lemmas.csv", run_lemma_suite(cfg));
  }

  std::optional<double> prior_bound;
  if (cfg.prior) prior_bound = cfg.prior->density_bound;
  out.emit("bounds.csv",
           gmab::bounds_csv(standard_curves(cfg.instance, cfg.horizon,
                                            agg.suboptimality_distance,
                                            prior_bound)));

  gmab::OptimalityPartition part;
  if (cfg.instance.invertible)
    part = gmab::optimality_partition(cfg.instance, 1e-4);
  out.emit("partition.csv", gmab::partition_csv(part));

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  gmab::json manifest;
  manifest["command"] = "run";
  manifest["source"] = run.source;
  manifest["seed"] = cfg.seed;
  manifest["config"] = gmab::config_to_json(cfg);
  manifest["config_hash"] = gmab::fnv1a64_hex(gmab::config_to_json(cfg).dump());
  manifest["budget_seconds"] = run.budget_seconds;
  manifest["elapsed_seconds"] = elapsed;
  manifest["version"] = kVersion;
  gmab::json outputs = gmab::json::array();
  for (const auto& [name, hash] : out.written)
    outputs.push_back({{"path", name}, {"fnv1a64", hash}});
  manifest["outputs"] = outputs;
  gmab::write_file((out.dir / "manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "wrote " << out.written.size() + 1 << " files to " << args.out_dir
            << " (elapsed " << gmab::format_double(elapsed) << "s)\n";
  return 0;
}

int cmd_analyze(const CommonArgs& args, std::optional<double> theta,
                std::optional<double> delta, double resolution,
                std::int64_t horizon) {
  ResolvedRun run = resolve(args);
  const gmab::BanditInstance& inst = run.config.instance;
  if (!inst.invertible)
    throw gmab::ConfigError(
        "instance", "analyze requires an invertible instance");
  if (!theta && run.config.theta_star) theta = run.config.theta_star;

  OutputSet out;
  out.dir = args.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(out.dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '" << args.out_dir
              << "': " << ec.message() << "\n";
    return kExitIo;
  }

  const auto part = gmab::optimality_partition(inst, resolution);
  out.emit("partition.csv", gmab::partition_csv(part));

  std::optional<double> regime_delta = delta;
  if (theta) {
    gmab::GapReport rep = gmab::subopt_gap(inst, *theta);
    rep.distance = gmab::subopt_distance(inst, *theta, part);
    if (rep.delta_min) rep.epsilon = gmab::epsilon_lower_bound(rep, inst.cert);
    if (!regime_delta && *rep.distance > 0.0) regime_delta = rep.distance;
    out.emit("gap.csv", gmab::gap_csv(rep));
  } else if (!delta) {
    throw gmab::ConfigError("theta",
                            "analyze needs --theta, --delta, or a config with "
                            "theta_star");
  }

  const int K = static_cast<int>(inst.num_arms());
  if (regime_delta) {
    const auto rc = gmab::regime_constants(*regime_delta, K, inst.cert);
    out.emit("regimes.csv", gmab::regimes_csv(rc));
  }
  out.emit("bounds.csv",
           gmab::bounds_csv(standard_curves(inst, horizon, regime_delta,
                                            std::nullopt)));

  gmab::json manifest;
  manifest["command"] = "analyze";
  manifest["source"] = run.source;
  manifest["version"] = kVersion;
  if (theta) manifest["theta"] = *theta;
  if (regime_delta) manifest["delta"] = *regime_delta;
  manifest["resolution"] = resolution;
  gmab::json outputs = gmab::json::array();
  for (const auto& [name, hash] : out.written)
    outputs.push_back({{"path", name}, {"fnv1a64", hash}});
  manifest["outputs"] = outputs;
  gmab::write_file((out.dir / "manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "wrote " << out.written.size() + 1 << " files to "
            << args.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global multi-armed bandit simulation harness"};
  app.require_subcommand(1);

  CommonArgs run_args;
  run_args.out_dir = default_out_dir();
  CLI::App* run = app.add_subcommand("run", "run a Monte Carlo experiment");
  run->add_option("--preset", run_args.preset, "scenario preset name");
  run->add_option("--config", run_args.config_path, "experiment config JSON");
  run->add_option("--seed", run_args.seed, "base seed override");
  run->add_option("--out", run_args.out_dir, "output directory");
  run->add_option("--horizon", run_args.horizon, "horizon override");
  run->add_option("--reps", run_args.reps, "replication count override");
  run->add_option("--checkpoints", run_args.checkpoints,
                  "comma-separated checkpoint times");

  CommonArgs an_args;
  an_args.out_dir = default_out_dir();
  std::optional<double> theta;
  std::optional<double> delta;
  double resolution = 1e-4;
  std::int64_t horizon = 100000;
  CLI::App* an = app.add_subcommand("analyze",
                                    "offline instance analysis and bounds");
  an->add_option("--preset", an_args.preset, "scenario preset name");
  an->add_option("--config", an_args.config_path, "experiment config JSON");
  an->add_option("--theta", theta, "global parameter value");
  an->add_option("--delta", delta, "suboptimality distance override");
  an->add_option("--resolution", resolution, "partition grid step");
  an->add_option("--horizon", horizon, "bound-curve horizon");
  an->add_option("--out", an_args.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_args);
    return cmd_analyze(an_args, theta, delta, resolution, horizon);
  } catch (const gmab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gmab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
}
