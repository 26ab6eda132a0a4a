// ppadf: simulate, filter and sweep point-process observation models.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ppadf/adf.hpp"
#include "ppadf/config.hpp"
#include "ppadf/errors.hpp"
#include "ppadf/io.hpp"
#include "ppadf/metrics.hpp"
#include "ppadf/pf.hpp"
#include "ppadf/rng.hpp"
#include "ppadf/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppadf;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericError = 3, kIoError = 4 };

struct CommonArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args, int& jobs) {
  cmd->add_option("--config", args.config, "experiment config (JSON)")->required();
  cmd->add_option("--seed", args.seed, "base seed");
  cmd->add_option("--out-dir", args.out_dir, "output directory");
  cmd->add_option("--jobs", jobs, "worker threads (default $PPADF_JOBS or 1)");
}

int default_jobs() {
  if (const char* env = std::getenv("PPADF_JOBS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw ConfigError(std::string("PPADF_JOBS is not an integer: ") + env);
    }
  }
  return 1;
}

std::pair<double, double> parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("window must be T0:T1, got '" + text + "'");
  try {
    const double t0 = std::stod(text.substr(0, colon));
    const double t1 = std::stod(text.substr(colon + 1));
    if (!(t1 > t0)) throw ConfigError("window needs T1 > T0");
    return {t0, t1};
  } catch (const std::invalid_argument&) {
    throw ConfigError("window must be T0:T1, got '" + text + "'");
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  return fs::path(dir);
}

RunManifest start_manifest(const std::string& command, const ExperimentConfig& cfg,
                           std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config = to_json(cfg);
  m.seed = seed;
  return m;
}

std::string optional_number(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

int cmd_simulate(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args.config);
  const fs::path out = prepare_out_dir(args.out_dir);
  const Observations obs = simulate_trial(cfg, args.seed);
  RunManifest manifest = start_manifest("simulate", cfg, args.seed);
  manifest.warnings = obs.warnings;
  manifest.parameters = {{"max_step_probability", obs.max_step_probability},
                         {"events", obs.spikes.size()}};
  manifest.write_output(out, "trajectory.csv", trajectory_csv(obs.trajectory));
  manifest.write_output(out, "spikes.jsonl", spikes_jsonl(obs.spikes));
  manifest.save(out);
  return kOk;
}

struct FilterArgs {
  std::string spikes;
  std::string truth;
  std::string method = "adf";
};

int cmd_filter(const CommonArgs& args, const FilterArgs& fa) {
  const ExperimentConfig cfg = load_config(args.config);
  const fs::path out = prepare_out_dir(args.out_dir);
  const std::vector<SpikeEvent> spikes = parse_spikes_jsonl(read_file(fa.spikes));
  const GaussianBelief prior = filter_prior(cfg);
  const double horizon = cfg.sim.horizon;
  const bool run_adf = fa.method == "adf" || fa.method == "both";
  const bool run_pf = fa.method == "pf" || fa.method == "both";

  RunManifest manifest = start_manifest("filter", cfg, args.seed);
  manifest.parameters = {{"method", fa.method}, {"spikes", fa.spikes}, {"events", spikes.size()}};

  BeliefTrajectory adf;
  if (run_adf) {
    adf = filter_run(spikes, cfg.model, prior, cfg.filter.dt, horizon,
                     {true, cfg.filter.jitter ? SpdPolicy::kJitter : SpdPolicy::kFail});
    manifest.write_output(out, "beliefs_adf.csv", belief_csv(adf));
  }
  PfRun pf;
  std::vector<double> ks;
  if (run_pf) {
    const bool scalar = cfg.model.dynamics.state_dim() == 1;
    ks.assign(grid_steps(horizon, cfg.filter.dt) + 1, 0.0);
    pf = pf_filter_run(spikes, cfg.model, prior, cfg.filter.dt, horizon, cfg.filter.particles,
                       substream(args.seed, "pf"), {cfg.filter.resample, cfg.filter.ess_fraction},
                       [&](std::size_t k, const ParticleEnsemble& ens) {
                         if (scalar && pf_moments(ens).cov(0, 0) > 0.0) ks[k] = ks_statistic(ens);
                       });
    manifest.write_output(out, "beliefs_pf.csv", moments_csv(pf.dt, pf.moments));
  }
  if (run_adf && run_pf) {
    if (cfg.model.dynamics.state_dim() != 1)
      throw ConfigError("--method both emits comparison records for scalar models only");
    std::vector<ComparisonRecord> records;
    for (std::size_t k = 1; k < adf.size(); ++k)
      records.push_back(compare_moments(adf.time(k), adf.beliefs[k], pf.moments[k], ks[k]));
    manifest.write_output(out, "comparison.csv", comparison_csv(records));
    const ErrorStats stats = error_stats(records);
    const json summary = {{"records", stats.count},
                          {"eps_mu", {{"mean", stats.eps_mu.mean}, {"sd", stats.eps_mu.sd}}},
                          {"eps_sigma", {{"mean", stats.eps_sigma.mean}, {"sd", stats.eps_sigma.sd}}}};
    manifest.write_output(out, "comparison_summary.json", summary.dump(2) + "\n");
  }
  if (!fa.truth.empty() && run_adf) {
    const Trajectory truth = parse_trajectory_csv(read_file(fa.truth));
    const double end = truth.time(truth.size() - 1);
    const json metrics = {{"mse_adf", mse_window(truth, adf, 0.0, end)}, {"window", {0.0, end}}};
    manifest.write_output(out, "truth_metrics.json", metrics.dump(2) + "\n");
  }
  manifest.save(out);
  return kOk;
}

struct UniformArgs {
  int trials = 200;
  std::string sigma_pop_list = "0.5";
  std::string window = "5:10";
  int jobs = 1;
};

int cmd_compare_uniform(const CommonArgs& args, const UniformArgs& ua) {
  const ExperimentConfig base = load_config(args.config);
  if (!std::holds_alternative<GaussianPopulation>(base.model.population) ||
      base.model.sensor.sensory_dim() != 1)
    throw ConfigError("compare-uniform needs a scalar Gaussian population config");
  const auto [t0, t1] = parse_window(ua.window);
  const fs::path out = prepare_out_dir(args.out_dir);

  std::vector<double> spreads;
  std::istringstream is(ua.sigma_pop_list);
  for (std::string v; std::getline(is, v, ',');) {
    try {
      spreads.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw ConfigError("bad --sigma-pop-list entry '" + v + "'");
    }
  }
  if (spreads.empty()) throw ConfigError("--sigma-pop-list is empty");

  std::string table = "sigma_pop2,mse_adf,se_adf,mse_uniform,se_uniform,diff,se_diff,n_trials\n";
  std::string per_trial = "trial,sigma_pop2,mse_adf,mse_uniform\n";
  json summary = json::array();
  for (std::size_t s = 0; s < spreads.size(); ++s) {
    json doc = to_json(base);
    doc["population"]["sigma_pop"] = json::array({json::array({spreads[s]})});
    const ExperimentConfig cfg = parse_config(doc);
    const UniformComparison cmp = compare_uniform(cfg, ua.trials, t0, t1, args.seed, ua.jobs);
    table += format_double(spreads[s]) + "," + format_double(cmp.adf.mean) + "," +
             optional_number(cmp.adf.se) + "," + format_double(cmp.uniform.mean) + "," +
             optional_number(cmp.uniform.se) + "," + format_double(cmp.difference.mean) + "," +
             optional_number(cmp.difference.se) + "," + std::to_string(cmp.trials.size()) + "\n";
    for (std::size_t i = 0; i < cmp.trials.size(); ++i)
      per_trial += std::to_string(i) + "," + format_double(spreads[s]) + "," +
                   format_double(cmp.trials[i].mse_adf) + "," +
                   format_double(cmp.trials[i].mse_uniform) + "\n";
    summary.push_back({{"sigma_pop2", spreads[s]},
                       {"mse_adf", cmp.adf.mean},
                       {"mse_uniform", cmp.uniform.mean},
                       {"diff", cmp.difference.mean},
                       {"se_diff", cmp.difference.se ? json(*cmp.difference.se) : json()}});
  }
  RunManifest manifest = start_manifest("compare-uniform", base, args.seed);
  manifest.parameters = {{"trials", ua.trials}, {"sigma_pop_list", spreads}, {"window", {t0, t1}}};
  manifest.write_output(out, "compare_uniform.csv", table);
  manifest.write_output(out, "compare_uniform_trials.csv", per_trial);
  manifest.write_output(out, "compare_uniform_summary.json", summary.dump(2) + "\n");
  manifest.save(out);
  return kOk;
}

struct SweepArgs {
  std::string grid = "c=0,0.5,1,1.5,2,2.5;sigma_pop2=0.01,0.1,0.5,1,5,20";
  int trials = 200;
  std::string window = "1:2";
  std::string criterion = "posterior-sd";
  int jobs = 1;
};

int cmd_sweep(const CommonArgs& args, const SweepArgs& sa) {
  const ExperimentConfig base = load_config(args.config);
  const auto [t0, t1] = parse_window(sa.window);
  const fs::path out = prepare_out_dir(args.out_dir);
  SweepSpec spec;
  spec.base = to_json(base);
  spec.axes = parse_grid(sa.grid);
  spec.trials = sa.trials;
  spec.t0 = t0;
  spec.t1 = t1;
  spec.seed = args.seed;
  spec.criterion = sa.criterion == "squared-error" ? Criterion::kSquaredError : Criterion::kPosteriorSd;
  const SweepResult result = run_sweep(spec, sa.jobs);

  RunManifest manifest = start_manifest("sweep", base, args.seed);
  json axes = json::array();
  for (const auto& a : spec.axes)
    axes.push_back({{"name", a.name}, {"pointer", a.pointer}, {"values", a.values}});
  manifest.parameters = {{"grid", axes},
                         {"trials", sa.trials},
                         {"window", {t0, t1}},
                         {"criterion", sa.criterion},
                         {"trial_seed", "stable_hash(seed, cell, trial)"}};
  for (const auto& cell : result.cells)
    if (cell.n_divergent > 0) {
      std::ostringstream os;
      os << "cell";
      for (std::size_t a = 0; a < spec.axes.size(); ++a)
        os << " " << spec.axes[a].name << "=" << cell.coords[a];
      os << ": " << cell.n_divergent << " of " << sa.trials << " trials divergent ("
         << cell.n_trials << " in mean)";
      manifest.warnings.push_back(os.str());
    }
  manifest.write_output(out, "sweep.csv", sweep_csv(result));
  manifest.save(out);
  return kOk;
}

struct PfArgs {
  int trials = 20;
  int jobs = 1;
};

int cmd_compare_pf(const CommonArgs& args, const PfArgs& pa) {
  const ExperimentConfig cfg = load_config(args.config);
  const fs::path out = prepare_out_dir(args.out_dir);
  const PfComparison cmp = compare_pf(cfg, pa.trials, args.seed, pa.jobs);
  std::string records = "trial,t,eps_mu,eps_sigma,ks\n";
  for (std::size_t i = 0; i < cmp.records.size(); ++i) {
    const auto& r = cmp.records[i];
    records += std::to_string(cmp.record_trial[i]) + "," + format_double(r.t) + "," +
               format_double(r.eps_mu) + "," + format_double(r.eps_sigma) + "," +
               format_double(r.ks) + "\n";
  }
  const json summary = {
      {"trials", pa.trials},
      {"excluded_trials", cmp.excluded_trials},
      {"records", cmp.pooled.count},
      {"eps_mu", {{"mean", cmp.pooled.eps_mu.mean}, {"sd", cmp.pooled.eps_mu.sd}}},
      {"eps_sigma", {{"mean", cmp.pooled.eps_sigma.mean}, {"sd", cmp.pooled.eps_sigma.sd}}}};
  RunManifest manifest = start_manifest("compare-pf", cfg, args.seed);
  manifest.parameters = {{"trials", pa.trials}};
  manifest.warnings = cmp.notes;
  manifest.write_output(out, "compare_pf_records.csv", records);
  manifest.write_output(out, "compare_pf_summary.json", summary.dump(2) + "\n");
  manifest.save(out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-process filtering with assumed Gaussian densities"};
  app.require_subcommand(1);
  CommonArgs common;
  FilterArgs filter_args;
  UniformArgs uniform_args;
  SweepArgs sweep_args;
  PfArgs pf_args;
  int jobs = 0;

  auto* simulate = app.add_subcommand("simulate", "simulate a trajectory and its events");
  add_common(simulate, common, jobs);

  auto* filter = app.add_subcommand("filter", "filter a recorded event stream");
  add_common(filter, common, jobs);
  filter->add_option("--spikes", filter_args.spikes, "events (JSONL)")->required();
  filter->add_option("--truth", filter_args.truth, "true trajectory (CSV)");
  filter->add_option("--method", filter_args.method, "adf, pf or both")
      ->check(CLI::IsMember({"adf", "pf", "both"}));

  auto* uniform = app.add_subcommand("compare-uniform", "full filter vs uniform-coding filter");
  add_common(uniform, common, jobs);
  uniform->add_option("--trials", uniform_args.trials)->check(CLI::PositiveNumber);
  uniform->add_option("--sigma-pop-list", uniform_args.sigma_pop_list,
                      "comma-separated population variances");
  uniform->add_option("--window", uniform_args.window, "T0:T1");

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo encoding sweep");
  add_common(sweep, common, jobs);
  sweep->add_option("--grid", sweep_args.grid, "name=v1,v2;name=...");
  sweep->add_option("--trials", sweep_args.trials)->check(CLI::PositiveNumber);
  sweep->add_option("--window", sweep_args.window, "T0:T1");
  sweep->add_option("--criterion", sweep_args.criterion)
      ->check(CLI::IsMember({"posterior-sd", "squared-error"}));

  auto* compare_pf_cmd = app.add_subcommand("compare-pf", "ADF vs particle filter statistics");
  add_common(compare_pf_cmd, common, jobs);
  compare_pf_cmd->add_option("--trials", pf_args.trials)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    const int resolved_jobs = jobs > 0 ? jobs : default_jobs();
    uniform_args.jobs = sweep_args.jobs = pf_args.jobs = resolved_jobs;
    if (simulate->parsed()) return cmd_simulate(common);
    if (filter->parsed()) return cmd_filter(common, filter_args);
    if (uniform->parsed()) return cmd_compare_uniform(common, uniform_args);
    if (sweep->parsed()) return cmd_sweep(common, sweep_args);
    if (compare_pf_cmd->parsed()) return cmd_compare_pf(common, pf_args);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumericError;
  }
  return kOk;
}
