#include "ppadf/sweep.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <sstream>
#include <thread>

#include "ppadf/errors.hpp"
#include "ppadf/io.hpp"
#include "ppadf/pf.hpp"
#include "ppadf/rng.hpp"
#include "ppadf/simulate.hpp"

namespace ppadf {

using nlohmann::json;

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<GridAxis> parse_grid(const std::string& spec) {
  static const std::vector<std::pair<std::string, std::string>> aliases = {
      {"c", "/population/c/0"},      {"sigma_pop2", "/population/sigma_pop/0/0"},
      {"h", "/sensor/h"},            {"a", "/dynamics/A/0/0"},
      {"d", "/dynamics/D/0/0"},      {"R", "/sensor/R/0/0"},
  };
  std::vector<GridAxis> axes;
  std::istringstream is(spec);
  std::string part;
  while (std::getline(is, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("grid axis '" + part + "' lacks '='");
    GridAxis axis;
    axis.name = part.substr(0, eq);
    if (!axis.name.empty() && axis.name[0] == '/') {
      axis.pointer = axis.name;
    } else {
      for (const auto& [alias, ptr] : aliases)
        if (alias == axis.name) axis.pointer = ptr;
      if (axis.pointer.empty()) throw ConfigError("unknown grid axis '" + axis.name + "'");
    }
    std::istringstream vs(part.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      try {
        std::size_t used = 0;
        axis.values.push_back(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw ConfigError("grid axis '" + axis.name + "': bad value '" + v + "'");
      }
    }
    if (axis.values.empty()) throw ConfigError("grid axis '" + axis.name + "' has no values");
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw ConfigError("grid is empty");
  return axes;
}

MeanSe mean_se(const std::vector<double>& values) {
  const MeanSd m = mean_sd(values);
  MeanSe out{m.mean, std::nullopt};
  if (values.size() >= 2) out.se = m.sd / std::sqrt(static_cast<double>(values.size()));
  return out;
}

namespace {

FilterOptions filter_options(const ExperimentConfig& cfg, bool continuous = true) {
  return {continuous, cfg.filter.jitter ? SpdPolicy::kJitter : SpdPolicy::kFail};
}

}  // namespace

Observations simulate_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
  const Vector x0 = draw_initial_state(cfg, trial_seed);
  return generate_observations(cfg.model, x0, cfg.sim.dt, cfg.sim.horizon,
                               substream(trial_seed, "simulate"));
}

TrialOutcome run_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed, double t0, double t1,
                       Criterion criterion) {
  const GaussianBelief prior = filter_prior(cfg);
  const double prior_sd = std::sqrt(prior.cov.trace());
  const Observations obs = simulate_trial(cfg, trial_seed);
  TrialOutcome out;
  try {
    const BeliefTrajectory beliefs = filter_run(obs.spikes, cfg.model, prior, cfg.filter.dt,
                                                cfg.sim.horizon, filter_options(cfg));
    const double sd = avg_posterior_sd(beliefs, t0, t1);
    out.divergent = sd > prior_sd * (1 + 1e-9);
    if (criterion == Criterion::kPosteriorSd) {
      out.value = sd / prior_sd;
    } else {
      out.value = std::sqrt(mse_window(obs.trajectory, beliefs, t0, t1) / (t1 - t0)) / prior_sd;
    }
  } catch (const NumericError&) {
    out.failed = true;
    out.divergent = true;
  }
  return out;
}

namespace {

CellResult aggregate(const std::vector<TrialOutcome>& outcomes) {
  CellResult cell;
  std::vector<double> kept;
  for (const auto& o : outcomes) {
    if (o.divergent) ++cell.n_divergent;
    if (o.failed) {
      ++cell.n_failed;
      continue;
    }
    kept.push_back(o.value);
  }
  const MeanSe m = mean_se(kept);
  cell.mean = kept.empty() ? std::nan("") : m.mean;
  cell.se = m.se;
  cell.n_trials = static_cast<int>(kept.size());
  return cell;
}

}  // namespace

CellResult run_cell(const ExperimentConfig& cfg, int trials, double t0, double t1,
                    std::uint64_t cell_seed, Criterion criterion, int jobs) {
  if (trials < 1) throw ConfigError("need at least one trial");
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
  parallel_for(outcomes.size(), jobs, [&](std::size_t i) {
    outcomes[i] = run_trial(cfg, stable_hash({cell_seed, i}), t0, t1, criterion);
  });
  return aggregate(outcomes);
}

SweepResult run_sweep(const SweepSpec& spec, int jobs) {
  if (spec.axes.empty()) throw ConfigError("sweep grid is empty");
  if (spec.trials < 1) throw ConfigError("sweep needs at least one trial per cell");
  if (!(spec.t1 > spec.t0)) throw ConfigError("sweep window needs t1 > t0");

  std::size_t cells = 1;
  for (const auto& a : spec.axes) cells *= a.values.size();
  SweepResult result{spec.axes, std::vector<CellResult>(cells)};
  std::vector<ExperimentConfig> configs;
  configs.reserve(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    json doc = spec.base;
    std::size_t rest = c;
    std::vector<double> coords(spec.axes.size());
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      const auto& axis = spec.axes[a];
      coords[a] = axis.values[rest % axis.values.size()];
      rest /= axis.values.size();
      const json::json_pointer ptr(axis.pointer);
      if (!doc.contains(ptr)) throw ConfigError("grid axis path " + axis.pointer + " not in config");
      doc[ptr] = coords[a];
    }
    configs.push_back(parse_config(doc));
    result.cells[c].coords = std::move(coords);
  }

  const auto trials = static_cast<std::size_t>(spec.trials);
  std::vector<TrialOutcome> outcomes(cells * trials);
  parallel_for(outcomes.size(), jobs, [&](std::size_t i) {
    const std::size_t c = i / trials, t = i % trials;
    outcomes[i] = run_trial(configs[c], stable_hash({spec.seed, c, t}), spec.t0, spec.t1,
                            spec.criterion);
  });
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<TrialOutcome> slice(outcomes.begin() + static_cast<std::ptrdiff_t>(c * trials),
                                    outcomes.begin() + static_cast<std::ptrdiff_t>((c + 1) * trials));
    CellResult agg = aggregate(slice);
    agg.coords = std::move(result.cells[c].coords);
    result.cells[c] = std::move(agg);
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out;
  for (const auto& a : result.axes) out += a.name + ",";
  out += "mean_rel_sd,se,n_trials,n_divergent\n";
  for (const auto& cell : result.cells) {
    for (double v : cell.coords) out += format_double(v) + ",";
    out += format_double(cell.mean) + "," + (cell.se ? format_double(*cell.se) : std::string()) +
           "," + std::to_string(cell.n_trials) + "," + std::to_string(cell.n_divergent) + "\n";
  }
  return out;
}

UniformTrial compare_uniform_trial(const ExperimentConfig& cfg, const Trajectory& truth,
                                   const std::vector<SpikeEvent>& events, double t0, double t1) {
  if (!std::holds_alternative<GaussianPopulation>(cfg.model.population))
    throw ConfigError("compare-uniform needs a Gaussian population");
  const GaussianBelief prior = filter_prior(cfg);
  const double horizon = truth.time(truth.size() - 1);
  const BeliefTrajectory full =
      filter_run(events, cfg.model, prior, cfg.filter.dt, horizon, filter_options(cfg, true));
  const BeliefTrajectory uniform =
      filter_run(events, cfg.model, prior, cfg.filter.dt, horizon, filter_options(cfg, false));
  return {mse_window(truth, full, t0, t1), mse_window(truth, uniform, t0, t1)};
}

UniformComparison compare_uniform(const ExperimentConfig& cfg, int trials, double t0, double t1,
                                  std::uint64_t seed, int jobs) {
  if (!std::holds_alternative<GaussianPopulation>(cfg.model.population))
    throw ConfigError("compare-uniform needs a Gaussian population");
  if (trials < 1) throw ConfigError("need at least one trial");
  UniformComparison out;
  out.trials.resize(static_cast<std::size_t>(trials));
  parallel_for(out.trials.size(), jobs, [&](std::size_t i) {
    const std::uint64_t trial_seed = stable_hash({seed, i});
    const Observations obs = simulate_trial(cfg, trial_seed);
    out.trials[i] = compare_uniform_trial(cfg, obs.trajectory, obs.spikes, t0, t1);
  });
  std::vector<double> adf, uni, diff;
  for (const auto& t : out.trials) {
    adf.push_back(t.mse_adf);
    uni.push_back(t.mse_uniform);
    diff.push_back(t.mse_uniform - t.mse_adf);
  }
  out.adf = mean_se(adf);
  out.uniform = mean_se(uni);
  out.difference = mean_se(diff);
  return out;
}

PfComparison compare_pf(const ExperimentConfig& cfg, int trials, std::uint64_t seed, int jobs) {
  if (cfg.model.dynamics.state_dim() != 1) throw ConfigError("compare_pf needs a scalar model");
  if (trials < 1) throw ConfigError("need at least one trial");
  struct TrialRecords {
    std::vector<ComparisonRecord> records;
    std::string failure;
  };
  std::vector<TrialRecords> per_trial(static_cast<std::size_t>(trials));
  const GaussianBelief prior = filter_prior(cfg);
  const PfOptions pf_options{cfg.filter.resample, cfg.filter.ess_fraction};

  parallel_for(per_trial.size(), jobs, [&](std::size_t i) {
    const std::uint64_t trial_seed = stable_hash({seed, i});
    const Observations obs = simulate_trial(cfg, trial_seed);
    TrialRecords& tr = per_trial[i];
    try {
      const BeliefTrajectory adf = filter_run(obs.spikes, cfg.model, prior, cfg.filter.dt,
                                              cfg.sim.horizon, filter_options(cfg));
      std::vector<double> ks(adf.size(), 0.0);
      const PfRun pf = pf_filter_run(
          obs.spikes, cfg.model, prior, cfg.filter.dt, cfg.sim.horizon, cfg.filter.particles,
          substream(trial_seed, "pf"), pf_options,
          [&](std::size_t k, const ParticleEnsemble& ens) {
            ks[k] = pf_moments(ens).cov(0, 0) > 0.0 ? ks_statistic(ens) : 0.0;
          });
      for (std::size_t k = 1; k < adf.size(); ++k)
        tr.records.push_back(compare_moments(adf.time(k), adf.beliefs[k], pf.moments[k], ks[k]));
    } catch (const NumericError& e) {
      tr.records.clear();
      tr.failure = "trial " + std::to_string(i) + " excluded: " + e.what();
    }
  });

  PfComparison out;
  for (std::size_t i = 0; i < per_trial.size(); ++i) {
    if (!per_trial[i].failure.empty()) {
      ++out.excluded_trials;
      out.notes.push_back(per_trial[i].failure);
      continue;
    }
    for (const auto& r : per_trial[i].records) {
      out.records.push_back(r);
      out.record_trial.push_back(static_cast<int>(i));
    }
  }
  if (!out.records.empty()) out.pooled = error_stats(out.records);
  return out;
}

}  // namespace ppadf
