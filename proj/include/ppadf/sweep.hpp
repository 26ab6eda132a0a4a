#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppadf/adf.hpp"
#include "ppadf/config.hpp"
#include "ppadf/metrics.hpp"
#include "ppadf/simulate.hpp"

namespace ppadf {

enum class Criterion {
  kPosteriorSd,   // window-averaged posterior sd / prior sd
  kSquaredError,  // root window-mean squared error / prior sd
};

struct GridAxis {
  std::string name;
  std::string pointer;  // JSON pointer into the canonical config
  std::vector<double> values;
};

/// Parses `name=v1,v2,...;name=...`. Names are `c`, `sigma_pop2`, `h`, `a`,
/// `d`, `R` (scalar models) or a raw JSON pointer such as `/sensor/h`.
std::vector<GridAxis> parse_grid(const std::string& spec);

struct SweepSpec {
  nlohmann::json base;  // canonical config (see to_json)
  std::vector<GridAxis> axes;
  int trials = 1;
  double t0 = 0.0;
  double t1 = 1.0;
  std::uint64_t seed = 0;
  Criterion criterion = Criterion::kPosteriorSd;
};

struct TrialOutcome {
  double value = 0.0;
  bool failed = false;     // filter lost positive definiteness; excluded
  bool divergent = false;  // failed, or posterior sd above prior sd
};

struct CellResult {
  std::vector<double> coords;
  double mean = 0.0;
  std::optional<double> se;  // absent with fewer than two surviving trials
  int n_trials = 0;          // surviving trials in the mean
  int n_divergent = 0;
  int n_failed = 0;
};

struct SweepResult {
  std::vector<GridAxis> axes;
  std::vector<CellResult> cells;  // row-major, first axis slowest
};

/// Draws x0 (sub-stream "init") and generates the trajectory and events
/// (sub-stream "simulate") for one trial.
Observations simulate_trial(const ExperimentConfig& config, std::uint64_t trial_seed);

TrialOutcome run_trial(const ExperimentConfig& config, std::uint64_t trial_seed, double t0,
                       double t1, Criterion criterion);

/// Trial seed is stable_hash({cell_seed, trial}).
CellResult run_cell(const ExperimentConfig& config, int trials, double t0, double t1,
                    std::uint64_t cell_seed, Criterion criterion = Criterion::kPosteriorSd,
                    int jobs = 1);

/// Every (cell, trial) pair runs on seed stable_hash({seed, cell, trial}), so
/// the result does not depend on `jobs`.
SweepResult run_sweep(const SweepSpec& spec, int jobs = 1);

std::string sweep_csv(const SweepResult& result);

struct MeanSe {
  double mean = 0.0;
  std::optional<double> se;
};

MeanSe mean_se(const std::vector<double>& values);

struct UniformTrial {
  double mse_adf = 0.0;
  double mse_uniform = 0.0;
};

struct UniformComparison {
  MeanSe adf;
  MeanSe uniform;
  MeanSe difference;  // paired, uniform minus ADF
  std::vector<UniformTrial> trials;
};

/// Filters one recorded stream with the full filter and with the
/// uniform-coding filter (continuous terms dropped).
UniformTrial compare_uniform_trial(const ExperimentConfig& config, const Trajectory& truth,
                                   const std::vector<SpikeEvent>& events, double t0, double t1);

UniformComparison compare_uniform(const ExperimentConfig& config, int trials, double t0,
                                  double t1, std::uint64_t seed, int jobs = 1);

struct PfComparison {
  ErrorStats pooled;
  std::vector<ComparisonRecord> records;
  std::vector<int> record_trial;
  int excluded_trials = 0;
  std::vector<std::string> notes;
};

/// ADF and particle filter on identical streams; one record per grid step
/// after t = 0, with the KS statistic of the pre-resampling ensemble.
PfComparison compare_pf(const ExperimentConfig& config, int trials, std::uint64_t seed,
                        int jobs = 1);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
/// exception by index is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ppadf
