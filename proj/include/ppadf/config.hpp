#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "ppadf/model.hpp"
#include "ppadf/pf.hpp"

namespace ppadf {

enum class SimInit {
  kSteadyState,  // x0 drawn from the stationary law of the dynamics
  kFilterPrior,  // x0 drawn from the filter's initial belief
  kFixed,        // x0 given explicitly
};

struct SimSettings {
  double dt = 1e-3;
  double horizon = 1.0;
  SimInit init = SimInit::kFilterPrior;
  Vector x0;  // only for kFixed
};

enum class FilterInit {
  kSteadyState,
  kGiven,
};

struct FilterSettings {
  double dt = 1e-3;  // must divide sim.dt by an integer factor
  FilterInit init = FilterInit::kGiven;
  Vector mean0;
  Matrix cov0;
  bool jitter = false;
  long particles = 1000;
  ResampleMode resample = ResampleMode::kEveryStep;
  double ess_fraction = 0.5;
};

/// The JSON document accepted by every subcommand. Top-level keys are
/// `dynamics`, `sensor`, `population`, `sim` and `filter`; docs/config.md has
/// the full schema.
struct ExperimentConfig {
  Model model;
  SimSettings sim;
  FilterSettings filter;
};

/// Parses and validates. Throws ConfigError (ModelError for model invariants).
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Canonical form: every matrix as an array of rows, every field explicit.
nlohmann::json to_json(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);

GaussianBelief filter_prior(const ExperimentConfig& config);

/// Initial true state, from the "init" sub-stream of `seed` when random.
Vector draw_initial_state(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace ppadf
