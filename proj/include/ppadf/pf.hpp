#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ppadf/model.hpp"
#include "ppadf/rng.hpp"

namespace ppadf {

/// Weighted particle approximation of the posterior. Column i of `positions`
/// is particle i; weights are normalized to sum to one.
struct ParticleEnsemble {
  Matrix positions;
  Vector weights;

  Eigen::Index size() const { return positions.cols(); }
  int dim() const { return static_cast<int>(positions.rows()); }
};

struct Moments {
  Vector mean;
  Matrix cov;
};

enum class ResampleMode {
  kEveryStep,
  kEffectiveSampleSize,  // only when ESS < ess_fraction * P
};

struct PfOptions {
  ResampleMode mode = ResampleMode::kEveryStep;
  double ess_fraction = 0.5;
};

/// P i.i.d. draws from the belief with uniform weights.
ParticleEnsemble pf_init(const GaussianBelief& belief, Eigen::Index particles, std::uint64_t seed);

/// Euler-Maruyama move of every particle over one step.
void propagate(ParticleEnsemble& ens, const LinearDynamics& dyn, double dt, Rng& rng);

/// Multiplies weights by exp(-total_rate(x) dt) and the rate of each firing
/// sensor, then renormalizes. Works in the log domain; throws NumericError if
/// every weight vanishes.
void reweight(ParticleEnsemble& ens, const Model& model, double dt,
              std::span<const SpikeEvent> events);

/// Systematic resampling with offset u in [0, 1/P): returns the particle index
/// selected by each of the points u + k / P on the cumulative weights.
std::vector<std::size_t> systematic_resample(std::span<const double> weights, double offset);

ParticleEnsemble resample(const ParticleEnsemble& ens, double offset);

double effective_sample_size(const ParticleEnsemble& ens);

/// One filter step: propagate, reweight, then resample per the options. The
/// offset used (or NaN when no resampling happened) goes to *offset_out.
ParticleEnsemble pf_step(ParticleEnsemble ens, const Model& model, double dt,
                         std::span<const SpikeEvent> events, Rng& rng, const PfOptions& options = {},
                         double* offset_out = nullptr);

/// Weighted mean and covariance, normalized by total weight, no bias correction.
Moments pf_moments(const ParticleEnsemble& ens);

struct PfRun {
  double dt = 0.0;
  std::vector<Moments> moments;  // moments[k] at time k * dt, before resampling
  std::vector<double> offsets;   // resampling offset of each step (NaN if skipped)
};

/// Called with the weighted ensemble of each grid point before resampling.
using EnsembleObserver = std::function<void(std::size_t step, const ParticleEnsemble&)>;

PfRun pf_filter_run(const std::vector<SpikeEvent>& events, const Model& model,
                    const GaussianBelief& initial, double dt, double horizon,
                    Eigen::Index particles, std::uint64_t seed, const PfOptions& options = {},
                    const EnsembleObserver& observer = {});

}  // namespace ppadf
