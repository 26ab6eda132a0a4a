#pragma once

#include <optional>
#include <vector>

#include "ppadf/model.hpp"

namespace ppadf {

/// Gains of one population component at the current belief.
struct SensorGain {
  Matrix spike_gain;                      // S = (R^{-1} + H Sigma H^T)^{-1}
  std::optional<Matrix> population_gain;  // Z = (Sigma_pop + R^{-1} + H Sigma H^T)^{-1}
  double expected_rate = 0.0;             // expected total rate of the component
};

struct PopulationRate {
  double expected_total_rate = 0.0;     // weighted sum over components
  std::vector<SensorGain> components;   // one entry per flattened component
};

/// Truncated-Gaussian terms for an interval population, with the interval
/// endpoints standardized by the predictive sd sqrt(H Sigma H^T + 1/R).
struct IntervalTerms {
  double alpha = 0.0;
  double beta = 0.0;
  double mass = 0.0;          // Phi(beta) - Phi(alpha)
  double density_diff = 0.0;  // phi(beta) - phi(alpha)
  double moment_diff = 0.0;   // beta phi(beta) - alpha phi(alpha)
};

IntervalTerms interval_terms(double lower, double upper, double mean, double sd);

/// S = (R^{-1} + H Sigma H^T)^{-1}, computed as R (I + H Sigma H^T R)^{-1}.
/// Throws NumericError if Sigma is not SPD.
Matrix sensor_gain(const Matrix& cov, const Matrix& observation, const Matrix& precision);

/// Expected rate of the sensor centered at `center` under the belief:
/// h sqrt(|S| / |R|) exp(-0.5 |center - H mu|^2_S).
double expected_rate(const GaussianBelief& belief, const SensorShape& sensor,
                     const Vector& center);

PopulationRate expected_rate_pop(const GaussianBelief& belief, const SensorShape& sensor,
                                 const PopulationDensity& population);

/// What to do when a covariance update leaves the SPD cone.
enum class SpdPolicy {
  kFail,    // throw NumericError
  kJitter,  // clamp eigenvalues to 1e-12 * trace
};

// Symmetrizes and checks positive definiteness according to the policy.
Matrix enforce_spd(const Matrix& cov, SpdPolicy policy, const char* context);

/// Time derivative of the belief moments (per unit time).
struct BeliefRate {
  Vector mean;
  Matrix cov;
};

BeliefRate prior_rate(const GaussianBelief& belief, const LinearDynamics& dyn);
GaussianBelief prior_step(const GaussianBelief& belief, const LinearDynamics& dyn, double dt,
                          SpdPolicy policy = SpdPolicy::kFail);

/// Drift of the moments between events: information carried by the absence
/// of events. Identically zero for the uniform population.
BeliefRate continuous_rate(const GaussianBelief& belief, const SensorShape& sensor,
                           const PopulationDensity& population);
GaussianBelief continuous_step(const GaussianBelief& belief, const SensorShape& sensor,
                               const PopulationDensity& population, double dt,
                               SpdPolicy policy = SpdPolicy::kFail);

/// Jump at an event with mark `center` from a sensor of the given shape:
/// mu += Sigma H^T S (center - H mu), Sigma -= Sigma H^T S H Sigma.
GaussianBelief spike_update(const GaussianBelief& belief, const SensorShape& sensor,
                            const Vector& center, SpdPolicy policy = SpdPolicy::kFail);

struct FilterOptions {
  bool continuous_terms = true;  // false gives the uniform-coding filter
  SpdPolicy spd = SpdPolicy::kFail;
};

struct BeliefTrajectory {
  double dt = 0.0;
  std::vector<GaussianBelief> beliefs;  // beliefs[k] at time k * dt

  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  std::size_t size() const { return beliefs.size(); }
};

/// Maps an event time onto the step grid: returns k such that t == k * dt.
/// Throws ConfigError when t is off-grid by more than 1e-6 dt.
std::size_t grid_index(double t, double dt);

/// Runs the filter over [0, horizon]. Per step the prior and continuous drifts
/// are both evaluated at the start-of-step belief, then every event stamped at
/// the end of the step is applied to the drifted (left-limit) belief.
/// Events must be sorted by time and lie on the grid.
BeliefTrajectory filter_run(const std::vector<SpikeEvent>& events, const Model& model,
                            const GaussianBelief& initial, double dt, double horizon,
                            const FilterOptions& options = {});

}  // namespace ppadf
