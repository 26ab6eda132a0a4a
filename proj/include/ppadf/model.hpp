#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ppadf/linalg.hpp"

namespace ppadf {

/// Affine diffusion dX = (drift X + drive) dt + diffusion dW.
///
/// `drive` is the known open-loop control input; `diffusion` is n x q with
/// q free, so the noise dimension need not match the state dimension.
struct LinearDynamics {
  Matrix drift;      // n x n, 1/time
  Vector drive;      // n, state/time
  Matrix diffusion;  // n x q, state/sqrt(time)

  int state_dim() const { return static_cast<int>(drift.rows()); }
};

/// Gaussian tuning curve rate(x; center) = peak_rate * exp(-0.5 |H x - center|^2_R).
struct SensorShape {
  double peak_rate = 0.0;  // events/time
  Matrix observation;      // H, m x n, full row rank
  Matrix precision;        // R, m x m, positive semidefinite

  int sensory_dim() const { return static_cast<int>(observation.rows()); }
  int state_dim() const { return static_cast<int>(observation.cols()); }
};

struct SingleSensor {
  Vector center;
};

// Preferred stimuli cover the whole sensory space with unit density.
struct UniformPopulation {};

// Normalized Gaussian density of preferred stimuli.
struct GaussianPopulation {
  Vector center;  // c
  Matrix spread;  // population covariance, SPD
};

// Unnormalized uniform density on [lower, upper]; scalar sensory space only.
struct IntervalPopulation {
  double lower = 0.0;
  double upper = 0.0;
};

using BasicPopulation =
    std::variant<SingleSensor, UniformPopulation, GaussianPopulation, IntervalPopulation>;

struct MixtureComponent {
  double weight = 1.0;
  SensorShape sensor;  // own peak rate and precision, observation shared
  BasicPopulation population;
};

struct MixturePopulation {
  std::vector<MixtureComponent> components;
};

using PopulationDensity = std::variant<SingleSensor, UniformPopulation, GaussianPopulation,
                                       IntervalPopulation, MixturePopulation>;

inline PopulationDensity as_population(const BasicPopulation& basic) {
  return std::visit([](const auto& p) { return PopulationDensity{p}; }, basic);
}

/// Mixture components are indexed in declaration order; every other population
/// is treated as a single component 0 with weight 1 and the top-level sensor.
std::vector<MixtureComponent> flatten_components(const SensorShape& sensor,
                                                 const PopulationDensity& population);

std::string population_name(const PopulationDensity& population);

struct GaussianBelief {
  Vector mean;
  Matrix cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

struct SpikeEvent {
  double t = 0.0;
  Vector mark;        // preferred stimulus of the firing sensor
  int component = 0;  // mixture component that fired
};

struct Model {
  LinearDynamics dynamics;
  SensorShape sensor;
  PopulationDensity population;
};

// Every invariant violation, in a stable order. Empty means valid.
std::vector<std::string> model_violations(const LinearDynamics& dynamics,
                                          const SensorShape& sensor,
                                          const PopulationDensity& population);

// Returns the inputs unchanged, or throws ModelError listing all violations.
Model validate(const LinearDynamics& dynamics, const SensorShape& sensor,
               const PopulationDensity& population);
inline Model validate(const Model& m) { return validate(m.dynamics, m.sensor, m.population); }

bool is_hurwitz(const Matrix& drift);

/// Stationary law of the linear SDE: mean -A^{-1} b and the covariance solving
/// A S + S A^T + D D^T = 0. Throws ModelError if A is not Hurwitz.
GaussianBelief steady_state_prior(const LinearDynamics& dynamics);

}  // namespace ppadf
