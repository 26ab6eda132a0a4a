#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppadf/model.hpp"
#include "ppadf/rng.hpp"

namespace ppadf {

/// Number of steps on the grid 0, dt, ..., floor(horizon / dt) * dt. A ratio
/// within 1e-9 of an integer is rounded rather than floored.
std::size_t grid_steps(double horizon, double dt);

struct Trajectory {
  double dt = 0.0;
  std::vector<Vector> states;  // states[k] is the state at time k * dt

  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  std::size_t size() const { return states.size(); }
};

/// Euler-Maruyama: x_{k+1} = x_k + (A x_k + b) dt + D sqrt(dt) xi_k. The noise
/// is drawn from the "state" sub-stream of `seed`.
Trajectory integrate_state(const LinearDynamics& dyn, const Vector& x0, double dt,
                           double horizon, std::uint64_t seed);

/// Single-sensor rate at state x for a sensor centered at `center`.
double sensor_rate(const SensorShape& sensor, const Vector& x, const Vector& center);

/// Total event rate: the rate integrated against the population density.
double total_rate(const SensorShape& sensor, const PopulationDensity& population,
                  const Vector& x);

/// Rate functions of a fixed sensor population with per-component constants
/// (gains, normalizers) precomputed. Batch overloads take one state per column.
class RateField {
 public:
  RateField(const SensorShape& sensor, const PopulationDensity& population);

  double total(const Vector& x) const;
  Eigen::ArrayXd total(const Matrix& states) const;

  // log rate of the sensor centered at `center` in the given component.
  Eigen::ArrayXd log_sensor(const Matrix& states, const Vector& center, int component) const;

  std::size_t component_count() const { return terms_.size(); }

 private:
  struct Term {
    double weight = 1.0;
    SensorShape sensor;
    BasicPopulation population;
    Matrix gain;         // population precision for Gaussian populations
    double scale = 0.0;  // rate prefactor
  };
  std::vector<Term> terms_;
};

struct Mark {
  Vector center;
  int component = 0;
};

/// Draws the mark of an event fired at state x, from the law proportional to
/// rate(x; center) f(d center).
Mark sample_mark(const SensorShape& sensor, const PopulationDensity& population, const Vector& x,
                 Rng& rng);

struct Observations {
  Trajectory trajectory;
  std::vector<SpikeEvent> spikes;
  double max_step_probability = 0.0;
  std::vector<std::string> warnings;
};

/// Bernoulli thinning on the dt grid: during step k -> k+1 an event occurs with
/// probability min(total_rate(x_{k+1}) dt, 1) and is stamped (k+1) dt. At most
/// one event per step. A warning is attached when any step probability
/// exceeds 0.1.
Observations generate_observations(const Model& model, const Vector& x0, double dt,
                                   double horizon, std::uint64_t seed);

// Spike events generated along a given trajectory (sub-stream "spikes").
std::vector<SpikeEvent> generate_spikes(const Model& model, const Trajectory& trajectory,
                                        std::uint64_t seed, double* max_probability = nullptr);

}  // namespace ppadf
