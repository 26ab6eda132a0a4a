#include "ppadf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ppadf/errors.hpp"
#include "ppadf/gaussian_product.hpp"
#include "ppadf/normal.hpp"

namespace ppadf {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double interval_scale(const SensorShape& s) {
  return s.peak_rate * std::sqrt(2.0 * std::numbers::pi / s.precision(0, 0));
}

// Standard normal restricted to [a, b], by inversion on the tail that keeps
// the most precision.
double truncated_std_normal(double a, double b, Rng& rng) {
  const double u = rng.uniform();
  if (a >= 0.0) {
    const double lo = std_normal_sf(b), hi = std_normal_sf(a);
    if (!(hi > lo)) return a;
    return -std_normal_quantile(lo + u * (hi - lo));
  }
  const double lo = std_normal_cdf(a), hi = std_normal_cdf(b);
  if (!(hi > lo)) return b;
  return std_normal_quantile(lo + u * (hi - lo));
}

Vector sample_gaussian(const Vector& mean, const Matrix& cov, Rng& rng) {
  return mean + psd_factor(cov) * rng.normal_vector(mean.size());
}

Vector sample_basic_mark(const SensorShape& s, const BasicPopulation& pop, const Vector& x,
                         Rng& rng) {
  return std::visit(
      overloaded{
          [&](const SingleSensor& p) -> Vector { return p.center; },
          [&](const UniformPopulation&) -> Vector {
            return sample_gaussian(s.observation * x, s.precision.inverse(), rng);
          },
          [&](const GaussianPopulation& p) -> Vector {
            const Matrix spread_inv = p.spread.inverse();
            const Matrix posterior_precision = s.precision + spread_inv;
            Eigen::LLT<Matrix> llt(symmetrized(posterior_precision));
            const Vector mean =
                llt.solve(s.precision * (s.observation * x) + spread_inv * p.center);
            const Matrix cov = llt.solve(Matrix::Identity(mean.size(), mean.size()));
            return sample_gaussian(mean, symmetrized(cov), rng);
          },
          [&](const IntervalPopulation& p) -> Vector {
            const double loc = (s.observation * x)(0);
            const double sd = 1.0 / std::sqrt(s.precision(0, 0));
            const double z = truncated_std_normal((p.lower - loc) / sd, (p.upper - loc) / sd, rng);
            return Vector::Constant(1, std::clamp(loc + sd * z, p.lower, p.upper));
          },
      },
      pop);
}

}  // namespace

std::size_t grid_steps(double horizon, double dt) {
  const double ratio = horizon / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio))
    return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::floor(ratio));
}

Trajectory integrate_state(const LinearDynamics& dyn, const Vector& x0, double dt,
                           double horizon, std::uint64_t seed) {
  if (!(dt > 0.0) || !(horizon >= dt)) throw ConfigError("integrate_state: need dt > 0 and T >= dt");
  const std::size_t steps = grid_steps(horizon, dt);
  Rng rng(substream(seed, "state"));
  const double root_dt = std::sqrt(dt);
  const Eigen::Index q = dyn.diffusion.cols();
  const bool noisy = dyn.diffusion.size() > 0 && !dyn.diffusion.isZero(0.0);

  Trajectory traj{dt, {}};
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);
  Vector x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    Vector next = x + (dyn.drift * x + dyn.drive) * dt;
    // Noise is drawn even for D = 0 so the stream layout does not depend on D.
    const Vector xi = rng.normal_vector(q);
    if (noisy) next += dyn.diffusion * xi * root_dt;
    if (!next.allFinite()) {
      std::ostringstream os;
      os << "state trajectory became non-finite at step " << k + 1;
      throw NumericError(os.str());
    }
    x = std::move(next);
    traj.states.push_back(x);
  }
  return traj;
}

double sensor_rate(const SensorShape& s, const Vector& x, const Vector& center) {
  const Vector diff = s.observation * x - center;
  return s.peak_rate * std::exp(-0.5 * quad_form(diff, s.precision));
}

RateField::RateField(const SensorShape& sensor, const PopulationDensity& population) {
  for (auto& c : flatten_components(sensor, population)) {
    Term t{c.weight, std::move(c.sensor), std::move(c.population), {}, 0.0};
    const SensorShape& s = t.sensor;
    std::visit(overloaded{
                   [&](const SingleSensor&) { t.scale = s.peak_rate; },
                   [&](const UniformPopulation&) {
                     const double m = static_cast<double>(s.sensory_dim());
                     const double det = s.precision.determinant();
                     if (!(det > 0.0)) throw NumericError("uniform population needs |R| > 0");
                     t.scale = s.peak_rate * std::sqrt(std::pow(2.0 * std::numbers::pi, m) / det);
                   },
                   [&](const GaussianPopulation& p) {
                     const ProductGain w = product_gain(p.spread, s.precision);
                     t.gain = w.gain;
                     t.scale = s.peak_rate * std::sqrt(w.det_ratio);
                   },
                   [&](const IntervalPopulation&) {
                     if (!(s.precision(0, 0) > 0.0))
                       throw NumericError("interval population needs R > 0");
                     t.scale = interval_scale(s);
                   },
               },
               t.population);
    terms_.push_back(std::move(t));
  }
}

Eigen::ArrayXd RateField::total(const Matrix& states) const {
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(states.cols());
  for (const Term& t : terms_) {
    const SensorShape& s = t.sensor;
    std::visit(
        overloaded{
            [&](const SingleSensor& p) {
              const Matrix diff = (s.observation * states).colwise() - p.center;
              const Eigen::ArrayXd q = (s.precision * diff).cwiseProduct(diff).colwise().sum();
              sum += t.weight * t.scale * (-0.5 * q).exp();
            },
            [&](const UniformPopulation&) { sum += t.weight * t.scale; },
            [&](const GaussianPopulation& p) {
              const Matrix diff = (s.observation * states).colwise() - p.center;
              const Eigen::ArrayXd q = (t.gain * diff).cwiseProduct(diff).colwise().sum();
              sum += t.weight * t.scale * (-0.5 * q).exp();
            },
            [&](const IntervalPopulation& p) {
              const Eigen::RowVectorXd loc = s.observation * states;
              const double sd = 1.0 / std::sqrt(s.precision(0, 0));
              for (Eigen::Index i = 0; i < loc.size(); ++i)
                sum(i) += t.weight * t.scale *
                          std_normal_mass((p.lower - loc(i)) / sd, (p.upper - loc(i)) / sd);
            },
        },
        t.population);
  }
  return sum;
}

double RateField::total(const Vector& x) const { return total(Matrix(x))(0); }

Eigen::ArrayXd RateField::log_sensor(const Matrix& states, const Vector& center,
                                     int component) const {
  const SensorShape& s = terms_.at(static_cast<std::size_t>(component)).sensor;
  const Matrix diff = (s.observation * states).colwise() - center;
  const Eigen::ArrayXd q = (s.precision * diff).cwiseProduct(diff).colwise().sum();
  return std::log(s.peak_rate) - 0.5 * q;
}

double total_rate(const SensorShape& s, const PopulationDensity& pop, const Vector& x) {
  return RateField(s, pop).total(x);
}

Mark sample_mark(const SensorShape& s, const PopulationDensity& pop, const Vector& x, Rng& rng) {
  if (const auto* mix = std::get_if<MixturePopulation>(&pop)) {
    std::vector<double> rates;
    double sum = 0.0;
    for (const auto& c : mix->components) {
      rates.push_back(c.weight * total_rate(c.sensor, as_population(c.population), x));
      sum += rates.back();
    }
    const double u = rng.uniform() * sum;
    std::size_t pick = 0;
    double acc = rates[0];
    while (acc <= u && pick + 1 < rates.size()) acc += rates[++pick];
    const auto& c = mix->components[pick];
    return {sample_basic_mark(c.sensor, c.population, x, rng), static_cast<int>(pick)};
  }
  return std::visit(
      overloaded{[&](const MixturePopulation&) { return Mark{}; },
                 [&](const auto& p) { return Mark{sample_basic_mark(s, BasicPopulation{p}, x, rng), 0}; }},
      pop);
}

std::vector<SpikeEvent> generate_spikes(const Model& model, const Trajectory& traj,
                                        std::uint64_t seed, double* max_probability) {
  Rng rng(substream(seed, "spikes"));
  const RateField rates(model.sensor, model.population);
  std::vector<SpikeEvent> spikes;
  double max_p = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const Vector& x = traj.states[k + 1];
    const double p = std::min(rates.total(x) * traj.dt, 1.0);
    max_p = std::max(max_p, p);
    if (rng.uniform() < p) {
      Mark mark = sample_mark(model.sensor, model.population, x, rng);
      spikes.push_back({traj.time(k + 1), std::move(mark.center), mark.component});
    }
  }
  if (max_probability) *max_probability = max_p;
  return spikes;
}

Observations generate_observations(const Model& model, const Vector& x0, double dt,
                                   double horizon, std::uint64_t seed) {
  Observations obs;
  obs.trajectory = integrate_state(model.dynamics, x0, dt, horizon, seed);
  obs.spikes = generate_spikes(model, obs.trajectory, seed, &obs.max_step_probability);
  if (obs.max_step_probability > 0.1) {
    std::ostringstream os;
    os << "per-step event probability reached " << obs.max_step_probability
       << " (> 0.1); multi-event steps are truncated to one";
    obs.warnings.push_back(os.str());
  }
  return obs;
}

}  // namespace ppadf
