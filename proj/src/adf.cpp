#include "ppadf/adf.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ppadf/errors.hpp"
#include "ppadf/gaussian_product.hpp"
#include "ppadf/normal.hpp"
#include "ppadf/simulate.hpp"

namespace ppadf {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Matrix projected_cov(const GaussianBelief& b, const SensorShape& s) {
  return s.observation * b.cov * s.observation.transpose();
}

double interval_scale(const SensorShape& s) {
  return s.peak_rate * std::sqrt(2.0 * std::numbers::pi / s.precision(0, 0));
}

// Gain-weighted innovation term shared by the single-sensor and Gaussian
// population updates: Sigma H^T v rate and Sigma H^T (G - v v^T) H Sigma rate.
BeliefRate gain_update(const GaussianBelief& b, const SensorShape& s, const Matrix& gain,
                       const Vector& target, double rate) {
  const Vector v = gain * (s.observation * b.mean - target);
  const Matrix sht = b.cov * s.observation.transpose();
  BeliefRate out;
  out.mean = sht * v * rate;
  out.cov = sht * (gain - v * v.transpose()) * sht.transpose() * rate;
  return out;
}

SensorGain basic_gain(const GaussianBelief& b, const SensorShape& s, const BasicPopulation& pop) {
  const Matrix proj = projected_cov(b, s);
  const ProductGain sg = product_gain(proj, s.precision);
  SensorGain out;
  out.spike_gain = sg.gain;
  std::visit(overloaded{
                 [&](const SingleSensor& p) {
                   const Vector diff = p.center - s.observation * b.mean;
                   out.expected_rate =
                       s.peak_rate * std::sqrt(sg.det_ratio) * std::exp(-0.5 * quad_form(diff, sg.gain));
                 },
                 [&](const UniformPopulation&) {
                   const double m = static_cast<double>(s.sensory_dim());
                   out.expected_rate = s.peak_rate * std::sqrt(std::pow(2.0 * std::numbers::pi, m) /
                                                               s.precision.determinant());
                 },
                 [&](const GaussianPopulation& p) {
                   const ProductGain zg = product_gain(proj + p.spread, s.precision);
                   const Vector diff = p.center - s.observation * b.mean;
                   out.population_gain = zg.gain;
                   out.expected_rate =
                       s.peak_rate * std::sqrt(zg.det_ratio) * std::exp(-0.5 * quad_form(diff, zg.gain));
                 },
                 [&](const IntervalPopulation& p) {
                   const double sd = std::sqrt(proj(0, 0) + 1.0 / s.precision(0, 0));
                   const IntervalTerms t =
                       interval_terms(p.lower, p.upper, (s.observation * b.mean)(0), sd);
                   out.expected_rate = interval_scale(s) * t.mass;
                 },
             },
             pop);
  return out;
}

}  // namespace

IntervalTerms interval_terms(double lower, double upper, double mean, double sd) {
  IntervalTerms t;
  t.alpha = (lower - mean) / sd;
  t.beta = (upper - mean) / sd;
  const double a = t.alpha, b = t.beta;
  t.mass = std_normal_mass(a, b);
  // phi(b) = phi(a) exp(-d) with d = (b - a)(b + a) / 2; factor out the larger
  // density so expm1 carries the small difference.
  if (std::abs(a) <= std::abs(b)) {
    const double d = 0.5 * (b - a) * (b + a);
    const double em = std::expm1(-d);
    t.density_diff = std_normal_pdf(a) * em;
    t.moment_diff = std_normal_pdf(a) * ((b - a) + b * em);
  } else {
    const double d = 0.5 * (a - b) * (a + b);
    const double em = std::expm1(-d);
    t.density_diff = -std_normal_pdf(b) * em;
    t.moment_diff = std_normal_pdf(b) * ((b - a) - a * em);
  }
  return t;
}

Matrix sensor_gain(const Matrix& cov, const Matrix& observation, const Matrix& precision) {
  if (!is_spd(cov)) throw NumericError("sensor_gain: belief covariance is not SPD");
  return product_gain(observation * cov * observation.transpose(), precision).gain;
}

double expected_rate(const GaussianBelief& belief, const SensorShape& sensor,
                     const Vector& center) {
  return basic_gain(belief, sensor, SingleSensor{center}).expected_rate;
}

PopulationRate expected_rate_pop(const GaussianBelief& belief, const SensorShape& sensor,
                                 const PopulationDensity& population) {
  PopulationRate out;
  for (const auto& c : flatten_components(sensor, population)) {
    out.components.push_back(basic_gain(belief, c.sensor, c.population));
    out.expected_total_rate += c.weight * out.components.back().expected_rate;
  }
  return out;
}

Matrix enforce_spd(const Matrix& cov, SpdPolicy policy, const char* context) {
  Matrix sym = symmetrized(cov);
  if (!sym.allFinite()) throw NumericError(std::string(context) + ": covariance is not finite");
  Eigen::LLT<Matrix> llt(sym);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    // Cholesky accepts tiny pivots; require the smallest pivot to clear the
    // trace-scaled tolerance as well.
    const double floor = kSpdTolerance * std::abs(sym.trace());
    const Vector diag = llt.matrixLLT().diagonal();
    ok = diag.minCoeff() > 0.0 && diag.cwiseAbs2().minCoeff() > floor;
    if (!ok && sym.rows() > 1) ok = min_eigenvalue(sym) > floor;
  }
  if (ok) return sym;
  if (policy == SpdPolicy::kJitter) return clamp_eigenvalues(sym);
  std::ostringstream os;
  os << context << ": covariance lost positive definiteness (min eigenvalue "
     << min_eigenvalue(sym) << ")";
  throw NumericError(os.str());
}

BeliefRate prior_rate(const GaussianBelief& b, const LinearDynamics& dyn) {
  BeliefRate r;
  r.mean = dyn.drift * b.mean + dyn.drive;
  r.cov = dyn.drift * b.cov + b.cov * dyn.drift.transpose() +
          dyn.diffusion * dyn.diffusion.transpose();
  return r;
}

GaussianBelief prior_step(const GaussianBelief& b, const LinearDynamics& dyn, double dt,
                          SpdPolicy policy) {
  const BeliefRate r = prior_rate(b, dyn);
  return {b.mean + r.mean * dt, enforce_spd(b.cov + r.cov * dt, policy, "prior_step")};
}

namespace {

BeliefRate basic_continuous_rate(const GaussianBelief& b, const SensorShape& s,
                                 const BasicPopulation& pop) {
  const int n = b.dim();
  BeliefRate zero{Vector::Zero(n), Matrix::Zero(n, n)};
  return std::visit(
      overloaded{
          [&](const SingleSensor& p) {
            const SensorGain g = basic_gain(b, s, pop);
            return gain_update(b, s, g.spike_gain, p.center, g.expected_rate);
          },
          [&](const UniformPopulation&) { return zero; },
          [&](const GaussianPopulation& p) {
            const SensorGain g = basic_gain(b, s, pop);
            return gain_update(b, s, *g.population_gain, p.center, g.expected_rate);
          },
          [&](const IntervalPopulation& p) {
            const double proj = projected_cov(b, s)(0, 0);
            const double sd = std::sqrt(proj + 1.0 / s.precision(0, 0));
            const IntervalTerms t =
                interval_terms(p.lower, p.upper, (s.observation * b.mean)(0), sd);
            const double scale = interval_scale(s);
            const Vector sht = b.cov * s.observation.transpose();
            BeliefRate r;
            r.mean = sht * (scale * t.density_diff / sd);
            r.cov = sht * sht.transpose() * (scale * t.moment_diff / (sd * sd));
            return r;
          },
      },
      pop);
}

}  // namespace

BeliefRate continuous_rate(const GaussianBelief& b, const SensorShape& s,
                           const PopulationDensity& pop) {
  if (const auto* mix = std::get_if<MixturePopulation>(&pop)) {
    const int n = b.dim();
    BeliefRate sum{Vector::Zero(n), Matrix::Zero(n, n)};
    for (const auto& c : mix->components) {
      const BeliefRate r = basic_continuous_rate(b, c.sensor, c.population);
      sum.mean += c.weight * r.mean;
      sum.cov += c.weight * r.cov;
    }
    return sum;
  }
  return std::visit(
      overloaded{[&](const MixturePopulation&) { return BeliefRate{}; },
                 [&](const auto& p) { return basic_continuous_rate(b, s, BasicPopulation{p}); }},
      pop);
}

GaussianBelief continuous_step(const GaussianBelief& b, const SensorShape& s,
                               const PopulationDensity& pop, double dt, SpdPolicy policy) {
  if (std::holds_alternative<UniformPopulation>(pop)) return b;
  const BeliefRate r = continuous_rate(b, s, pop);
  return {b.mean + r.mean * dt, enforce_spd(b.cov + r.cov * dt, policy, "continuous_step")};
}

GaussianBelief spike_update(const GaussianBelief& b, const SensorShape& s, const Vector& center,
                            SpdPolicy policy) {
  const Matrix gain = product_gain(projected_cov(b, s), s.precision).gain;
  const Matrix sht = b.cov * s.observation.transpose();
  GaussianBelief out;
  out.mean = b.mean + sht * (gain * (center - s.observation * b.mean));
  out.cov = enforce_spd(b.cov - sht * gain * sht.transpose(), policy, "spike_update");
  return out;
}

std::size_t grid_index(double t, double dt) {
  const double ratio = t / dt;
  const double nearest = std::round(ratio);
  if (!(std::abs(ratio - nearest) <= 1e-6) || nearest < 0.0) {
    std::ostringstream os;
    os.precision(17);
    os << "event time " << t << " is not on the dt = " << dt << " grid";
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(nearest);
}

BeliefTrajectory filter_run(const std::vector<SpikeEvent>& events, const Model& model,
                            const GaussianBelief& initial, double dt, double horizon,
                            const FilterOptions& options) {
  const std::size_t steps = grid_steps(horizon, dt);
  const auto components = flatten_components(model.sensor, model.population);

  std::vector<std::size_t> event_step(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i > 0 && events[i].t < events[i - 1].t) {
      std::ostringstream os;
      os << "events are not sorted by time (event " << i << ")";
      throw ConfigError(os.str());
    }
    event_step[i] = grid_index(events[i].t, dt);
    if (event_step[i] == 0 || event_step[i] > steps)
      throw ConfigError("event at t = " + std::to_string(events[i].t) +
                        " lies outside the filtering horizon");
    if (events[i].component < 0 ||
        static_cast<std::size_t>(events[i].component) >= components.size())
      throw ConfigError("event component index out of range");
  }

  const bool use_continuous = options.continuous_terms &&
                              !std::holds_alternative<UniformPopulation>(model.population);
  BeliefTrajectory out{dt, {}};
  out.beliefs.reserve(steps + 1);
  GaussianBelief b = initial;
  b.cov = enforce_spd(b.cov, options.spd, "initial belief");
  out.beliefs.push_back(b);
  std::size_t next_event = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    BeliefRate r = prior_rate(b, model.dynamics);
    if (use_continuous) {
      const BeliefRate c = continuous_rate(b, model.sensor, model.population);
      r.mean += c.mean;
      r.cov += c.cov;
    }
    GaussianBelief next{b.mean + r.mean * dt, b.cov + r.cov * dt};
    try {
      next.cov = enforce_spd(next.cov, options.spd, "filter drift");
      for (; next_event < events.size() && event_step[next_event] == k; ++next_event) {
        const auto& ev = events[next_event];
        next = spike_update(next, components[ev.component].sensor, ev.mark, options.spd);
      }
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << e.what() << " at step " << k << " (t = " << out.time(k) << ", mean = "
         << b.mean.transpose() << ", cov = " << b.cov.reshaped().transpose() << ")";
      throw NumericError(os.str());
    }
    b = std::move(next);
    out.beliefs.push_back(b);
  }
  return out;
}

}  // namespace ppadf
