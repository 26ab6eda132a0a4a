#include "ppadf/pf.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ppadf/adf.hpp"
#include "ppadf/errors.hpp"
#include "ppadf/simulate.hpp"

namespace ppadf {

namespace {

void reweight_with(ParticleEnsemble& ens, const RateField& rates, double dt,
                   std::span<const SpikeEvent> events) {
  Eigen::ArrayXd logw = ens.weights.array().log() - rates.total(ens.positions) * dt;
  for (const auto& ev : events) logw += rates.log_sensor(ens.positions, ev.mark, ev.component);
  const double top = logw.maxCoeff();
  if (!std::isfinite(top)) {
    throw NumericError("particle weights underflowed: every particle has zero likelihood");
  }
  Eigen::ArrayXd w = (logw - top).exp();
  const double total = w.sum();
  ens.weights = (w / total).matrix();
}

}  // namespace

ParticleEnsemble pf_init(const GaussianBelief& belief, Eigen::Index particles, std::uint64_t seed) {
  if (particles < 2) throw ConfigError("particle filter needs at least two particles");
  Rng rng(substream(seed, "pf-init"));
  const Matrix factor = psd_factor(belief.cov);
  ParticleEnsemble ens;
  ens.positions.resize(belief.dim(), particles);
  for (Eigen::Index i = 0; i < particles; ++i)
    ens.positions.col(i) = belief.mean + factor * rng.normal_vector(belief.dim());
  ens.weights = Vector::Constant(particles, 1.0 / static_cast<double>(particles));
  return ens;
}

void propagate(ParticleEnsemble& ens, const LinearDynamics& dyn, double dt, Rng& rng) {
  Matrix drift = dyn.drift * ens.positions;
  drift.colwise() += dyn.drive;
  ens.positions += drift * dt;
  const Eigen::Index q = dyn.diffusion.cols();
  if (q == 0 || dyn.diffusion.isZero(0.0)) return;
  Matrix noise(q, ens.size());
  for (Eigen::Index i = 0; i < ens.size(); ++i)
    for (Eigen::Index j = 0; j < q; ++j) noise(j, i) = rng.normal();
  ens.positions += dyn.diffusion * noise * std::sqrt(dt);
}

void reweight(ParticleEnsemble& ens, const Model& model, double dt,
              std::span<const SpikeEvent> events) {
  reweight_with(ens, RateField(model.sensor, model.population), dt, events);
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, double offset) {
  const std::size_t count = weights.size();
  std::vector<std::size_t> picks(count);
  const double step = 1.0 / static_cast<double>(count);
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double point = offset + static_cast<double>(k) * step;
    while (cumulative <= point && j + 1 < count) cumulative += weights[++j];
    picks[k] = j;
  }
  return picks;
}

ParticleEnsemble resample(const ParticleEnsemble& ens, double offset) {
  const auto picks =
      systematic_resample(std::span<const double>(ens.weights.data(), ens.weights.size()), offset);
  ParticleEnsemble out;
  out.positions.resize(ens.dim(), ens.size());
  for (Eigen::Index i = 0; i < ens.size(); ++i)
    out.positions.col(i) = ens.positions.col(static_cast<Eigen::Index>(picks[i]));
  out.weights = Vector::Constant(ens.size(), 1.0 / static_cast<double>(ens.size()));
  return out;
}

double effective_sample_size(const ParticleEnsemble& ens) {
  return 1.0 / ens.weights.squaredNorm();
}

namespace {

ParticleEnsemble maybe_resample(ParticleEnsemble ens, Rng& rng, const PfOptions& options,
                                double* offset_out) {
  const double particles = static_cast<double>(ens.size());
  const bool due = options.mode == ResampleMode::kEveryStep ||
                   effective_sample_size(ens) < options.ess_fraction * particles;
  // The offset is drawn every step so the stream does not depend on the mode.
  const double offset = rng.uniform() / particles;
  if (offset_out) *offset_out = due ? offset : std::numeric_limits<double>::quiet_NaN();
  return due ? resample(ens, offset) : ens;
}

}  // namespace

ParticleEnsemble pf_step(ParticleEnsemble ens, const Model& model, double dt,
                         std::span<const SpikeEvent> events, Rng& rng, const PfOptions& options,
                         double* offset_out) {
  propagate(ens, model.dynamics, dt, rng);
  reweight(ens, model, dt, events);
  return maybe_resample(std::move(ens), rng, options, offset_out);
}

Moments pf_moments(const ParticleEnsemble& ens) {
  const double total = ens.weights.sum();
  Moments m;
  m.mean = ens.positions * ens.weights / total;
  const Matrix centered = ens.positions.colwise() - m.mean;
  m.cov = centered * ens.weights.asDiagonal() * centered.transpose() / total;
  return m;
}

PfRun pf_filter_run(const std::vector<SpikeEvent>& events, const Model& model,
                    const GaussianBelief& initial, double dt, double horizon,
                    Eigen::Index particles, std::uint64_t seed, const PfOptions& options,
                    const EnsembleObserver& observer) {
  const std::size_t steps = grid_steps(horizon, dt);
  const RateField rates(model.sensor, model.population);
  ParticleEnsemble ens = pf_init(initial, particles, seed);
  PfRun run{dt, {}, {}};
  run.moments.reserve(steps + 1);
  run.moments.push_back(pf_moments(ens));
  if (observer) observer(0, ens);

  std::size_t next = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    std::size_t first = next;
    while (next < events.size() && grid_index(events[next].t, dt) == k) ++next;
    if (next < events.size() && grid_index(events[next].t, dt) < k)
      throw ConfigError("events are not sorted by time");
    Rng rng(stable_hash({seed, name_key("pf-step"), k}));
    propagate(ens, model.dynamics, dt, rng);
    try {
      reweight_with(ens, rates, dt, std::span<const SpikeEvent>(events).subspan(first, next - first));
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << e.what() << " at step " << k;
      throw NumericError(os.str());
    }
    run.moments.push_back(pf_moments(ens));
    if (observer) observer(k, ens);
    double offset = 0.0;
    ens = maybe_resample(std::move(ens), rng, options, &offset);
    run.offsets.push_back(offset);
  }
  if (next != events.size()) throw ConfigError("events lie outside the filtering horizon");
  return run;
}

}  // namespace ppadf
