#include "ppadf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppadf/errors.hpp"
#include "ppadf/normal.hpp"

namespace ppadf {

double ks_statistic(std::span<const double> positions, std::span<const double> weights,
                    double ref_mean, double ref_sd) {
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double below = 0.0;  // F(x-)
  double sup = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double x = positions[order[i]];
    double mass = 0.0;
    for (; i < order.size() && positions[order[i]] == x; ++i) mass += weights[order[i]];
    const double g = std_normal_cdf((x - ref_mean) / ref_sd);
    const double at = std::min(below + mass / total, 1.0);
    sup = std::max({sup, std::abs(below - g), std::abs(at - g)});
    below = at;
  }
  return std::min(sup, 1.0);
}

double ks_statistic(const ParticleEnsemble& ens) {
  if (ens.dim() != 1) throw ConfigError("ks_statistic needs a scalar ensemble");
  const Moments m = pf_moments(ens);
  const double var = m.cov(0, 0);
  if (!(var > 0.0)) throw ConfigError("ks_statistic: ensemble has zero variance");
  return ks_statistic(std::span<const double>(ens.positions.data(), ens.size()),
                      std::span<const double>(ens.weights.data(), ens.size()), m.mean(0),
                      std::sqrt(var));
}

ComparisonRecord compare_moments(double t, const GaussianBelief& adf, const Moments& pf, double ks) {
  const double sd_pf = std::sqrt(pf.cov(0, 0));
  const double sd_adf = std::sqrt(adf.cov(0, 0));
  return {t, (adf.mean(0) - pf.mean(0)) / sd_pf, sd_adf / sd_pf, ks};
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

ErrorStats error_stats(std::span<const ComparisonRecord> records) {
  if (records.empty()) throw ConfigError("error_stats needs at least one record");
  std::vector<double> mu, sigma;
  mu.reserve(records.size());
  sigma.reserve(records.size());
  for (const auto& r : records) {
    mu.push_back(r.eps_mu);
    sigma.push_back(r.eps_sigma);
  }
  return {mean_sd(mu), mean_sd(sigma), records.size()};
}

namespace {

std::size_t refinement(double coarse, double fine) {
  const double ratio = coarse / fine;
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9 * r)
    throw ConfigError("estimate grid must refine the truth grid by an integer factor");
  return static_cast<std::size_t>(r);
}

}  // namespace

double mse_window(const Trajectory& truth, const BeliefTrajectory& est, double t0, double t1) {
  const double horizon = truth.time(truth.size() - 1);
  if (t0 < 0.0 || t1 > horizon + 1e-9 * truth.dt || !(t1 > t0))
    throw ConfigError("mse window lies outside the simulated horizon");
  const std::size_t ratio = refinement(truth.dt, est.dt);
  const auto k0 = static_cast<std::size_t>(std::ceil(t0 / truth.dt - 1e-9));
  const auto k1 = static_cast<std::size_t>(std::ceil(t1 / truth.dt - 1e-9));
  double sum = 0.0;
  for (std::size_t k = k0; k < k1; ++k) {
    const std::size_t j = k * ratio;
    if (j >= est.size()) throw ConfigError("estimate trajectory is shorter than the window");
    sum += (truth.states[k] - est.beliefs[j].mean).squaredNorm();
  }
  return sum * truth.dt;
}

double avg_posterior_sd(const BeliefTrajectory& beliefs, double t0, double t1) {
  const auto k0 = static_cast<std::size_t>(std::ceil(t0 / beliefs.dt - 1e-9));
  const auto k1 = static_cast<std::size_t>(std::floor(t1 / beliefs.dt + 1e-9));
  if (k1 >= beliefs.size() || k0 > k1) throw ConfigError("window lies outside the belief trajectory");
  double sum = 0.0;
  for (std::size_t k = k0; k <= k1; ++k) sum += std::sqrt(beliefs.beliefs[k].cov.trace());
  return sum / static_cast<double>(k1 - k0 + 1);
}

}  // namespace ppadf
