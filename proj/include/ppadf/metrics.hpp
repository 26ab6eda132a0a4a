#pragma once

#include <span>
#include <vector>

#include "ppadf/adf.hpp"
#include "ppadf/pf.hpp"
#include "ppadf/simulate.hpp"

namespace ppadf {

/// Per-step agreement between the ADF belief and the particle posterior.
struct ComparisonRecord {
  double t = 0.0;
  double eps_mu = 0.0;     // (mu_adf - mu_pf) / sigma_pf
  double eps_sigma = 1.0;  // sigma_adf / sigma_pf
  double ks = 0.0;         // particle cdf vs its moment-matched Gaussian
};

/// sup_x |F(x) - G(x)| between the weighted empirical cdf F of a scalar
/// ensemble and the Gaussian G with the same mean and variance. Both one-sided
/// limits are checked at every jump of F. Throws ConfigError for n != 1 or a
/// zero-variance ensemble.
double ks_statistic(const ParticleEnsemble& ens);

// Same statistic against an arbitrary Gaussian reference.
double ks_statistic(std::span<const double> positions, std::span<const double> weights,
                    double ref_mean, double ref_sd);

ComparisonRecord compare_moments(double t, const GaussianBelief& adf, const Moments& pf, double ks);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample sd (n - 1), zero for a single record
};

struct ErrorStats {
  MeanSd eps_mu;
  MeanSd eps_sigma;
  std::size_t count = 0;
};

ErrorStats error_stats(std::span<const ComparisonRecord> records);

MeanSd mean_sd(std::span<const double> values);

/// Left-endpoint Riemann sum of |x_k - mu_k|^2 dt over grid points with
/// t0 <= t_k < t1. The estimate grid may refine the truth grid by an integer
/// factor; it is then sampled at the truth grid points.
double mse_window(const Trajectory& truth, const BeliefTrajectory& est, double t0, double t1);

/// Mean of sqrt(trace Sigma_k) over grid points with t0 <= t_k <= t1.
double avg_posterior_sd(const BeliefTrajectory& beliefs, double t0, double t1);

}  // namespace ppadf
