#pragma once

#include "ppadf/linalg.hpp"

namespace ppadf {

/// Gain of a Gaussian tuning curve with precision R seen through an extra
/// covariance P: gain = (R^{-1} + P)^{-1}, evaluated in the inverse-free form
/// R (I + P R)^{-1} so that singular R is allowed. `det_ratio` is
/// |gain| / |R| = 1 / |I + P R|, finite even when |R| = 0.
struct ProductGain {
  Matrix gain;
  double det_ratio = 1.0;
};

ProductGain product_gain(const Matrix& extra_cov, const Matrix& precision);

}  // namespace ppadf
