#include "ppadf/gaussian_product.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <numbers>

#include "ppadf/normal.hpp"

namespace ppadf {

ProductGain product_gain(const Matrix& extra_cov, const Matrix& precision) {
  const Eigen::Index m = precision.rows();
  if (m == 1) {
    const double r = precision(0, 0);
    const double denom = 1.0 + extra_cov(0, 0) * r;
    return {Matrix::Constant(1, 1, r / denom), 1.0 / denom};
  }
  const Matrix lhs = Matrix::Identity(m, m) + extra_cov * precision;
  // gain^T = lhs^{-T} R^T, and |lhs^T| = |lhs|.
  Eigen::PartialPivLU<Matrix> lu(lhs.transpose());
  Matrix gain = lu.solve(precision.transpose()).transpose();
  return {symmetrized(gain), 1.0 / lu.determinant()};
}

double std_normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace ppadf
