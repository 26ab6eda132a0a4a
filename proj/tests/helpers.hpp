// Small constructors shared by the test binaries.
#pragma once

#include "ppadf/model.hpp"

namespace testing_helpers {

using ppadf::Matrix;
using ppadf::Vector;

inline Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }
inline Vector vec1(double v) { return Vector::Constant(1, v); }

inline ppadf::LinearDynamics scalar_dynamics(double drift, double diffusion, double drive = 0.0) {
  return {mat1(drift), vec1(drive), mat1(diffusion)};
}

// precision is 1 / sigma_r^2
inline ppadf::SensorShape scalar_sensor(double peak_rate, double precision) {
  return {peak_rate, mat1(1.0), mat1(precision)};
}

inline ppadf::GaussianBelief scalar_belief(double mean, double var) {
  return {vec1(mean), mat1(var)};
}

inline ppadf::GaussianPopulation scalar_gaussian_pop(double center, double var) {
  return {vec1(center), mat1(var)};
}

}  // namespace testing_helpers
