#include "ppadf/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace ppadf {

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_spd(const Matrix& m) {
  if (m.rows() == 0 || !is_symmetric(m)) return false;
  if (!m.allFinite()) return false;
  const double tr = std::abs(m.trace());
  return min_eigenvalue(m) > kSpdTolerance * tr;
}

bool is_psd(const Matrix& m) {
  if (m.rows() == 0 || !is_symmetric(m)) return false;
  if (!m.allFinite()) return false;
  const double tr = std::abs(m.trace());
  return min_eigenvalue(m) >= -kSpdTolerance * tr;
}

Matrix clamp_eigenvalues(const Matrix& m, double floor_rel) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m));
  const double floor = floor_rel * std::abs(m.trace());
  Vector values = es.eigenvalues().cwiseMax(floor);
  Matrix out = es.eigenvectors() * values.asDiagonal() * es.eigenvectors().transpose();
  return symmetrized(out);
}

Matrix psd_factor(const Matrix& m) {
  if (m.rows() == 1) return Matrix::Constant(1, 1, std::sqrt(std::max(m(0, 0), 0.0)));
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m));
  Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal();
}

int matrix_rank(const Matrix& m) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  return static_cast<int>(qr.rank());
}

}  // namespace ppadf
