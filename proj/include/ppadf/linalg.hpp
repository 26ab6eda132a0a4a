#pragma once

#include <Eigen/Dense>

namespace ppadf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative tolerance for symmetry and definiteness checks. Eigenvalue
/// thresholds are scaled by the matrix trace so the checks are unit-free.
inline constexpr double kSpdTolerance = 1e-12;

bool is_symmetric(const Matrix& m, double rel_tol = kSpdTolerance);
Matrix symmetrized(const Matrix& m);

// Smallest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Matrix& m);

// Symmetric with every eigenvalue above kSpdTolerance * |trace|.
bool is_spd(const Matrix& m);
// Symmetric with every eigenvalue at least -kSpdTolerance * |trace|.
bool is_psd(const Matrix& m);

// Raises eigenvalues below floor_rel * trace(m) up to that floor.
Matrix clamp_eigenvalues(const Matrix& m, double floor_rel = kSpdTolerance);

// Square-root factor L with L L^T = m for a positive semidefinite m.
// Negative round-off eigenvalues are treated as zero.
Matrix psd_factor(const Matrix& m);

// z^T m z
inline double quad_form(const Vector& z, const Matrix& m) { return z.dot(m * z); }

int matrix_rank(const Matrix& m);

}  // namespace ppadf
