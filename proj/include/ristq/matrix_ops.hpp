// SPDX-License-Identifier: Apache-2.0
//
// Structured complex linear algebra shared by the channel, pilot and
// estimator modules. Matrices are Eigen column-major, so vec(M) is the
// plain storage order of M.
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ristq {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-10;

/// Kronecker product a ⊗ b. OpenMP-parallel over output columns.
ComplexMatrix kronecker(const ComplexMatrix &a, const ComplexMatrix &b);

/// Column-wise Kronecker (Khatri-Rao) product: column j is a(:,j) ⊗ b(:,j).
/// Throws DimensionError when the column counts differ.
ComplexMatrix khatri_rao(const ComplexMatrix &a, const ComplexMatrix &b);

/// Elementwise (Hadamard) product.
ComplexMatrix hadamard(const ComplexMatrix &a, const ComplexMatrix &b);

/// Stacks the columns of m into one vector.
ComplexVector vec(const ComplexMatrix &m);

/// Inverse of vec for a rows x cols matrix.
ComplexMatrix unvec(const ComplexVector &v, Eigen::Index rows, Eigen::Index cols);

// Hermitian PSD matrix functions via eigendecomposition. Eigenvalues down to
// -1e-10 * lambda_max are clamped to zero; anything more negative is NotPsdError.
ComplexMatrix hermitian_sqrt(const ComplexMatrix &a);
ComplexMatrix hermitian_inv_sqrt(const ComplexMatrix &a);

/// Number of singular values above rel_tol * sigma_max (0 for the zero matrix).
std::size_t numerical_rank(const ComplexMatrix &a, double rel_tol = kDefaultRankTol);

struct WaterFillResult {
    std::vector<double> squared_diagonal;
    double zeta = 0.0;
};

/// Solves coefficient * sum_g (zeta * lambda_g - 1)^+ = 1 by exact active-set
/// enumeration. singular_values must be sorted descending and nonnegative.
WaterFillResult water_fill(std::span<const double> singular_values, double coefficient);

/// Unitary U such that U h U^H has every diagonal entry equal to trace(h)/G.
/// Built from 2x2 unitary reflections that repeatedly average the current largest
/// and smallest diagonal entries.
ComplexMatrix equalizing_unitary(const ComplexMatrix &h);

/// Relative asymmetry ||a - a^H||_F / ||a||_F (0 for the zero matrix).
double hermitian_defect(const ComplexMatrix &a);

/// Solves (h) x = rhs for Hermitian positive definite h, returning h^{-1} rhs.
ComplexMatrix hpd_solve(const ComplexMatrix &h, const ComplexMatrix &rhs);

// Straight-loop reference kernels. Kept for equivalence tests and benchmarks
// against the parallel versions above.
namespace serial {
ComplexMatrix kronecker(const ComplexMatrix &a, const ComplexMatrix &b);
ComplexMatrix khatri_rao(const ComplexMatrix &a, const ComplexMatrix &b);
} // namespace serial

} // namespace ristq
