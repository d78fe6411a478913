// SPDX-License-Identifier: Apache-2.0
#include "ristq/matrix_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ristq/error.hpp"

namespace ristq {

namespace {

constexpr double kAsymmetryTol = 1e-8;
constexpr double kNegativeClampTol = 1e-10;
constexpr double kInvSqrtCondTol = 1e-12;

struct ClampedEig {
    RealVector values;
    ComplexMatrix vectors;
};

ClampedEig clamped_eig(const ComplexMatrix &a, const char *who) {
    if (a.rows() != a.cols())
        throw DimensionError(std::string(who) + ": matrix is not square");
    if (hermitian_defect(a) > kAsymmetryTol)
        throw NotHermitianError(std::string(who) + ": matrix is not Hermitian");
    const ComplexMatrix sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
    if (eig.info() != Eigen::Success)
        throw Error(std::string(who) + ": eigendecomposition failed");
    RealVector values = eig.eigenvalues();
    const double scale = values.size() > 0 ? values.cwiseAbs().maxCoeff() : 0.0;
    for (auto &v : values) {
        if (v < 0.0) {
            if (v < -kNegativeClampTol * scale)
                throw NotPsdError(std::string(who) + ": matrix has a negative eigenvalue");
            v = 0.0;
        }
    }
    return {std::move(values), eig.eigenvectors()};
}

} // namespace

double hermitian_defect(const ComplexMatrix &a) {
    const double norm = a.norm();
    if (norm == 0.0)
        return 0.0;
    return (a - a.adjoint()).norm() / norm;
}

ComplexMatrix kronecker(const ComplexMatrix &a, const ComplexMatrix &b) {
    const Eigen::Index ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
    ComplexMatrix out(ar * br, ac * bc);
    const Eigen::Index ncols = ac * bc;
#pragma omp parallel for schedule(static)
    for (Eigen::Index col = 0; col < ncols; ++col) {
        const Eigen::Index j = col / bc, l = col % bc;
        for (Eigen::Index i = 0; i < ar; ++i)
            out.col(col).segment(i * br, br) = a(i, j) * b.col(l);
    }
    return out;
}

ComplexMatrix khatri_rao(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.cols() != b.cols())
        throw DimensionError("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.cols()) + ")");
    const Eigen::Index ar = a.rows(), br = b.rows(), nc = a.cols();
    ComplexMatrix out(ar * br, nc);
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < nc; ++j)
        for (Eigen::Index i = 0; i < ar; ++i)
            out.col(j).segment(i * br, br) = a(i, j) * b.col(j);
    return out;
}

ComplexMatrix hadamard(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("hadamard: shapes differ");
    return a.cwiseProduct(b);
}

ComplexVector vec(const ComplexMatrix &m) {
    return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

ComplexMatrix unvec(const ComplexVector &v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols)
        throw DimensionError("unvec: length does not match rows*cols");
    return Eigen::Map<const ComplexMatrix>(v.data(), rows, cols);
}

ComplexMatrix hermitian_sqrt(const ComplexMatrix &a) {
    const auto e = clamped_eig(a, "hermitian_sqrt");
    return e.vectors * e.values.cwiseSqrt().cast<cplx>().asDiagonal() * e.vectors.adjoint();
}

ComplexMatrix hermitian_inv_sqrt(const ComplexMatrix &a) {
    const auto e = clamped_eig(a, "hermitian_inv_sqrt");
    if (e.values.size() == 0)
        return ComplexMatrix(0, 0);
    const double lmax = e.values.maxCoeff();
    if (!(e.values.minCoeff() > kInvSqrtCondTol * lmax))
        throw SingularMatrixError("hermitian_inv_sqrt: matrix is singular to working tolerance");
    const RealVector inv = e.values.cwiseSqrt().cwiseInverse();
    return e.vectors * inv.cast<cplx>().asDiagonal() * e.vectors.adjoint();
}

std::size_t numerical_rank(const ComplexMatrix &a, double rel_tol) {
    if (a.size() == 0)
        return 0;
    Eigen::JacobiSVD<ComplexMatrix> svd(a);
    const RealVector &s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0)
        return 0;
    const double cut = rel_tol * s(0);
    return static_cast<std::size_t>((s.array() > cut).count());
}

WaterFillResult water_fill(std::span<const double> singular_values, double coefficient) {
    if (!(coefficient > 0.0) || !std::isfinite(coefficient))
        throw InfeasibleError("water_fill: coefficient must be positive and finite");
    const std::size_t n = singular_values.size();
    for (std::size_t g = 0; g < n; ++g) {
        if (singular_values[g] < 0.0)
            throw InfeasibleError("water_fill: negative singular value");
        if (g > 0 && singular_values[g] > singular_values[g - 1])
            throw InfeasibleError("water_fill: singular values are not sorted descending");
    }
    if (n == 0 || !(singular_values[0] > 0.0))
        throw InfeasibleError("water_fill: all singular values are zero");

    // With the top k terms active, the sum constraint fixes
    // zeta_k = (1/coefficient + k) / sum_{g<k} lambda_g. The solution is the k
    // whose zeta keeps term k positive and term k+1 nonpositive.
    WaterFillResult out;
    out.squared_diagonal.assign(n, 0.0);
    double partial = 0.0;
    std::size_t active = 0;
    double zeta = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double lk = singular_values[k - 1];
        if (!(lk > 0.0))
            break;
        partial += lk;
        const double z = (1.0 / coefficient + static_cast<double>(k)) / partial;
        if (!(z * lk > 1.0))
            break;
        active = k;
        zeta = z;
        if (k == n || z * singular_values[k] <= 1.0)
            break;
    }
    if (active == 0)
        throw InfeasibleError("water_fill: no feasible active set");
    out.zeta = zeta;
    for (std::size_t g = 0; g < active; ++g)
        out.squared_diagonal[g] = coefficient * (zeta * singular_values[g] - 1.0);
    return out;
}

ComplexMatrix equalizing_unitary(const ComplexMatrix &h) {
    if (h.rows() != h.cols())
        throw DimensionError("equalizing_unitary: matrix is not square");
    const Eigen::Index n = h.rows();
    ComplexMatrix u = ComplexMatrix::Identity(n, n);
    if (n <= 1)
        return u;
    ComplexMatrix m = 0.5 * (h + h.adjoint());
    const double target = m.diagonal().real().sum() / static_cast<double>(n);
    const double tol = 1e-9 * std::abs(target);
    const long max_steps = 100L * n * n;

    for (long step = 0; step < max_steps; ++step) {
        Eigen::Index i = 0, j = 0;
        const RealVector d = m.diagonal().real();
        d.maxCoeff(&i);
        d.minCoeff(&j);
        if (d(i) - d(j) <= tol)
            break;

        // Reflection R = [[c, s e^{ip}], [s e^{-ip}, -c]] acting on rows (i, j);
        // the angle puts both diagonal entries at their mean.
        const double a = d(i), dd = d(j);
        const cplx b = m(i, j);
        const double bm = std::abs(b);
        const cplx phase = bm > 0.0 ? b / bm : cplx(1.0, 0.0);
        const double two_theta = std::atan2(a - dd, -2.0 * bm);
        const double c = std::cos(0.5 * two_theta), s = std::sin(0.5 * two_theta);
        const cplx r00 = c, r01 = s * phase, r10 = s * std::conj(phase), r11 = -c;

        // m <- R m R^H on the (i, j) rows then columns.
        for (Eigen::Index k = 0; k < n; ++k) {
            const cplx mi = m(i, k), mj = m(j, k);
            m(i, k) = r00 * mi + r01 * mj;
            m(j, k) = r10 * mi + r11 * mj;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            const cplx mi = m(k, i), mj = m(k, j);
            m(k, i) = mi * std::conj(r00) + mj * std::conj(r01);
            m(k, j) = mi * std::conj(r10) + mj * std::conj(r11);
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            const cplx ui = u(i, k), uj = u(j, k);
            u(i, k) = r00 * ui + r01 * uj;
            u(j, k) = r10 * ui + r11 * uj;
        }
    }
    return u;
}

ComplexMatrix hpd_solve(const ComplexMatrix &h, const ComplexMatrix &rhs) {
    if (h.rows() != h.cols() || h.rows() != rhs.rows())
        throw DimensionError("hpd_solve: dimension mismatch");
    Eigen::LLT<ComplexMatrix> llt(h);
    if (llt.info() == Eigen::Success)
        return llt.solve(rhs);
    Eigen::LDLT<ComplexMatrix> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw SingularMatrixError("hpd_solve: matrix is not positive definite");
    return ldlt.solve(rhs);
}

namespace serial {

ComplexMatrix kronecker(const ComplexMatrix &a, const ComplexMatrix &b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

ComplexMatrix khatri_rao(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.cols() != b.cols())
        throw DimensionError("khatri_rao: column counts differ");
    ComplexMatrix out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                out(i * b.rows() + k, j) = a(i, j) * b(k, j);
    return out;
}

} // namespace serial

} // namespace ristq
