// SPDX-License-Identifier: Apache-2.0
#include "ristq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ristq/error.hpp"
#include "ristq/quantizer.hpp"

namespace ristq {

ComplexVector mmse_no_quant(const ComplexVector &y, const ComplexMatrix &gamma) {
    if (gamma.cols() != y.size())
        throw DimensionError("mmse_no_quant: Gamma and y do not conform");
    return gamma * y;
}

DigitalOnlyResult digital_only(const ComplexVector &y, const ComplexMatrix &gamma,
                               const ComplexMatrix &sigma_y, double total_bits, double eta) {
    if (sigma_y.rows() != y.size() || gamma.cols() != y.size())
        throw DimensionError("digital_only: dimensions do not conform");
    DigitalOnlyResult r;
    r.levels = levels_from_bits(total_bits, static_cast<std::size_t>(y.size()));
    r.degenerate = r.levels < 2;
    std::vector<double> supports(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        supports[static_cast<std::size_t>(i)] = eta * std::sqrt(std::max(sigma_y(i, i).real(), 0.0));
    r.quantized = quantize_per_entry(y, supports, r.levels);
    r.estimate = gamma * r.quantized;
    return r;
}

LeastSquaresResult least_squares(const ComplexVector &y, const ComplexMatrix &op) {
    if (op.rows() != y.size())
        throw DimensionError("least_squares: operator rows must match y");
    Eigen::BDCSVD<ComplexMatrix> svd(op, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector &s = svd.singularValues();
    LeastSquaresResult r;
    r.x = ComplexVector::Zero(op.cols());
    if (s.size() == 0 || s(0) == 0.0) {
        r.rank_deficient = op.cols() > 0;
        return r;
    }
    const double cut = kDefaultRankTol * s(0);
    const ComplexVector uy = svd.matrixU().adjoint() * y;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) {
            r.x += (uy(i) / s(i)) * svd.matrixV().col(i);
            ++r.rank;
        }
    }
    r.rank_deficient = r.rank < static_cast<std::size_t>(op.cols());
    return r;
}

} // namespace ristq
