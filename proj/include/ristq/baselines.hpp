// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "ristq/matrix_ops.hpp"

namespace ristq {

/// Unquantized linear MMSE estimate Gamma y.
ComplexVector mmse_no_quant(const ComplexVector &y, const ComplexMatrix &gamma);

struct DigitalOnlyResult {
    ComplexVector estimate;
    ComplexVector quantized; // the quantized observation fed to Gamma
    std::size_t levels = 1;
    bool degenerate = false;
};

/// Task-ignorant baseline: every entry of y gets its own ADC pair with support
/// eta * std(y_i) taken from diag(sigma_y), no dither, then Gamma is applied.
/// Levels are floor(2^(total_bits / (2 dim y))).
DigitalOnlyResult digital_only(const ComplexVector &y, const ComplexMatrix &gamma,
                               const ComplexMatrix &sigma_y, double total_bits, double eta);

struct LeastSquaresResult {
    ComplexVector x;
    std::size_t rank = 0;
    bool rank_deficient = false;
};

/// Minimum-norm least squares via SVD with relative threshold kDefaultRankTol.
LeastSquaresResult least_squares(const ComplexVector &y, const ComplexMatrix &op);

} // namespace ristq
