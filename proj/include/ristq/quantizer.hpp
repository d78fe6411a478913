// SPDX-License-Identifier: Apache-2.0
//
// Uniform midrise scalar ADC with optional non-subtractive dither, applied
// separately to the real and imaginary part of each complex sample.
#pragma once

#include <cstddef>
#include <span>

#include "ristq/matrix_ops.hpp"
#include "ristq/random.hpp"

namespace ristq {

struct QuantizerSpec {
    std::size_t levels = 2; // per real dimension
    double support = 1.0;   // gamma: half-width of the non-saturating range
    double eta = 2.0;
    bool dither = true;

    double step() const { return 2.0 * support / static_cast<double>(levels); }
    /// Variance of one complex entry's quantization error, 4 gamma^2 / (3 levels^2).
    double noise_power() const;
};

struct BitBudget {
    double total_bits = 0.0;
    std::size_t n_adc_pairs = 1;
    std::size_t per_adc_levels = 1;

    /// Bits actually spent: 2 G log2(levels).
    double consumed_bits() const;
    bool degenerate() const { return per_adc_levels < 2; }
};

/// floor(2^(total_bits / 2G)), computed without overflow for large budgets.
std::size_t levels_from_bits(double total_bits, std::size_t n_adc_pairs);
BitBudget make_bit_budget(double total_bits, std::size_t n_adc_pairs);

bool kappa_feasible(double eta, std::size_t levels);
/// eta^2 / (1 - 2 eta^2 / (3 levels^2)). Throws InfeasibleError when the
/// bracket is not positive.
double kappa(double eta, std::size_t levels);

double support_from_kappa(std::size_t n_adc_pairs, double kappa);
double support_from_input_power(double max_var, double eta, std::size_t levels);

/// Throws NonFiniteInputError for NaN or infinite input.
double q_scalar(double x, const QuantizerSpec &spec);

struct QuantizedVector {
    ComplexVector output;
    ComplexVector dither; // zero when dither is disabled
};

QuantizedVector quantize_complex_vector(const ComplexVector &v, const QuantizerSpec &spec, Rng &rng);

/// Per-entry supports with a shared level count and no dither.
ComplexVector quantize_per_entry(const ComplexVector &v, std::span<const double> supports,
                                 std::size_t levels);

} // namespace ristq
