// SPDX-License-Identifier: Apache-2.0
#include "ristq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ristq/error.hpp"

namespace ristq {

namespace {

// Levels beyond 2^52 are indistinguishable from infinite resolution in double.
constexpr double kMaxLevelExponent = 52.0;

double q_core(double x, double support, std::size_t levels) {
    if (!std::isfinite(x))
        throw NonFiniteInputError("q_scalar: non-finite input");
    if (support == 0.0)
        return 0.0;
    const double delta = 2.0 * support / static_cast<double>(levels);
    const double top = static_cast<double>(levels) - 1.0;
    const double ell = std::clamp(std::floor((x + support) / delta), 0.0, top);
    return -support + delta * (ell + 0.5);
}

} // namespace

double QuantizerSpec::noise_power() const {
    const double n = static_cast<double>(levels);
    return 4.0 * support * support / (3.0 * n * n);
}

double BitBudget::consumed_bits() const {
    return 2.0 * static_cast<double>(n_adc_pairs) * std::log2(static_cast<double>(per_adc_levels));
}

std::size_t levels_from_bits(double total_bits, std::size_t n_adc_pairs) {
    if (n_adc_pairs == 0)
        throw DimensionError("levels_from_bits: need at least one ADC pair");
    if (!(total_bits >= 0.0))
        throw ConfigError("levels_from_bits: total bits must be nonnegative");
    const double e = std::min(total_bits / (2.0 * static_cast<double>(n_adc_pairs)), kMaxLevelExponent);
    return std::max<std::size_t>(static_cast<std::size_t>(std::floor(std::exp2(e))), 1);
}

BitBudget make_bit_budget(double total_bits, std::size_t n_adc_pairs) {
    return {total_bits, n_adc_pairs, levels_from_bits(total_bits, n_adc_pairs)};
}

bool kappa_feasible(double eta, std::size_t levels) {
    const double n = static_cast<double>(levels);
    return eta > 0.0 && levels >= 1 && 2.0 * eta * eta < 3.0 * n * n;
}

double kappa(double eta, std::size_t levels) {
    if (!kappa_feasible(eta, levels))
        throw InfeasibleError("kappa: eta^2 must be below 3 levels^2 / 2");
    const double n = static_cast<double>(levels);
    return eta * eta / (1.0 - 2.0 * eta * eta / (3.0 * n * n));
}

double support_from_kappa(std::size_t n_adc_pairs, double kappa_value) {
    if (n_adc_pairs == 0 || !(kappa_value > 0.0))
        throw ConfigError("support_from_kappa: need G >= 1 and kappa > 0");
    return std::sqrt(kappa_value / static_cast<double>(n_adc_pairs));
}

double support_from_input_power(double max_var, double eta, std::size_t levels) {
    if (!(max_var >= 0.0))
        throw ConfigError("support_from_input_power: variance must be nonnegative");
    return std::sqrt(kappa(eta, levels) * max_var);
}

double q_scalar(double x, const QuantizerSpec &spec) { return q_core(x, spec.support, spec.levels); }

QuantizedVector quantize_complex_vector(const ComplexVector &v, const QuantizerSpec &spec, Rng &rng) {
    QuantizedVector out;
    out.output.resize(v.size());
    out.dither = ComplexVector::Zero(v.size());
    const double half = 0.5 * spec.step();
    if (spec.dither && half > 0.0) {
        std::uniform_real_distribution<double> u(-half, half);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double re = u(rng);
            const double im = u(rng);
            out.dither(i) = {re, im};
        }
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const cplx s = v(i) + out.dither(i);
        out.output(i) = {q_scalar(s.real(), spec), q_scalar(s.imag(), spec)};
    }
    return out;
}

ComplexVector quantize_per_entry(const ComplexVector &v, std::span<const double> supports,
                                 std::size_t levels) {
    if (static_cast<Eigen::Index>(supports.size()) != v.size())
        throw DimensionError("quantize_per_entry: one support per entry required");
    if (levels == 0)
        throw ConfigError("quantize_per_entry: levels must be >= 1");
    ComplexVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double g = supports[static_cast<std::size_t>(i)];
        out(i) = {q_core(v(i).real(), g, levels), q_core(v(i).imag(), g, levels)};
    }
    return out;
}

} // namespace ristq
