// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ristq {

using Rng = std::mt19937_64;

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline std::complex<double> complex_normal(Rng &rng, double variance) {
    if (variance <= 0.0)
        return {0.0, 0.0};
    std::normal_distribution<double> n(0.0, std::sqrt(0.5 * variance));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline Eigen::VectorXcd complex_normal_vector(Rng &rng, Eigen::Index n, double variance) {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = complex_normal(rng, variance);
    return v;
}

inline double uniform(Rng &rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Derives an independent stream seed from (seed, stream) with splitmix64.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace ristq
