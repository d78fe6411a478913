// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <cstdint>

#include "ristq/harness.hpp"
#include "ristq/matrix_ops.hpp"
#include "ristq/random.hpp"

using namespace ristq;

namespace {

ComplexMatrix random_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
    Rng rng(seed);
    ComplexMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        m.col(j) = complex_normal_vector(rng, rows, 1.0);
    return m;
}

template <ComplexMatrix (*Kernel)(const ComplexMatrix &, const ComplexMatrix &)>
void bm_kronecker(benchmark::State &state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const ComplexMatrix a = random_matrix(1, n, n);
    const ComplexMatrix b = random_matrix(2, n, n);
    for (auto _ : state)
        benchmark::DoNotOptimize(Kernel(a, b));
    state.SetItemsProcessed(state.iterations() * n * n * n * n);
}

template <ComplexMatrix (*Kernel)(const ComplexMatrix &, const ComplexMatrix &)>
void bm_khatri_rao(benchmark::State &state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const ComplexMatrix a = random_matrix(3, n, 4 * n);
    const ComplexMatrix b = random_matrix(4, n, 4 * n);
    for (auto _ : state)
        benchmark::DoNotOptimize(Kernel(a, b));
    state.SetItemsProcessed(state.iterations() * n * n * 4 * n);
}

template <std::vector<ResultRow> (*Runner)(const SweepSpec &, std::vector<std::string> *)>
void bm_sweep(benchmark::State &state) {
    SweepSpec s;
    s.axis_values = {32, 128};
    s.estimators = {"task_based", "no_quant"};
    s.n_trials = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(Runner(s, nullptr));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(bm_kronecker<serial::kronecker>)->Name("kronecker/serial")->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bm_kronecker<kronecker>)->Name("kronecker/omp")->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bm_khatri_rao<serial::khatri_rao>)->Name("khatri_rao/serial")->RangeMultiplier(2)->Range(16, 128);
BENCHMARK(bm_khatri_rao<khatri_rao>)->Name("khatri_rao/omp")->RangeMultiplier(2)->Range(16, 128);
BENCHMARK(bm_sweep<run_sweep_serial>)->Name("sweep/serial")->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_sweep<run_sweep>)->Name("sweep/omp")->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
