// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense X W against factored (X B) C at matching shapes. Arguments are
// d (square weight), k (factor rank) and the token batch.

#include <random>

#include <benchmark/benchmark.h>

#include "drank/gemm.hpp"

namespace {

drank::MatrixF32 random_f32(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0F, 1.0F);
    drank::MatrixF32 m(r, c);
    for (auto& v : m.values()) v = dist(rng);
    return m;
}

void set_flops(benchmark::State& state, double flops) {
    state.counters["GFLOP/s"] = benchmark::Counter(flops * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
    state.counters["tokens/s"] =
        benchmark::Counter(static_cast<double>(state.range(2)), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_Dense(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const auto t = static_cast<std::size_t>(state.range(2));
    const auto x = random_f32(t, d, 1);
    const auto w = random_f32(d, d, 2);
    for (auto _ : state) {
        auto y = drank::matmul_f32(x, w);
        benchmark::DoNotOptimize(y.data());
    }
    set_flops(state, 2.0 * static_cast<double>(t * d * d));
}

void BM_Factored(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    const auto t = static_cast<std::size_t>(state.range(2));
    const auto x = random_f32(t, d, 1);
    const auto b = random_f32(d, k, 3);
    const auto c = random_f32(k, d, 4);
    for (auto _ : state) {
        auto y = drank::matmul_f32(drank::matmul_f32(x, b), c);
        benchmark::DoNotOptimize(y.data());
    }
    set_flops(state, 2.0 * static_cast<double>(t * k * 2 * d));
}

void shapes(benchmark::internal::Benchmark* b) {
    b->Args({1024, 256, 256})->Args({2048, 512, 256})->Args({4096, 1024, 256})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_Dense)->Apply(shapes);
BENCHMARK(BM_Factored)->Apply(shapes);

BENCHMARK_MAIN();
