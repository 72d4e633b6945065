// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <benchmark/benchmark.h>

#include "drank/effective_rank.hpp"
#include "drank/linalg.hpp"

namespace {

drank::Matrix random_matrix(std::size_t r, std::size_t c) {
    std::mt19937_64 rng(r * 131 + c);
    std::normal_distribution<double> dist;
    drank::Matrix m(r, c);
    for (auto& v : m.values()) v = dist(rng);
    return m;
}

void BM_Svd(benchmark::State& state) {
    const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        auto s = drank::svd(m);
        benchmark::DoNotOptimize(s.singular_values.data());
    }
}
// Slim, square and grouped (n = 4) shapes.
BENCHMARK(BM_Svd)->Args({64, 16})->Args({128, 128})->Args({128, 512})->Args({256, 256})->Unit(
    benchmark::kMillisecond);

void BM_Cholesky(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(2 * d, d);
    const auto g = drank::matmul_tn(x, x);
    for (auto _ : state) {
        auto s = drank::cholesky_upper(g);
        benchmark::DoNotOptimize(s.data());
    }
}
BENCHMARK(BM_Cholesky)->Arg(128)->Arg(512);

void BM_EffectiveRank(benchmark::State& state) {
    std::vector<double> s(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0 / (1.0 + static_cast<double>(i));
    for (auto _ : state) benchmark::DoNotOptimize(drank::effective_rank(s));
}
BENCHMARK(BM_EffectiveRank)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
