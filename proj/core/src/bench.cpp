// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "drank/gemm.hpp"
#include "drank/matrix.hpp"

namespace drank {

namespace {

MatrixF32 random_matrix(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<float> dist(0.0f, static_cast<float>(stddev));
    MatrixF32 m(rows, cols);
    for (auto& v : m.values()) v = dist(rng);
    return m;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

template <typename F>
double time_once(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

double factored_flop_ratio(std::size_t d1, std::size_t d2, std::size_t k) {
    return static_cast<double>(d1 * k + k * d2) / static_cast<double>(d1 * d2);
}

BenchResult run_bench(const BenchConfig& cfg) {
    if (cfg.d1 == 0 || cfg.d2 == 0 || cfg.token_batch == 0) throw std::invalid_argument("bench: zero dimension");
    if (cfg.k < 1 || cfg.k > std::min(cfg.d1, cfg.d2)) throw std::invalid_argument("bench: k must lie in [1, min(d1, d2)]");
    if (cfg.repeats < 3) throw std::invalid_argument("bench: repeats must be at least 3");

    std::mt19937_64 rng(cfg.seed);
    const MatrixF32 x = random_matrix(cfg.token_batch, cfg.d1, 1.0, rng);
    const MatrixF32 basis = random_matrix(cfg.d1, cfg.k, 1.0 / std::sqrt(static_cast<double>(cfg.d1)), rng);
    const MatrixF32 coeff = random_matrix(cfg.k, cfg.d2, 1.0 / std::sqrt(static_cast<double>(cfg.k)), rng);
    const MatrixF32 w = matmul_f32(basis, coeff);

    MatrixF32 y_dense(cfg.token_batch, cfg.d2);
    MatrixF32 hidden(cfg.token_batch, cfg.k);
    MatrixF32 y_fact(cfg.token_batch, cfg.d2);
    auto dense = [&] { gemm_f32(x.data(), w.data(), y_dense.data(), cfg.token_batch, cfg.d1, cfg.d2); };
    auto factored = [&] {
        gemm_f32(x.data(), basis.data(), hidden.data(), cfg.token_batch, cfg.d1, cfg.k);
        gemm_f32(hidden.data(), coeff.data(), y_fact.data(), cfg.token_batch, cfg.k, cfg.d2);
    };

    BenchResult r;
    r.flop_ratio = factored_flop_ratio(cfg.d1, cfg.d2, cfg.k);

    dense();
    factored();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < y_dense.size(); ++i) {
        const double d = static_cast<double>(y_dense.values()[i]) - static_cast<double>(y_fact.values()[i]);
        num += d * d;
        den += static_cast<double>(y_dense.values()[i]) * y_dense.values()[i];
    }
    r.rel_output_diff = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    r.outputs_agree = r.rel_output_diff <= kBenchAgreementTolerance;
    if (!r.outputs_agree) return r;

    std::vector<double> dense_t;
    std::vector<double> fact_t;
    for (std::size_t i = 0; i < cfg.repeats; ++i) {
        dense_t.push_back(time_once(dense));
        fact_t.push_back(time_once(factored));
    }
    r.dense_seconds = median(dense_t);
    r.factored_seconds = median(fact_t);
    const auto tokens = static_cast<double>(cfg.token_batch);
    r.dense_tokens_per_sec = tokens / r.dense_seconds;
    r.factored_tokens_per_sec = tokens / r.factored_seconds;
    r.speedup = r.factored_tokens_per_sec / r.dense_tokens_per_sec;
    return r;
}

std::string bench_to_json(const BenchConfig& cfg, const BenchResult& r) {
    nlohmann::json j = {{"d1", cfg.d1},
                        {"d2", cfg.d2},
                        {"k", cfg.k},
                        {"token_batch", cfg.token_batch},
                        {"repeats", cfg.repeats},
                        {"seed", cfg.seed},
                        {"dense_tokens_per_sec", r.dense_tokens_per_sec},
                        {"factored_tokens_per_sec", r.factored_tokens_per_sec},
                        {"speedup", r.speedup},
                        {"flop_ratio", r.flop_ratio},
                        {"rel_output_diff", r.rel_output_diff},
                        {"outputs_agree", r.outputs_agree},
                        {"dense_seconds_median", r.dense_seconds},
                        {"factored_seconds_median", r.factored_seconds}};
    return j.dump(2);
}

}  // namespace drank
