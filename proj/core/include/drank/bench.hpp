// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense vs factored projection throughput: Y = X W against Y = (X B) C with
// W = B C, on random float data, using the same GEMM kernel for both paths.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace drank {

struct BenchConfig {
    std::size_t d1 = 4096;
    std::size_t d2 = 4096;
    std::size_t k = 1024;
    std::size_t token_batch = 256;
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
};

struct BenchResult {
    double dense_tokens_per_sec = 0.0;
    double factored_tokens_per_sec = 0.0;
    double speedup = 0.0;
    double flop_ratio = 0.0;     // factored / dense
    double rel_output_diff = 0.0;  // ||Y_dense - Y_factored||_F / ||Y_dense||_F
    double dense_seconds = 0.0;    // median per batch
    double factored_seconds = 0.0;
    bool outputs_agree = false;
};

/// Outputs must agree to this relative Frobenius error before timing.
inline constexpr double kBenchAgreementTolerance = 1e-4;

/// Throws std::invalid_argument unless 1 <= k <= min(d1, d2), repeats >= 3
/// and every dimension is positive.
[[nodiscard]] BenchResult run_bench(const BenchConfig& cfg);

/// (d1 k + k d2) / (d1 d2).
[[nodiscard]] double factored_flop_ratio(std::size_t d1, std::size_t d2, std::size_t k);

[[nodiscard]] std::string bench_to_json(const BenchConfig& cfg, const BenchResult& r);

}  // namespace drank
