// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "drank/matrix.hpp"

namespace drank {

/// C = A * B for row-major float matrices (M x K times K x N).
/// Cache-blocked with a packed B panel and a 4 x 16 register tile;
/// single-threaded and deterministic.
void gemm_f32(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n);

[[nodiscard]] MatrixF32 matmul_f32(const MatrixF32& a, const MatrixF32& b);

}  // namespace drank
