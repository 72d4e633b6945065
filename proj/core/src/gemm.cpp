// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/gemm.hpp"

#include <algorithm>
#include <vector>

namespace drank {

namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kNc = 512;

// Sixteen floats; GCC and Clang lower this to whatever SIMD width the target has.
typedef float v16 __attribute__((vector_size(kNr * sizeof(float))));

// Packs B[k0:k0+kc, j0:j0+nc] into nc/kNr panels of kc x kNr, zero-padded.
void pack_b(const float* b, std::size_t n, std::size_t k0, std::size_t kc, std::size_t j0, std::size_t nc,
            std::vector<float>& packed) {
    const std::size_t panels = (nc + kNr - 1) / kNr;
    packed.assign(panels * kc * kNr, 0.0f);
    for (std::size_t p = 0; p < panels; ++p) {
        const std::size_t jj0 = j0 + p * kNr;
        const std::size_t width = std::min(kNr, j0 + nc - jj0);
        float* dst = packed.data() + p * kc * kNr;
        for (std::size_t kk = 0; kk < kc; ++kk) {
            const float* src = b + (k0 + kk) * n + jj0;
            for (std::size_t j = 0; j < width; ++j) dst[kk * kNr + j] = src[j];
        }
    }
}

// Packs rows i0..i0+rows of A[:, k0:k0+kc] as kc x kMr, zero-padded.
void pack_a(const float* a, std::size_t k, std::size_t i0, std::size_t rows, std::size_t k0, std::size_t kc,
            float* dst) {
    for (std::size_t kk = 0; kk < kc; ++kk) {
        for (std::size_t r = 0; r < kMr; ++r) dst[kk * kMr + r] = r < rows ? a[(i0 + r) * k + k0 + kk] : 0.0f;
    }
}

void micro_kernel(const float* __restrict apack, const float* __restrict panel, std::size_t kc, float* c,
                  std::size_t ldc, std::size_t rows, std::size_t cols) {
    v16 acc[kMr] = {};
    for (std::size_t kk = 0; kk < kc; ++kk) {
        v16 bv;
        __builtin_memcpy(&bv, panel + kk * kNr, sizeof bv);
        const float* av = apack + kk * kMr;
        for (std::size_t r = 0; r < kMr; ++r) acc[r] += av[r] * bv;
    }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) c[r * ldc + j] += acc[r][j];
}

}  // namespace

void gemm_f32(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
    std::fill(c, c + m * n, 0.0f);
    std::vector<float> packed;
    std::vector<float> apack(kKc * kMr);
    for (std::size_t j0 = 0; j0 < n; j0 += kNc) {
        const std::size_t nc = std::min(kNc, n - j0);
        for (std::size_t k0 = 0; k0 < k; k0 += kKc) {
            const std::size_t kc = std::min(kKc, k - k0);
            pack_b(b, n, k0, kc, j0, nc, packed);
            const std::size_t panels = (nc + kNr - 1) / kNr;
            for (std::size_t i0 = 0; i0 < m; i0 += kMr) {
                const std::size_t rows = std::min(kMr, m - i0);
                pack_a(a, k, i0, rows, k0, kc, apack.data());
                for (std::size_t p = 0; p < panels; ++p) {
                    const std::size_t jj0 = j0 + p * kNr;
                    micro_kernel(apack.data(), packed.data() + p * kc * kNr, kc, c + i0 * n + jj0, n, rows,
                                 std::min(kNr, j0 + nc - jj0));
                }
            }
        }
    }
}

MatrixF32 matmul_f32(const MatrixF32& a, const MatrixF32& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul_f32: inner dimensions differ");
    MatrixF32 c(a.rows(), b.cols());
    if (c.empty()) return c;
    if (a.cols() == 0) return c;
    gemm_f32(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

}  // namespace drank
