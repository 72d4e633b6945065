// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "drank/matrix.hpp"

namespace drank {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cholesky hit a non-positive pivot.
class NotPositiveDefinite : public NumericalError {
public:
    NotPositiveDefinite(std::size_t pivot, double value)
        : NumericalError("matrix is not positive definite: pivot " + std::to_string(pivot) + " = " +
                         std::to_string(value)),
          pivot_(pivot) {}
    [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// Thin SVD M = U diag(sigma) Vt with r = min(rows, cols).
///
/// singular_values are non-increasing. Each column of U has its
/// largest-magnitude entry non-negative (first such entry on ties), which
/// pins the sign ambiguity so factor files are reproducible.
struct SvdResult {
    Matrix U;
    std::vector<double> singular_values;
    Matrix Vt;

    [[nodiscard]] std::size_t rank() const noexcept { return singular_values.size(); }
    [[nodiscard]] Matrix reconstruct() const;
};

/// One-sided Jacobi SVD (QR-preconditioned when the matrix is not square).
/// Sequential and deterministic for identical input bits.
[[nodiscard]] SvdResult svd(const Matrix& m);

/// Leading k singular triples. Throws std::out_of_range unless 1 <= k <= rank.
[[nodiscard]] SvdResult truncate(const SvdResult& s, std::size_t k);

/// Sum of sigma_i^2 for i >= k (zero-based), i.e. the Eckart-Young tail.
[[nodiscard]] double tail_energy(const std::vector<double>& sigma, std::size_t k);

/// Upper-triangular S with S^T S = G + ridge * mean(diag G) * I.
[[nodiscard]] Matrix cholesky_upper(const Matrix& g, double ridge = 0.0);
/// Lower-triangular L with L L^T = G + ridge * mean(diag G) * I.
[[nodiscard]] Matrix cholesky_lower(const Matrix& g, double ridge = 0.0);

/// Diagonal entries with magnitude at or below this are treated as singular.
inline constexpr double kSingularDiagonal = 1e-300;

/// X with S X = B for upper-triangular S.
[[nodiscard]] Matrix solve_upper(const Matrix& s, const Matrix& b);
/// X with L X = B for lower-triangular L.
[[nodiscard]] Matrix solve_lower(const Matrix& l, const Matrix& b);
/// S^{-1} M for upper-triangular S.
[[nodiscard]] inline Matrix apply_inverse_left(const Matrix& s, const Matrix& m) { return solve_upper(s, m); }

/// Running X^T X over activation chunks, in double.
class GramAccumulator {
public:
    explicit GramAccumulator(std::size_t dim) : gram_(dim, dim) {}

    /// chunk is tokens x dim.
    void add(const Matrix& chunk);
    void merge(const GramAccumulator& other);

    [[nodiscard]] std::size_t dim() const noexcept { return gram_.rows(); }
    [[nodiscard]] const Matrix& gram() const noexcept { return gram_; }
    [[nodiscard]] std::uint64_t samples() const noexcept { return samples_; }

private:
    Matrix gram_;
    std::uint64_t samples_ = 0;
};

}  // namespace drank
