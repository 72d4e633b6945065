// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Grouped whitened truncated SVD. The n member matrices of a group are
// concatenated horizontally, W_g = [W^(1) ... W^(n)] (d1 x n*d2), scaled by
// the group whitener and truncated to rank k:
//
//   S W_g ~ U_k Sigma_k V_k^T,   B = S^{-1} U_k Sigma_k,   C^(i) = block i of V_k^T
//
// so W^(i) ~ B C^(i) with k * (d1 + n * d2) stored parameters.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drank/linalg.hpp"
#include "drank/matrix.hpp"
#include "drank/role.hpp"
#include "drank/whitening.hpp"

namespace drank {

struct LayerGroup {
    Role role = Role::q;
    std::vector<std::size_t> members;  // layer indices, in concatenation order
    std::vector<Matrix> weights;       // one d1 x d2 matrix per member
    Whitener whitener;                 // from the summed member Gram matrices

    [[nodiscard]] std::size_t n() const noexcept { return weights.size(); }
    [[nodiscard]] std::size_t d1() const noexcept { return weights.empty() ? 0 : weights.front().rows(); }
    [[nodiscard]] std::size_t d2() const noexcept { return weights.empty() ? 0 : weights.front().cols(); }
    [[nodiscard]] std::size_t max_rank() const noexcept { return std::min(d1(), n() * d2()); }
};

struct FactoredGroup {
    Role role = Role::q;
    std::vector<std::size_t> members;
    Matrix B;               // d1 x k, already un-whitened
    std::vector<Matrix> C;  // n blocks of k x d2
    std::size_t k = 0;
    std::vector<double> spectrum;  // all singular values of S W_g

    [[nodiscard]] std::size_t n() const noexcept { return C.size(); }
    [[nodiscard]] std::size_t parameter_count() const noexcept {
        return B.rows() * k + (C.empty() ? 0 : C.size() * k * C.front().cols());
    }
    /// Eckart-Young tail of the whitened spectrum beyond rank k.
    [[nodiscard]] double tail_energy() const { return drank::tail_energy(spectrum, k); }
};

/// Horizontal concatenation; throws DimensionError on mismatched shapes.
[[nodiscard]] Matrix concat_group(std::span<const Matrix> weights);

/// S * concat(W) for the group.
[[nodiscard]] Matrix scaled_group_matrix(const LayerGroup& g);

/// Throws std::out_of_range unless 1 <= k <= min(d1, n * d2).
[[nodiscard]] FactoredGroup compress_group(const LayerGroup& g, std::size_t k);
/// Same, reusing an SVD of scaled_group_matrix(g).
[[nodiscard]] FactoredGroup compress_group(const LayerGroup& g, const SvdResult& scaled_svd, std::size_t k);

/// B * C^(i); throws std::out_of_range for a bad member index.
[[nodiscard]] Matrix reconstruct(const FactoredGroup& f, std::size_t i);

struct LayerErrors {
    std::size_t layer = 0;
    double frob_err = 0.0;                 // ||W - B C||_F
    double rel_frob_err = 0.0;             // frob_err / ||W||_F
    double activation_weighted_err = 0.0;  // ||S_i (W - B C)||_F with the member's own whitener
};

/// Per-member errors. member_grams[i] belongs to member i; its upper
/// whitener measures the activation-weighted error ||X_i (W - B C)||_F.
[[nodiscard]] std::vector<LayerErrors> compression_report(std::span<const Matrix> originals, const FactoredGroup& f,
                                                          std::span<const GramStats> member_grams);

/// Squared whitened error of the whole group, ||S_g (W_g - B [C^(1) ... C^(n)])||_F^2.
[[nodiscard]] double whitened_group_error_sq(const LayerGroup& g, const FactoredGroup& f);

}  // namespace drank
