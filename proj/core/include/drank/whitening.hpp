// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Activation whitening. With S upper-triangular and S^T S = X^T X,
// ||X D||_F = ||S D||_F for every D, so truncating the SVD of S W minimises
// the activation-weighted error ||X (W - W_hat)||_F.

#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "drank/matrix.hpp"
#include "drank/role.hpp"
#include "drank/tensor_store.hpp"

namespace drank {

struct GramStats {
    Role role = Role::q;
    std::size_t layer = 0;
    Matrix gram;  // d_in x d_in, X^T X
    std::uint64_t samples = 0;
};

enum class WhitenerOrientation {
    upper,  // S^T S = G; makes the whitened-loss identity exact
    lower,  // S S^T = G; literal reading, kept for A/B comparison
};

struct Whitener {
    Matrix S;
    double ridge_used = 0.0;
    WhitenerOrientation orientation = WhitenerOrientation::upper;

    [[nodiscard]] std::size_t dim() const noexcept { return S.rows(); }
};

/// Ridge applied (relative to the mean diagonal) when a zero-ridge
/// factorisation fails.
inline constexpr double kRetryRidge = 1e-6;

/// Cholesky of G (+ ridge). A zero-ridge failure is retried once with
/// kRetryRidge; a second failure propagates NotPositiveDefinite.
[[nodiscard]] Whitener build_whitener(const Matrix& gram, double ridge = 0.0,
                                      WhitenerOrientation orientation = WhitenerOrientation::upper);
[[nodiscard]] Whitener build_whitener(const GramStats& g, double ridge = 0.0,
                                      WhitenerOrientation orientation = WhitenerOrientation::upper);

/// S * W.
[[nodiscard]] Matrix scale(const Matrix& w, const Whitener& wh);
/// S^{-1} * M.
[[nodiscard]] Matrix apply_inverse(const Whitener& wh, const Matrix& m);
/// B'' = S^{-1} U_k diag(sigma_k).
[[nodiscard]] Matrix unscale_basis(const Matrix& u_k, std::span<const double> sigma_k, const Whitener& wh);

/// Element-wise sum of Gram matrices and sample counts (group whitener input).
[[nodiscard]] GramStats sum_grams(std::span<const GramStats> members);

// Gram statistics live in a .dst store as gram/<layer>/<role> with sample
// counts in metadata under samples/<layer>/<role>.
[[nodiscard]] std::string gram_tensor_name(std::size_t layer, Role role);
[[nodiscard]] std::string gram_samples_key(std::size_t layer, Role role);
void store_gram(TensorStore& store, const GramStats& g);
[[nodiscard]] GramStats load_gram(const TensorStore& store, std::size_t layer, Role role);

}  // namespace drank
