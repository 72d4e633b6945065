// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "drank/matrix.hpp"
#include "drank/role.hpp"

namespace drank {

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kSpectrumFloor = 1e-12;

/// Spectral-entropy effective rank: exp(-sum p_i ln p_i) with
/// p_i = sigma_i^2 / sum_j sigma_j^2 and 0 ln 0 = 0.
///
/// The result lies in [1, number of nonzero sigma]. It is invariant under
/// scaling and permutation of sigma. Throws std::invalid_argument for an
/// empty, negative, non-finite or all-zero spectrum.
[[nodiscard]] double effective_rank(std::span<const double> sigma);

struct EffectiveRank {
    double value = 1.0;
    std::size_t group = 0;
    Role role = Role::q;
    std::size_t n_singular = 0;
};

/// Effective rank of the whitened, concatenated group matrix S_g W_g.
[[nodiscard]] EffectiveRank group_effective_rank(const Matrix& scaled_group, Role role = Role::q,
                                                 std::size_t group = 0);

}  // namespace drank
