// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Moves a beta fraction of the Q and K rank budget onto the V groups.
// Q and K shrink by exactly (1 - beta); the removed parameter mass is
// spread as one uniform rank increment t over all V groups. The transfer is
// measured in parameters, so unequal per-rank costs (GQA) conserve the
// total; with equal costs it reduces to t = beta / G * (sum k^Q + sum k^K).

#pragma once

#include <cstdint>
#include <vector>

namespace drank {

struct QkvRankLists {
    std::vector<double> lq, lk, lv;
    std::vector<std::uint64_t> omega_q, omega_k, omega_v;
    /// Optional per-group ceiling for V; empty disables clamping.
    std::vector<double> kmax_v;

    [[nodiscard]] std::size_t groups() const noexcept { return lv.size(); }
};

struct RebalancedLists {
    std::vector<double> lq, lk, lv;
    double beta = 0.0;
    double increment = 0.0;             // t, in V ranks
    double transferred_params = 0.0;    // taken from Q and K
    double returned_params = 0.0;       // handed back because V hit kmax
};

inline constexpr double kDefaultBeta = 0.3;

/// Throws std::invalid_argument if beta is outside [0, 1), list lengths
/// differ, or any entry is not positive. When V groups would exceed kmax_v,
/// the excess is returned to Q and K pro rata to what each contributed.
[[nodiscard]] RebalancedLists rebalance_qkv(const QkvRankLists& lists, double beta);

/// sum L * omega over all three lists.
[[nodiscard]] double qkv_parameter_total(const std::vector<double>& lq, const std::vector<double>& lk,
                                         const std::vector<double>& lv, const QkvRankLists& costs);

}  // namespace drank
