// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/rebalance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace drank {

namespace {

double weighted_sum(const std::vector<double>& l, const std::vector<std::uint64_t>& omega) {
    double acc = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) acc += l[i] * static_cast<double>(omega[i]);
    return acc;
}

void validate(const QkvRankLists& x) {
    const std::size_t g = x.lv.size();
    if (g == 0) throw std::invalid_argument("rebalance: empty rank lists");
    if (x.lq.size() != g || x.lk.size() != g || x.omega_q.size() != g || x.omega_k.size() != g ||
        x.omega_v.size() != g) {
        throw std::invalid_argument("rebalance: Q, K and V lists must have equal length");
    }
    if (!x.kmax_v.empty() && x.kmax_v.size() != g) throw std::invalid_argument("rebalance: kmax_v length mismatch");
    for (const auto* l : {&x.lq, &x.lk, &x.lv}) {
        for (double v : *l) {
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("rebalance: rank entries must be > 0");
        }
    }
    for (const auto* w : {&x.omega_q, &x.omega_k, &x.omega_v}) {
        for (auto v : *w) {
            if (v == 0) throw std::invalid_argument("rebalance: per-rank costs must be > 0");
        }
    }
}

}  // namespace

double qkv_parameter_total(const std::vector<double>& lq, const std::vector<double>& lk,
                           const std::vector<double>& lv, const QkvRankLists& costs) {
    return weighted_sum(lq, costs.omega_q) + weighted_sum(lk, costs.omega_k) + weighted_sum(lv, costs.omega_v);
}

RebalancedLists rebalance_qkv(const QkvRankLists& lists, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw std::invalid_argument("rebalance: beta = " + std::to_string(beta) + " outside [0, 1)");
    }
    validate(lists);

    RebalancedLists out;
    out.beta = beta;
    out.lq = lists.lq;
    out.lk = lists.lk;
    out.lv = lists.lv;
    if (beta == 0.0) return out;

    for (auto& v : out.lq) v *= (1.0 - beta);
    for (auto& v : out.lk) v *= (1.0 - beta);

    const double from_q = beta * weighted_sum(lists.lq, lists.omega_q);
    const double from_k = beta * weighted_sum(lists.lk, lists.omega_k);
    out.transferred_params = from_q + from_k;

    double v_cost = 0.0;
    for (auto w : lists.omega_v) v_cost += static_cast<double>(w);
    out.increment = out.transferred_params / v_cost;

    double excess_params = 0.0;
    for (std::size_t i = 0; i < out.lv.size(); ++i) {
        double added = out.increment;
        if (!lists.kmax_v.empty()) {
            const double over = std::clamp(lists.lv[i] + out.increment - lists.kmax_v[i], 0.0, out.increment);
            added -= over;
            excess_params += over * static_cast<double>(lists.omega_v[i]);
        }
        out.lv[i] = lists.lv[i] + added;
    }

    if (excess_params > 0.0) {
        // Each Q/K entry contributed beta * L_i * omega_i parameters; it gets
        // back the same share of the excess, converted to its own ranks.
        const double share = excess_params / out.transferred_params;
        for (std::size_t i = 0; i < out.lq.size(); ++i) out.lq[i] += share * beta * lists.lq[i];
        for (std::size_t i = 0; i < out.lk.size(); ++i) out.lk[i] += share * beta * lists.lk[i];
        out.returned_params = excess_params;
    }
    return out;
}

}  // namespace drank
