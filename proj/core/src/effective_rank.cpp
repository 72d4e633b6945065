// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/effective_rank.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "drank/linalg.hpp"

namespace drank {

double effective_rank(std::span<const double> sigma) {
    if (sigma.empty()) throw std::invalid_argument("effective_rank: empty spectrum");
    std::vector<double> s(sigma.begin(), sigma.end());
    for (double v : s) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("effective_rank: singular values must be finite and non-negative");
        }
    }
    // Sorting makes the sums below independent of input order.
    std::sort(s.begin(), s.end(), std::greater<>());
    const double top = s.front();
    if (!(top > 0.0)) throw std::invalid_argument("effective_rank: all-zero spectrum");

    // Long double keeps exp(ln n) == n exact after rounding for flat spectra.
    long double energy = 0.0L;
    std::size_t nnz = 0;
    for (double v : s) {
        if (v < kSpectrumFloor * top) break;
        const long double x = static_cast<long double>(v) / top;
        energy += x * x;
        ++nnz;
    }
    long double entropy = 0.0L;
    for (std::size_t i = 0; i < nnz; ++i) {
        const long double x = static_cast<long double>(s[i]) / top;
        const long double p = x * x / energy;
        if (p > 0.0L) entropy -= p * std::log(p);
    }
    const double value = static_cast<double>(std::exp(entropy));
    return std::clamp(value, 1.0, static_cast<double>(nnz));
}

EffectiveRank group_effective_rank(const Matrix& scaled_group, Role role, std::size_t group) {
    const auto s = svd(scaled_group);
    return {effective_rank(s.singular_values), group, role, s.rank()};
}

}  // namespace drank
