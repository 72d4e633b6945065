// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference computations that share no code with the engine: Eigen's SVD,
// long-double entropy, exhaustive integer search, and a bisection solver for
// the budgeted allocation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "drank/matrix.hpp"

namespace drank::oracle {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

inline std::vector<double> singular_values(const Matrix& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
    const auto& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

inline double tail_energy(const std::vector<double>& sigma, std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = k; i < sigma.size(); ++i) acc += sigma[i] * sigma[i];
    return acc;
}

/// exp(H) with H = ln E - (1/E) sum s^2 ln s^2, E = sum s^2; unsorted,
/// no spectrum floor other than exact zeros.
inline double effective_rank(const std::vector<double>& sigma) {
    long double e = 0.0L;
    for (double s : sigma) e += static_cast<long double>(s) * s;
    long double acc = 0.0L;
    for (double s : sigma) {
        const long double l = static_cast<long double>(s) * s;
        if (l > 0.0L) acc += l * std::log(l);
    }
    return static_cast<double>(std::exp(std::log(e) - acc / e));
}

inline double objective(const std::vector<double>& reff, const std::vector<std::uint64_t>& k) {
    double acc = 0.0;
    for (std::size_t g = 0; g < reff.size(); ++g) acc += reff[g] / static_cast<double>(k[g]);
    return acc;
}

/// Best objective over all k with 1 <= k_g <= kmax_g and sum k_g omega_g <= budget.
inline double exhaustive_best(const std::vector<double>& reff, const std::vector<std::uint64_t>& omega,
                              const std::vector<std::uint64_t>& kmax, double budget) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> k(reff.size(), 1);
    std::function<void(std::size_t, double)> rec = [&](std::size_t g, double spent) {
        if (g == reff.size()) {
            best = std::min(best, objective(reff, k));
            return;
        }
        for (std::uint64_t v = 1; v <= kmax[g]; ++v) {
            const double cost = spent + static_cast<double>(v * omega[g]);
            // The remaining groups still need at least one rank each.
            double rest = 0.0;
            for (std::size_t h = g + 1; h < reff.size(); ++h) rest += static_cast<double>(omega[h]);
            if (cost + rest > budget) break;
            k[g] = v;
            rec(g + 1, cost);
        }
        k[g] = 1;
    };
    rec(0, 0.0);
    return best;
}

/// Minimiser of sum R_g / k_g subject to sum k_g omega_g = budget, found by
/// bisecting the Lagrange multiplier of the stationarity condition
/// k_g(lambda) = sqrt(R_g / (lambda omega_g)).
inline std::vector<double> constrained_minimizer(const std::vector<double>& reff, const std::vector<double>& omega,
                                                 double budget) {
    auto spend = [&](double lambda) {
        double s = 0.0;
        for (std::size_t g = 0; g < reff.size(); ++g) s += std::sqrt(reff[g] / (lambda * omega[g])) * omega[g];
        return s;
    };
    double lo = 1e-30;
    double hi = 1e30;
    for (int it = 0; it < 400; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (spend(mid) > budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double lambda = std::sqrt(lo * hi);
    std::vector<double> k(reff.size());
    for (std::size_t g = 0; g < reff.size(); ++g) k[g] = std::sqrt(reff[g] / (lambda * omega[g]));
    return k;
}

}  // namespace drank::oracle
