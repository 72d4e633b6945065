// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace drank {

namespace {

double gain(double reff, std::uint64_t k, std::uint64_t omega) {
    const auto kd = static_cast<double>(k);
    return reff * (1.0 / kd - 1.0 / (kd + 1.0)) / static_cast<double>(omega);
}

// Adds ranks one at a time to the group with the largest objective decrease
// per parameter while any group is affordable. Ties go to the lowest index.
void greedy_fill(const AllocationProblem& p, Allocation& a) {
    const std::size_t groups = p.groups();
    for (;;) {
        std::size_t best = groups;
        double best_gain = 0.0;
        for (std::size_t g = 0; g < groups; ++g) {
            if (a.k_int[g] >= p.kmax[g]) continue;
            if (static_cast<double>(a.spent + p.omega[g]) > p.budget) continue;
            const double gv = gain(p.reff[g], a.k_int[g], p.omega[g]);
            if (best == groups || gv > best_gain) {
                best = g;
                best_gain = gv;
            }
        }
        if (best == groups) return;
        a.k_int[best] += 1;
        a.spent += p.omega[best];
    }
}

}  // namespace

void AllocationProblem::validate() const {
    const std::size_t g = reff.size();
    if (g == 0) throw std::invalid_argument("allocation problem has no groups");
    if (omega.size() != g || kmax.size() != g) {
        throw std::invalid_argument("allocation problem: reff, omega and kmax lengths differ");
    }
    for (std::size_t i = 0; i < g; ++i) {
        if (!std::isfinite(reff[i]) || reff[i] < 1.0) {
            throw std::invalid_argument("allocation problem: R_eff of group " + std::to_string(i) + " is below 1");
        }
        if (omega[i] < 2) throw std::invalid_argument("allocation problem: omega of group " + std::to_string(i) + " < 2");
        if (kmax[i] < 1) throw std::invalid_argument("allocation problem: kmax of group " + std::to_string(i) + " < 1");
    }
    if (!std::isfinite(budget) || budget <= 0.0) throw std::invalid_argument("allocation problem: budget must be > 0");
}

std::vector<double> allocate_real(const AllocationProblem& p) {
    p.validate();
    double denom = 0.0;
    for (std::size_t g = 0; g < p.groups(); ++g) denom += std::sqrt(p.reff[g] * static_cast<double>(p.omega[g]));
    const double c = p.budget / denom;
    std::vector<double> k(p.groups());
    for (std::size_t g = 0; g < p.groups(); ++g) {
        k[g] = c * std::sqrt(p.reff[g]) / std::sqrt(static_cast<double>(p.omega[g]));
    }
    return k;
}

double allocation_objective(const std::vector<double>& reff, const std::vector<std::uint64_t>& k) {
    double acc = 0.0;
    for (std::size_t g = 0; g < reff.size(); ++g) acc += reff[g] / static_cast<double>(k[g]);
    return acc;
}

Allocation integerize(const AllocationProblem& p, const std::vector<double>& k_real) {
    p.validate();
    const std::size_t groups = p.groups();
    if (k_real.size() != groups) throw std::invalid_argument("integerize: k_real length differs from group count");

    std::uint64_t floor_cost = 0;
    for (auto w : p.omega) floor_cost += w;
    if (static_cast<double>(floor_cost) > p.budget) {
        throw InfeasibleBudget("budget " + std::to_string(p.budget) + " cannot cover rank 1 in every group (needs " +
                               std::to_string(floor_cost) + ")");
    }

    Allocation a;
    a.k_real = k_real;
    a.k_int.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        // Tolerate k_real landing a few ulps under an integer.
        const double kr = std::isfinite(k_real[g]) ? std::max(k_real[g], 0.0) : 1.0;
        const double f = std::floor(kr + 1e-9 * std::max(1.0, kr));
        const double clamped = std::clamp(f, 1.0, static_cast<double>(p.kmax[g]));
        a.k_int[g] = static_cast<std::uint64_t>(clamped);
        a.spent += a.k_int[g] * p.omega[g];
    }

    // Raising groups to kmin can overshoot; give back the cheapest ranks.
    while (static_cast<double>(a.spent) > p.budget) {
        std::size_t best = groups;
        double best_loss = 0.0;
        for (std::size_t g = 0; g < groups; ++g) {
            if (a.k_int[g] <= 1) continue;
            const double loss = gain(p.reff[g], a.k_int[g] - 1, p.omega[g]);
            if (best == groups || loss < best_loss) {
                best = g;
                best_loss = loss;
            }
        }
        a.k_int[best] -= 1;
        a.spent -= p.omega[best];
    }

    // Greedy fill, then single-rank transfers between groups while one still
    // lowers the objective. With equal per-rank costs the objective is
    // separable and convex, so a state with no improving transfer and no
    // affordable addition is optimal.
    for (;;) {
        greedy_fill(p, a);
        std::size_t from = groups;
        std::size_t to = groups;
        double best_delta = 0.0;
        for (std::size_t i = 0; i < groups; ++i) {
            if (a.k_int[i] <= 1) continue;
            const double loss = p.reff[i] / static_cast<double>(a.k_int[i] - 1) -
                                p.reff[i] / static_cast<double>(a.k_int[i]);
            for (std::size_t j = 0; j < groups; ++j) {
                if (j == i || a.k_int[j] >= p.kmax[j]) continue;
                if (static_cast<double>(a.spent - p.omega[i] + p.omega[j]) > p.budget) continue;
                const double win = p.reff[j] / static_cast<double>(a.k_int[j]) -
                                   p.reff[j] / static_cast<double>(a.k_int[j] + 1);
                const double delta = win - loss;
                // Relative guard keeps rounding noise from cycling.
                if (delta > best_delta && delta > 1e-12 * (win + loss)) {
                    best_delta = delta;
                    from = i;
                    to = j;
                }
            }
        }
        if (from == groups) break;
        a.k_int[from] -= 1;
        a.k_int[to] += 1;
        a.spent = a.spent - p.omega[from] + p.omega[to];
    }

    a.objective = allocation_objective(p.reff, a.k_int);
    return a;
}

Allocation allocate(const AllocationProblem& p) { return integerize(p, allocate_real(p)); }

std::uint64_t uniform_rank(std::uint64_t d1, std::uint64_t d2, std::uint64_t n, double theta) {
    if (d1 == 0 || d2 == 0 || n == 0) throw std::invalid_argument("uniform_rank: degenerate dimensions");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("uniform_rank: theta must lie in (0, 1)");
    const double kept = static_cast<double>(n) * static_cast<double>(d1) * static_cast<double>(d2) * (1.0 - theta);
    const double k = kept / static_cast<double>(d1 + n * d2);
    // Guard exact quotients against rounding just below the integer.
    return static_cast<std::uint64_t>(std::floor(k * (1.0 + 1e-12)));
}

}  // namespace drank
