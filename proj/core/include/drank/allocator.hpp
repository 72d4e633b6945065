// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Budgeted rank allocation. Minimising sum_g R_eff(g) / k_g subject to
// sum_g k_g * omega_g = T gives k_g proportional to sqrt(R_eff(g) / omega_g);
// the budget fixes the constant. integerize() turns that real solution into
// feasible integer ranks.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace drank {

struct AllocationProblem {
    std::vector<double> reff;          // effective rank per group, >= 1
    std::vector<std::uint64_t> omega;  // parameters per retained rank, d1 + n * d2
    double budget = 0.0;               // parameter budget
    std::vector<std::uint64_t> kmax;   // rank ceiling per group, min(d1, n * d2)

    [[nodiscard]] std::size_t groups() const noexcept { return reff.size(); }
    /// Throws std::invalid_argument when sizes or values are out of range.
    void validate() const;
};

struct Allocation {
    std::vector<double> k_real;
    std::vector<std::uint64_t> k_int;
    std::uint64_t spent = 0;
    double objective = 0.0;
};

/// The budget cannot pay for rank 1 in every group.
class InfeasibleBudget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed-form Lagrangian solution; sum_g k_g * omega_g equals the budget.
[[nodiscard]] std::vector<double> allocate_real(const AllocationProblem& p);

/// Floors k_real into [1, kmax], trims if the kmin clamp overspent, then
/// adds ranks one at a time to the group with the largest objective decrease
/// per parameter, R(1/k - 1/(k+1)) / omega, while any affordable group
/// remains (ties go to the lowest group index). Finally moves single ranks
/// between groups while that lowers the objective, refilling after each
/// move. With equal omega the result is the integer optimum.
[[nodiscard]] Allocation integerize(const AllocationProblem& p, const std::vector<double>& k_real);

/// allocate_real followed by integerize.
[[nodiscard]] Allocation allocate(const AllocationProblem& p);

/// sum_g R_eff(g) / k_g.
[[nodiscard]] double allocation_objective(const std::vector<double>& reff, const std::vector<std::uint64_t>& k);

/// Rank a uniform-ratio baseline keeps for a group of n matrices of
/// d1 x d2: floor(n d1 d2 (1 - theta) / (d1 + n d2)).
[[nodiscard]] std::uint64_t uniform_rank(std::uint64_t d1, std::uint64_t d2, std::uint64_t n, double theta);

}  // namespace drank
