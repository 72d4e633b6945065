// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "drank/allocator.hpp"
#include "support/oracles.hpp"

using namespace drank;

namespace {

AllocationProblem problem(std::vector<double> reff, std::vector<std::uint64_t> omega, double budget,
                          std::uint64_t kmax = 1000) {
    AllocationProblem p;
    p.kmax.assign(reff.size(), kmax);
    p.reff = std::move(reff);
    p.omega = std::move(omega);
    p.budget = budget;
    return p;
}

}  // namespace

TEST(Allocator, SingleGroupTakesWholeBudget) {
    const auto a = allocate(problem({7.3}, {10}, 95.0));
    EXPECT_NEAR(a.k_real[0], 9.5, 1e-12);
    EXPECT_EQ(a.k_int[0], 9u);
    EXPECT_EQ(a.spent, 90u);
}

TEST(Allocator, SquareRootProportionality) {
    const auto a = allocate(problem({4.0, 16.0}, {10, 10}, 300.0));
    EXPECT_NEAR(a.k_real[0], 10.0, 1e-12);
    EXPECT_NEAR(a.k_real[1], 20.0, 1e-12);
    EXPECT_EQ(a.k_int, (std::vector<std::uint64_t>{10, 20}));
    EXPECT_EQ(a.spent, 300u);

    // Five spare parameters cannot buy a rank costing ten.
    const auto b = allocate(problem({4.0, 16.0}, {10, 10}, 305.0));
    EXPECT_EQ(b.k_int, (std::vector<std::uint64_t>{10, 20}));
}

TEST(Allocator, EqualGroupsSplitEvenly) {
    const auto a = allocate(problem({5.0, 5.0, 5.0}, {4, 4, 4}, 120.0));
    EXPECT_EQ(a.k_int, (std::vector<std::uint64_t>{10, 10, 10}));
}

TEST(Allocator, GreedyFillMatchesBruteForce) {
    const auto p = problem({2.0, 8.0, 18.0}, {3, 3, 3}, 30.0, 10);
    const auto a = allocate(p);
    EXPECT_EQ(a.k_int, (std::vector<std::uint64_t>{2, 3, 5}));
    EXPECT_EQ(a.spent, 30u);
    EXPECT_NEAR(a.objective, oracle::exhaustive_best(p.reff, p.omega, p.kmax, p.budget), 1e-12);
}

TEST(Allocator, ClosedFormMatchesMinimizer) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> r(1.0, 200.0);
    std::uniform_int_distribution<std::uint64_t> w(50, 5000);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t g = 1 + static_cast<std::size_t>(trial % 12);
        AllocationProblem p;
        std::vector<double> omega_d;
        for (std::size_t i = 0; i < g; ++i) {
            p.reff.push_back(r(rng));
            p.omega.push_back(w(rng));
            omega_d.push_back(static_cast<double>(p.omega.back()));
        }
        p.kmax.assign(g, 1u << 20);
        p.budget = 50.0 * std::accumulate(omega_d.begin(), omega_d.end(), 0.0);
        const auto k = allocate_real(p);
        const auto ref = oracle::constrained_minimizer(p.reff, omega_d, p.budget);
        double spend = 0.0;
        for (std::size_t i = 0; i < g; ++i) {
            EXPECT_NEAR(k[i], ref[i], 1e-6 * ref[i]);
            spend += k[i] * omega_d[i];
        }
        EXPECT_NEAR(spend, p.budget, 1e-9 * p.budget);
    }
}

TEST(Allocator, IntegerSolutionIsFeasibleAndNearOptimal) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> r(1.0, 12.0);
    std::uniform_int_distribution<std::uint64_t> w(2, 7);
    std::uniform_int_distribution<std::uint64_t> km(2, 7);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t g = 1 + static_cast<std::size_t>(trial % 4);
        const bool equal = trial % 2 == 0;
        AllocationProblem p;
        const std::uint64_t shared = w(rng);
        double floor_cost = 0.0;
        double ceil_cost = 0.0;
        for (std::size_t i = 0; i < g; ++i) {
            p.reff.push_back(r(rng));
            p.omega.push_back(equal ? shared : w(rng));
            p.kmax.push_back(km(rng));
            floor_cost += static_cast<double>(p.omega.back());
            ceil_cost += static_cast<double>(p.omega.back() * p.kmax.back());
        }
        std::uniform_real_distribution<double> b(floor_cost, ceil_cost);
        p.budget = std::floor(b(rng));
        if (p.budget < floor_cost) p.budget = floor_cost;
        const auto a = allocate(p);
        std::uint64_t spent = 0;
        for (std::size_t i = 0; i < g; ++i) {
            EXPECT_GE(a.k_int[i], 1u);
            EXPECT_LE(a.k_int[i], p.kmax[i]);
            spent += a.k_int[i] * p.omega[i];
        }
        EXPECT_EQ(spent, a.spent);
        EXPECT_LE(static_cast<double>(spent), p.budget);
        const double best = oracle::exhaustive_best(p.reff, p.omega, p.kmax, p.budget);
        if (equal) {
            EXPECT_NEAR(a.objective, best, 1e-12 * best) << "trial " << trial;
        } else {
            // Within one greedy step of the optimum: some group's objective
            // drops below the optimum by adding one rank.
            EXPECT_GE(a.objective, best - 1e-12);
            double best_step = 0.0;
            for (std::size_t i = 0; i < g; ++i) {
                const double k = static_cast<double>(a.k_int[i]);
                best_step = std::max(best_step, p.reff[i] / k - p.reff[i] / (k + 1.0));
            }
            EXPECT_LE(a.objective - best_step, best + 1e-12) << "trial " << trial;
        }
    }
}

TEST(Allocator, MoreEffectiveRankNeverLowersShare) {
    const auto a = allocate_real(problem({2.0, 3.0, 9.0}, {5, 5, 5}, 500.0));
    EXPECT_LT(a[0], a[1]);
    EXPECT_LT(a[1], a[2]);
    const auto b = allocate_real(problem({2.0, 3.0, 9.0}, {5, 5, 5}, 1000.0));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(b[i], 2.0 * a[i], 1e-12 * b[i]);
}

TEST(Allocator, ClampsToCeiling) {
    const auto a = allocate(problem({1.0, 100.0}, {2, 2}, 100.0, 30));
    EXPECT_EQ(a.k_int[1], 30u);
    EXPECT_EQ(a.k_int[0], 20u);
}

TEST(Allocator, InfeasibleBudget) {
    EXPECT_THROW((void)allocate(problem({1.0, 2.0}, {10, 10}, 19.0)), InfeasibleBudget);
    EXPECT_NO_THROW((void)allocate(problem({1.0, 2.0}, {10, 10}, 20.0)));
}

TEST(Allocator, InvalidProblems) {
    EXPECT_THROW((void)allocate(problem({}, {}, 10.0)), std::invalid_argument);
    EXPECT_THROW((void)allocate(problem({0.5}, {1}, 10.0)), std::invalid_argument);
    EXPECT_THROW((void)allocate(problem({1.0}, {0}, 10.0)), std::invalid_argument);
    auto p = problem({1.0, 2.0}, {1, 1}, 10.0);
    p.kmax.pop_back();
    EXPECT_THROW((void)allocate(p), std::invalid_argument);
}

TEST(UniformRank, KnownValues) {
    EXPECT_EQ(uniform_rank(4096, 4096, 1, 0.2), 1638u);
    EXPECT_EQ(uniform_rank(4096, 4096, 2, 0.2), 2184u);
    EXPECT_EQ(uniform_rank(4096, 1024, 1, 0.2), 655u);
    EXPECT_EQ(uniform_rank(4096, 1024, 2, 0.2), 1092u);
    EXPECT_EQ(uniform_rank(4, 4, 1, 0.5), 1u);
}
