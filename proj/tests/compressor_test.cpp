// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "drank/compressor.hpp"
#include "support/oracles.hpp"
#include "support/toy_model.hpp"

using namespace drank;
using drank::testing::random_matrix;

namespace {

GramStats stats_from(const Matrix& x, std::size_t layer = 0) {
    GramAccumulator acc(x.cols());
    acc.add(x);
    return {Role::up, layer, acc.gram(), acc.samples()};
}

struct Fixture {
    LayerGroup group;
    std::vector<GramStats> grams;
};

Fixture make_group(std::size_t n, std::size_t d1, std::size_t d2, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Fixture f;
    f.group.role = Role::up;
    for (std::size_t i = 0; i < n; ++i) {
        f.group.members.push_back(i);
        f.group.weights.push_back(random_matrix(d1, d2, rng));
        f.grams.push_back(stats_from(drank::testing::activations(3 * d1, d1, rng), i));
    }
    f.group.whitener = build_whitener(sum_grams(f.grams));
    return f;
}

}  // namespace

TEST(ConcatGroup, ColumnBlocks) {
    const Matrix a(2, 2, std::vector<double>{1, 2, 3, 4});
    const Matrix b(2, 2, std::vector<double>{5, 6, 7, 8});
    const std::vector<Matrix> ws = {a, b};
    const Matrix c = concat_group(ws);
    EXPECT_EQ(c, Matrix(2, 4, std::vector<double>{1, 2, 5, 6, 3, 4, 7, 8}));
    const std::vector<Matrix> bad = {a, Matrix(2, 3)};
    EXPECT_THROW((void)concat_group(bad), DimensionError);
}

TEST(CompressGroup, FullRankIsExact) {
    auto f = make_group(2, 6, 4, 1);
    const auto out = compress_group(f.group, f.group.max_rank());
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LE(relative_frobenius_diff(reconstruct(out, i), f.group.weights[i]), 1e-10);
    }
    EXPECT_NEAR(out.tail_energy(), 0.0, 1e-20);
}

TEST(CompressGroup, IdentityWhitenerEqualsPlainSvd) {
    std::mt19937_64 rng(2);
    LayerGroup g;
    g.members = {0};
    g.weights = {random_matrix(7, 5, rng)};
    g.whitener = {Matrix::identity(7), 0.0, WhitenerOrientation::upper};
    const auto out = compress_group(g, 2);
    const auto ref = truncate(svd(g.weights[0]), 2).reconstruct();
    EXPECT_LE(relative_frobenius_diff(reconstruct(out, 0), ref), 1e-12);
}

TEST(CompressGroup, GroupTailMatchesOracle) {
    auto f = make_group(2, 8, 5, 3);
    const auto out = compress_group(f.group, 3);
    EXPECT_EQ(out.B.rows(), 8u);
    EXPECT_EQ(out.B.cols(), 3u);
    ASSERT_EQ(out.n(), 2u);
    EXPECT_EQ(out.C[1].rows(), 3u);
    EXPECT_EQ(out.C[1].cols(), 5u);
    EXPECT_EQ(out.parameter_count(), 3u * (8u + 2u * 5u));

    const auto sigma = oracle::singular_values(scaled_group_matrix(f.group));
    const double tail = oracle::tail_energy(sigma, 3);
    EXPECT_NEAR(out.tail_energy(), tail, 1e-9 * tail);
    EXPECT_NEAR(whitened_group_error_sq(f.group, out), tail, 1e-8 * tail);
}

TEST(CompressGroup, SharedSvdOverloadAgrees) {
    auto f = make_group(3, 6, 4, 4);
    const auto s = svd(scaled_group_matrix(f.group));
    const auto a = compress_group(f.group, 2);
    const auto b = compress_group(f.group, s, 2);
    EXPECT_EQ(a.B, b.B);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.C[i], b.C[i]);
}

TEST(CompressGroup, RankOutOfRange) {
    auto f = make_group(2, 4, 3, 5);
    EXPECT_THROW((void)compress_group(f.group, 0), std::out_of_range);
    EXPECT_THROW((void)compress_group(f.group, 5), std::out_of_range);
    const auto out = compress_group(f.group, 2);
    EXPECT_THROW((void)reconstruct(out, 2), std::out_of_range);
}

TEST(CompressionReport, ZeroForLosslessFactors) {
    auto f = make_group(2, 5, 3, 6);
    const auto out = compress_group(f.group, 5);
    const auto rep = compression_report(f.group.weights, out, f.grams);
    ASSERT_EQ(rep.size(), 2u);
    for (const auto& e : rep) {
        EXPECT_LE(e.rel_frob_err, 1e-10);
        EXPECT_LE(e.activation_weighted_err, 1e-8);
    }
}

TEST(CompressionReport, MemberErrorsMatchDirectComputation) {
    auto f = make_group(2, 6, 4, 8);
    const auto out = compress_group(f.group, 2);
    const auto rep = compression_report(f.group.weights, out, f.grams);
    for (std::size_t i = 0; i < 2; ++i) {
        const Matrix diff = f.group.weights[i] - reconstruct(out, i);
        EXPECT_NEAR(rep[i].frob_err, frobenius_norm(diff), 1e-12 * frobenius_norm(diff));
        // ||S_i D||^2 = tr(D^T G_i D).
        const Matrix gd = matmul(f.grams[i].gram, diff);
        double tr = 0.0;
        for (std::size_t r = 0; r < diff.rows(); ++r)
            for (std::size_t c = 0; c < diff.cols(); ++c) tr += diff(r, c) * gd(r, c);
        const double act = std::sqrt(tr);
        EXPECT_NEAR(rep[i].activation_weighted_err, act, 1e-8 * act);
    }
}
