// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "drank/linalg.hpp"
#include "drank/whitening.hpp"
#include "support/oracles.hpp"
#include "support/toy_model.hpp"

using namespace drank;
using drank::testing::random_matrix;

namespace {

GramStats stats_from(const Matrix& x, Role role = Role::q, std::size_t layer = 0) {
    GramAccumulator acc(x.cols());
    acc.add(x);
    return {role, layer, acc.gram(), acc.samples()};
}

// Whitened truncation W_hat = S^{-1} U_k Sigma_k V_k^T of S W.
Matrix whitened_truncation(const Matrix& w, const Whitener& wh, std::size_t k) {
    const auto t = truncate(svd(scale(w, wh)), k);
    return matmul(unscale_basis(t.U, t.singular_values, wh), t.Vt);
}

}  // namespace

TEST(Whitener, IdentityGram) {
    const auto wh = build_whitener(GramStats{Role::q, 0, Matrix::identity(4), 4});
    EXPECT_EQ(wh.S, Matrix::identity(4));
    EXPECT_EQ(wh.ridge_used, 0.0);
}

TEST(Whitener, OrthogonalActivationsReduceToPlainSvd) {
    std::mt19937_64 rng(1);
    // Orthogonal X from the left vectors of a random square matrix.
    const Matrix q = svd(random_matrix(6, 6, rng)).U;
    const auto wh = build_whitener(stats_from(q));
    EXPECT_LE(frobenius_norm(wh.S - Matrix::identity(6)), 1e-12);
    const Matrix w = random_matrix(6, 4, rng);
    const auto plain = svd(w);
    const auto white = svd(scale(w, wh));
    for (std::size_t i = 0; i < plain.rank(); ++i) {
        EXPECT_NEAR(white.singular_values[i], plain.singular_values[i], 1e-12);
    }
}

TEST(Whitener, FactorReproducesGram) {
    std::mt19937_64 rng(2);
    const auto g = stats_from(random_matrix(50, 7, rng));
    const auto upper = build_whitener(g);
    EXPECT_LE(relative_frobenius_diff(matmul_tn(upper.S, upper.S), g.gram), 1e-8);
    const auto lower = build_whitener(g, 0.0, WhitenerOrientation::lower);
    EXPECT_LE(relative_frobenius_diff(matmul(lower.S, transpose(lower.S)), g.gram), 1e-8);
}

TEST(Whitener, RetriesWithRidgeOnSingularGram) {
    std::mt19937_64 rng(3);
    // 3 tokens in 6 dimensions: rank-deficient Gram.
    const auto g = stats_from(random_matrix(3, 6, rng));
    const auto wh = build_whitener(g);
    EXPECT_EQ(wh.ridge_used, kRetryRidge);
    double mean_diag = 0.0;
    for (std::size_t i = 0; i < 6; ++i) mean_diag += g.gram(i, i) / 6.0;
    const Matrix target = g.gram + (kRetryRidge * mean_diag) * Matrix::identity(6);
    EXPECT_LE(relative_frobenius_diff(matmul_tn(wh.S, wh.S), target), 1e-8);

    // An explicit ridge that still fails is not retried.
    Matrix indefinite = Matrix::identity(2);
    indefinite(1, 1) = -5.0;
    EXPECT_THROW((void)build_whitener(indefinite, 0.0), NumericalError);
}

TEST(Whitener, ZeroSamplesRejected) {
    EXPECT_THROW((void)build_whitener(GramStats{Role::k, 3, Matrix::identity(2), 0}), std::invalid_argument);
}

TEST(Scale, IdentityAndScalar) {
    std::mt19937_64 rng(4);
    const Matrix w = random_matrix(3, 5, rng);
    Whitener id{Matrix::identity(3), 0.0, WhitenerOrientation::upper};
    EXPECT_EQ(scale(w, id), w);
    Whitener two{2.0 * Matrix::identity(3), 0.0, WhitenerOrientation::upper};
    EXPECT_EQ(scale(w, two), 2.0 * w);
    EXPECT_THROW((void)scale(random_matrix(4, 5, rng), id), DimensionError);
}

TEST(Scale, MatchesDenseProduct) {
    std::mt19937_64 rng(5);
    const auto wh = build_whitener(stats_from(random_matrix(40, 9, rng)));
    const Matrix w = random_matrix(9, 4, rng);
    const Eigen::MatrixXd ref = oracle::to_eigen(wh.S) * oracle::to_eigen(w);
    const Matrix got = scale(w, wh);
    double diff = 0.0;
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 4; ++j) diff += (got(i, j) - ref(i, j)) * (got(i, j) - ref(i, j));
    EXPECT_LE(std::sqrt(diff), 1e-12 * ref.norm());

    const auto lower = build_whitener(stats_from(random_matrix(40, 9, rng)), 0.0, WhitenerOrientation::lower);
    EXPECT_LE(relative_frobenius_diff(scale(w, lower), matmul(lower.S, w)), 1e-14);
}

TEST(UnscaleBasis, IdentityAndFullRank) {
    std::mt19937_64 rng(6);
    const Matrix w = random_matrix(5, 7, rng);
    Whitener id{Matrix::identity(5), 0.0, WhitenerOrientation::upper};
    const auto s = svd(w);
    Matrix expected = s.U;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) expected(i, j) *= s.singular_values[j];
    EXPECT_EQ(unscale_basis(s.U, s.singular_values, id), expected);

    const auto wh = build_whitener(stats_from(random_matrix(30, 5, rng)));
    const auto sw = svd(scale(w, wh));
    const Matrix b = unscale_basis(sw.U, sw.singular_values, wh);
    EXPECT_LE(relative_frobenius_diff(matmul(b, sw.Vt), w), 1e-8);
}

TEST(UnscaleBasis, ResidualCheck) {
    std::mt19937_64 rng(7);
    const auto wh = build_whitener(stats_from(random_matrix(60, 8, rng)));
    const auto t = truncate(svd(scale(random_matrix(8, 6, rng), wh)), 3);
    const Matrix b = unscale_basis(t.U, t.singular_values, wh);
    Matrix us = t.U;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= t.singular_values[j];
    EXPECT_LE(relative_frobenius_diff(scale(b, wh), us), 1e-8);
}

TEST(WhitenedLoss, IdentityOnRandomInstance) {
    std::mt19937_64 rng(8);
    const Matrix x = random_matrix(200, 16, rng);
    const Matrix w = random_matrix(16, 12, rng);
    const auto wh = build_whitener(stats_from(x));
    const Matrix w_hat = whitened_truncation(w, wh, 5);
    const double measured = frobenius_norm_sq(matmul(x, w - w_hat));
    const double tail = oracle::tail_energy(oracle::singular_values(scale(w, wh)), 5);
    EXPECT_NEAR(measured / tail, 1.0, 1e-6);
}

TEST(WhitenedLoss, PropertyAcrossRandomShapes) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::size_t> dim(2, 14);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t d_in = dim(rng);
        const std::size_t d_out = dim(rng);
        const Matrix x = drank::testing::activations(3 * d_in + 5, d_in, rng);
        const Matrix w = random_matrix(d_in, d_out, rng);
        const auto wh = build_whitener(stats_from(x));
        const std::size_t r = std::min(d_in, d_out);
        std::uniform_int_distribution<std::size_t> kd(1, r);
        const std::size_t k = kd(rng);
        const double measured = frobenius_norm_sq(matmul(x, w - whitened_truncation(w, wh, k)));
        const double tail = oracle::tail_energy(oracle::singular_values(scale(w, wh)), k);
        EXPECT_LE(std::abs(measured - tail), 1e-6 * std::max(tail, 1e-12 * frobenius_norm_sq(matmul(x, w))));
    }
}

TEST(WhitenedLoss, BeatsPlainTruncationOnActivationError) {
    std::mt19937_64 rng(10);
    const Matrix x = drank::testing::activations(120, 10, rng);
    const Matrix w = random_matrix(10, 10, rng);
    const auto wh = build_whitener(stats_from(x));
    const double whitened = frobenius_norm_sq(matmul(x, w - whitened_truncation(w, wh, 4)));
    const double plain = frobenius_norm_sq(matmul(x, w - truncate(svd(w), 4).reconstruct()));
    EXPECT_LE(whitened, plain * (1.0 + 1e-12));
}

TEST(GramStore, NamingAndRoundTrip) {
    EXPECT_EQ(gram_tensor_name(3, Role::gate), "gram/3/gate");
    EXPECT_EQ(gram_samples_key(0, Role::v), "samples/0/v");
    std::mt19937_64 rng(11);
    const auto g = stats_from(random_matrix(9, 4, rng), Role::down, 2);
    TensorStore store;
    store_gram(store, g);
    const auto back = load_gram(read_store(write_store(store)), 2, Role::down);
    EXPECT_EQ(back.gram, g.gram);
    EXPECT_EQ(back.samples, 9u);
    EXPECT_THROW((void)load_gram(store, 1, Role::down), StoreError);
}

TEST(GramStore, SumOfMembers) {
    std::mt19937_64 rng(12);
    const std::vector<GramStats> members = {stats_from(random_matrix(5, 3, rng)), stats_from(random_matrix(7, 3, rng))};
    const auto sum = sum_grams(members);
    EXPECT_EQ(sum.samples, 12u);
    EXPECT_EQ(sum.gram, members[0].gram + members[1].gram);
}
