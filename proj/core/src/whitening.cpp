// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/whitening.hpp"

#include <stdexcept>

#include "drank/linalg.hpp"

namespace drank {

namespace {

Matrix factor(const Matrix& gram, double ridge, WhitenerOrientation orientation) {
    return orientation == WhitenerOrientation::upper ? cholesky_upper(gram, ridge) : cholesky_lower(gram, ridge);
}

}  // namespace

Whitener build_whitener(const Matrix& gram, double ridge, WhitenerOrientation orientation) {
    for (std::size_t i = 0; i < gram.rows() && i < gram.cols(); ++i) {
        if (gram(i, i) < 0.0) throw NumericalError("gram matrix has a negative diagonal entry at " + std::to_string(i));
    }
    Whitener wh;
    wh.orientation = orientation;
    try {
        wh.S = factor(gram, ridge, orientation);
        wh.ridge_used = ridge;
    } catch (const NotPositiveDefinite&) {
        if (ridge != 0.0) throw;
        wh.S = factor(gram, kRetryRidge, orientation);
        wh.ridge_used = kRetryRidge;
    }
    return wh;
}

Whitener build_whitener(const GramStats& g, double ridge, WhitenerOrientation orientation) {
    if (g.samples == 0) {
        throw std::invalid_argument("gram statistics for layer " + std::to_string(g.layer) + " role " +
                                    std::string(role_name(g.role)) + " have zero samples");
    }
    return build_whitener(g.gram, ridge, orientation);
}

Matrix scale(const Matrix& w, const Whitener& wh) {
    const std::size_t d = wh.dim();
    if (w.rows() != d) {
        throw DimensionError("scale: whitener is " + std::to_string(d) + "x" + std::to_string(d) + " but W has " +
                             std::to_string(w.rows()) + " rows");
    }
    const bool upper = wh.orientation == WhitenerOrientation::upper;
    Matrix out(d, w.cols());
    for (std::size_t i = 0; i < d; ++i) {
        auto orow = out.row(i);
        const std::size_t lo = upper ? i : 0;
        const std::size_t hi = upper ? d : i + 1;
        for (std::size_t k = lo; k < hi; ++k) {
            const double s = wh.S(i, k);
            if (s == 0.0) continue;
            auto wrow = w.row(k);
            for (std::size_t j = 0; j < w.cols(); ++j) orow[j] += s * wrow[j];
        }
    }
    return out;
}

Matrix apply_inverse(const Whitener& wh, const Matrix& m) {
    return wh.orientation == WhitenerOrientation::upper ? solve_upper(wh.S, m) : solve_lower(wh.S, m);
}

Matrix unscale_basis(const Matrix& u_k, std::span<const double> sigma_k, const Whitener& wh) {
    if (u_k.cols() != sigma_k.size()) throw DimensionError("unscale_basis: U_k width differs from sigma count");
    Matrix scaled = u_k;
    for (std::size_t i = 0; i < scaled.rows(); ++i)
        for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= sigma_k[j];
    return apply_inverse(wh, scaled);
}

GramStats sum_grams(std::span<const GramStats> members) {
    if (members.empty()) throw std::invalid_argument("sum_grams: no members");
    GramStats out = members.front();
    for (std::size_t m = 1; m < members.size(); ++m) {
        out.gram = out.gram + members[m].gram;
        out.samples += members[m].samples;
    }
    return out;
}

std::string gram_tensor_name(std::size_t layer, Role role) {
    return "gram/" + std::to_string(layer) + "/" + std::string(role_name(role));
}

std::string gram_samples_key(std::size_t layer, Role role) {
    return "samples/" + std::to_string(layer) + "/" + std::string(role_name(role));
}

void store_gram(TensorStore& store, const GramStats& g) {
    store.insert(gram_tensor_name(g.layer, g.role), Tensor::from_matrix(g.gram, DType::f64));
    store.metadata()[gram_samples_key(g.layer, g.role)] = std::to_string(g.samples);
}

GramStats load_gram(const TensorStore& store, std::size_t layer, Role role) {
    GramStats g;
    g.role = role;
    g.layer = layer;
    g.gram = store.matrix(gram_tensor_name(layer, role));
    const auto key = gram_samples_key(layer, role);
    auto it = store.metadata().find(key);
    if (it == store.metadata().end()) throw StoreError(StoreError::Kind::missing, "missing metadata '" + key + "'");
    try {
        g.samples = std::stoull(it->second);
    } catch (const std::exception&) {
        throw StoreError(StoreError::Kind::malformed_header, "metadata '" + key + "' is not an integer");
    }
    return g;
}

}  // namespace drank
