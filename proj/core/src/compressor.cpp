// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/compressor.hpp"

#include <stdexcept>
#include <string>

namespace drank {

Matrix concat_group(std::span<const Matrix> weights) {
    if (weights.empty()) throw DimensionError("concat_group: no members");
    const std::size_t d1 = weights.front().rows();
    const std::size_t d2 = weights.front().cols();
    for (const auto& w : weights) {
        if (w.rows() != d1 || w.cols() != d2) throw DimensionError("concat_group: member shapes differ");
    }
    Matrix out(d1, weights.size() * d2);
    for (std::size_t b = 0; b < weights.size(); ++b)
        for (std::size_t i = 0; i < d1; ++i)
            for (std::size_t j = 0; j < d2; ++j) out(i, b * d2 + j) = weights[b](i, j);
    return out;
}

Matrix scaled_group_matrix(const LayerGroup& g) { return scale(concat_group(g.weights), g.whitener); }

FactoredGroup compress_group(const LayerGroup& g, std::size_t k) { return compress_group(g, svd(scaled_group_matrix(g)), k); }

FactoredGroup compress_group(const LayerGroup& g, const SvdResult& scaled_svd, std::size_t k) {
    if (g.weights.empty()) throw DimensionError("compress_group: empty group");
    if (k < 1 || k > g.max_rank()) {
        throw std::out_of_range("compress_group: k = " + std::to_string(k) + " outside [1, " +
                                std::to_string(g.max_rank()) + "]");
    }
    if (scaled_svd.U.rows() != g.d1() || scaled_svd.Vt.cols() != g.n() * g.d2()) {
        throw DimensionError("compress_group: SVD does not match the group shape");
    }
    const auto t = truncate(scaled_svd, k);
    FactoredGroup f;
    f.role = g.role;
    f.members = g.members;
    f.k = k;
    f.spectrum = scaled_svd.singular_values;
    f.B = unscale_basis(t.U, t.singular_values, g.whitener);
    f.C.reserve(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) f.C.push_back(column_block(t.Vt, i * g.d2(), g.d2()));
    return f;
}

Matrix reconstruct(const FactoredGroup& f, std::size_t i) {
    if (i >= f.C.size()) {
        throw std::out_of_range("reconstruct: member " + std::to_string(i) + " of a group of " +
                                std::to_string(f.C.size()));
    }
    return matmul(f.B, f.C[i]);
}

std::vector<LayerErrors> compression_report(std::span<const Matrix> originals, const FactoredGroup& f,
                                            std::span<const GramStats> member_grams) {
    if (originals.size() != f.n() || member_grams.size() != f.n()) {
        throw DimensionError("compression_report: member counts differ");
    }
    std::vector<LayerErrors> out;
    out.reserve(f.n());
    for (std::size_t i = 0; i < f.n(); ++i) {
        const Matrix diff = originals[i] - reconstruct(f, i);
        const Whitener wh = build_whitener(member_grams[i]);
        LayerErrors e;
        e.layer = i < f.members.size() ? f.members[i] : i;
        e.frob_err = frobenius_norm(diff);
        const double ref = frobenius_norm(originals[i]);
        e.rel_frob_err = ref > 0.0 ? e.frob_err / ref : e.frob_err;
        e.activation_weighted_err = frobenius_norm(scale(diff, wh));
        out.push_back(e);
    }
    return out;
}

double whitened_group_error_sq(const LayerGroup& g, const FactoredGroup& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) acc += frobenius_norm_sq(scale(g.weights[i] - reconstruct(f, i), g.whitener));
    return acc;
}

}  // namespace drank
