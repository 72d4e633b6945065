// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/matrix.hpp"

#include <algorithm>
#include <limits>

namespace drank {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
    }
}

}  // namespace

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + ")");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto crow = c.row(i);
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            auto brow = b.row(p);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: row counts differ");
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t p = 0; p < a.rows(); ++p) {
        auto arow = a.row(p);
        auto brow = b.row(p);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double api = arow[i];
            if (api == 0.0) continue;
            auto crow = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += api * brow[j];
        }
    }
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "subtract");
    Matrix c = a;
    auto cv = c.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] -= bv[i];
    return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix c = a;
    auto cv = c.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] += bv[i];
    return c;
}

Matrix operator*(double s, const Matrix& m) {
    Matrix c = m;
    for (auto& v : c.values()) v *= s;
    return c;
}

double frobenius_norm_sq(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.values()) acc += v * v;
    return acc;
}

double frobenius_norm(const Matrix& m) { return std::sqrt(frobenius_norm_sq(m)); }

bool all_finite(const Matrix& m) {
    return std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
}

Matrix column_block(const Matrix& m, std::size_t first, std::size_t count) {
    if (first + count > m.cols()) throw DimensionError("column_block: range exceeds matrix width");
    Matrix out(m.rows(), count);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = m(i, first + j);
    return out;
}

Matrix row_block(const Matrix& m, std::size_t first, std::size_t count) {
    if (first + count > m.rows()) throw DimensionError("row_block: range exceeds matrix height");
    Matrix out(count, m.cols());
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(first + i, j);
    return out;
}

double relative_frobenius_diff(const Matrix& a, const Matrix& b) {
    const double denom = std::max(frobenius_norm(b), std::numeric_limits<double>::min());
    return frobenius_norm(a - b) / denom;
}

}  // namespace drank
