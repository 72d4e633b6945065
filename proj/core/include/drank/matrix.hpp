// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrix used throughout the engine. Compute happens in
// double; float storage is used for factors at rest and for the GEMM bench.

#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drank {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <typename T>
class BasicMatrix {
public:
    using value_type = T;

    BasicMatrix() = default;
    BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("matrix data size does not match shape");
        }
    }

    static BasicMatrix identity(std::size_t n) {
        BasicMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    const T& operator()(std::size_t r, std::size_t c) const noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    [[nodiscard]] std::span<T> row(std::size_t r) noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::span<const T> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] T* data() noexcept { return data_.data(); }
    [[nodiscard]] const T* data() const noexcept { return data_.data(); }
    [[nodiscard]] std::span<const T> values() const noexcept { return data_; }
    [[nodiscard]] std::span<T> values() noexcept { return data_; }

    bool operator==(const BasicMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using MatrixF32 = BasicMatrix<float>;

template <typename To, typename From>
BasicMatrix<To> cast(const BasicMatrix<From>& m) {
    BasicMatrix<To> out(m.rows(), m.cols());
    auto src = m.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<To>(src[i]);
    return out;
}

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);

double frobenius_norm(const Matrix& m);
double frobenius_norm_sq(const Matrix& m);
bool all_finite(const Matrix& m);

/// Columns [first, first + count) as a new matrix.
Matrix column_block(const Matrix& m, std::size_t first, std::size_t count);
/// Rows [first, first + count) as a new matrix.
Matrix row_block(const Matrix& m, std::size_t first, std::size_t count);

/// ||a - b||_F / ||b||_F (denominator floored at a tiny value).
double relative_frobenius_diff(const Matrix& a, const Matrix& b);

}  // namespace drank
