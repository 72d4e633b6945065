// Copyright (c) 2026, The drank authors
// SPDX-License-Identifier: Apache-2.0

#include "drank/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace drank {

namespace {

using Column = std::vector<double>;
using Columns = std::vector<Column>;

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxSweeps = 80;

double dot(const Column& a, const Column& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(const Column& a) { return std::sqrt(dot(a, a)); }

Columns to_columns(const Matrix& m) {
    Columns cols(m.cols(), Column(m.rows()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) cols[j][i] = m(i, j);
    return cols;
}

Columns identity_columns(std::size_t rows, std::size_t cols) {
    Columns out(cols, Column(rows, 0.0));
    for (std::size_t j = 0; j < std::min(rows, cols); ++j) out[j][j] = 1.0;
    return out;
}

struct ThinQr {
    Columns q;  // m x n
    Columns r;  // n x n, upper triangular
};

// Householder QR of a tall m x n matrix given by columns.
ThinQr householder_qr(Columns a) {
    const std::size_t n = a.size();
    const std::size_t m = a.front().size();
    std::vector<Column> reflectors;
    reflectors.reserve(n);

    for (std::size_t j = 0; j < n; ++j) {
        Column v(m, 0.0);
        double xnorm_sq = 0.0;
        for (std::size_t i = j; i < m; ++i) {
            v[i] = a[j][i];
            xnorm_sq += v[i] * v[i];
        }
        const double xnorm = std::sqrt(xnorm_sq);
        if (xnorm == 0.0) {
            reflectors.emplace_back();
            continue;
        }
        const double alpha = v[j] >= 0.0 ? -xnorm : xnorm;
        v[j] -= alpha;
        const double vnorm_sq = dot(v, v);
        if (vnorm_sq == 0.0) {
            reflectors.emplace_back();
            continue;
        }
        for (std::size_t c = j; c < n; ++c) {
            double proj = 0.0;
            for (std::size_t i = j; i < m; ++i) proj += v[i] * a[c][i];
            const double f = 2.0 * proj / vnorm_sq;
            for (std::size_t i = j; i < m; ++i) a[c][i] -= f * v[i];
        }
        for (std::size_t i = j + 1; i < m; ++i) a[j][i] = 0.0;
        for (auto& x : v) x /= std::sqrt(vnorm_sq);
        reflectors.push_back(std::move(v));
    }

    ThinQr out;
    out.r.assign(n, Column(n, 0.0));
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t i = 0; i <= c; ++i) out.r[c][i] = a[c][i];

    out.q = identity_columns(m, n);
    for (std::size_t jj = n; jj-- > 0;) {
        const auto& v = reflectors[jj];
        if (v.empty()) continue;
        for (auto& col : out.q) {
            const double f = 2.0 * dot(v, col);
            for (std::size_t i = jj; i < m; ++i) col[i] -= f * v[i];
        }
    }
    return out;
}

// Hestenes one-sided Jacobi: orthogonalises the columns of `w` in place and
// accumulates the rotations into `v`.
void one_sided_jacobi(Columns& w, Columns& v) {
    const std::size_t n = w.size();
    const double tol = std::max(4.0 * kEps, kEps * std::sqrt(static_cast<double>(w.front().size())));
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = dot(w[p], w[p]);
                const double beta = dot(w[q], w[q]);
                const double gamma = dot(w[p], w[q]);
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < w[p].size(); ++i) {
                    const double a = w[p][i];
                    const double b = w[q][i];
                    w[p][i] = c * a - s * b;
                    w[q][i] = s * a + c * b;
                }
                for (std::size_t i = 0; i < v[p].size(); ++i) {
                    const double a = v[p][i];
                    const double b = v[q][i];
                    v[p][i] = c * a - s * b;
                    v[q][i] = s * a + c * b;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }
}

// Replace the flagged columns with unit vectors orthogonal to all others.
void complete_orthonormal(Columns& u, const std::vector<bool>& missing) {
    const std::size_t dim = u.front().size();
    std::size_t next_basis = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!missing[j]) continue;
        for (; next_basis < dim; ++next_basis) {
            Column e(dim, 0.0);
            e[next_basis] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < u.size(); ++k) {
                    if (k == j || (missing[k] && k > j)) continue;
                    const double f = dot(u[k], e);
                    for (std::size_t i = 0; i < dim; ++i) e[i] -= f * u[k][i];
                }
            }
            const double nrm = norm(e);
            if (nrm > 0.5) {
                for (auto& x : e) x /= nrm;
                u[j] = std::move(e);
                ++next_basis;
                break;
            }
        }
    }
}

}  // namespace

Matrix SvdResult::reconstruct() const {
    Matrix scaled = U;
    for (std::size_t i = 0; i < scaled.rows(); ++i)
        for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= singular_values[j];
    return matmul(scaled, Vt);
}

SvdResult svd(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw DimensionError("svd: matrix has a zero dimension");
    if (!all_finite(m)) throw NumericalError("svd: matrix has non-finite entries");

    const bool transposed = m.rows() < m.cols();
    const Matrix a = transposed ? transpose(m) : m;
    const std::size_t rows = a.rows();
    const std::size_t n = a.cols();

    Columns q;
    Columns w;
    if (rows > n) {
        auto qr = householder_qr(to_columns(a));
        q = std::move(qr.q);
        w = std::move(qr.r);
    } else {
        w = to_columns(a);
    }

    Columns v = identity_columns(n, n);
    one_sided_jacobi(w, v);

    std::vector<double> sigma(n);
    std::vector<bool> missing(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        sigma[j] = norm(w[j]);
        if (!(sigma[j] > kSingularDiagonal)) {
            sigma[j] = 0.0;
            missing[j] = true;
        } else {
            for (auto& x : w[j]) x /= sigma[j];
        }
    }
    if (std::find(missing.begin(), missing.end(), true) != missing.end()) complete_orthonormal(w, missing);

    // Left vectors of `a`: Q * w (or w itself when square).
    Columns left;
    if (q.empty()) {
        left = std::move(w);
    } else {
        left.assign(n, Column(rows, 0.0));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < n; ++l) {
                const double f = w[j][l];
                if (f == 0.0) continue;
                for (std::size_t i = 0; i < rows; ++i) left[j][i] += f * q[l][i];
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    // For M = a^T the roles of the left and right vectors swap.
    const Columns& u_cols = transposed ? v : left;
    const Columns& v_cols = transposed ? left : v;

    SvdResult out;
    out.U = Matrix(m.rows(), n);
    out.Vt = Matrix(n, m.cols());
    out.singular_values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.singular_values[k] = sigma[j];
        const Column& uc = u_cols[j];
        std::size_t pivot = 0;
        for (std::size_t i = 1; i < uc.size(); ++i)
            if (std::abs(uc[i]) > std::abs(uc[pivot])) pivot = i;
        const double sign = uc[pivot] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < m.rows(); ++i) out.U(i, k) = sign * uc[i];
        for (std::size_t i = 0; i < m.cols(); ++i) out.Vt(k, i) = sign * v_cols[j][i];
    }
    return out;
}

SvdResult truncate(const SvdResult& s, std::size_t k) {
    if (k < 1 || k > s.rank()) {
        throw std::out_of_range("truncate: k = " + std::to_string(k) + " outside [1, " + std::to_string(s.rank()) +
                                "]");
    }
    SvdResult out;
    out.U = column_block(s.U, 0, k);
    out.singular_values.assign(s.singular_values.begin(), s.singular_values.begin() + static_cast<std::ptrdiff_t>(k));
    out.Vt = row_block(s.Vt, 0, k);
    return out;
}

double tail_energy(const std::vector<double>& sigma, std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = k; i < sigma.size(); ++i) acc += sigma[i] * sigma[i];
    return acc;
}

Matrix cholesky_upper(const Matrix& g, double ridge) {
    const std::size_t d = g.rows();
    if (d == 0 || g.cols() != d) throw DimensionError("cholesky: matrix must be square and non-empty");
    if (!all_finite(g)) throw NumericalError("cholesky: matrix has non-finite entries");
    if (ridge < 0.0) throw std::invalid_argument("cholesky: ridge must be non-negative");
    if (frobenius_norm(g - transpose(g)) > 1e-8 * frobenius_norm(g)) {
        throw NumericalError("cholesky: matrix is not symmetric");
    }

    double mean_diag = 0.0;
    double max_diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        mean_diag += g(i, i);
        max_diag = std::max(max_diag, g(i, i));
    }
    mean_diag /= static_cast<double>(d);
    const double shift = ridge * mean_diag;
    // Pivots this small relative to the diagonal scale make S^{-1} meaningless.
    const double pivot_floor = static_cast<double>(d) * kEps * (max_diag + shift);

    Matrix s(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double pivot = g(j, j) + shift;
        for (std::size_t k = 0; k < j; ++k) pivot -= s(k, j) * s(k, j);
        if (!(pivot > pivot_floor)) throw NotPositiveDefinite(j, pivot);
        const double sjj = std::sqrt(pivot);
        s(j, j) = sjj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double acc = 0.5 * (g(j, i) + g(i, j));
            for (std::size_t k = 0; k < j; ++k) acc -= s(k, j) * s(k, i);
            s(j, i) = acc / sjj;
        }
    }
    return s;
}

Matrix cholesky_lower(const Matrix& g, double ridge) { return transpose(cholesky_upper(g, ridge)); }

Matrix solve_upper(const Matrix& s, const Matrix& b) {
    const std::size_t d = s.rows();
    if (s.cols() != d || b.rows() != d) throw DimensionError("solve_upper: dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) {
        if (!(std::abs(s(i, i)) > kSingularDiagonal)) {
            throw NumericalError("solve_upper: singular diagonal at index " + std::to_string(i));
        }
    }
    Matrix x = b;
    for (std::size_t ii = d; ii-- > 0;) {
        auto xi = x.row(ii);
        for (std::size_t k = ii + 1; k < d; ++k) {
            const double f = s(ii, k);
            if (f == 0.0) continue;
            auto xk = x.row(k);
            for (std::size_t j = 0; j < x.cols(); ++j) xi[j] -= f * xk[j];
        }
        const double inv = 1.0 / s(ii, ii);
        for (auto& v : xi) v *= inv;
    }
    return x;
}

Matrix solve_lower(const Matrix& l, const Matrix& b) {
    const std::size_t d = l.rows();
    if (l.cols() != d || b.rows() != d) throw DimensionError("solve_lower: dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) {
        if (!(std::abs(l(i, i)) > kSingularDiagonal)) {
            throw NumericalError("solve_lower: singular diagonal at index " + std::to_string(i));
        }
    }
    Matrix x = b;
    for (std::size_t i = 0; i < d; ++i) {
        auto xi = x.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double f = l(i, k);
            if (f == 0.0) continue;
            auto xk = x.row(k);
            for (std::size_t j = 0; j < x.cols(); ++j) xi[j] -= f * xk[j];
        }
        const double inv = 1.0 / l(i, i);
        for (auto& v : xi) v *= inv;
    }
    return x;
}

void GramAccumulator::add(const Matrix& chunk) {
    if (chunk.cols() != dim()) {
        throw DimensionError("gram_accumulate: chunk width " + std::to_string(chunk.cols()) +
                             " does not match accumulator dimension " + std::to_string(dim()));
    }
    const Matrix update = matmul_tn(chunk, chunk);
    auto g = gram_.values();
    auto u = update.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += u[i];
    samples_ += chunk.rows();
}

void GramAccumulator::merge(const GramAccumulator& other) {
    if (other.dim() != dim()) throw DimensionError("gram merge: dimension mismatch");
    auto g = gram_.values();
    auto o = other.gram_.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o[i];
    samples_ += other.samples_;
}

}  // namespace drank
