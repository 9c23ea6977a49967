#pragma once

// Transform-domain interpolation and budgeted compression baselines:
// orthonormal DCT, unitary DFT, separable natural cubic splines and truncated
// SVD.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ldmm/error.hpp"
#include "ldmm/grid.hpp"
#include "ldmm/sampling.hpp"

namespace ldmm {

namespace detail {

inline std::size_t axis_stride(const std::array<std::size_t, 3>& n, std::size_t axis)
{
    return axis == 0 ? n[1] * n[2] : (axis == 1 ? n[2] : 1);
}

/// Calls fn(first_ordinal, stride) for every line of the grid along `axis`.
template <class Fn>
void for_each_line(const std::array<std::size_t, 3>& n, std::size_t axis, Fn&& fn)
{
    const std::size_t stride = axis_stride(n, axis);
    const std::size_t total = n[0] * n[1] * n[2];
    for (std::size_t x = 0; x < total; ++x)
        if ((x / stride) % n[axis] == 0) fn(x, stride);
}

/// Orthonormal DCT-II matrix, rows = frequencies.
inline Eigen::MatrixXd dct_matrix(std::size_t n)
{
    Eigen::MatrixXd c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t u = 0; u < n; ++u) {
        const double alpha = std::sqrt((u == 0 ? 1.0 : 2.0) / static_cast<double>(n));
        for (std::size_t j = 0; j < n; ++j)
            c(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)) =
                alpha * std::cos(std::numbers::pi * static_cast<double>(u) * (2.0 * static_cast<double>(j) + 1.0) /
                                 (2.0 * static_cast<double>(n)));
    }
    return c;
}

/// Applies a real linear map (rows x n[axis]) to every line along `axis`.
inline std::vector<double> apply_real(std::span<const double> in, const std::array<std::size_t, 3>& n,
                                      std::size_t axis, const Eigen::MatrixXd& m, std::array<std::size_t, 3>& out_n)
{
    out_n = n;
    out_n[axis] = static_cast<std::size_t>(m.rows());
    std::vector<double> out(out_n[0] * out_n[1] * out_n[2]);
    const std::size_t in_stride = axis_stride(n, axis);
    const std::size_t out_stride = axis_stride(out_n, axis);
    Eigen::VectorXd line(static_cast<Eigen::Index>(n[axis]));
    for_each_line(n, axis, [&](std::size_t first, std::size_t) {
        for (std::size_t j = 0; j < n[axis]; ++j) line[static_cast<Eigen::Index>(j)] = in[first + j * in_stride];
        const Eigen::VectorXd r = m * line;
        // Map the first ordinal of the input line to the output grid.
        const std::size_t i = first / (n[1] * n[2]);
        const std::size_t jj = (first / n[2]) % n[1];
        const std::size_t k = first % n[2];
        const std::size_t o = (i * out_n[1] + jj) * out_n[2] + k;
        for (std::size_t u = 0; u < out_n[axis]; ++u) out[o + u * out_stride] = r[static_cast<Eigen::Index>(u)];
    });
    return out;
}

inline std::vector<double> separable(std::span<const double> in, const Dims& dims, bool transpose)
{
    auto n = dims.padded();
    std::vector<double> cur(in.begin(), in.end());
    for (std::size_t a = 0; a < dims.rank(); ++a) {
        const Eigen::MatrixXd c = dct_matrix(n[a]);
        std::array<std::size_t, 3> out_n{};
        cur = apply_real(cur, n, a, transpose ? Eigen::MatrixXd(c.transpose()) : c, out_n);
        n = out_n;
    }
    return cur;
}

using cplx = std::complex<double>;

/// Unitary DFT along every axis (sign -1 forward, +1 inverse).
inline std::vector<cplx> dft_all(std::vector<cplx> data, const Dims& dims, int sign)
{
    const auto n = dims.padded();
    for (std::size_t a = 0; a < dims.rank(); ++a) {
        const std::size_t len = n[a];
        std::vector<cplx> tw(len);
        for (std::size_t t = 0; t < len; ++t)
            tw[t] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(len));
        const double scale = 1.0 / std::sqrt(static_cast<double>(len));
        std::vector<cplx> line(len), res(len);
        for_each_line(n, a, [&](std::size_t first, std::size_t stride) {
            for (std::size_t j = 0; j < len; ++j) line[j] = data[first + j * stride];
            for (std::size_t u = 0; u < len; ++u) {
                cplx s = 0.0;
                for (std::size_t j = 0; j < len; ++j) s += line[j] * tw[(u * j) % len];
                res[u] = s * scale;
            }
            for (std::size_t u = 0; u < len; ++u) data[first + u * stride] = res[u];
        });
    }
    return data;
}

} // namespace detail

/// Orthonormal separable DCT-II.
inline DataCube dct_forward(const DataCube& f)
{
    return DataCube(f.dims(), detail::separable(f.values(), f.dims(), false));
}

/// Orthonormal separable DCT-III (inverse of dct_forward).
inline DataCube dct_inverse(const DataCube& c)
{
    return DataCube(c.dims(), detail::separable(c.values(), c.dims(), true));
}

/// Unitary separable DFT of a real cube.
inline std::vector<std::complex<double>> dft_forward(const DataCube& f)
{
    std::vector<detail::cplx> data(f.values().begin(), f.values().end());
    return detail::dft_all(std::move(data), f.dims(), -1);
}

/// Real part of the inverse unitary DFT.
inline DataCube dft_inverse(std::vector<std::complex<double>> coef, const Dims& dims)
{
    if (coef.size() != dims.count()) throw DimensionError("coefficient count does not match dims");
    const auto data = detail::dft_all(std::move(coef), dims, +1);
    DataCube out(dims);
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real();
    return out;
}

enum class Transform { dct, dft };

namespace detail {

/// Rows: fine positions y; columns: coarse samples. Evaluates the coarse
/// spectral expansion at the continuous coarse coordinate t = y / stride, so
/// coarse sample j sits on fine voxel j * stride.
inline Eigen::MatrixXd spectral_upsampler(std::size_t coarse, std::size_t fine, std::size_t stride, Transform tr)
{
    const auto nc = static_cast<double>(coarse);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(fine), static_cast<Eigen::Index>(coarse));
    if (tr == Transform::dct) {
        const Eigen::MatrixXd c = dct_matrix(coarse);
        for (std::size_t y = 0; y < fine; ++y) {
            const double t = static_cast<double>(y) / static_cast<double>(stride);
            for (std::size_t j = 0; j < coarse; ++j) {
                double s = 0.0;
                for (std::size_t u = 0; u < coarse; ++u) {
                    const double alpha = std::sqrt((u == 0 ? 1.0 : 2.0) / nc);
                    s += alpha * std::cos(std::numbers::pi * static_cast<double>(u) * (2.0 * t + 1.0) / (2.0 * nc)) *
                         c(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j));
                }
                m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(j)) = s;
            }
        }
        return m;
    }
    // Real trigonometric interpolation; the Nyquist term (even length) uses a
    // cosine so the interpolant stays real.
    for (std::size_t y = 0; y < fine; ++y) {
        const double t = static_cast<double>(y) / static_cast<double>(stride);
        for (std::size_t j = 0; j < coarse; ++j) {
            const double dtj = t - static_cast<double>(j);
            double s = 1.0;
            for (std::size_t k = 1; 2 * k < coarse; ++k) s += 2.0 * std::cos(2.0 * std::numbers::pi * k * dtj / nc);
            if (coarse % 2 == 0) s += std::cos(std::numbers::pi * dtj);
            m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(j)) = s / nc;
        }
    }
    return m;
}

/// Applies a per-axis operator to lines of `low`, one axis at a time, with the
/// first coarse sample subtracted so constant inputs come back bit-exact.
template <class MakeOp>
DataCube upsample_separable(const DataCube& low, const Dims& dims, std::span<const std::size_t> strides,
                            MakeOp&& make_op)
{
    const double ref = low[0];
    std::vector<double> cur(low.values().begin(), low.values().end());
    for (auto& v : cur) v -= ref;
    auto n = low.dims().padded();
    const auto target = dims.padded();
    for (std::size_t a = 0; a < dims.rank(); ++a) {
        std::array<std::size_t, 3> out_n{};
        cur = apply_real(cur, n, a, make_op(a, n[a], target[a]), out_n);
        n = out_n;
    }
    for (auto& v : cur) v += ref;
    DataCube out(dims, std::move(cur));
    // Anchors carry the samples themselves.
    for (std::size_t y = 0; y < low.size(); ++y) {
        VoxelIndex c = lex_decode(y, low.dims());
        for (std::size_t a = 0; a < c.size(); ++a) c[a] *= strides[a];
        out[lex_encode(c, dims)] = low[y];
    }
    return out;
}

inline void check_decimated(const DataCube& low, const Dims& dims, std::span<const std::size_t> strides)
{
    if (strides.size() != dims.rank()) throw DimensionError("need one stride per axis");
    const Dims expect = decimated_dims(dims, strides);
    if (!(expect == low.dims()))
        throw DimensionError("decimated cube is " + low.dims().str() + ", expected " + expect.str() + " for grid " +
                             dims.str());
}

} // namespace detail

/// Spectral interpolation from the anchor lattice of a regular mask to the
/// full grid. The coarse cube is expanded in the DCT or DFT basis and the
/// expansion is evaluated at every fine voxel.
inline DataCube spectral_interpolate(const DataCube& low, const Dims& dims, std::span<const std::size_t> strides,
                                     Transform tr)
{
    detail::check_decimated(low, dims, strides);
    return detail::upsample_separable(low, dims, strides, [&](std::size_t a, std::size_t coarse, std::size_t fine) {
        return detail::spectral_upsampler(coarse, fine, strides[a], tr);
    });
}

namespace detail {

/// Natural cubic spline through (x_j = j * stride, y_j) evaluated at every
/// integer fine position, as a (fine x coarse) matrix. Linear beyond the last
/// knot, where the natural end condition makes the curvature vanish.
inline Eigen::MatrixXd spline_matrix(std::size_t coarse, std::size_t fine, std::size_t stride)
{
    if (coarse < 2) throw InvalidArgument("cubic spline needs at least 2 samples per axis");
    const auto nc = static_cast<Eigen::Index>(coarse);
    const double h = static_cast<double>(stride);

    // Second derivatives M = S y, with M_0 = M_{n-1} = 0 and interior rows of
    // h/6 M_{j-1} + 2h/3 M_j + h/6 M_{j+1} = (y_{j+1} - 2 y_j + y_{j-1}) / h.
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nc, nc);
    if (coarse > 2) {
        const Eigen::Index m = nc - 2;
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, nc);
        for (Eigen::Index j = 0; j < m; ++j) {
            t(j, j) = 2.0 * h / 3.0;
            if (j > 0) t(j, j - 1) = h / 6.0;
            if (j + 1 < m) t(j, j + 1) = h / 6.0;
            r(j, j) = 1.0 / h;
            r(j, j + 1) = -2.0 / h;
            r(j, j + 2) = 1.0 / h;
        }
        s.middleRows(1, m) = t.partialPivLu().solve(r);
    }

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fine), nc);
    for (std::size_t y = 0; y < fine; ++y) {
        const auto row = static_cast<Eigen::Index>(y);
        const double pos = static_cast<double>(y);
        auto seg = static_cast<Eigen::Index>(y / stride);
        if (seg >= nc - 1) {
            // Linear extrapolation with the end slope of the last segment.
            const Eigen::Index a = nc - 2, b = nc - 1;
            const double dx = pos - static_cast<double>(b) * h;
            // slope = (y_b - y_a)/h + h/6 (2 M_b + M_a), with M_b = 0
            out(row, b) += 1.0 + dx / h;
            out(row, a) += -dx / h;
            out.row(row) += dx * (h / 6.0) * (2.0 * s.row(b) + s.row(a));
            continue;
        }
        const double t = (pos - static_cast<double>(seg) * h) / h; // in [0, 1)
        // y = y_a + t (y_b - y_a) - h^2/6 t (1 - t) ((2 - t) M_a + (1 + t) M_b)
        out(row, seg) += 1.0 - t;
        out(row, seg + 1) += t;
        const double c = -h * h / 6.0 * t * (1.0 - t);
        out.row(row) += c * ((2.0 - t) * s.row(seg) + (1.0 + t) * s.row(seg + 1));
    }
    return out;
}

} // namespace detail

/// Separable natural cubic spline through the anchor lattice.
inline DataCube spline_interpolate(const DataCube& low, const Dims& dims, std::span<const std::size_t> strides)
{
    detail::check_decimated(low, dims, strides);
    return detail::upsample_separable(low, dims, strides, [&](std::size_t a, std::size_t coarse, std::size_t fine) {
        if (coarse == fine) return Eigen::MatrixXd(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(fine),
                                                                            static_cast<Eigen::Index>(fine)));
        return detail::spline_matrix(coarse, fine, strides[a]);
    });
}

/// Result of a budgeted compression.
struct Compressed {
    DataCube reconstruction;
    std::size_t stored_values = 0; ///< reals actually kept
};

/// Number of stored reals allowed by `rate` for a cube of `n` voxels.
inline std::size_t budget_values(double rate, std::size_t n)
{
    if (!(rate > 0.0 && rate <= 1.0)) throw InvalidArgument("budget rate must lie in (0, 1]");
    const auto b = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
    if (b < 1) throw InvalidArgument("budget allows no coefficient");
    return b;
}

/// Keeps the largest-magnitude transform coefficients that fit the budget
/// (ties broken by lower ordinal) and inverts.
///
/// DFT coefficients of a real cube come in conjugate pairs; a pair costs two
/// reals (one complex value), a self-conjugate coefficient costs one.
inline Compressed transform_compress(const DataCube& f, Transform tr, double rate)
{
    const std::size_t budget = budget_values(rate, f.size());
    Compressed out;
    if (tr == Transform::dct) {
        DataCube c = dct_forward(f);
        std::vector<std::size_t> order(c.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return std::abs(c[a]) > std::abs(c[b]); });
        const std::size_t keep = std::min(budget, c.size());
        DataCube kept(f.dims(), 0.0);
        for (std::size_t i = 0; i < keep; ++i) kept[order[i]] = c[order[i]];
        out.reconstruction = dct_inverse(kept);
        out.stored_values = keep;
        return out;
    }

    const auto coef = dft_forward(f);
    const Dims& dims = f.dims();
    auto partner = [&](std::size_t x) {
        VoxelIndex v = lex_decode(x, dims);
        for (std::size_t a = 0; a < v.size(); ++a) v[a] = (dims[a] - v[a]) % dims[a];
        return lex_encode(v, dims);
    };
    std::vector<std::size_t> reps;
    for (std::size_t x = 0; x < coef.size(); ++x)
        if (partner(x) >= x) reps.push_back(x);
    std::stable_sort(reps.begin(), reps.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(coef[a]) > std::abs(coef[b]); });
    std::vector<std::complex<double>> kept(coef.size(), 0.0);
    std::size_t used = 0;
    for (std::size_t x : reps) {
        const std::size_t p = partner(x);
        const std::size_t cost = p == x ? 1 : 2;
        if (used + cost > budget) break;
        used += cost;
        kept[x] = coef[x];
        kept[p] = coef[p];
    }
    out.reconstruction = dft_inverse(std::move(kept), dims);
    out.stored_values = used;
    return out;
}

/// Largest rank r with r (m + n + 1) <= budget.
inline std::size_t svd_rank_for_budget(std::size_t m, std::size_t n, std::size_t budget)
{
    return budget / (m + n + 1);
}

/// Rank-r truncated SVD reconstruction of a 2D cube.
inline DataCube svd_truncate(const DataCube& f, std::size_t rank)
{
    if (f.dims().rank() != 2) throw DimensionError("SVD baseline needs a 2D field");
    const auto m = static_cast<Eigen::Index>(f.dims()[0]);
    const auto n = static_cast<Eigen::Index>(f.dims()[1]);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
        f.values().data(), m, n);
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto r = std::min<Eigen::Index>(static_cast<Eigen::Index>(rank), std::min(m, n));
    const Eigen::MatrixXd approx = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                                   svd.matrixV().leftCols(r).transpose();
    DataCube out(f.dims());
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(i * n + j)] = approx(i, j);
    return out;
}

/// Truncated SVD under a budget of stored reals; a rank-r factorization costs
/// r (m + n + 1). A budget covering the whole matrix stores it as is.
inline Compressed svd_compress(const DataCube& f, std::size_t budget)
{
    if (f.dims().rank() != 2) throw DimensionError("SVD baseline needs a 2D field");
    const std::size_t m = f.dims()[0], n = f.dims()[1];
    if (budget >= m * n) return {f, m * n};
    const std::size_t r = svd_rank_for_budget(m, n, budget);
    if (r == 0)
        throw InvalidArgument("budget of " + std::to_string(budget) + " values is below rank-1 storage (" +
                              std::to_string(m + n + 1) + ")");
    return {svd_truncate(f, r), r * (m + n + 1)};
}

inline Compressed svd_compress(const DataCube& f, double rate)
{
    return svd_compress(f, budget_values(rate, f.size()));
}

} // namespace ldmm
