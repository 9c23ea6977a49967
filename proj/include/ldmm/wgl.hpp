#pragma once

// Weighted graph Laplacian discretization of the patch-manifold update.
//
// Given the patch affinity matrix W over voxels, the translated matrix
//
//     Wt(x, y) = sum_i W(x - off_i, y - off_i)
//
// couples voxel values through every patch they share. With Lt = Dt - Wt and
// the voxels split into unsampled (1) and sampled (2) blocks, the stationarity
// condition of the weighted energy restricted to the unsampled values v is
//
//     (2 Lt_11 + (mu - 1) Delta) v = (mu + 1) Wt_12 b,
//
// Delta = diag(row sums of Wt_12), mu = |grid| / |sampled|.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldmm/error.hpp"
#include "ldmm/grid.hpp"
#include "ldmm/sparse.hpp"

namespace ldmm {

/// Sum of the d simultaneous row/column translations of `wbar`.
inline SparseWeights assemble_translated_weights(const SparseWeights& wbar, const PatchShape& shape,
                                                 const Dims& dims)
{
    const Translator t(dims, shape);
    if (wbar.rows() != dims.count() || wbar.cols() != dims.count())
        throw DimensionError("weight matrix is " + std::to_string(wbar.rows()) + "x" +
                             std::to_string(wbar.cols()) + ", grid has " + std::to_string(dims.count()) +
                             " voxels");
    const std::size_t d = t.d();
    const std::size_t n = dims.count();
    return SparseWeights::generate(n, n, [&](std::size_t x, std::vector<SparseEntry>& out) {
        // Dense scatter per row; each column is summed in first-seen order,
        // exactly as a stable merge of the raw entries would.
        thread_local std::vector<double> acc;
        thread_local std::vector<std::uint64_t> seen;
        thread_local std::uint64_t stamp = 0;
        if (acc.size() < n) {
            acc.assign(n, 0.0);
            seen.assign(n, 0);
        }
        ++stamp;
        std::vector<std::uint32_t> cols;
        for (std::size_t i = 0; i < d; ++i) {
            const std::size_t src = t.backward(x, i);
            for (const auto& e : wbar.row(src)) {
                const std::size_t y = t.forward(e.col, i);
                if (seen[y] != stamp) {
                    seen[y] = stamp;
                    acc[y] = e.value;
                    cols.push_back(static_cast<std::uint32_t>(y));
                } else {
                    acc[y] += e.value;
                }
            }
        }
        std::sort(cols.begin(), cols.end());
        out.reserve(cols.size());
        for (auto y : cols) out.push_back({y, acc[y]});
    });
}

/// Partitioned Euler-Lagrange system for one manifold update.
///
/// Lt_11 is held implicitly as diag(degree) - w11.
struct WGLSystem {
    std::vector<std::size_t> unsampled;  ///< block-1 row -> voxel ordinal
    std::vector<std::size_t> sampled;    ///< block-2 row -> voxel ordinal
    SparseWeights w11;                   ///< Wt restricted to unsampled x unsampled
    SparseWeights w12;                   ///< Wt restricted to unsampled x sampled
    std::vector<double> degree;          ///< full row sums of Wt on unsampled rows
    std::vector<double> delta;           ///< row sums of w12
    double mu = 1.0;

    /// Unsampled voxels with no graph path to any sampled voxel, grouped by
    /// connected component.
    std::vector<std::vector<std::size_t>> unconstrained;

    std::size_t size() const noexcept { return unsampled.size(); }

    /// out = (2 Lt_11 + (mu - 1) Delta) v
    void apply(std::span<const double> v, std::span<double> out) const
    {
        const double c = mu - 1.0;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(size()); ++ri) {
            const auto r = static_cast<std::size_t>(ri);
            double s = 0.0;
            for (const auto& e : w11.row(r)) s += e.value * v[e.col];
            out[r] = 2.0 * (degree[r] * v[r] - s) + c * delta[r] * v[r];
        }
    }

    std::vector<double> diagonal() const
    {
        std::vector<double> diag(size());
        for (std::size_t r = 0; r < size(); ++r)
            diag[r] = 2.0 * (degree[r] - w11.value(r, r)) + (mu - 1.0) * delta[r];
        return diag;
    }

    /// (mu + 1) Wt_12 b
    std::vector<double> rhs(std::span<const double> b) const
    {
        if (b.size() != sampled.size())
            throw DimensionError("expected " + std::to_string(sampled.size()) + " sampled values, got " +
                                 std::to_string(b.size()));
        std::vector<double> out(size());
        w12.multiply(b, out);
        for (auto& v : out) v *= (mu + 1.0);
        return out;
    }
};

namespace detail {

struct DisjointSets {
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }

    std::size_t find(std::size_t x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }

    std::vector<std::size_t> parent;
};

} // namespace detail

inline WGLSystem build_system(const SparseWeights& wtilde, const SampleMask& mask)
{
    const std::size_t n = mask.size();
    if (wtilde.rows() != n || wtilde.cols() != n)
        throw DimensionError("weight matrix size " + std::to_string(wtilde.rows()) + " does not match mask size " +
                             std::to_string(n));
    if (mask.count() == 0) throw InvalidArgument("mask has no sampled voxels");
    if (mask.count() == n) throw InvalidArgument("mask samples every voxel; nothing to solve for");

    WGLSystem sys;
    sys.mu = mask.mu();
    std::vector<std::uint32_t> pos(n);
    for (std::size_t x = 0; x < n; ++x) {
        auto& block = mask[x] ? sys.sampled : sys.unsampled;
        pos[x] = static_cast<std::uint32_t>(block.size());
        block.push_back(x);
    }

    const std::size_t nu = sys.unsampled.size();
    sys.degree.resize(nu);
    sys.delta.resize(nu);
    sys.w11 = SparseWeights::generate(nu, nu, [&](std::size_t r, std::vector<SparseEntry>& out) {
        for (const auto& e : wtilde.row(sys.unsampled[r]))
            if (!mask[e.col]) out.push_back({pos[e.col], e.value});
    });
    sys.w12 = SparseWeights::generate(nu, sys.sampled.size(), [&](std::size_t r, std::vector<SparseEntry>& out) {
        for (const auto& e : wtilde.row(sys.unsampled[r]))
            if (mask[e.col]) out.push_back({pos[e.col], e.value});
    });
    for (std::size_t r = 0; r < nu; ++r) {
        sys.degree[r] = wtilde.row_sum(sys.unsampled[r]);
        sys.delta[r] = sys.w12.row_sum(r);
    }

    // Components of the full graph that contain no sampled voxel leave A singular.
    detail::DisjointSets ds(n);
    for (std::size_t x = 0; x < n; ++x)
        for (const auto& e : wtilde.row(x)) ds.unite(x, e.col);
    std::vector<std::uint8_t> anchored(n, 0);
    for (std::size_t x : sys.sampled) anchored[ds.find(x)] = 1;
    std::vector<std::int64_t> group(n, -1);
    for (std::size_t x : sys.unsampled) {
        const std::size_t root = ds.find(x);
        if (anchored[root]) continue;
        if (group[root] < 0) {
            group[root] = static_cast<std::int64_t>(sys.unconstrained.size());
            sys.unconstrained.emplace_back();
        }
        sys.unconstrained[static_cast<std::size_t>(group[root])].push_back(x);
    }
    return sys;
}

struct SolveOptions {
    double tol = 1e-6;           ///< relative residual |r| / |rhs|
    std::size_t max_iters = 2000;
    bool ridge_fallback = false; ///< regularize unconstrained components instead of failing
};

struct SolveResult {
    std::vector<double> v;
    std::size_t iterations = 0;
    double residual = 0.0; ///< final relative residual
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace detail

/// Jacobi-preconditioned conjugate gradients on the partitioned system.
///
/// `initial` (unsampled values, block order) seeds the iteration; when its
/// residual already meets the tolerance it is returned unchanged.
inline SolveResult solve_system(const WGLSystem& sys, std::span<const double> b, const SolveOptions& opts = {},
                                std::optional<std::span<const double>> initial = std::nullopt)
{
    if (!(opts.tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
    const std::size_t n = sys.size();
    const std::vector<double> rhs = sys.rhs(b);

    std::vector<double> diag = sys.diagonal();
    double ridge = 0.0;
    if (!sys.unconstrained.empty()) {
        if (!opts.ridge_fallback) {
            const auto& comp = sys.unconstrained.front();
            throw SingularSystemError(std::to_string(sys.unconstrained.size()) +
                                      " unsampled component(s) have no path to a sampled voxel; first has " +
                                      std::to_string(comp.size()) + " voxel(s) starting at ordinal " +
                                      std::to_string(comp.front()));
        }
        const double trace = std::accumulate(diag.begin(), diag.end(), 0.0);
        ridge = 1e-8 * (trace > 0.0 ? trace / static_cast<double>(n) : 1.0);
        for (auto& d : diag) d += ridge;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!(diag[i] > 0.0)) throw SingularSystemError("zero diagonal at unsampled ordinal " +
                                                        std::to_string(sys.unsampled[i]));

    auto apply = [&](std::span<const double> x, std::span<double> y) {
        sys.apply(x, y);
        if (ridge != 0.0)
            for (std::size_t i = 0; i < n; ++i) y[i] += ridge * x[i];
    };

    SolveResult res;
    res.v.assign(n, 0.0);
    if (initial) {
        if (initial->size() != n) throw DimensionError("initial guess has wrong length");
        std::copy(initial->begin(), initial->end(), res.v.begin());
    }

    std::vector<double> r(n), z(n), p(n), ap(n);
    auto true_residual = [&] {
        apply(res.v, ap);
        for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
        return std::sqrt(detail::dot(r, r));
    };

    double rnorm = true_residual();
    const double rhs_norm = std::sqrt(detail::dot(rhs, rhs));
    const double ref = rhs_norm > 0.0 ? rhs_norm : rnorm;
    if (ref == 0.0 || rnorm <= opts.tol * ref) {
        res.residual = ref == 0.0 ? 0.0 : rnorm / ref;
        return res;
    }

    auto precondition = [&] {
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    };
    precondition();
    p = z;
    double rz = detail::dot(r, z);

    while (res.iterations < opts.max_iters) {
        apply(p, ap);
        const double pap = detail::dot(p, ap);
        if (!(pap > 0.0)) break;
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            res.v[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        ++res.iterations;
        rnorm = std::sqrt(detail::dot(r, r));
        if (rnorm <= opts.tol * ref) {
            // Confirm against the true residual; restart if the recurrence drifted.
            rnorm = true_residual();
            if (rnorm <= opts.tol * ref) break;
            precondition();
            p = z;
            rz = detail::dot(r, z);
            continue;
        }
        precondition();
        const double rz_next = detail::dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    res.residual = rnorm / ref;
    if (!(res.residual <= opts.tol))
        throw ConvergenceError("conjugate gradients stopped after " + std::to_string(res.iterations) +
                                   " iterations at relative residual " + std::to_string(res.residual),
                               res.residual);
    return res;
}

/// Largest |left side of the Euler-Lagrange equation| over unsampled voxels.
inline double el_residual(const SparseWeights& wtilde, const SampleMask& mask, const DataCube& f, double mu)
{
    if (wtilde.rows() != f.size() || !(mask.dims() == f.dims()))
        throw DimensionError("weights, mask and field disagree in size");
    double worst = 0.0;
    for (std::size_t x = 0; x < f.size(); ++x) {
        if (mask[x]) continue;
        double all = 0.0, on_samples = 0.0;
        for (const auto& e : wtilde.row(x)) {
            const double t = e.value * (f[x] - f[e.col]);
            all += t;
            if (mask[e.col]) on_samples += t;
        }
        worst = std::max(worst, std::abs(2.0 * all + (mu - 1.0) * on_samples));
    }
    return worst;
}

/// mu * sum_{p in S} sum_q w(p,q)(u(p)-u(q))^2 + sum_{p not in S} sum_q w(p,q)(u(p)-u(q))^2
inline double wgl_energy(const SparseWeights& w, std::span<const std::uint8_t> in_s, std::span<const double> u,
                         double mu)
{
    if (w.rows() != u.size() || in_s.size() != u.size())
        throw DimensionError("weights, sample flags and values disagree in size");
    double sampled = 0.0, rest = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        double s = 0.0;
        for (const auto& e : w.row(p)) {
            const double diff = u[p] - u[e.col];
            s += e.value * diff * diff;
        }
        (in_s[p] ? sampled : rest) += s;
    }
    return mu * sampled + rest;
}

inline double wgl_energy(const SparseWeights& w, const SampleMask& mask, const DataCube& u, double mu)
{
    return wgl_energy(w, mask.flags(), u.values(), mu);
}

/// Writes the solved unsampled values and b back into a full field.
inline DataCube scatter(const WGLSystem& sys, const Dims& dims, std::span<const double> v, std::span<const double> b)
{
    if (v.size() != sys.unsampled.size() || b.size() != sys.sampled.size())
        throw DimensionError("block vectors do not match the system");
    DataCube f(dims);
    for (std::size_t r = 0; r < v.size(); ++r) f[sys.unsampled[r]] = v[r];
    for (std::size_t s = 0; s < b.size(); ++s) f[sys.sampled[s]] = b[s];
    return f;
}

} // namespace ldmm
