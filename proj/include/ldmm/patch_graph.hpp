#pragma once

// Patch cloud, exact kNN graph, self-tuning Gaussian affinities and a local
// PCA dimension diagnostic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ldmm/error.hpp"
#include "ldmm/grid.hpp"
#include "ldmm/kdtree.hpp"
#include "ldmm/sparse.hpp"

namespace ldmm {

/// One patch per voxel, stored row-major (count x dim).
struct PatchCloud {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<double> data;
    Dims source_dims;
    PatchShape shape;

    std::span<const double> point(std::size_t i) const { return {data.data() + i * dim, dim}; }

    /// Cloud from raw rows, with no grid attached.
    static PatchCloud from_points(std::vector<double> rows, std::size_t dim)
    {
        if (dim == 0 || rows.size() % dim != 0) throw InvalidArgument("point buffer is not whole rows");
        PatchCloud c;
        c.dim = dim;
        c.count = rows.size() / dim;
        c.data = std::move(rows);
        for (double v : c.data)
            if (!std::isfinite(v)) throw InvalidArgument("non-finite coordinate in point cloud");
        return c;
    }
};

/// All patches of `f` in ordinal order.
inline PatchCloud patch_cloud(const DataCube& f, const PatchShape& shape)
{
    const Translator t(f.dims(), shape);
    PatchCloud c;
    c.count = f.size();
    c.dim = t.d();
    c.source_dims = f.dims();
    c.shape = shape;
    c.data.resize(c.count * c.dim);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t xi = 0; xi < static_cast<std::ptrdiff_t>(c.count); ++xi) {
        const auto x = static_cast<std::size_t>(xi);
        double* row = c.data.data() + x * c.dim;
        for (std::size_t i = 0; i < c.dim; ++i) row[i] = f[t.forward(x, i)];
    }
    return c;
}

/// k nearest neighbours of every point, self excluded, sorted ascending.
struct NeighborList {
    std::size_t count = 0;
    std::size_t k = 0;
    std::vector<Neighbor> entries; // count x k

    std::span<const Neighbor> of(std::size_t p) const { return {entries.data() + p * k, k}; }
};

inline NeighborList knn(const PatchCloud& cloud, std::size_t k)
{
    if (k == 0) throw InvalidArgument("k must be positive");
    if (k >= cloud.count)
        throw InvalidArgument("k = " + std::to_string(k) + " needs more than " + std::to_string(cloud.count) +
                              " points");
    const KdTree tree(cloud.data, cloud.dim);
    NeighborList nl;
    nl.count = cloud.count;
    nl.k = k;
    nl.entries.resize(cloud.count * k);
#pragma omp parallel
    {
        std::vector<Neighbor> buf;
#pragma omp for schedule(dynamic, 256)
        for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(cloud.count); ++pi) {
            const auto p = static_cast<std::size_t>(pi);
            tree.query(cloud.point(p), k, p, buf);
            std::copy(buf.begin(), buf.end(), nl.entries.begin() + static_cast<std::ptrdiff_t>(p * k));
        }
    }
    return nl;
}

/// Bounding-box diagonal; an upper bound on the cloud diameter.
inline double cloud_extent(const PatchCloud& cloud)
{
    if (cloud.count == 0) return 0.0;
    double s = 0.0;
    for (std::size_t a = 0; a < cloud.dim; ++a) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t p = 0; p < cloud.count; ++p) {
            lo = std::min(lo, cloud.data[p * cloud.dim + a]);
            hi = std::max(hi, cloud.data[p * cloud.dim + a]);
        }
        s += (hi - lo) * (hi - lo);
    }
    return std::sqrt(s);
}

/// sigma(p) = distance to the r-th nearest neighbour (1-based, self excluded).
///
/// A zero distance (duplicates) falls back to the smallest positive neighbour
/// distance, then to 1e-12 * (extent + 1).
inline std::vector<double> normalizing_factors(const NeighborList& nbrs, std::size_t r, double cloud_extent)
{
    if (r == 0 || r > nbrs.k)
        throw InvalidArgument("sigma rank " + std::to_string(r) + " must lie in [1, k = " +
                              std::to_string(nbrs.k) + "]");
    const double global = 1e-12 * (cloud_extent + 1.0);
    std::vector<double> sigma(nbrs.count);
    for (std::size_t p = 0; p < nbrs.count; ++p) {
        const auto row = nbrs.of(p);
        double s = std::sqrt(row[r - 1].dist2);
        if (s == 0.0) {
            auto pos = std::find_if(row.begin(), row.end(), [](const Neighbor& n) { return n.dist2 > 0.0; });
            s = pos != row.end() ? std::sqrt(pos->dist2) : global;
        }
        sigma[p] = s;
    }
    return sigma;
}

inline std::vector<double> normalizing_factors(const NeighborList& nbrs, std::size_t r, const PatchCloud& cloud)
{
    return normalizing_factors(nbrs, r, cloud_extent(cloud));
}

/// w(p, q) = exp(-|p - q|^2 / (sigma(p) sigma(q))), never below the smallest
/// normal double so that truncated kNN edges stay in the support.
inline double gaussian_weight(double dist2, double sigma_p, double sigma_q)
{
    return std::max(std::exp(-dist2 / (sigma_p * sigma_q)), std::numeric_limits<double>::min());
}

/// Symmetric affinity matrix over the kNN graph, support = union of directed
/// kNN edges.
inline SparseWeights gaussian_weights(const PatchCloud& cloud, const NeighborList& nbrs,
                                      std::span<const double> sigma)
{
    if (nbrs.count != cloud.count || sigma.size() != cloud.count)
        throw DimensionError("neighbour list, sigma and cloud sizes differ");
    for (double s : sigma)
        if (!(s > 0.0)) throw InvalidArgument("normalizing factors must be positive");

    const std::size_t n = cloud.count;
    // Count in-edges to size the rows, then fill out- and in-edges.
    std::vector<std::size_t> deg(n, nbrs.k);
    for (const auto& e : nbrs.entries) ++deg[e.index];
    std::vector<std::vector<SparseEntry>> rows(n);
    for (std::size_t p = 0; p < n; ++p) rows[p].reserve(deg[p]);
    for (std::size_t p = 0; p < n; ++p) {
        for (const auto& q : nbrs.of(p)) {
            const double w = gaussian_weight(q.dist2, sigma[p], sigma[q.index]);
            rows[p].push_back({q.index, w});
            rows[q.index].push_back({static_cast<std::uint32_t>(p), w});
        }
    }
    // Both directions of a mutual edge carry the same value; keep one.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(n); ++pi) {
        auto& r = rows[static_cast<std::size_t>(pi)];
        std::sort(r.begin(), r.end(), [](const SparseEntry& a, const SparseEntry& b) { return a.col < b.col; });
        r.erase(std::unique(r.begin(), r.end(),
                            [](const SparseEntry& a, const SparseEntry& b) { return a.col == b.col; }),
                r.end());
    }
    return SparseWeights::from_rows(std::move(rows));
}

/// Affinity matrix of the patch cloud with the usual defaults (k = 20, r = 10).
inline SparseWeights patch_weights(const PatchCloud& cloud, std::size_t k = 20, std::size_t r = 10)
{
    const NeighborList nl = knn(cloud, k);
    const auto sigma = normalizing_factors(nl, r, cloud);
    return gaussian_weights(cloud, nl, sigma);
}

/// Number of principal components of the point and its k nearest neighbours
/// needed to reach `energy_threshold` of the total variance.
inline std::size_t local_dimension_estimate(const PatchCloud& cloud, std::size_t ordinal, std::size_t k,
                                            double energy_threshold)
{
    if (ordinal >= cloud.count) throw IndexError("point ordinal out of range");
    if (k == 0 || k >= cloud.count) throw InvalidArgument("need 0 < k < point count");
    if (!(energy_threshold > 0.0 && energy_threshold <= 1.0))
        throw InvalidArgument("energy threshold must lie in (0, 1]");

    // Brute force is fine for a single query.
    std::vector<Neighbor> all;
    all.reserve(cloud.count - 1);
    const auto q = cloud.point(ordinal);
    for (std::size_t p = 0; p < cloud.count; ++p) {
        if (p == ordinal) continue;
        const auto x = cloud.point(p);
        double d2 = 0.0;
        for (std::size_t a = 0; a < cloud.dim; ++a) d2 += (q[a] - x[a]) * (q[a] - x[a]);
        all.push_back({d2, static_cast<std::uint32_t>(p)});
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());

    Eigen::MatrixXd nb(k + 1, cloud.dim);
    nb.row(0) = Eigen::Map<const Eigen::RowVectorXd>(q.data(), static_cast<Eigen::Index>(cloud.dim));
    for (std::size_t i = 0; i < k; ++i) {
        const auto x = cloud.point(all[i].index);
        nb.row(static_cast<Eigen::Index>(i + 1)) =
            Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(cloud.dim));
    }
    const Eigen::RowVectorXd first = nb.row(0);
    if ((nb.rowwise() - first).cwiseAbs().maxCoeff() == 0.0) return 0;
    nb.rowwise() -= nb.colwise().mean();
    const Eigen::MatrixXd cov = nb.transpose() * nb;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).reverse();
    const double total = ev.sum();
    if (!(total > 0.0)) return 0;

    const double target = energy_threshold * total * (1.0 - 1e-12);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        acc += ev[i];
        if (acc >= target) return static_cast<std::size_t>(i + 1);
    }
    return static_cast<std::size_t>(ev.size());
}

} // namespace ldmm
