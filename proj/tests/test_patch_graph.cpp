#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "ldmm/patch_graph.hpp"
#include "oracles.hpp"

using namespace ldmm;

namespace {

PatchCloud line(std::vector<double> xs) { return PatchCloud::from_points(std::move(xs), 1); }

PatchCloud random_cloud(std::size_t n, std::size_t dim, std::mt19937_64& rng, bool integer_grid = false)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> g(0, 3);
    std::vector<double> pts(n * dim);
    for (auto& v : pts) v = integer_grid ? g(rng) : u(rng);
    return PatchCloud::from_points(std::move(pts), dim);
}

} // namespace

TEST(PatchCloud, OnePatchPerVoxel)
{
    std::mt19937_64 rng(4);
    const DataCube f = oracle::random_cube(Dims{5, 6}, rng);
    const PatchCloud c = patch_cloud(f, PatchShape{2, 3});
    ASSERT_EQ(c.count, 30u);
    ASSERT_EQ(c.dim, 6u);
    for (std::size_t x = 0; x < c.count; ++x) {
        const auto p = extract_patch(f, lex_decode(x, f.dims()), PatchShape{2, 3});
        const auto q = c.point(x);
        EXPECT_TRUE(std::equal(p.begin(), p.end(), q.begin()));
    }
    EXPECT_THROW(PatchCloud::from_points({1, 2, 3}, 2), InvalidArgument);
}

TEST(Knn, CollinearPoints)
{
    const auto nl = knn(line({0, 1, 3}), 2);
    ASSERT_EQ(nl.of(0).size(), 2u);
    EXPECT_EQ(nl.of(0)[0].index, 1u);
    EXPECT_EQ(nl.of(0)[1].index, 2u);
    EXPECT_DOUBLE_EQ(nl.of(0)[0].dist2, 1.0);
    EXPECT_DOUBLE_EQ(nl.of(0)[1].dist2, 9.0);
}

TEST(Knn, DuplicatesFindEachOther)
{
    const auto nl = knn(line({5, 2, 5, 9}), 1);
    EXPECT_EQ(nl.of(0)[0].index, 2u);
    EXPECT_EQ(nl.of(2)[0].index, 0u);
    EXPECT_EQ(nl.of(0)[0].dist2, 0.0);
}

TEST(Knn, TwoPoints)
{
    const auto nl = knn(line({0, 4}), 1);
    EXPECT_EQ(nl.of(0)[0].index, 1u);
    EXPECT_EQ(nl.of(1)[0].index, 0u);
}

TEST(Knn, RejectsBadK)
{
    EXPECT_THROW(knn(line({0, 1, 2}), 3), InvalidArgument);
    EXPECT_THROW(knn(line({0, 1, 2}), 0), InvalidArgument);
}

TEST(Knn, TiesBrokenByLowerOrdinal)
{
    // Point 2 is equidistant from 0, 1, 3 and 4.
    const auto nl = knn(line({-1, 1, 0, 1, -1}), 3);
    EXPECT_EQ(nl.of(2)[0].index, 0u);
    EXPECT_EQ(nl.of(2)[1].index, 1u);
    EXPECT_EQ(nl.of(2)[2].index, 3u);
}

TEST(Knn, MatchesBruteForce)
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t n = 40 + 30 * static_cast<std::size_t>(trial);
        const std::size_t dim = 1 + static_cast<std::size_t>(trial) * 3 % 17;
        const PatchCloud c = random_cloud(n, dim, rng, trial % 3 == 0);
        const std::size_t k = std::min<std::size_t>(20, n - 1);
        const auto nl = knn(c, k);
        for (std::size_t p = 0; p < n; ++p) {
            const auto ref = oracle::brute_knn(c.data, dim, p, k);
            const auto got = nl.of(p);
            ASSERT_TRUE(std::equal(ref.begin(), ref.end(), got.begin(), got.end())) << "trial " << trial << " point " << p;
        }
    }
}

TEST(KdTree, QueryByExternalPoint)
{
    const std::vector<double> pts{0, 0, 1, 0, 0, 1, 1, 1};
    const KdTree tree(pts, 2, 1);
    std::vector<Neighbor> out;
    const std::vector<double> q{0.9, 0.8};
    tree.query(q, 2, tree.size(), out);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].index, 3u);
    EXPECT_EQ(out[1].index, 1u);
}

TEST(NormalizingFactors, RankedDistance)
{
    const auto nl = knn(line({0, 1, 3}), 2);
    const auto sigma = normalizing_factors(nl, 2, 3.0);
    EXPECT_DOUBLE_EQ(sigma[0], 3.0);
    EXPECT_DOUBLE_EQ(sigma[1], 2.0);
    EXPECT_DOUBLE_EQ(sigma[2], 3.0);
}

TEST(NormalizingFactors, UnitLattice)
{
    std::vector<double> pts;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            pts.push_back(i);
            pts.push_back(j);
        }
    const PatchCloud c = PatchCloud::from_points(pts, 2);
    const auto sigma = normalizing_factors(knn(c, 4), 1, c);
    for (std::size_t p = 0; p < c.count; ++p) EXPECT_DOUBLE_EQ(sigma[p], 1.0);
}

TEST(NormalizingFactors, DuplicateFallbacks)
{
    // Point 0 has a duplicate; its second neighbour is 2 away.
    const auto nl = knn(line({0, 0, 2, 7}), 2);
    const auto sigma = normalizing_factors(nl, 1, 7.0);
    EXPECT_DOUBLE_EQ(sigma[0], 2.0);
    EXPECT_DOUBLE_EQ(sigma[1], 2.0);

    const PatchCloud same = line({4, 4, 4, 4});
    const auto nl2 = knn(same, 2);
    const auto s2 = normalizing_factors(nl2, 2, same);
    for (double s : s2) EXPECT_DOUBLE_EQ(s, 1e-12);
    const SparseWeights w = gaussian_weights(same, nl2, s2);
    for (std::size_t p = 0; p < 4; ++p)
        for (const auto& e : w.row(p)) EXPECT_EQ(e.value, 1.0);
}

TEST(NormalizingFactors, RejectsRankAboveK)
{
    const auto nl = knn(line({0, 1, 3, 4}), 2);
    EXPECT_THROW(normalizing_factors(nl, 3, 1.0), InvalidArgument);
    EXPECT_THROW(normalizing_factors(nl, 0, 1.0), InvalidArgument);
}

TEST(GaussianWeight, AnalyticValues)
{
    EXPECT_EQ(gaussian_weight(0.0, 0.3, 0.7), 1.0);
    EXPECT_NEAR(gaussian_weight(0.21, 0.3, 0.7), 0.36787944117144233, 1e-15);
    EXPECT_GT(gaussian_weight(1e6, 1e-3, 1e-3), 0.0);
}

TEST(GaussianWeights, StructuralInvariants)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 6; ++trial) {
        const PatchCloud c = random_cloud(120, 5, rng, trial % 2 == 1);
        const std::size_t k = 8;
        const auto nl = knn(c, k);
        const auto sigma = normalizing_factors(nl, 4, c);
        const SparseWeights w = gaussian_weights(c, nl, sigma);
        EXPECT_TRUE(w.is_symmetric());
        // Union support holds at most 2k entries per row on average; a hub
        // row carries its own k plus every point that lists it.
        EXPECT_LE(w.nnz(), 2 * k * c.count);
        std::vector<std::size_t> listed_by(c.count, 0);
        for (std::size_t p = 0; p < c.count; ++p)
            for (const auto& q : nl.of(p)) ++listed_by[q.index];
        for (std::size_t p = 0; p < c.count; ++p) {
            EXPECT_EQ(w.value(p, p), 0.0);
            EXPECT_GE(w.row(p).size(), k);
            EXPECT_LE(w.row(p).size(), k + listed_by[p]);
            for (const auto& e : w.row(p)) {
                EXPECT_GT(e.value, 0.0);
                EXPECT_LE(e.value, 1.0);
            }
            // Union support: every directed kNN edge is present.
            for (const auto& q : nl.of(p)) EXPECT_GT(w.value(p, q.index), 0.0);
        }
    }
}

TEST(GaussianWeights, MonotoneInDistanceForFixedSigma)
{
    double prev = 1.0;
    for (double d2 = 0.0; d2 < 10.0; d2 += 0.25) {
        const double w = gaussian_weight(d2, 0.8, 1.3);
        EXPECT_LE(w, prev);
        prev = w;
    }
}

TEST(GaussianWeights, PermutationEquivariance)
{
    std::mt19937_64 rng(77);
    const std::size_t n = 90, dim = 4;
    const PatchCloud c = random_cloud(n, dim, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> moved(n * dim);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t a = 0; a < dim; ++a) moved[perm[p] * dim + a] = c.data[p * dim + a];
    const PatchCloud pc = PatchCloud::from_points(moved, dim);

    const SparseWeights w = patch_weights(c, 10, 5);
    const SparseWeights pw = patch_weights(pc, 10, 5);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) ASSERT_EQ(w.value(p, q), pw.value(perm[p], perm[q]));
}

TEST(LocalDimension, PlaneInTenDimensions)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Eigen::MatrixXd basis = Eigen::MatrixXd::NullaryExpr(10, 2, [&] { return g(rng); });
    std::vector<double> pts;
    for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd p = basis * Eigen::Vector2d(g(rng), g(rng)) + Eigen::VectorXd::Constant(10, 3.0);
        pts.insert(pts.end(), p.data(), p.data() + 10);
    }
    const PatchCloud c = PatchCloud::from_points(pts, 10);
    EXPECT_EQ(local_dimension_estimate(c, 0, 30, 0.99), 2u);
}

TEST(LocalDimension, IdenticalNeighbourhood)
{
    const PatchCloud c = PatchCloud::from_points(std::vector<double>(3 * 20, 1.5), 3);
    EXPECT_EQ(local_dimension_estimate(c, 4, 10, 0.9), 0u);
}

TEST(LocalDimension, IsotropicGaussianIsFullRank)
{
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    const std::size_t d = 6;
    std::vector<double> pts(400 * d);
    for (auto& v : pts) v = g(rng);
    const PatchCloud c = PatchCloud::from_points(pts, d);
    EXPECT_EQ(local_dimension_estimate(c, 0, 300, 1.0), d);
}

TEST(LocalDimension, RejectsBadArguments)
{
    const PatchCloud c = line({0, 1, 2, 3});
    EXPECT_THROW(local_dimension_estimate(c, 4, 2, 0.9), IndexError);
    EXPECT_THROW(local_dimension_estimate(c, 0, 4, 0.9), InvalidArgument);
    EXPECT_THROW(local_dimension_estimate(c, 0, 2, 0.0), InvalidArgument);
}

TEST(LocalDimension, SmoothFieldPatchesAreLowDimensional)
{
    // Patches of a slowly varying two-tone ramp span few directions.
    std::vector<double> v(40 * 40);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 40; ++j)
            v[i * 40 + j] = std::sin(0.05 * static_cast<double>(i)) + 0.5 * std::cos(0.07 * static_cast<double>(j));
    const PatchCloud c = patch_cloud(DataCube(Dims{40, 40}, v), PatchShape{5, 5});
    EXPECT_LE(local_dimension_estimate(c, lex_encode(std::vector<std::size_t>{20, 20}, Dims{40, 40}), 20, 0.999), 4u);
}
