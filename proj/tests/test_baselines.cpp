#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ldmm/baselines.hpp"
#include "ldmm/metrics.hpp"
#include "ldmm/sampling.hpp"
#include "oracles.hpp"

using namespace ldmm;

namespace {

double sum_sq(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double max_abs_diff(const DataCube& a, const DataCube& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

DataCube from_function(const Dims& dims, auto&& fn)
{
    DataCube f(dims);
    for (std::size_t x = 0; x < f.size(); ++x) f[x] = fn(lex_decode(x, dims));
    return f;
}

} // namespace

TEST(Dct, ConstantHasOnlyDc)
{
    const DataCube c = dct_forward(DataCube(Dims{6, 5}, 2.0));
    EXPECT_NEAR(c[0], 2.0 * std::sqrt(30.0), 1e-12);
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_NEAR(c[i], 0.0, 1e-12);
}

TEST(Dct, RoundTripAndParseval)
{
    std::mt19937_64 rng(1);
    for (const Dims& dims : {Dims{8, 8}, Dims{7, 11}, Dims{5, 4, 3}}) {
        const DataCube f = oracle::random_cube(dims, rng);
        const DataCube c = dct_forward(f);
        EXPECT_LE(max_abs_diff(dct_inverse(c), f), 1e-12);
        EXPECT_NEAR(sum_sq(c.values()), sum_sq(f.values()), 1e-10);
    }
}

TEST(Dft, RoundTripAndParseval)
{
    std::mt19937_64 rng(2);
    for (const Dims& dims : {Dims{8, 8}, Dims{7, 6}, Dims{3, 5, 4}}) {
        const DataCube f = oracle::random_cube(dims, rng);
        const auto c = dft_forward(f);
        EXPECT_LE(max_abs_diff(dft_inverse(c, dims), f), 1e-12);
        double e = 0.0;
        for (const auto& z : c) e += std::norm(z);
        EXPECT_NEAR(e, sum_sq(f.values()), 1e-10);
    }
    EXPECT_THROW(dft_inverse(std::vector<std::complex<double>>(5), Dims{2, 2}), DimensionError);
}

TEST(SpectralInterpolate, ConstantIsExact)
{
    const Dims dims{13, 10};
    const std::vector<std::size_t> s{4, 3};
    const DataCube low(decimated_dims(dims, s), 0.3);
    for (Transform tr : {Transform::dct, Transform::dft})
        EXPECT_EQ(spectral_interpolate(low, dims, s, tr), DataCube(dims, 0.3));
}

TEST(SpectralInterpolate, BandLimitedDctCosines)
{
    const Dims dims{16, 12};
    const std::vector<std::size_t> s{4, 4};
    const std::size_t n0 = 4, n1 = 3;
    for (std::size_t u = 0; u < n0; ++u)
        for (std::size_t v = 0; v < n1; ++v) {
            auto fn = [&](const VoxelIndex& c) {
                const double t0 = static_cast<double>(c[0]) / 4.0, t1 = static_cast<double>(c[1]) / 4.0;
                return std::cos(std::numbers::pi * u * (2.0 * t0 + 1.0) / (2.0 * n0)) *
                       std::cos(std::numbers::pi * v * (2.0 * t1 + 1.0) / (2.0 * n1));
            };
            const DataCube f = from_function(dims, fn);
            const DataCube got = spectral_interpolate(decimate(f, s), dims, s, Transform::dct);
            EXPECT_LE(max_abs_diff(got, f), 1e-10) << u << "," << v;
        }
}

TEST(SpectralInterpolate, BandLimitedDftCosines)
{
    const Dims dims{20, 15};
    const std::vector<std::size_t> s{4, 3};
    const std::size_t n0 = 5, n1 = 5;
    for (std::size_t k0 = 0; 2 * k0 < n0; ++k0)
        for (std::size_t k1 = 0; 2 * k1 < n1; ++k1) {
            auto fn = [&](const VoxelIndex& c) {
                return std::cos(2.0 * std::numbers::pi * k0 * static_cast<double>(c[0]) / (4.0 * n0) + 0.3) *
                       std::cos(2.0 * std::numbers::pi * k1 * static_cast<double>(c[1]) / (3.0 * n1));
            };
            const DataCube f = from_function(dims, fn);
            const DataCube got = spectral_interpolate(decimate(f, s), dims, s, Transform::dft);
            EXPECT_LE(max_abs_diff(got, f), 1e-10) << k0 << "," << k1;
        }
}

TEST(SpectralInterpolate, RejectsWrongCoarseDims)
{
    const std::vector<std::size_t> s{2, 2};
    EXPECT_THROW(spectral_interpolate(DataCube(Dims{3, 3}), Dims{8, 8}, s, Transform::dct), DimensionError);
    EXPECT_THROW(spline_interpolate(DataCube(Dims{4, 4}), Dims{8, 8}, std::vector<std::size_t>{2}), DimensionError);
}

TEST(SplineInterpolate, LinearRampIsExact)
{
    for (const Dims& dims : {Dims{17, 13}, Dims{16, 16}, Dims{9, 8, 6}}) {
        auto fn = [](const VoxelIndex& c) {
            double v = 0.5;
            for (std::size_t a = 0; a < c.size(); ++a) v += (0.3 + 0.2 * a) * static_cast<double>(c[a]);
            return v;
        };
        const DataCube f = from_function(dims, fn);
        std::vector<std::size_t> s(dims.rank(), 4);
        if (dims.rank() == 3) s[2] = 2;
        const DataCube got = spline_interpolate(decimate(f, s), dims, s);
        EXPECT_LE(max_abs_diff(got, f), 1e-10 * (f.max() - f.min())) << dims.str();
    }
}

TEST(SplineInterpolate, AnchorsAreSamples)
{
    std::mt19937_64 rng(3);
    const Dims dims{21, 18};
    const std::vector<std::size_t> s{4, 4};
    const DataCube f = oracle::random_cube(dims, rng);
    const SampleMask m = regular_mask(dims, s);
    EXPECT_EQ(restrict(spline_interpolate(decimate(f, s), dims, s), m), restrict(f, m));
    for (Transform tr : {Transform::dct, Transform::dft})
        EXPECT_EQ(restrict(spectral_interpolate(decimate(f, s), dims, s, tr), m), restrict(f, m));
}

TEST(SplineInterpolate, MatchesThomasOracle)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t h : {2u, 3u, 4u}) {
        std::vector<double> y(8);
        for (auto& v : y) v = u(rng);
        y[1] = 1.0;
        const std::size_t fine = (y.size() - 1) * h + 1;
        const Dims dims{1, fine};
        const std::vector<std::size_t> s{1, h};
        const DataCube got = spline_interpolate(DataCube(Dims{1, y.size()}, y), dims, s);
        const auto ref = oracle::natural_spline_1d(y, h);
        for (std::size_t i = 0; i < fine; ++i) EXPECT_NEAR(got[i], ref[i], 1e-12) << "h=" << h << " i=" << i;
    }
}

TEST(SplineInterpolate, ExtrapolatesLinearlyPastLastKnot)
{
    // Knots at 0, 4, 8; positions 9..10 continue the end tangent.
    const std::vector<double> y{0.0, 1.0, 0.0};
    const DataCube got = spline_interpolate(DataCube(Dims{1, 3}, y), Dims{1, 11}, std::vector<std::size_t>{1, 4});
    const double slope = got[8] - got[7];
    EXPECT_NEAR(got[9] - got[8], got[10] - got[9], 1e-12);
    EXPECT_LT(got[9], got[8]);
    EXPECT_NEAR(got[9] - got[8], slope, 0.1);
}

TEST(SplineInterpolate, NeedsTwoSamples)
{
    EXPECT_THROW(spline_interpolate(DataCube(Dims{1, 4}), Dims{3, 4}, std::vector<std::size_t>{3, 1}),
                 InvalidArgument);
}

TEST(TransformCompress, FullRateIsExact)
{
    std::mt19937_64 rng(5);
    const DataCube f = oracle::random_cube(Dims{12, 10}, rng, 2.0, 5.0);
    for (Transform tr : {Transform::dct, Transform::dft}) {
        const auto c = transform_compress(f, tr, 1.0);
        EXPECT_LE(max_abs_diff(c.reconstruction, f), 1e-10 * (f.max() - f.min()));
        EXPECT_EQ(c.stored_values, 120u);
    }
}

TEST(TransformCompress, ConstantKeepsOneValue)
{
    const DataCube f(Dims{16, 16}, 1.5);
    for (Transform tr : {Transform::dct, Transform::dft}) {
        const auto c = transform_compress(f, tr, 0.02);
        EXPECT_LE(max_abs_diff(c.reconstruction, f), 1e-13);
    }
}

TEST(TransformCompress, DctErrorIsDroppedEnergy)
{
    std::mt19937_64 rng(6);
    const DataCube f = oracle::random_cube(Dims{16, 12}, rng);
    const DataCube coef = dct_forward(f);
    std::vector<double> mags(coef.values().begin(), coef.values().end());
    for (auto& v : mags) v = v * v;
    std::sort(mags.begin(), mags.end(), std::greater<>());
    const auto c = transform_compress(f, Transform::dct, 0.1);
    const std::size_t kept = budget_values(0.1, f.size());
    EXPECT_EQ(c.stored_values, kept);
    double dropped = 0.0;
    for (std::size_t i = kept; i < mags.size(); ++i) dropped += mags[i];
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) err += std::pow(f[i] - c.reconstruction[i], 2);
    EXPECT_NEAR(err, dropped, 1e-10);
}

TEST(TransformCompress, DftRespectsBudget)
{
    std::mt19937_64 rng(7);
    const DataCube f = oracle::random_cube(Dims{10, 9}, rng);
    for (double rate : {0.02, 0.05, 0.1, 0.3, 0.7}) {
        const auto c = transform_compress(f, Transform::dft, rate);
        EXPECT_LE(c.stored_values, budget_values(rate, f.size()));
        EXPECT_GE(c.stored_values + 1, budget_values(rate, f.size()));
    }
}

TEST(TransformCompress, ErrorNonincreasingAlongLadder)
{
    std::mt19937_64 rng(8);
    for (Transform tr : {Transform::dct, Transform::dft}) {
        const DataCube f = oracle::random_cube(Dims{20, 18}, rng);
        double prev = INFINITY;
        for (double rate : {0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
            const double l2 = error_norms(f, transform_compress(f, tr, rate).reconstruction).l2;
            EXPECT_LE(l2, prev + 1e-12);
            prev = l2;
        }
    }
}

TEST(TransformCompress, RejectsBadRate)
{
    const DataCube f(Dims{4, 4});
    EXPECT_THROW(transform_compress(f, Transform::dct, 0.0), InvalidArgument);
    EXPECT_THROW(transform_compress(f, Transform::dct, 1.2), InvalidArgument);
    EXPECT_THROW(transform_compress(f, Transform::dft, 0.01), InvalidArgument);
}

TEST(Svd, RankOneIsExact)
{
    const Dims dims{9, 7};
    const DataCube f = from_function(dims, [](const VoxelIndex& c) {
        return (1.0 + static_cast<double>(c[0])) * std::sin(0.4 * static_cast<double>(c[1]) + 0.2);
    });
    EXPECT_LE(max_abs_diff(svd_truncate(f, 1), f), 1e-12);
}

TEST(Svd, IdentityTruncation)
{
    DataCube eye(Dims{16, 16}, 0.0);
    for (std::size_t i = 0; i < 16; ++i) eye[i * 16 + i] = 1.0;
    const DataCube r = svd_truncate(eye, 8);
    double err = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) err += std::pow(r[i] - eye[i], 2);
    EXPECT_NEAR(err, 8.0, 1e-10);
}

TEST(Svd, BudgetAccounting)
{
    std::mt19937_64 rng(9);
    const DataCube f = oracle::random_cube(Dims{20, 10}, rng);
    EXPECT_EQ(svd_rank_for_budget(20, 10, 62), 2u);
    const auto c = svd_compress(f, std::size_t{62});
    EXPECT_EQ(c.stored_values, 62u);
    const auto full = svd_compress(f, 1.0);
    EXPECT_EQ(full.reconstruction, f);
    EXPECT_THROW(svd_compress(f, std::size_t{30}), InvalidArgument);
    EXPECT_THROW(svd_compress(DataCube(Dims{4, 4, 4}), 0.5), DimensionError);

    double prev = INFINITY;
    for (double rate : {0.2, 0.5, 0.9, 1.0}) {
        const double l2 = error_norms(f, svd_compress(f, rate).reconstruction).l2;
        EXPECT_LE(l2, prev + 1e-12);
        prev = l2;
    }
}
