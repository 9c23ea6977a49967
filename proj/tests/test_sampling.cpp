#include <cmath>

#include <gtest/gtest.h>

#include "ldmm/sampling.hpp"

using namespace ldmm;

TEST(RandomMask, FullRate)
{
    const auto m = random_mask(Dims{6, 7}, 1.0, 42);
    EXPECT_EQ(m.count(), 42u);
}

TEST(RandomMask, ExactCount)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(random_mask(Dims{10, 10}, 0.1, seed).count(), 10u);
    EXPECT_EQ(random_mask(Dims{64, 64}, 0.05, 3).count(), 205u); // round(204.8)
    EXPECT_EQ(random_mask(Dims{16, 16, 8}, 0.1, 3).count(), 205u);
}

TEST(RandomMask, Deterministic)
{
    EXPECT_EQ(random_mask(Dims{32, 32}, 0.1, 9), random_mask(Dims{32, 32}, 0.1, 9));
    EXPECT_FALSE(random_mask(Dims{32, 32}, 0.1, 9) == random_mask(Dims{32, 32}, 0.1, 10));
}

TEST(RandomMask, RejectsBadRate)
{
    EXPECT_THROW(random_mask(Dims{4, 4}, 0.0, 1), InvalidArgument);
    EXPECT_THROW(random_mask(Dims{4, 4}, -0.5, 1), InvalidArgument);
    EXPECT_THROW(random_mask(Dims{4, 4}, 1.5, 1), InvalidArgument);
    EXPECT_THROW(random_mask(Dims{4, 4}, 0.01, 1), InvalidArgument); // rate * N < 1
    EXPECT_THROW(random_mask(Dims{4, 4}, std::nan(""), 1), InvalidArgument);
}

TEST(RandomMask, RoughlyUniform)
{
    // Each of 100 voxels is picked with probability 0.2; over 2000 seeds the
    // per-voxel frequency stays within 5 standard deviations.
    std::vector<int> hits(100, 0);
    const int trials = 2000;
    for (int s = 0; s < trials; ++s) {
        const auto m = random_mask(Dims{10, 10}, 0.2, static_cast<std::uint64_t>(s));
        for (std::size_t x = 0; x < 100; ++x) hits[x] += m[x];
    }
    const double mean = 0.2 * trials, sd = std::sqrt(trials * 0.2 * 0.8);
    for (int h : hits) EXPECT_LT(std::abs(h - mean), 5.0 * sd);
}

TEST(RegularMask, UnitStridesSampleEverything)
{
    const auto m = regular_mask(Dims{5, 3, 2}, {1, 1, 1});
    EXPECT_EQ(m.count(), 30u);
}

TEST(RegularMask, AnchorLattice)
{
    const auto m = regular_mask(Dims{8, 8}, {4, 4});
    EXPECT_EQ(m.count(), 4u);
    EXPECT_EQ(m.sampled(), (std::vector<std::size_t>{0, 4, 32, 36}));

    const auto m3 = regular_mask(Dims{8, 8, 8}, {2, 2, 2});
    EXPECT_EQ(m3.count(), 64u);
    EXPECT_DOUBLE_EQ(m3.mu(), 8.0);
}

TEST(RegularMask, CountIsProductOfCeilings)
{
    for (std::size_t a = 1; a <= 9; ++a)
        for (std::size_t b = 1; b <= 9; ++b)
            for (std::size_t sa = 1; sa <= a; ++sa)
                for (std::size_t sb = 1; sb <= b; ++sb) {
                    const auto m = regular_mask(Dims{a, b}, {sa, sb});
                    ASSERT_EQ(m.count(), ((a + sa - 1) / sa) * ((b + sb - 1) / sb));
                }
}

TEST(RegularMask, RejectsBadStrides)
{
    EXPECT_THROW(regular_mask(Dims{8, 8}, {0, 2}), InvalidArgument);
    EXPECT_THROW(regular_mask(Dims{8, 8}, {9, 2}), InvalidArgument);
    EXPECT_THROW(regular_mask(Dims{8, 8}, {2, 2, 2}), DimensionError);
}

TEST(Decimate, KeepsAnchors)
{
    std::vector<double> v(35);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    const DataCube f(Dims{5, 7}, v);
    const std::vector<std::size_t> strides{2, 3};
    const DataCube low = decimate(f, strides);
    EXPECT_EQ(low.dims(), (Dims{3, 3}));
    EXPECT_EQ(std::vector<double>(low.values().begin(), low.values().end()),
              (std::vector<double>{0, 3, 6, 14, 17, 20, 28, 31, 34}));
}
