#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "ldmm/error.hpp"
#include "ldmm/grid.hpp"

namespace ldmm {

namespace detail {

// Unbiased draw in [0, bound) from a 64-bit engine. std::uniform_int_distribution
// is implementation-defined, which would make masks differ across toolchains.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound)
{
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

} // namespace detail

/// Exactly round(rate * |grid|) voxels, uniform without replacement.
inline SampleMask random_mask(const Dims& dims, double rate, std::uint64_t seed)
{
    if (!(rate > 0.0 && rate <= 1.0))
        throw InvalidArgument("sampling rate must lie in (0, 1], got " + std::to_string(rate));
    const std::size_t n = dims.count();
    if (rate * static_cast<double>(n) < 1.0)
        throw InvalidArgument("sampling rate selects fewer than one voxel");
    const auto want = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));

    // Partial Fisher-Yates over the ordinals.
    std::vector<std::size_t> ord(n);
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + detail::bounded(rng, n - i);
        std::swap(ord[i], ord[j]);
    }
    SampleMask mask(dims);
    for (std::size_t i = 0; i < want; ++i) mask.set(ord[i], true);
    return mask;
}

/// Voxel sampled iff every coordinate is a multiple of its stride.
inline SampleMask regular_mask(const Dims& dims, std::span<const std::size_t> strides)
{
    if (strides.size() != dims.rank())
        throw DimensionError("need one stride per axis (" + std::to_string(dims.rank()) + ")");
    for (std::size_t a = 0; a < strides.size(); ++a) {
        if (strides[a] == 0) throw InvalidArgument("stride must be positive");
        if (strides[a] > dims[a])
            throw InvalidArgument("stride " + std::to_string(strides[a]) + " exceeds extent " +
                                  std::to_string(dims[a]));
    }
    SampleMask mask(dims);
    for (std::size_t x = 0; x < dims.count(); ++x) {
        const VoxelIndex c = lex_decode(x, dims);
        bool on = true;
        for (std::size_t a = 0; a < c.size(); ++a) on = on && (c[a] % strides[a] == 0);
        if (on) mask.set(x, true);
    }
    return mask;
}

inline SampleMask regular_mask(const Dims& dims, std::initializer_list<std::size_t> strides)
{
    const std::vector<std::size_t> s(strides);
    return regular_mask(dims, std::span<const std::size_t>(s));
}

/// Extents of the decimated lattice kept by regular_mask.
inline Dims decimated_dims(const Dims& dims, std::span<const std::size_t> strides)
{
    if (strides.size() != dims.rank()) throw DimensionError("need one stride per axis");
    std::vector<std::size_t> out(dims.rank());
    for (std::size_t a = 0; a < out.size(); ++a) {
        if (strides[a] == 0) throw InvalidArgument("stride must be positive");
        out[a] = (dims[a] + strides[a] - 1) / strides[a];
    }
    return Dims(out);
}

/// Sub-lattice values kept by a regular mask, as a cube of decimated dims.
inline DataCube decimate(const DataCube& f, std::span<const std::size_t> strides)
{
    const Dims low = decimated_dims(f.dims(), strides);
    DataCube out(low);
    for (std::size_t y = 0; y < low.count(); ++y) {
        VoxelIndex c = lex_decode(y, low);
        for (std::size_t a = 0; a < c.size(); ++a) c[a] *= strides[a];
        out[y] = f.at(c);
    }
    return out;
}

} // namespace ldmm
