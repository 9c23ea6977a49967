#pragma once

// Deterministic synthetic fields covering the three local patch-manifold
// regimes (smooth, piecewise smooth with a shock, oscillatory texture) plus a
// blurred checkerboard lattice.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ldmm/grid.hpp"

namespace ldmm {

namespace detail {

/// Uniform double in [lo, hi) with 53 random bits; portable across toolchains.
inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0)
{
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Cosine basis function of the orthonormal DCT-II at integer frequency u.
inline double dct_mode(std::size_t u, std::size_t x, std::size_t n)
{
    return std::cos(std::numbers::pi * static_cast<double>(u) * (2.0 * static_cast<double>(x) + 1.0) /
                    (2.0 * static_cast<double>(n)));
}

/// Normalized coordinate of x along an axis of extent n, in [0, 1).
inline double unit(std::size_t x, std::size_t n) { return static_cast<double>(x) / static_cast<double>(n); }

} // namespace detail

struct SmoothConfig {
    std::size_t terms = 8;
    double amplitude = 1.0;   ///< overall scale; 0 gives the constant `offset`
    std::size_t cutoff = 4;   ///< largest DCT frequency index per axis
    double offset = 0.0;
};

/// Sum of `terms` separable DCT cosine modes with seeded frequencies <= cutoff
/// and seeded signed amplitudes. Band-limited by construction.
inline DataCube smooth_field(const Dims& dims, std::uint64_t seed, const SmoothConfig& cfg = {})
{
    std::mt19937_64 rng(detail::mix_seed(seed, 1));
    const auto n = dims.padded();
    const std::size_t rank = dims.rank();

    struct Mode {
        std::array<std::size_t, 3> u;
        double a;
    };
    std::vector<Mode> modes(cfg.terms);
    for (auto& m : modes) {
        m.u = {0, 0, 0};
        for (std::size_t a = 0; a < rank; ++a)
            m.u[a] = std::min<std::size_t>(static_cast<std::size_t>(detail::uniform(rng) * (cfg.cutoff + 1)),
                                           std::min(cfg.cutoff, n[a] - 1));
        // Lower frequencies get larger amplitudes.
        const double freq = static_cast<double>(m.u[0] + m.u[1] + m.u[2]);
        m.a = cfg.amplitude * detail::uniform(rng, -1.0, 1.0) / (1.0 + 0.5 * freq);
    }

    DataCube f(dims, cfg.offset);
    if (cfg.amplitude == 0.0) return f;
    for (std::size_t x = 0; x < f.size(); ++x) {
        const std::size_t k = x % n[2], j = (x / n[2]) % n[1], i = x / (n[1] * n[2]);
        double v = 0.0;
        for (const auto& m : modes)
            v += m.a * detail::dct_mode(m.u[0], i, n[0]) * detail::dct_mode(m.u[1], j, n[1]) *
                 detail::dct_mode(m.u[2], k, n[2]);
        f[x] = cfg.offset + v;
    }
    return f;
}

struct ShockConfig {
    SmoothConfig base{};
    double jump = 2.0;             ///< height of the discontinuity; 0 gives smooth_field
    double interface_wobble = 0.1; ///< amplitude of the interface curve, in domain units
};

/// Smooth base field plus a jump across a seeded smooth interface
/// x0 = c + wobble * sin(2 pi (k1 x1 + k2 x2) + phase), with a second smooth
/// modulation on the far side.
inline DataCube shock_field(const Dims& dims, std::uint64_t seed, const ShockConfig& cfg = {})
{
    DataCube f = smooth_field(dims, seed, cfg.base);
    if (cfg.jump == 0.0) return f;

    std::mt19937_64 rng(detail::mix_seed(seed, 2));
    const double centre = detail::uniform(rng, 0.35, 0.65);
    const double k1 = std::floor(detail::uniform(rng, 1.0, 3.0));
    const double k2 = std::floor(detail::uniform(rng, 0.0, 2.0));
    const double phase = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
    SmoothConfig far = cfg.base;
    far.offset = 0.0;
    far.amplitude = 1.0;
    const DataCube mod = smooth_field(dims, seed + 0x5bd1e995ULL, far);
    double mod_scale = 0.0;
    for (double v : mod.values()) mod_scale = std::max(mod_scale, std::abs(v));
    if (mod_scale == 0.0) mod_scale = 1.0;

    const auto n = dims.padded();
    for (std::size_t x = 0; x < f.size(); ++x) {
        const std::size_t k = x % n[2], j = (x / n[2]) % n[1], i = x / (n[1] * n[2]);
        const double s = k1 * detail::unit(j, n[1]) + k2 * detail::unit(k, n[2]);
        const double level = centre + cfg.interface_wobble * std::sin(2.0 * std::numbers::pi * s + phase);
        if (detail::unit(i, n[0]) >= level) f[x] += cfg.jump * (1.0 + 0.25 * mod[x] / mod_scale);
    }
    return f;
}

struct OscillatoryConfig {
    double amplitude_base = 1.0;      ///< mean of a(x)
    double amplitude_variation = 0.4; ///< scale of the smooth part of a(x)
    double wavenumber = 8.0;          ///< cycles of the carrier across the domain
    double phase_variation = 3.0;     ///< scale (radians) of the smooth part of theta(x)
};

/// a(x) cos(theta(x)) with a, theta smooth and seeded; theta has a seeded
/// linear carrier.
inline DataCube oscillatory_field(const Dims& dims, std::uint64_t seed, const OscillatoryConfig& cfg = {})
{
    std::mt19937_64 rng(detail::mix_seed(seed, 3));
    const std::size_t rank = dims.rank();
    std::array<double, 3> dir{0.0, 0.0, 0.0};
    double norm = 0.0;
    for (std::size_t a = 0; a < rank; ++a) {
        dir[a] = detail::uniform(rng, 0.2, 1.0) * (a == 2 ? 0.3 : 1.0);
        norm += dir[a] * dir[a];
    }
    for (auto& v : dir) v /= std::sqrt(norm);
    const double phase0 = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);

    SmoothConfig sc;
    sc.terms = 6;
    sc.cutoff = 3;
    const DataCube amp = smooth_field(dims, seed ^ 0xa5a5a5a5ULL, sc);
    const DataCube pha = smooth_field(dims, seed ^ 0x3c3c3c3cULL, sc);

    const auto n = dims.padded();
    DataCube f(dims);
    for (std::size_t x = 0; x < f.size(); ++x) {
        const std::size_t k = x % n[2], j = (x / n[2]) % n[1], i = x / (n[1] * n[2]);
        const double a = cfg.amplitude_base + cfg.amplitude_variation * amp[x];
        const double lin = dir[0] * detail::unit(i, n[0]) + dir[1] * detail::unit(j, n[1]) +
                           dir[2] * detail::unit(k, n[2]);
        const double theta = 2.0 * std::numbers::pi * cfg.wavenumber * lin + phase0 + cfg.phase_variation * pha[x];
        f[x] = a * std::cos(theta);
    }
    return f;
}

struct CheckerboardConfig {
    std::size_t tiles = 7;        ///< tiles per axis (third axis uses min(tiles, extent))
    double absorber = 0.1;
    double scatterer = 1.0;
    double source = 4.0;          ///< central tile value when tiles >= 3
    double jitter = 0.05;         ///< seeded per-tile perturbation
    double blur = 1.0;            ///< scale of the seeded Gaussian blur width; 0 disables
};

/// Piecewise-constant tiles alternating absorber/scatterer with a bright
/// central tile, then a small seeded separable Gaussian blur.
inline DataCube checkerboard_field(const Dims& dims, std::uint64_t seed, const CheckerboardConfig& cfg = {})
{
    std::mt19937_64 rng(detail::mix_seed(seed, 4));
    const auto n = dims.padded();
    std::array<std::size_t, 3> t{1, 1, 1};
    for (std::size_t a = 0; a < dims.rank(); ++a) t[a] = std::max<std::size_t>(1, std::min(cfg.tiles, n[a]));

    std::vector<double> tile(t[0] * t[1] * t[2]);
    for (std::size_t ti = 0; ti < t[0]; ++ti)
        for (std::size_t tj = 0; tj < t[1]; ++tj)
            for (std::size_t tk = 0; tk < t[2]; ++tk) {
                const bool dark = (ti + tj + tk) % 2 == 1;
                const bool centre = t[0] >= 3 && t[1] >= 3 && ti == t[0] / 2 && tj == t[1] / 2;
                double v = centre ? cfg.source : (dark ? cfg.absorber : cfg.scatterer);
                if (tile.size() > 1) v += cfg.jitter * detail::uniform(rng, -1.0, 1.0);
                tile[(ti * t[1] + tj) * t[2] + tk] = v;
            }

    DataCube f(dims);
    for (std::size_t x = 0; x < f.size(); ++x) {
        const std::size_t k = x % n[2], j = (x / n[2]) % n[1], i = x / (n[1] * n[2]);
        const std::size_t ti = i * t[0] / n[0], tj = j * t[1] / n[1], tk = k * t[2] / n[2];
        f[x] = tile[(ti * t[1] + tj) * t[2] + tk];
    }
    if (cfg.blur <= 0.0) return f;

    // Blur relative to the first value so that constant fields stay bit-exact.
    const double width = cfg.blur * detail::uniform(rng, 0.6, 1.2);
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(2.5 * width));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (std::ptrdiff_t r = -radius; r <= radius; ++r) {
        kernel[static_cast<std::size_t>(r + radius)] = std::exp(-0.5 * static_cast<double>(r * r) / (width * width));
        ksum += kernel[static_cast<std::size_t>(r + radius)];
    }
    for (auto& w : kernel) w /= ksum;

    const double ref = f[0];
    for (std::size_t axis = 0; axis < dims.rank(); ++axis) {
        if (n[axis] == 1) continue;
        DataCube g = f;
        const std::size_t stride = axis == 0 ? n[1] * n[2] : (axis == 1 ? n[2] : 1);
        for (std::size_t x = 0; x < f.size(); ++x) {
            const auto pos = static_cast<std::ptrdiff_t>((x / stride) % n[axis]);
            double acc = 0.0;
            for (std::ptrdiff_t r = -radius; r <= radius; ++r) {
                // Clamp at the edges.
                const std::ptrdiff_t q = std::clamp<std::ptrdiff_t>(pos + r, 0, static_cast<std::ptrdiff_t>(n[axis]) - 1);
                const std::size_t y = x - static_cast<std::size_t>(pos) * stride + static_cast<std::size_t>(q) * stride;
                acc += kernel[static_cast<std::size_t>(r + radius)] * (f[y] - ref);
            }
            g[x] = ref + acc;
        }
        f = std::move(g);
    }
    return f;
}

} // namespace ldmm
