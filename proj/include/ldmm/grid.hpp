#pragma once

// Dense 2D/3D fields on integer grids, lexicographic indexing and the
// periodic patch translation operators.
//
// Storage order is first-coordinate-major: for dims (m, n, r) the ordinal of
// (i, j, k) is (i * n + j) * r + k. Patch elements use the same order over the
// patch window, anchored at the lexicographically first corner.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ldmm/error.hpp"

namespace ldmm {

using VoxelIndex = std::vector<std::size_t>;

namespace detail {

inline std::string join(std::span<const std::size_t> v, char sep = 'x')
{
    std::ostringstream os;
    for (std::size_t a = 0; a < v.size(); ++a) {
        if (a) os << sep;
        os << v[a];
    }
    return os.str();
}

} // namespace detail

/// Extent of a 2D or 3D grid.
class Dims {
public:
    Dims() = default;
    Dims(std::initializer_list<std::size_t> sizes) : Dims(std::vector<std::size_t>(sizes)) {}
    explicit Dims(std::vector<std::size_t> sizes) : sizes_(std::move(sizes))
    {
        if (sizes_.size() < 2 || sizes_.size() > 3)
            throw InvalidArgument("grid rank must be 2 or 3, got " + std::to_string(sizes_.size()));
        for (auto s : sizes_)
            if (s == 0) throw InvalidArgument("grid extents must be positive");
    }

    std::size_t rank() const noexcept { return sizes_.size(); }
    std::size_t operator[](std::size_t axis) const { return sizes_.at(axis); }
    std::span<const std::size_t> sizes() const noexcept { return sizes_; }

    /// Number of voxels.
    std::size_t count() const noexcept
    {
        return std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{1}, std::multiplies<>{});
    }

    /// Extents padded with trailing 1s to three axes.
    std::array<std::size_t, 3> padded() const noexcept
    {
        std::array<std::size_t, 3> p{1, 1, 1};
        std::copy(sizes_.begin(), sizes_.end(), p.begin());
        return p;
    }

    std::string str() const { return detail::join(sizes_); }

    friend bool operator==(const Dims&, const Dims&) = default;

private:
    std::vector<std::size_t> sizes_;
};

/// Ordinal of a voxel; first coordinate most significant.
inline std::size_t lex_encode(std::span<const std::size_t> x, const Dims& dims)
{
    if (x.size() != dims.rank())
        throw IndexError("voxel arity " + std::to_string(x.size()) + " does not match grid rank " +
                         std::to_string(dims.rank()));
    std::size_t ord = 0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        if (x[a] >= dims[a])
            throw IndexError("coordinate " + std::to_string(x[a]) + " out of range on axis " +
                             std::to_string(a) + " (extent " + std::to_string(dims[a]) + ")");
        ord = ord * dims[a] + x[a];
    }
    return ord;
}

inline VoxelIndex lex_decode(std::size_t ordinal, const Dims& dims)
{
    if (ordinal >= dims.count())
        throw IndexError("ordinal " + std::to_string(ordinal) + " out of range for grid " + dims.str());
    VoxelIndex x(dims.rank());
    for (std::size_t a = dims.rank(); a-- > 0;) {
        x[a] = ordinal % dims[a];
        ordinal /= dims[a];
    }
    return x;
}

/// Patch window s1 x s2 [x s3].
class PatchShape {
public:
    PatchShape() = default;
    PatchShape(std::initializer_list<std::size_t> sizes) : PatchShape(std::vector<std::size_t>(sizes)) {}
    explicit PatchShape(std::vector<std::size_t> sizes) : sizes_(std::move(sizes))
    {
        if (sizes_.size() < 2 || sizes_.size() > 3)
            throw InvalidArgument("patch rank must be 2 or 3");
        for (auto s : sizes_)
            if (s == 0) throw InvalidArgument("patch extents must be positive");
    }

    std::size_t rank() const noexcept { return sizes_.size(); }
    std::size_t operator[](std::size_t axis) const { return sizes_.at(axis); }
    std::span<const std::size_t> sizes() const noexcept { return sizes_; }

    /// Ambient patch dimension.
    std::size_t d() const noexcept
    {
        return std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{1}, std::multiplies<>{});
    }

    /// Offset of patch element j from the anchor.
    VoxelIndex offset(std::size_t j) const
    {
        if (j >= d())
            throw IndexError("patch element " + std::to_string(j) + " out of range (d = " +
                             std::to_string(d()) + ")");
        VoxelIndex off(rank());
        for (std::size_t a = rank(); a-- > 0;) {
            off[a] = j % sizes_[a];
            j /= sizes_[a];
        }
        return off;
    }

    /// Throws unless the window fits inside `dims` on every axis.
    void check_fits(const Dims& dims) const
    {
        if (rank() != dims.rank())
            throw DimensionError("patch " + str() + " and grid " + dims.str() + " differ in rank");
        for (std::size_t a = 0; a < rank(); ++a)
            if (sizes_[a] > dims[a])
                throw DimensionError("patch " + str() + " does not fit grid " + dims.str());
    }

    std::string str() const { return detail::join(sizes_); }

    friend bool operator==(const PatchShape&, const PatchShape&) = default;

private:
    std::vector<std::size_t> sizes_;
};

/// Voxel `j` elements after `x` in its patch, with periodic wrap.
inline VoxelIndex translate(std::span<const std::size_t> x, std::size_t j, const PatchShape& shape,
                            const Dims& dims)
{
    shape.check_fits(dims);
    lex_encode(x, dims); // validates x
    const VoxelIndex off = shape.offset(j);
    VoxelIndex y(x.begin(), x.end());
    for (std::size_t a = 0; a < y.size(); ++a) y[a] = (y[a] + off[a]) % dims[a];
    return y;
}

/// Precomputed ordinal-space translation for one grid.
///
/// Moves ordinals by signed per-axis offsets modulo the extents. This is the
/// hot-path form of `translate` used by patch extraction and weight assembly.
class Translator {
public:
    Translator(const Dims& dims, const PatchShape& shape) : n_(dims.padded())
    {
        shape.check_fits(dims);
        const std::size_t d = shape.d();
        offsets_.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            const VoxelIndex off = shape.offset(j);
            std::array<std::size_t, 3> o{0, 0, 0};
            std::copy(off.begin(), off.end(), o.begin());
            offsets_[j] = o;
        }
    }

    std::size_t d() const noexcept { return offsets_.size(); }
    std::size_t count() const noexcept { return n_[0] * n_[1] * n_[2]; }

    /// Ordinal of x + offset(j) (forward) or x - offset(j) (backward).
    std::size_t forward(std::size_t ord, std::size_t j) const noexcept { return move(ord, j, false); }
    std::size_t backward(std::size_t ord, std::size_t j) const noexcept { return move(ord, j, true); }

private:
    std::size_t move(std::size_t ord, std::size_t j, bool negate) const noexcept
    {
        std::size_t k = ord % n_[2];
        std::size_t rest = ord / n_[2];
        std::size_t jj = rest % n_[1];
        std::size_t i = rest / n_[1];
        const auto& o = offsets_[j];
        if (negate) {
            i = (i + n_[0] - o[0] % n_[0]) % n_[0];
            jj = (jj + n_[1] - o[1] % n_[1]) % n_[1];
            k = (k + n_[2] - o[2] % n_[2]) % n_[2];
        } else {
            i = (i + o[0]) % n_[0];
            jj = (jj + o[1]) % n_[1];
            k = (k + o[2]) % n_[2];
        }
        return (i * n_[1] + jj) * n_[2] + k;
    }

    std::array<std::size_t, 3> n_;
    std::vector<std::array<std::size_t, 3>> offsets_;
};

/// Dense real-valued field in lexicographic order.
class DataCube {
public:
    DataCube() = default;
    DataCube(Dims dims, double fill = 0.0) : dims_(std::move(dims)), values_(dims_.count(), fill) {}
    DataCube(Dims dims, std::vector<double> values) : dims_(std::move(dims)), values_(std::move(values))
    {
        if (values_.size() != dims_.count())
            throw DimensionError("cube " + dims_.str() + " needs " + std::to_string(dims_.count()) +
                                 " values, got " + std::to_string(values_.size()));
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw InvalidArgument("non-finite value at voxel " + std::to_string(i));
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double operator[](std::size_t ordinal) const { return values_[ordinal]; }
    double& operator[](std::size_t ordinal) { return values_[ordinal]; }

    double at(std::span<const std::size_t> x) const { return values_[lex_encode(x, dims_)]; }
    double& at(std::span<const std::size_t> x) { return values_[lex_encode(x, dims_)]; }

    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    friend bool operator==(const DataCube&, const DataCube&) = default;

private:
    Dims dims_;
    std::vector<double> values_;
};

/// Sampled voxel set Omega.
class SampleMask {
public:
    SampleMask() = default;
    explicit SampleMask(Dims dims) : dims_(std::move(dims)), flags_(dims_.count(), 0) {}
    SampleMask(Dims dims, std::vector<std::uint8_t> flags) : dims_(std::move(dims)), flags_(std::move(flags))
    {
        if (flags_.size() != dims_.count())
            throw DimensionError("mask " + dims_.str() + " needs " + std::to_string(dims_.count()) +
                                 " flags, got " + std::to_string(flags_.size()));
        for (auto& f : flags_) {
            if (f > 1) throw InvalidArgument("mask flags must be 0 or 1");
            count_ += f;
        }
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return flags_.size(); }
    std::size_t count() const noexcept { return count_; }

    bool operator[](std::size_t ordinal) const { return flags_[ordinal] != 0; }
    std::span<const std::uint8_t> flags() const noexcept { return flags_; }

    void set(std::size_t ordinal, bool sampled)
    {
        auto& f = flags_.at(ordinal);
        if (f && !sampled) --count_;
        if (!f && sampled) ++count_;
        f = sampled ? 1 : 0;
    }

    /// Sampled ordinals in increasing order.
    std::vector<std::size_t> sampled() const
    {
        std::vector<std::size_t> out;
        out.reserve(count_);
        for (std::size_t i = 0; i < flags_.size(); ++i)
            if (flags_[i]) out.push_back(i);
        return out;
    }

    std::vector<std::size_t> unsampled() const
    {
        std::vector<std::size_t> out;
        out.reserve(flags_.size() - count_);
        for (std::size_t i = 0; i < flags_.size(); ++i)
            if (!flags_[i]) out.push_back(i);
        return out;
    }

    /// |grid| / |Omega|.
    double mu() const
    {
        if (count_ == 0) throw InvalidArgument("mask has no sampled voxels");
        return static_cast<double>(flags_.size()) / static_cast<double>(count_);
    }

    friend bool operator==(const SampleMask&, const SampleMask&) = default;

private:
    Dims dims_;
    std::vector<std::uint8_t> flags_;
    std::size_t count_ = 0;
};

/// Patch of `f` anchored at `x`; element i is f(translate(x, i)).
inline std::vector<double> extract_patch(const DataCube& f, std::span<const std::size_t> x,
                                         const PatchShape& shape)
{
    const Translator t(f.dims(), shape);
    const std::size_t anchor = lex_encode(x, f.dims());
    std::vector<double> p(t.d());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = f[t.forward(anchor, i)];
    return p;
}

/// Translation operator: output(x) = f(translate(x, i)).
inline DataCube shift_field(const DataCube& f, std::size_t i, const PatchShape& shape)
{
    const Translator t(f.dims(), shape);
    if (i >= t.d()) throw IndexError("patch element " + std::to_string(i) + " out of range");
    DataCube out(f.dims());
    for (std::size_t x = 0; x < f.size(); ++x) out[x] = f[t.forward(x, i)];
    return out;
}

/// Adjoint (= inverse) of shift_field: output(x) = f(x - offset(i)).
inline DataCube adjoint_shift(const DataCube& f, std::size_t i, const PatchShape& shape)
{
    const Translator t(f.dims(), shape);
    if (i >= t.d()) throw IndexError("patch element " + std::to_string(i) + " out of range");
    DataCube out(f.dims());
    for (std::size_t x = 0; x < f.size(); ++x) out[x] = f[t.backward(x, i)];
    return out;
}

/// Sampling operator: values of f on the mask, in ordinal order.
inline std::vector<double> restrict(const DataCube& f, const SampleMask& mask)
{
    if (!(f.dims() == mask.dims()))
        throw DimensionError("field " + f.dims().str() + " and mask " + mask.dims().str() + " differ");
    std::vector<double> b;
    b.reserve(mask.count());
    for (std::size_t x = 0; x < f.size(); ++x)
        if (mask[x]) b.push_back(f[x]);
    return b;
}

} // namespace ldmm
