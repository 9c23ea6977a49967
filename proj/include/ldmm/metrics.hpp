#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "ldmm/error.hpp"
#include "ldmm/grid.hpp"

namespace ldmm {

/// Range-normalized error norms and PSNR.
struct ErrorReport {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double psnr = std::numeric_limits<double>::infinity(); ///< +inf for an exact match
    double range = 0.0;                                     ///< max f - min f of the reference
};

/// Errors of `fhat` against the reference `f`, normalized by the reference range.
///
/// An exact match reports zero norms and psnr = +inf even for a constant
/// reference; any other error against a constant reference is rejected because
/// the normalization is undefined.
inline ErrorReport error_norms(const DataCube& f, const DataCube& fhat)
{
    if (!(f.dims() == fhat.dims()))
        throw DimensionError("reference " + f.dims().str() + " and reconstruction " + fhat.dims().str() + " differ");
    ErrorReport rep;
    rep.range = f.max() - f.min();

    const auto a = f.values();
    const auto b = fhat.values();
    if (std::equal(a.begin(), a.end(), b.begin())) return rep;
    if (!(rep.range > 0.0))
        throw InvalidArgument("reference field is constant; range-normalized norms are undefined, "
                              "compare absolute errors instead");

    const double n = static_cast<double>(a.size());
    double s1 = 0.0, s2 = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = std::abs(a[i] - b[i]) / rep.range;
        s1 += e;
        s2 += e * e;
        mx = std::max(mx, e);
    }
    rep.l1 = s1 / n;
    rep.l2 = std::sqrt(s2 / n);
    rep.linf = mx;
    // 10 log10(1 / l2^2), written so that tiny l2 does not underflow.
    rep.psnr = rep.l2 > 0.0 ? -20.0 * std::log10(rep.l2) : std::numeric_limits<double>::infinity();
    return rep;
}

inline double psnr(const DataCube& f, const DataCube& fhat) { return error_norms(f, fhat).psnr; }

} // namespace ldmm
