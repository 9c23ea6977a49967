#pragma once

// Alternating minimization for field reconstruction from partial samples.
//
// Each outer iteration rebuilds the patch cloud of the current field, its kNN
// affinity matrix and the translated weight matrix, then solves the
// partitioned weighted-graph-Laplacian system for the unsampled voxels.
// Sampled voxels are copied from b every iteration and never change.

#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldmm/error.hpp"
#include "ldmm/grid.hpp"
#include "ldmm/kdtree.hpp"
#include "ldmm/metrics.hpp"
#include "ldmm/patch_graph.hpp"
#include "ldmm/wgl.hpp"

namespace ldmm {

enum class InitStrategy { nearest_fill, mean_fill, provided };

struct LDMMConfig {
    PatchShape patch{6, 6};
    std::size_t k_neighbors = 20;
    std::size_t sigma_rank = 10;
    std::size_t max_outer_iters = 10;
    SolveOptions cg{};
    InitStrategy init = InitStrategy::nearest_fill;
    double convergence_tol = 1e-3; ///< relative L2 change of the field

    /// Defaults for reconstruction from random samples.
    static LDMMConfig random_sampling(PatchShape patch)
    {
        LDMMConfig c;
        c.patch = std::move(patch);
        return c;
    }

    /// Defaults for refining an interpolant of a regular lattice.
    static LDMMConfig refinement(PatchShape patch)
    {
        LDMMConfig c;
        c.patch = std::move(patch);
        c.max_outer_iters = 3;
        c.init = InitStrategy::provided;
        return c;
    }

    void validate(const Dims& dims) const
    {
        patch.check_fits(dims);
        if (k_neighbors == 0) throw InvalidArgument("k_neighbors must be positive");
        if (sigma_rank == 0 || sigma_rank > k_neighbors)
            throw InvalidArgument("sigma_rank must lie in [1, k_neighbors]");
        if (k_neighbors >= dims.count()) throw InvalidArgument("k_neighbors must be below the voxel count");
        if (max_outer_iters == 0) throw InvalidArgument("max_outer_iters must be positive");
        if (!(cg.tol > 0.0) || !(convergence_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
    }
};

struct IterationRecord {
    std::size_t iteration = 0;                 ///< 1-based
    std::optional<double> psnr;                ///< against the reference, when one was supplied
    double relative_change = 0.0;
    std::size_t cg_iterations = 0;
    double cg_residual = 0.0;
    double seconds = 0.0;
};

struct ReconstructionReport {
    std::optional<double> initial_psnr;
    std::vector<IterationRecord> iterations;
    bool converged = false;
    double seconds = 0.0;
};

/// Copies b onto the sampled voxels of f.
inline void impose_samples(DataCube& f, const SampleMask& mask, std::span<const double> b)
{
    if (!(f.dims() == mask.dims())) throw DimensionError("field and mask dims differ");
    if (b.size() != mask.count())
        throw DimensionError("expected " + std::to_string(mask.count()) + " samples, got " + std::to_string(b.size()));
    std::size_t s = 0;
    for (std::size_t x = 0; x < f.size(); ++x)
        if (mask[x]) f[x] = b[s++];
}

/// Initial field agreeing with b on the mask.
///
/// nearest_fill copies the value of the geometrically nearest sampled voxel
/// (Euclidean, non-periodic, ties to the lower ordinal); mean_fill uses the
/// mean of b; provided takes `given`, which must already agree with b.
inline DataCube initialize(std::span<const double> b, const SampleMask& mask, InitStrategy strategy,
                           const DataCube* given = nullptr)
{
    if (mask.count() == 0) throw InvalidArgument("mask has no sampled voxels");
    if (b.size() != mask.count())
        throw DimensionError("expected " + std::to_string(mask.count()) + " samples, got " + std::to_string(b.size()));
    const Dims& dims = mask.dims();

    switch (strategy) {
    case InitStrategy::provided: {
        if (!given) throw InvalidArgument("provided initialization needs a field");
        if (!(given->dims() == dims))
            throw DimensionError("initial field " + given->dims().str() + " does not match mask " + dims.str());
        std::size_t s = 0;
        for (std::size_t x = 0; x < given->size(); ++x)
            if (mask[x] && (*given)[x] != b[s++])
                throw InvalidArgument("initial field disagrees with the samples at voxel " + std::to_string(x));
        return *given;
    }
    case InitStrategy::mean_fill: {
        // Accumulate around b[0] so a constant b gives that constant exactly.
        double acc = 0.0;
        for (double v : b) acc += v - b[0];
        DataCube f(dims, b[0] + acc / static_cast<double>(b.size()));
        impose_samples(f, mask, b);
        return f;
    }
    case InitStrategy::nearest_fill: {
        const auto sampled = mask.sampled();
        const std::size_t rank = dims.rank();
        std::vector<double> coords(sampled.size() * rank);
        for (std::size_t s = 0; s < sampled.size(); ++s) {
            const VoxelIndex c = lex_decode(sampled[s], dims);
            for (std::size_t a = 0; a < rank; ++a) coords[s * rank + a] = static_cast<double>(c[a]);
        }
        const KdTree tree(coords, rank);
        DataCube f(dims);
        std::vector<Neighbor> hit;
        std::vector<double> q(rank);
        for (std::size_t x = 0; x < f.size(); ++x) {
            const VoxelIndex c = lex_decode(x, dims);
            for (std::size_t a = 0; a < rank; ++a) q[a] = static_cast<double>(c[a]);
            tree.query(q, 1, tree.size(), hit);
            f[x] = b[hit.front().index];
        }
        impose_samples(f, mask, b);
        return f;
    }
    }
    throw InvalidArgument("unknown initialization strategy");
}

/// Outcome of one manifold update.
struct IterationOutcome {
    DataCube field;
    std::size_t cg_iterations = 0;
    double cg_residual = 0.0;
    std::optional<SparseWeights> wtilde; ///< kept only on request
};

/// One manifold update: patches -> affinities -> translated weights -> solve.
inline IterationOutcome iterate_once(const DataCube& current, std::span<const double> b, const SampleMask& mask,
                                     const LDMMConfig& cfg, bool keep_weights = false)
{
    cfg.validate(current.dims());
    if (!(current.dims() == mask.dims())) throw DimensionError("field and mask dims differ");

    IterationOutcome out;
    if (mask.count() == mask.size()) {
        out.field = current;
        impose_samples(out.field, mask, b);
        return out;
    }

    SparseWeights wtilde;
    {
        const PatchCloud cloud = patch_cloud(current, cfg.patch);
        const SparseWeights wbar = patch_weights(cloud, cfg.k_neighbors, cfg.sigma_rank);
        wtilde = assemble_translated_weights(wbar, cfg.patch, current.dims());
    }
    const WGLSystem sys = build_system(wtilde, mask);
    if (keep_weights)
        out.wtilde = std::move(wtilde);
    else
        wtilde = SparseWeights();

    std::vector<double> guess(sys.size());
    for (std::size_t r = 0; r < guess.size(); ++r) guess[r] = current[sys.unsampled[r]];
    const SolveResult sol = solve_system(sys, b, cfg.cg, std::span<const double>(guess));
    out.field = scatter(sys, current.dims(), sol.v, b);
    out.cg_iterations = sol.iterations;
    out.cg_residual = sol.residual;
    return out;
}

namespace detail {

inline double relative_change(const DataCube& prev, const DataCube& next)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i) {
        const double d = next[i] - prev[i];
        num += d * d;
        den += prev[i] * prev[i];
    }
    if (num == 0.0) return 0.0;
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

} // namespace detail

struct Reconstruction {
    DataCube field;
    ReconstructionReport report;
};

/// Runs outer iterations until the relative change drops below
/// cfg.convergence_tol or cfg.max_outer_iters is reached.
inline Reconstruction reconstruct(std::span<const double> b, const SampleMask& mask, const LDMMConfig& cfg,
                                  const DataCube* reference = nullptr, const DataCube* initial = nullptr)
{
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    cfg.validate(mask.dims());
    if (reference && !(reference->dims() == mask.dims())) throw DimensionError("reference dims differ from mask");

    Reconstruction rec;
    rec.field = initialize(b, mask, cfg.init, initial);
    auto score = [&](const DataCube& f) -> std::optional<double> {
        if (!reference) return std::nullopt;
        return error_norms(*reference, f).psnr;
    };
    rec.report.initial_psnr = score(rec.field);

    for (std::size_t it = 1; it <= cfg.max_outer_iters; ++it) {
        const auto ti = clock::now();
        IterationOutcome step;
        try {
            step = iterate_once(rec.field, b, mask, cfg);
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("outer iteration " + std::to_string(it) + ": " + e.what(), e.residual());
        } catch (const SingularSystemError& e) {
            throw SingularSystemError("outer iteration " + std::to_string(it) + ": " + e.what());
        }
        IterationRecord r;
        r.iteration = it;
        r.relative_change = detail::relative_change(rec.field, step.field);
        r.cg_iterations = step.cg_iterations;
        r.cg_residual = step.cg_residual;
        rec.field = std::move(step.field);
        r.psnr = score(rec.field);
        r.seconds = std::chrono::duration<double>(clock::now() - ti).count();
        rec.report.iterations.push_back(r);
        if (r.relative_change < cfg.convergence_tol) {
            rec.report.converged = true;
            break;
        }
    }
    rec.report.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return rec;
}

/// Sampling protocols with tabulated patch sizes.
enum class Protocol { random5, random10, regular4x4, regular4x4x1, regular2x2x2 };

/// Benchmark field families with tabulated patch sizes.
enum class Benchmark { lattice2d, plasma_distribution2d, vortex2d, plasma_magnetic3d, lattice3d, plasma_distribution3d };

inline Dims benchmark_dims(Benchmark b)
{
    switch (b) {
    case Benchmark::lattice2d: return {896, 896};
    case Benchmark::plasma_distribution2d: return {256, 256};
    case Benchmark::vortex2d: return {256, 256};
    case Benchmark::plasma_magnetic3d: return {256, 256, 32};
    case Benchmark::lattice3d: return {188, 64, 32};
    case Benchmark::plasma_distribution3d: return {256, 256, 32};
    }
    throw InvalidArgument("unknown benchmark");
}

/// Patch size for a benchmark family and sampling protocol; nullopt where the
/// protocol does not apply (2D data with 3D lattices and vice versa).
inline std::optional<PatchShape> benchmark_patch_shape(Benchmark b, Protocol p)
{
    const bool three_d = b == Benchmark::plasma_magnetic3d || b == Benchmark::lattice3d ||
                         b == Benchmark::plasma_distribution3d;
    const bool needs_3d = p == Protocol::regular4x4x1 || p == Protocol::regular2x2x2;
    if (p == Protocol::regular4x4 && three_d) return std::nullopt;
    if (needs_3d && !three_d) return std::nullopt;
    switch (b) {
    case Benchmark::lattice2d:
    case Benchmark::vortex2d: return PatchShape{6, 6};
    case Benchmark::plasma_distribution2d: return PatchShape{16, 16};
    case Benchmark::plasma_magnetic3d: return p == Protocol::regular2x2x2 ? PatchShape{6, 6, 4} : PatchShape{6, 6, 1};
    case Benchmark::lattice3d: return PatchShape{4, 4, 4};
    case Benchmark::plasma_distribution3d: return PatchShape{6, 6, 4};
    }
    return std::nullopt;
}

/// Generic patch default: 6x6 in 2D, 6x6x4 in 3D, clipped to the grid.
inline PatchShape default_patch_shape(const Dims& dims)
{
    std::vector<std::size_t> s = dims.rank() == 2 ? std::vector<std::size_t>{6, 6} : std::vector<std::size_t>{6, 6, 4};
    for (std::size_t a = 0; a < s.size(); ++a) s[a] = std::min(s[a], dims[a]);
    return PatchShape(s);
}

} // namespace ldmm
