// Command-line driver: generate fields, build masks, reconstruct, compress and
// score.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldmm/ldmm_all.hpp"

namespace {

using namespace ldmm;

std::vector<std::size_t> parse_extents(const std::string& text, const char* what)
{
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto next = text.find('x', pos);
        const std::string tok = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (tok.empty() || used != tok.size() || v == 0)
            throw InvalidArgument(std::string("malformed ") + what + " '" + text + "' (expected e.g. 64x64 or 8x8x8)");
        out.push_back(static_cast<std::size_t>(v));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

/// Strides of a regular anchor lattice, if the mask is one.
std::optional<std::vector<std::size_t>> lattice_strides(const SampleMask& mask)
{
    const Dims& dims = mask.dims();
    std::vector<std::size_t> strides(dims.rank());
    for (std::size_t a = 0; a < dims.rank(); ++a) {
        strides[a] = dims[a];
        VoxelIndex c(dims.rank(), 0);
        for (std::size_t p = 1; p < dims[a]; ++p) {
            c[a] = p;
            if (mask[lex_encode(c, dims)]) {
                strides[a] = p;
                break;
            }
        }
    }
    if (!(regular_mask(dims, std::span<const std::size_t>(strides)) == mask)) return std::nullopt;
    return strides;
}

DataCube interpolate(const DataCube& field, const SampleMask& mask, const std::string& method)
{
    const auto strides = lattice_strides(mask);
    if (!strides) throw InvalidArgument("method '" + method + "' needs a regular lattice mask");
    const DataCube low = decimate(field, *strides);
    if (method == "spline") return spline_interpolate(low, field.dims(), *strides);
    return spectral_interpolate(low, field.dims(), *strides, method == "dct" ? Transform::dct : Transform::dft);
}

void emit(const io::Report& rep, const std::string& path)
{
    rep.write(std::cout);
    if (!path.empty()) {
        std::ofstream os(path);
        if (!os) throw FormatError("cannot open " + path);
        rep.write(os);
    }
}

struct GenArgs {
    std::string kind;
    std::string dims;
    std::uint64_t seed = 0;
    double value = 0.0;
    std::string out;
};

struct SampleArgs {
    std::string kind;
    double rate = 0.1;
    std::uint64_t seed = 0;
    std::string strides;
    std::string in, out;
};

struct ReconArgs {
    std::string method = "ldmm";
    std::string in, mask, out, report;
    std::string init;
    std::string patch;
    std::size_t iters = 0;
    double tol = 1e-3;
    double cg_tol = 1e-6;
    std::size_t k = 20;
    std::size_t sigma_rank = 10;
};

struct CompressArgs {
    std::string method;
    double rate = 0.1;
    std::string in, out, report, patch;
    std::uint64_t seed = 0;
    std::size_t iters = 10;
};

struct MetricsArgs {
    std::string a, b, out;
};

int run_gen(const GenArgs& g)
{
    const Dims dims(parse_extents(g.dims, "dims"));
    DataCube f;
    if (g.kind == "smooth")
        f = smooth_field(dims, g.seed);
    else if (g.kind == "shock")
        f = shock_field(dims, g.seed);
    else if (g.kind == "oscillatory")
        f = oscillatory_field(dims, g.seed);
    else if (g.kind == "checkerboard")
        f = checkerboard_field(dims, g.seed);
    else
        f = DataCube(dims, g.value); // constant
    io::write_field(g.out, f);
    return 0;
}

int run_sample(const SampleArgs& s)
{
    const DataCube f = io::read_field(s.in);
    SampleMask m;
    if (s.kind == "random") {
        m = random_mask(f.dims(), s.rate, s.seed);
    } else {
        if (s.strides.empty()) throw InvalidArgument("regular mask needs --strides");
        const auto st = parse_extents(s.strides, "strides");
        m = regular_mask(f.dims(), std::span<const std::size_t>(st));
    }
    io::write_mask(s.out, m);
    return 0;
}

LDMMConfig ldmm_config(const Dims& dims, const std::string& patch, std::size_t k, std::size_t sigma_rank)
{
    LDMMConfig cfg;
    cfg.patch = patch.empty() ? default_patch_shape(dims) : PatchShape(parse_extents(patch, "patch"));
    cfg.patch.check_fits(dims);
    cfg.k_neighbors = k;
    cfg.sigma_rank = sigma_rank;
    return cfg;
}

int run_reconstruct(const ReconArgs& r)
{
    const auto t0 = std::chrono::steady_clock::now();
    const DataCube field = io::read_field(r.in);
    const SampleMask mask = io::read_mask(r.mask);
    if (!(field.dims() == mask.dims()))
        throw DimensionError("field " + field.dims().str() + " and mask " + mask.dims().str() + " differ");
    if (mask.count() == 0) throw InvalidArgument("mask has no sampled voxels");
    const std::vector<double> b = restrict(field, mask);

    DataCube out;
    std::size_t iters = 0;
    if (r.method == "nearest") {
        out = initialize(b, mask, InitStrategy::nearest_fill);
    } else if (r.method == "dct" || r.method == "dft" || r.method == "spline") {
        out = interpolate(field, mask, r.method);
    } else if (r.method == "ldmm") {
        LDMMConfig cfg = ldmm_config(field.dims(), r.patch, r.k, r.sigma_rank);
        cfg.convergence_tol = r.tol;
        cfg.cg.tol = r.cg_tol;
        const std::string init = r.init.empty() ? "nearest" : r.init;
        std::optional<DataCube> start;
        if (init == "dct" || init == "dft" || init == "spline") {
            start = interpolate(field, mask, init);
            impose_samples(*start, mask, b);
            cfg.init = InitStrategy::provided;
            cfg.max_outer_iters = 3;
        } else {
            cfg.init = init == "mean" ? InitStrategy::mean_fill : InitStrategy::nearest_fill;
        }
        if (r.iters > 0) cfg.max_outer_iters = r.iters;
        if (mask.count() == mask.size()) {
            out = field;
        } else {
            Reconstruction rec = reconstruct(b, mask, cfg, nullptr, start ? &*start : nullptr);
            out = std::move(rec.field);
            iters = rec.report.iterations.size();
        }
    } else {
        throw InvalidArgument("unknown method '" + r.method + "'");
    }
    io::write_field(r.out, out);

    io::Report rep;
    io::add_errors(rep, error_norms(field, out));
    rep.set("iters", iters);
    rep.set("seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    emit(rep, r.report);
    return 0;
}

int run_compress(const CompressArgs& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    const DataCube field = io::read_field(c.in);
    DataCube out;
    std::size_t stored = 0, iters = 0;
    if (c.method == "dct" || c.method == "dft") {
        Compressed z = transform_compress(field, c.method == "dct" ? Transform::dct : Transform::dft, c.rate);
        out = std::move(z.reconstruction);
        stored = z.stored_values;
    } else if (c.method == "svd") {
        Compressed z = svd_compress(field, c.rate);
        out = std::move(z.reconstruction);
        stored = z.stored_values;
    } else if (c.method == "ldmm") {
        // Sample positions are implied by the seed, so only values count.
        const SampleMask mask = random_mask(field.dims(), c.rate, c.seed);
        const std::vector<double> b = restrict(field, mask);
        stored = b.size();
        if (mask.count() == mask.size()) {
            out = field;
        } else {
            LDMMConfig cfg = ldmm_config(field.dims(), c.patch, 20, 10);
            cfg.max_outer_iters = c.iters;
            Reconstruction rec = reconstruct(b, mask, cfg);
            out = std::move(rec.field);
            iters = rec.report.iterations.size();
        }
    } else {
        throw InvalidArgument("unknown method '" + c.method + "'");
    }
    io::write_field(c.out, out);

    io::Report rep;
    io::add_errors(rep, error_norms(field, out));
    rep.set("iters", iters);
    rep.set("stored", stored);
    rep.set("seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    emit(rep, c.report);
    return 0;
}

int run_metrics(const MetricsArgs& m)
{
    const DataCube a = io::read_field(m.a);
    const DataCube b = io::read_field(m.b);
    io::Report rep;
    io::add_errors(rep, error_norms(a, b));
    emit(rep, m.out);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Patch-manifold reconstruction of sampled 2D/3D fields"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic field");
    g->add_option("kind", gen.kind, "Field family")
        ->required()
        ->check(CLI::IsMember({"smooth", "shock", "oscillatory", "checkerboard", "constant"}));
    g->add_option("--dims", gen.dims, "Extents, e.g. 128x128 or 64x64x8")->required();
    g->add_option("--seed", gen.seed, "Generator seed");
    g->add_option("--value", gen.value, "Value of a constant field");
    g->add_option("-o,--output", gen.out, "Output field file")->required();

    SampleArgs smp;
    auto* s = app.add_subcommand("sample", "Build a sampling mask for a field");
    s->add_option("--mask", smp.kind, "Mask kind")->required()->check(CLI::IsMember({"random", "regular"}));
    s->add_option("--rate", smp.rate, "Sampled fraction (random)");
    s->add_option("--seed", smp.seed, "Mask seed (random)");
    s->add_option("--strides", smp.strides, "Per-axis strides (regular), e.g. 4x4");
    s->add_option("-i,--input", smp.in, "Field file")->required();
    s->add_option("-o,--output", smp.out, "Output mask file")->required();

    ReconArgs rec;
    auto* r = app.add_subcommand("reconstruct", "Fill the unsampled voxels of a field");
    r->add_option("--method", rec.method, "Reconstruction method")
        ->check(CLI::IsMember({"ldmm", "dct", "dft", "spline", "nearest"}));
    r->add_option("-i,--input", rec.in, "Reference field (only masked values are used)")->required();
    r->add_option("-m,--mask", rec.mask, "Mask file")->required();
    r->add_option("--init", rec.init, "LDMM initialization")
        ->check(CLI::IsMember({"dct", "dft", "spline", "nearest", "mean"}));
    r->add_option("--patch", rec.patch, "Patch size, e.g. 6x6 or 6x6x4");
    r->add_option("--iters", rec.iters, "Maximum outer iterations");
    r->add_option("--tol", rec.tol, "Relative field change for convergence");
    r->add_option("--cg-tol", rec.cg_tol, "Relative residual for the inner solve");
    r->add_option("--k", rec.k, "Nearest neighbours per patch");
    r->add_option("--sigma-rank", rec.sigma_rank, "Neighbour rank used for the kernel width");
    r->add_option("-o,--output", rec.out, "Output field file")->required();
    r->add_option("--report", rec.report, "Report file (key=value)");

    CompressArgs cmp;
    auto* c = app.add_subcommand("compress", "Budgeted compression baseline");
    c->add_option("--method", cmp.method, "Compression method")
        ->required()
        ->check(CLI::IsMember({"ldmm", "dct", "dft", "svd"}));
    c->add_option("--rate", cmp.rate, "Budget as a fraction of the field size")->required();
    c->add_option("-i,--input", cmp.in, "Field file")->required();
    c->add_option("-o,--output", cmp.out, "Output field file")->required();
    c->add_option("--report", cmp.report, "Report file (key=value)");
    c->add_option("--patch", cmp.patch, "Patch size for ldmm");
    c->add_option("--seed", cmp.seed, "Sampling seed for ldmm");
    c->add_option("--iters", cmp.iters, "Maximum outer iterations for ldmm");

    MetricsArgs met;
    auto* m = app.add_subcommand("metrics", "Compare a reconstruction with a reference");
    m->add_option("-a", met.a, "Reference field")->required();
    m->add_option("-b", met.b, "Reconstructed field")->required();
    m->add_option("-o,--output", met.out, "Report file (key=value)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*g) return run_gen(gen);
        if (*s) return run_sample(smp);
        if (*r) return run_reconstruct(rec);
        if (*c) return run_compress(cmp);
        if (*m) return run_metrics(met);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
