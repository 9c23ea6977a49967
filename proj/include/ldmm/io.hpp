#pragma once

// Binary field and mask files, and key=value reports.
//
// Field:  "SDFIELD1" | ndim u32 LE | ndim x u64 LE dims | count x f64 LE
// Mask:   "SDMASK01" | ndim u32 LE | ndim x u64 LE dims | count x u8 (0 or 1)

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ldmm/error.hpp"
#include "ldmm/grid.hpp"
#include "ldmm/metrics.hpp"

namespace ldmm::io {

inline constexpr char field_magic[8] = {'S', 'D', 'F', 'I', 'E', 'L', 'D', '1'};
inline constexpr char mask_magic[8] = {'S', 'D', 'M', 'A', 'S', 'K', '0', '1'};

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::ostream& os, T v)
{
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is, const char* what)
{
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw FormatError(std::string("truncated file while reading ") + what);
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

inline void write_header(std::ostream& os, const char (&magic)[8], const Dims& dims)
{
    os.write(magic, 8);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(dims.rank()));
    for (auto s : dims.sizes()) put_le<std::uint64_t>(os, static_cast<std::uint64_t>(s));
}

inline Dims read_header(std::istream& is, const char (&magic)[8], const char* kind)
{
    char got[8];
    if (!is.read(got, 8)) throw FormatError(std::string("truncated ") + kind + " file: missing magic");
    if (std::memcmp(got, magic, 8) != 0)
        throw FormatError(std::string("bad magic for ") + kind + " file: expected \"" + std::string(magic, 8) +
                          "\", found \"" + std::string(got, 8) + "\"");
    const auto ndim = get_le<std::uint32_t>(is, "ndim");
    if (ndim != 2 && ndim != 3) throw FormatError("ndim must be 2 or 3, found " + std::to_string(ndim));
    std::vector<std::size_t> sizes(ndim);
    for (auto& s : sizes) {
        const auto v = get_le<std::uint64_t>(is, "dims");
        if (v == 0) throw FormatError("zero extent in header");
        s = static_cast<std::size_t>(v);
    }
    return Dims(sizes);
}

inline void expect_eof(std::istream& is, const char* kind)
{
    if (is.peek() != std::char_traits<char>::eof())
        throw FormatError(std::string("trailing bytes after ") + kind + " payload");
}

} // namespace detail

inline void write_field(std::ostream& os, const DataCube& f)
{
    detail::write_header(os, field_magic, f.dims());
    for (double v : f.values()) detail::put_le<double>(os, v);
    if (!os) throw FormatError("failed writing field");
}

inline DataCube read_field(std::istream& is)
{
    const Dims dims = detail::read_header(is, field_magic, "field");
    std::vector<double> values(dims.count());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = detail::get_le<double>(is, "field payload");
        if (!std::isfinite(values[i])) throw FormatError("non-finite value at voxel " + std::to_string(i));
    }
    detail::expect_eof(is, "field");
    return DataCube(dims, std::move(values));
}

inline void write_mask(std::ostream& os, const SampleMask& m)
{
    detail::write_header(os, mask_magic, m.dims());
    os.write(reinterpret_cast<const char*>(m.flags().data()), static_cast<std::streamsize>(m.flags().size()));
    if (!os) throw FormatError("failed writing mask");
}

inline SampleMask read_mask(std::istream& is)
{
    const Dims dims = detail::read_header(is, mask_magic, "mask");
    std::vector<std::uint8_t> flags(dims.count());
    if (!is.read(reinterpret_cast<char*>(flags.data()), static_cast<std::streamsize>(flags.size())))
        throw FormatError("truncated mask payload");
    for (std::size_t i = 0; i < flags.size(); ++i)
        if (flags[i] > 1) throw FormatError("mask byte at voxel " + std::to_string(i) + " is not 0 or 1");
    detail::expect_eof(is, "mask");
    return SampleMask(dims, std::move(flags));
}

namespace detail {

template <class Fn>
auto with_file(const std::string& path, std::ios::openmode mode, Fn&& fn)
{
    std::fstream fs(path, mode | std::ios::binary);
    if (!fs) throw FormatError("cannot open " + path);
    return fn(fs);
}

} // namespace detail

inline void write_field(const std::string& path, const DataCube& f)
{
    detail::with_file(path, std::ios::out | std::ios::trunc, [&](std::fstream& fs) { write_field(fs, f); });
}

inline DataCube read_field(const std::string& path)
{
    return detail::with_file(path, std::ios::in, [](std::fstream& fs) { return read_field(fs); });
}

inline void write_mask(const std::string& path, const SampleMask& m)
{
    detail::with_file(path, std::ios::out | std::ios::trunc, [&](std::fstream& fs) { write_mask(fs, m); });
}

inline SampleMask read_mask(const std::string& path)
{
    return detail::with_file(path, std::ios::in, [](std::fstream& fs) { return read_mask(fs); });
}

/// Ordered key=value report.
class Report {
public:
    void set(const std::string& key, double v)
    {
        std::ostringstream os;
        if (std::isinf(v))
            os << (v > 0 ? "inf" : "-inf");
        else
            os << std::setprecision(17) << v;
        set(key, os.str());
    }
    void set(const std::string& key, std::size_t v) { set(key, std::to_string(v)); }
    void set(const std::string& key, const std::string& v)
    {
        for (auto& kv : entries_)
            if (kv.first == key) {
                kv.second = v;
                return;
            }
        entries_.emplace_back(key, v);
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    std::optional<std::string> get(const std::string& key) const
    {
        for (const auto& kv : entries_)
            if (kv.first == key) return kv.second;
        return std::nullopt;
    }

    void write(std::ostream& os) const
    {
        for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
    }

    static Report parse(std::istream& is)
    {
        Report r;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw FormatError("report line without '=': " + line);
            r.set(line.substr(0, eq), line.substr(eq + 1));
        }
        return r;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

inline void add_errors(Report& r, const ErrorReport& e)
{
    r.set("l1", e.l1);
    r.set("l2", e.l2);
    r.set("linf", e.linf);
    r.set("psnr", e.psnr);
}

} // namespace ldmm::io
