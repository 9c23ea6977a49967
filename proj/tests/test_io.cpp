#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ldmm/io.hpp"
#include "ldmm/sampling.hpp"
#include "oracles.hpp"

using namespace ldmm;

namespace {

std::string field_bytes(const DataCube& f)
{
    std::ostringstream os(std::ios::binary);
    io::write_field(os, f);
    return os.str();
}

DataCube parse_field(const std::string& s)
{
    std::istringstream is(s, std::ios::binary);
    return io::read_field(is);
}

} // namespace

TEST(FieldFormat, RoundTripIsBitwise)
{
    std::mt19937_64 rng(1);
    for (const Dims& dims : {Dims{5, 7}, Dims{3, 4, 2}}) {
        const DataCube f = oracle::random_cube(dims, rng, -1e300, 1e300);
        const DataCube g = parse_field(field_bytes(f));
        EXPECT_EQ(std::memcmp(f.values().data(), g.values().data(), f.size() * sizeof(double)), 0);
        EXPECT_EQ(g.dims(), dims);
    }
}

TEST(FieldFormat, HeaderLayout)
{
    const DataCube f(Dims{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    const std::string s = field_bytes(f);
    ASSERT_EQ(s.size(), 8u + 4u + 2u * 8u + 6u * 8u);
    EXPECT_EQ(s.substr(0, 8), "SDFIELD1");
    EXPECT_EQ(static_cast<unsigned char>(s[8]), 2u);
    EXPECT_EQ(s[9], 0);
    EXPECT_EQ(static_cast<unsigned char>(s[12]), 2u);
    EXPECT_EQ(static_cast<unsigned char>(s[20]), 3u);
    // 1.0 little-endian: 00 .. 00 f0 3f
    EXPECT_EQ(static_cast<unsigned char>(s[28 + 6]), 0xf0);
    EXPECT_EQ(static_cast<unsigned char>(s[28 + 7]), 0x3f);
}

TEST(FieldFormat, RejectsBadInput)
{
    const std::string good = field_bytes(DataCube(Dims{2, 2}, 1.0));

    std::string bad_magic = good;
    bad_magic[7] = '0';
    EXPECT_THROW(parse_field(bad_magic), FormatError);

    EXPECT_THROW(parse_field(good.substr(0, good.size() - 3)), FormatError);
    EXPECT_THROW(parse_field(good.substr(0, 10)), FormatError);
    EXPECT_THROW(parse_field(good + "x"), FormatError);

    std::string bad_ndim = good;
    bad_ndim[8] = 4;
    EXPECT_THROW(parse_field(bad_ndim), FormatError);

    std::string nan_payload = good;
    const double nan = std::nan("");
    std::memcpy(nan_payload.data() + 28 + 2 * 8, &nan, 8);
    try {
        parse_field(nan_payload);
        FAIL() << "NaN accepted";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("voxel 2"), std::string::npos);
    }
}

TEST(MaskFormat, RoundTripAndValidation)
{
    const SampleMask m = random_mask(Dims{6, 5, 2}, 0.3, 4);
    std::ostringstream os(std::ios::binary);
    io::write_mask(os, m);
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, 8), "SDMASK01");
    EXPECT_EQ(s.size(), 8u + 4u + 3u * 8u + 60u);
    std::istringstream is(s, std::ios::binary);
    EXPECT_EQ(io::read_mask(is), m);

    std::string bad = s;
    bad[s.size() - 1] = 2;
    std::istringstream is2(bad, std::ios::binary);
    EXPECT_THROW(io::read_mask(is2), FormatError);

    std::istringstream is3(s.substr(0, s.size() - 1), std::ios::binary);
    EXPECT_THROW(io::read_mask(is3), FormatError);

    std::istringstream is4(field_bytes(DataCube(Dims{2, 2})), std::ios::binary);
    EXPECT_THROW(io::read_mask(is4), FormatError);
}

TEST(FileIo, PathRoundTripAndMissingFile)
{
    const auto dir = std::filesystem::temp_directory_path() / "ldmm_io_test";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(2);
    const DataCube f = oracle::random_cube(Dims{4, 4, 3}, rng);
    const std::string path = (dir / "f.bin").string();
    io::write_field(path, f);
    EXPECT_EQ(io::read_field(path), f);
    const SampleMask m = regular_mask(Dims{4, 4, 3}, {2, 2, 1});
    io::write_mask((dir / "m.bin").string(), m);
    EXPECT_EQ(io::read_mask((dir / "m.bin").string()), m);
    EXPECT_THROW(io::read_field((dir / "missing.bin").string()), FormatError);
    std::filesystem::remove_all(dir);
}

TEST(Report, KeyValueRoundTrip)
{
    io::Report r;
    r.set("psnr", std::numeric_limits<double>::infinity());
    r.set("l2", 0.1);
    r.set("iters", std::size_t{3});
    r.set("l2", 0.25);
    std::ostringstream os;
    r.write(os);
    EXPECT_EQ(os.str(), "psnr=inf\nl2=0.25\niters=3\n");
    std::istringstream is(os.str());
    const io::Report back = io::Report::parse(is);
    EXPECT_EQ(back.entries(), r.entries());
    EXPECT_EQ(*back.get("iters"), "3");
    EXPECT_FALSE(back.get("missing").has_value());

    std::istringstream bad("psnr 40\n");
    EXPECT_THROW(io::Report::parse(bad), FormatError);
}

TEST(Report, ErrorFields)
{
    io::Report r;
    ErrorReport e;
    e.l1 = 0.5;
    io::add_errors(r, e);
    EXPECT_EQ(*r.get("l1"), "0.5");
    EXPECT_EQ(*r.get("psnr"), "inf");
    EXPECT_TRUE(r.get("linf").has_value());
}
