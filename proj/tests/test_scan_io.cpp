#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "bulletcmp/scan_io.hpp"
#include "x3p_fixture.hpp"

using namespace bulletcmp;

namespace {

HeightField grid(std::size_t cols, std::size_t rows, std::vector<double> h) {
    HeightField f(cols, rows, 0.645, 0.645);
    f.heights = std::move(h);
    return f;
}

HeightField random_field(std::mt19937_64& rng, std::size_t cols, std::size_t rows, double mask_rate) {
    std::normal_distribution<double> z(0, 3);
    std::uniform_real_distribution<double> u(0, 1);
    HeightField f(cols, rows, 0.645, 1.29);
    for (std::size_t i = 0; i < f.heights.size(); ++i) {
        if (u(rng) < mask_rate) {
            f.mask[i] = 0;
        } else {
            f.heights[i] = z(rng);
        }
    }
    return f;
}

std::string field_of(const ScanFormatError& e) { return e.field(); }

}  // namespace

TEST_CASE("x3p: 3x2 float64 grid converts meters to micrometers") {
    fixture::X3pLayout s;
    s.heights_m = {0, 1e-6, 2e-6, 3e-6, 4e-6, 5e-6};
    const auto scan = read_x3p(fixture::x3p(s));
    CHECK(scan.field.n_cols == 3);
    CHECK(scan.field.n_rows == 2);
    CHECK(scan.field.x_inc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(scan.field.y_inc == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(scan.field.heights[i] == doctest::Approx(static_cast<double>(i)).epsilon(1e-12));
        CHECK(scan.field.mask[i] == 1);
    }
    CHECK(scan.metadata.at("Record2.Instrument.Model") == "synthetic");
}

TEST_CASE("x3p: NaN cell is masked, the rest measured") {
    fixture::X3pLayout s;
    s.heights_m = {0, 1e-6, std::nan(""), 3e-6, 4e-6, 5e-6};
    const auto f = read_x3p(fixture::x3p(s)).field;
    CHECK(f.mask == std::vector<std::uint8_t>{1, 1, 0, 1, 1, 1});
    CHECK(f.measured_count() == 5);
}

TEST_CASE("x3p: stored members and float32 payloads") {
    fixture::X3pLayout s;
    s.dtype = "F";
    s.deflate = false;
    s.heights_m = {1e-6, -2e-6, 0.5e-6, 7e-6, 0, 1.25e-6};
    const auto f = read_x3p(fixture::x3p(s)).field;
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(f.heights[i] == doctest::Approx(static_cast<double>(static_cast<float>(s.heights_m[i])) * 1e6));
}

TEST_CASE("x3p: heights equal 1e6 times the stored meters on random fixtures") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5e-5, 5e-5);
    for (int t = 0; t < 20; ++t) {
        fixture::X3pLayout s;
        s.size_x = 5 + t;
        s.size_y = 3 + t % 4;
        s.x_inc_m = 6.45e-7;
        s.y_inc_m = 1.5625e-6;
        for (long i = 0; i < s.size_x * s.size_y; ++i) s.heights_m.push_back(u(rng));
        const auto f = read_x3p(fixture::x3p(s)).field;
        REQUIRE(f.heights.size() == s.heights_m.size());
        CHECK(f.x_inc == doctest::Approx(0.645));
        CHECK(f.y_inc == doctest::Approx(1.5625));
        for (std::size_t i = 0; i < f.heights.size(); ++i)
            CHECK(std::abs(f.heights[i] - 1e6 * s.heights_m[i]) <= 1e-9 * std::abs(f.heights[i]) + 1e-15);
    }
}

TEST_CASE("x3p: declared 100x100 grid with 99 values is a size mismatch") {
    fixture::X3pLayout s;
    s.size_x = 100;
    s.size_y = 100;
    s.heights_m.assign(99, 1e-6);
    try {
        read_x3p(fixture::x3p(s));
        FAIL("expected ScanFormatError");
    } catch (const ScanFormatError& e) {
        CHECK(field_of(e) == "MatrixDimension");
    }
}

TEST_CASE("x3p: unsupported datatype and broken containers name the field") {
    fixture::X3pLayout s;
    s.dtype = "I";
    s.heights_m.assign(6, 0);
    try {
        read_x3p(fixture::x3p(s));
        FAIL("expected ScanFormatError");
    } catch (const ScanFormatError& e) {
        CHECK(field_of(e) == "CZ.DataType");
    }

    const std::vector<std::uint8_t> junk{'n', 'o', 't', ' ', 'a', ' ', 'z', 'i', 'p'};
    CHECK_THROWS_AS(read_x3p(junk), ScanFormatError);

    s.dtype = "D";
    auto bytes = fixture::x3p(s);
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(read_x3p(bytes), ScanFormatError);

    const std::string xml = "<root/>";
    const auto no_root = fixture::zip({{"main.xml", fixture::Bytes(xml.begin(), xml.end())}});
    try {
        read_x3p(no_root);
        FAIL("expected ScanFormatError");
    } catch (const ScanFormatError& e) {
        CHECK(field_of(e) == "ISO5436_2");
    }
}

TEST_CASE("grid csv: 2x2 example with an empty cell") {
    const auto f = read_grid_csv("x_inc=0.645,y_inc=0.645\n1,2\n3,\n");
    CHECK(f.n_cols == 2);
    CHECK(f.n_rows == 2);
    CHECK(f.x_inc == 0.645);
    CHECK(f.heights[0] == 1);
    CHECK(f.heights[2] == 3);
    CHECK(f.measured(0, 0));
    CHECK_FALSE(f.measured(1, 1));
}

TEST_CASE("grid csv: ragged rows, bad cells and missing header are rejected") {
    CHECK_THROWS_AS(read_grid_csv("x_inc=1,y_inc=1\n1,2,3\n4,5\n"), ScanFormatError);
    CHECK_THROWS_AS(read_grid_csv("x_inc=1,y_inc=1\n1,abc\n"), ScanFormatError);
    CHECK_THROWS_AS(read_grid_csv("1,2\n3,4\n"), ScanFormatError);
    CHECK_THROWS_AS(read_grid_csv(""), ScanFormatError);
    try {
        read_grid_csv("x_inc=1,y_inc=1\n1,2,3\n4,5\n");
    } catch (const ScanFormatError& e) {
        CHECK(field_of(e) == "line 3");
    }
}

TEST_CASE("grid csv: write then read is lossless") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10; ++t) {
        const auto f = random_field(rng, 7 + t, 4 + t, 0.2);
        const auto back = read_grid_csv(write_grid_csv(f));
        CHECK(back == f);
    }
}

TEST_CASE("downsample examples") {
    std::mt19937_64 rng(3);
    const auto f = random_field(rng, 9, 5, 0.1);
    CHECK(downsample(f, 1) == f);

    const auto one = downsample(grid(2, 2, {1, 2, 3, 4}), 2);
    CHECK(one.n_cols == 1);
    CHECK(one.n_rows == 1);
    CHECK(one.heights[0] == 2.5);
    CHECK(one.x_inc == doctest::Approx(1.29));

    auto masked = grid(2, 2, {0, 0, 7, 0});
    masked.mask = {0, 0, 1, 0};
    const auto seven = downsample(masked, 2);
    CHECK(seven.heights[0] == 7);
    CHECK(seven.mask[0] == 1);

    auto empty = grid(2, 2, {0, 0, 0, 0});
    empty.mask = {0, 0, 0, 0};
    CHECK(downsample(empty, 2).mask[0] == 0);

    CHECK_THROWS_AS(downsample(f, 0), std::invalid_argument);
    CHECK_THROWS_AS(downsample(f, -2), std::invalid_argument);
}

TEST_CASE("downsample composes when the factors divide the grid") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0, 1);
    for (auto [a, b] : {std::pair{2, 3}, std::pair{3, 2}, std::pair{2, 2}, std::pair{4, 3}}) {
        HeightField f(static_cast<std::size_t>(a * b * 3), static_cast<std::size_t>(a * b * 2), 0.5, 0.5);
        for (auto& h : f.heights) h = z(rng);
        const auto twice = downsample(downsample(f, a), b);
        const auto once = downsample(f, a * b);
        REQUIRE(twice.n_cols == once.n_cols);
        REQUIRE(twice.n_rows == once.n_rows);
        CHECK(twice.x_inc == doctest::Approx(once.x_inc));
        for (std::size_t i = 0; i < once.heights.size(); ++i)
            CHECK(twice.heights[i] == doctest::Approx(once.heights[i]).epsilon(1e-12));
    }
}

TEST_CASE("validate: measured fraction boundary is inclusive") {
    ValidationLimits limits;
    limits.min_cols = 1;
    ScanRecord rec;
    rec.field = grid(4, 1, {1, 2, 3, 4});
    CHECK_FALSE(validate(rec, limits).has_value());

    rec.field.mask = {1, 0, 1, 0};
    const auto reason = validate(rec, limits);
    REQUIRE(reason.has_value());
    CHECK(reason->find("measured fraction 0.5") != std::string::npos);

    limits.min_measured_fraction = 0.5;
    CHECK_FALSE(validate(rec, limits).has_value());

    limits.min_cols = 50;
    CHECK(validate(rec, limits).has_value());
}

TEST_CASE("height field structural check") {
    auto f = grid(2, 2, {1, 2, 3, 4});
    CHECK_NOTHROW(f.check());
    f.heights.pop_back();
    CHECK_THROWS_AS(f.check(), std::invalid_argument);
    f = grid(2, 2, {1, 2, 3, std::nan("")});
    CHECK_THROWS_AS(f.check(), std::invalid_argument);
    f.mask[3] = 0;
    f.heights[3] = 0;
    CHECK_NOTHROW(f.check());
    f.x_inc = 0;
    CHECK_THROWS_AS(f.check(), std::invalid_argument);
}

TEST_CASE("manifest parsing") {
    const auto entries = parse_manifest(
        "path,barrel_id,shot_number,land_index,excluded,reason,crosscut_y\n"
        "a.x3p,B,11,1,0,,\n"
        "\"dir, with comma/b.csv\",B,12,6,1,\"tank rash, land 6\",\n"
        "c.csv,B,13,2,false,,120.5\n");
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].meta.barrel_id == "B");
    CHECK(entries[0].meta.shot_number == 11);
    CHECK_FALSE(entries[0].excluded);
    CHECK(entries[1].path == "dir, with comma/b.csv");
    CHECK(entries[1].excluded);
    CHECK(entries[1].reason == "tank rash, land 6");
    CHECK(entries[1].meta.land_index == 6);
    REQUIRE(entries[2].crosscut_y.has_value());
    CHECK(*entries[2].crosscut_y == 120.5);

    CHECK_THROWS_AS(parse_manifest("path,barrel_id,shot_number,land_index,excluded,reason\na,B,1,7,0,\n"),
                    ScanFormatError);
    CHECK_THROWS_AS(parse_manifest("path,barrel_id,shot_number,land_index,excluded,reason\na,B,1,1,1,\n"),
                    ScanFormatError);
    CHECK_THROWS_AS(parse_manifest("path,barrel_id,land_index\n"), ScanFormatError);
}

TEST_CASE("load_scan dispatches on extension") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "bulletcmp_scan_io_test";
    fs::create_directories(dir);

    fixture::X3pLayout s;
    s.heights_m = {0, 1e-6, 2e-6, 3e-6, 4e-6, 5e-6};
    const auto bytes = fixture::x3p(s);
    {
        std::ofstream out(dir / "a.x3p", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        std::ofstream csv(dir / "b.csv");
        csv << "x_inc=1,y_inc=2\n1,2\n3,4\n";
    }
    ScanMeta meta{"B", 11, 3, ""};
    const auto x = load_scan((dir / "a.x3p").string(), meta);
    CHECK(x.field.n_cols == 3);
    CHECK(x.meta.land_index == 3);
    CHECK_FALSE(x.provenance.empty());
    const auto c = load_scan((dir / "b.csv").string(), meta);
    CHECK(c.field.y_inc == 2);
    CHECK_THROWS_AS(load_scan((dir / "c.tif").string(), meta), ScanFormatError);
    fs::remove_all(dir);
}
