// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/cube_io.hpp"
#include "spectral_bridge/error.hpp"
#include "spectral_bridge/labels.hpp"
#include "spectral_bridge/splits.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

using namespace spectral_bridge;
using test_support::random_cube;
using test_support::temp_dir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

std::string raw_floats(std::size_t n, float v = 0.5f) {
    std::string s(n * sizeof(float), '\0');
    for (std::size_t i = 0; i < n; ++i) std::memcpy(s.data() + i * sizeof(float), &v, sizeof(float));
    return s;
}

} // namespace

TEST_CASE("band metadata is validated") {
    CHECK_NOTHROW(validate_band({400.0, 10.0}));
    CHECK_NOTHROW(validate_band({2500.0, 10.0}));
    CHECK_THROWS_AS(validate_band({399.9, 10.0}), ValidationError);
    CHECK_THROWS_AS(validate_band({2500.1, 10.0}), ValidationError);
    CHECK_THROWS_AS(validate_band({1000.0, 0.0}), ValidationError);
    std::vector<BandSpec> not_increasing{{500.0, 10.0}, {500.0, 10.0}};
    CHECK_THROWS_AS(validate_band_list(not_increasing), ValidationError);
}

TEST_CASE("cube construction rejects degenerate and non-finite payloads") {
    auto bands = uniform_bands(2, 500.0, 600.0);
    CHECK_THROWS_AS(HyperCube({}, 2, 2, {}), ValidationError);
    CHECK_THROWS_AS(HyperCube(bands, 0, 2, {}), ValidationError);
    CHECK_THROWS_AS(HyperCube(bands, 2, 2, std::vector<float>(7)), ValidationError);
    std::vector<float> v(8, 1.0f);
    v[5] = std::numeric_limits<float>::quiet_NaN();
    try {
        HyperCube c(bands, 2, 2, v);
        FAIL("NaN accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("index 5") != std::string::npos);
    }
}

TEST_CASE("cube files round-trip bit-exactly") {
    auto dir = temp_dir("core_roundtrip");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto c = random_cube(1 + static_cast<int>(seed % 7), 3 + static_cast<int>(seed % 5), 2 + static_cast<int>(seed % 4),
                             seed, -5.0, 5.0, "patch" + std::to_string(seed), "tile" + std::to_string(seed / 3));
        save_cube(c, dir / "c.hsc");
        auto back = load_cube(dir / "c.hsc");
        CHECK(back == c);
        CHECK(std::memcmp(back.values().data(), c.values().data(), c.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("cube header follows the text-then-binary layout") {
    auto c = random_cube(2, 2, 3, 1, 0, 1, "abc", "t7");
    std::ostringstream out;
    write_cube(c, out);
    const auto s = out.str();
    const std::string expected_prefix = "HSC1 2 2 3\n450 1950\n2400 1950\npatch=abc tile=t7\n";
    REQUIRE(s.size() == expected_prefix.size() + 12 * sizeof(float));
    CHECK(s.substr(0, expected_prefix.size()) == expected_prefix);
    float first = 0;
    std::memcpy(&first, s.data() + expected_prefix.size(), sizeof(float));
    CHECK(first == c.at(0, 0, 0));
}

TEST_CASE("EnMAP-shaped cube file") {
    auto dir = temp_dir("core_enmap");
    auto c = random_cube(202, 128, 128, 3);
    save_cube(c, dir / "big.hsc");
    auto back = load_cube(dir / "big.hsc");
    CHECK(back.num_bands() == 202);
    CHECK(back.height() == 128);
    CHECK(back.width() == 128);
}

TEST_CASE("malformed cube files are rejected with a reason") {
    auto dir = temp_dir("core_malformed");
    auto expect = [&](const std::string& content, const std::string& fragment) {
        write_text(dir / "bad.hsc", content);
        try {
            load_cube(dir / "bad.hsc");
            FAIL("accepted: " << fragment);
        } catch (const ValidationError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, std::string(e.what()));
        }
    };
    expect("HSC1 3 1 1\n500 10\n600 10\npatch=a tile=b\n" + raw_floats(3), "band count mismatch");
    expect("HSX1 1 1 1\n500 10\npatch=a tile=b\n" + raw_floats(1), "malformed cube header");
    expect("HSC1 1 2 2\n500 10\npatch=a tile=b\n" + raw_floats(3), "dimension mismatch");
    expect("HSC1 1 1 1\n500 10\npatch=a tile=b\n" + raw_floats(2), "dimension mismatch");
    expect("HSC1 2 1 1\n600 10\n500 10\npatch=a tile=b\n" + raw_floats(2), "strictly increase");
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::string payload = raw_floats(4);
    std::memcpy(payload.data() + 2 * sizeof(float), &nan, sizeof(float));
    expect("HSC1 1 2 2\n500 10\npatch=a tile=b\n" + payload, "index 2");
}

TEST_CASE("cubes with non-increasing wavelengths never exist, so cannot be written") {
    std::vector<BandSpec> bands{{600.0, 10.0}, {500.0, 10.0}};
    CHECK_THROWS_AS(HyperCube(bands, 1, 1, {1.0f, 2.0f}), ValidationError);
    CHECK_THROWS_AS(HyperCube(uniform_bands(2, 500.0, 600.0), 1, 1, {1.0f, 2.0f}, "has space"), ValidationError);
}

TEST_CASE("labels: valid rows, blanks skipped, duplicates and garbage rejected") {
    auto dir = temp_dir("core_labels");
    write_text(dir / "ok.csv", "patch_id,gas,units,value\na,CH4,ppb,1850.5\nb,CH4,ppb,1900\nc,CH4,ppb,1790\n");
    auto l = load_labels(dir / "ok.csv", Gas::CH4);
    CHECK(l.values.size() == 3);
    CHECK(l.values.at("a") == doctest::Approx(1850.5));
    CHECK(l.skipped == 0);

    write_text(dir / "blank.csv", "patch_id,gas,units,value\na,CH4,ppb,1850.5\nb,CH4,ppb,\nc,CH4,ppb,1790\n");
    auto b = load_labels(dir / "blank.csv", Gas::CH4);
    CHECK(b.values.size() == 2);
    CHECK(b.skipped == 1);

    write_text(dir / "dup.csv", "patch_id,gas,units,value\na,CH4,ppb,1\na,CH4,ppb,2\n");
    CHECK_THROWS_WITH_AS(load_labels(dir / "dup.csv", Gas::CH4), doctest::Contains("duplicate label"), ValidationError);

    write_text(dir / "junk.csv", "patch_id,gas,units,value\na,CH4,ppb,1\nb,CH4,ppb,abc\n");
    CHECK_THROWS_WITH_AS(load_labels(dir / "junk.csv", Gas::CH4), doctest::Contains(":3:"), ValidationError);

    write_text(dir / "units.csv", "patch_id,gas,units,value\na,CO2,ppb,400\n");
    CHECK_THROWS_AS(load_labels(dir / "units.csv", Gas::CO2), ValidationError);

    GasLabelSet out{Gas::NO2, "mol/m2", {{"x", 1.5e-4}, {"y", 2.0e-4}}, 0};
    save_labels(out, dir / "rt.csv");
    auto rt = load_labels(dir / "rt.csv", Gas::NO2);
    CHECK(rt.values == out.values);
}

namespace {

std::vector<PatchRef> grid_patches(int tiles, int per_tile) {
    std::vector<PatchRef> out;
    for (int t = 0; t < tiles; ++t) {
        for (int p = 0; p < per_tile; ++p) out.push_back({fmt::format("p{}_{}", t, p), fmt::format("t{}", t)});
    }
    return out;
}

} // namespace

TEST_CASE("hard split: 10 single-patch tiles at 80/10/10 gives 8/1/1") {
    auto s = make_splits(grid_patches(10, 1), SplitMode::hard, {0.8, 0.1, 0.1}, 42);
    CHECK(s.count(Split::train) == 8);
    CHECK(s.count(Split::val) == 1);
    CHECK(s.count(Split::test) == 1);
    CHECK_NOTHROW(check_split_integrity(s));
}

TEST_CASE("hard split preconditions") {
    CHECK_THROWS_AS(make_splits(grid_patches(1, 5), SplitMode::hard, {0.8, 0.1, 0.1}, 1), ValidationError);
    CHECK_THROWS_AS(make_splits({}, SplitMode::easy, {0.8, 0.1, 0.1}, 1), ValidationError);
    CHECK_THROWS_AS(make_splits(grid_patches(4, 1), SplitMode::easy, {0.8, 0.1, 0.2}, 1), ValidationError);
    CHECK_THROWS_AS(make_splits(grid_patches(4, 1), SplitMode::easy, {1.0, 0.0, 0.0}, 1), ValidationError);
}

TEST_CASE("splits are pure functions of inputs and seed, and cover every patch once") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PatchRef> patches;
        const int tiles = 3 + static_cast<int>(rng() % 20);
        for (int t = 0; t < tiles; ++t) {
            const int n = 1 + static_cast<int>(rng() % 6);
            for (int p = 0; p < n; ++p) patches.push_back({fmt::format("t{}p{}", t, p), fmt::format("t{}", t)});
        }
        for (auto mode : {SplitMode::easy, SplitMode::hard}) {
            auto a = make_splits(patches, mode, {0.7, 0.2, 0.1}, static_cast<std::uint64_t>(trial));
            auto b = make_splits(patches, mode, {0.7, 0.2, 0.1}, static_cast<std::uint64_t>(trial));
            CHECK(a.split_of == b.split_of);
            CHECK(a.split_of.size() == patches.size());
            CHECK_NOTHROW(check_split_integrity(a));
        }
    }
}

TEST_CASE("every split is non-empty in hard mode when enough tiles exist") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto s = make_splits(grid_patches(3, 1 + static_cast<int>(seed % 4)), SplitMode::hard, {0.8, 0.1, 0.1}, seed);
        CHECK(s.count(Split::train) > 0);
        CHECK(s.count(Split::val) > 0);
        CHECK(s.count(Split::test) > 0);
    }
}

TEST_CASE("split integrity check catches a straddling tile") {
    auto s = make_splits(grid_patches(5, 2), SplitMode::hard, {0.6, 0.2, 0.2}, 3);
    const auto victim = s.split_of.begin()->first;
    s.split_of[victim] = s.split_of[victim] == Split::train ? Split::test : Split::train;
    CHECK_THROWS_AS(check_split_integrity(s), ValidationError);
}

TEST_CASE("split files round-trip") {
    auto dir = temp_dir("core_splits");
    auto s = make_splits(grid_patches(6, 3), SplitMode::hard, {0.5, 0.25, 0.25}, 9);
    save_splits(s, dir / "s.csv");
    auto back = load_splits(dir / "s.csv");
    CHECK(back.mode == SplitMode::hard);
    CHECK(back.split_of == s.split_of);
    CHECK(back.tile_of == s.tile_of);
}
