// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/error.hpp"
#include "spectral_bridge/stats.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace spectral_bridge;
using test_support::random_cube;

namespace {

// Two-pass population mean and std of one band across cubes, in long double.
std::pair<double, double> two_pass(const std::vector<HyperCube>& cubes, int b) {
    long double sum = 0, n = 0;
    for (const auto& c : cubes)
        for (float v : c.band(b)) {
            sum += v;
            n += 1;
        }
    const long double mean = sum / n;
    long double ss = 0;
    for (const auto& c : cubes)
        for (float v : c.band(b)) ss += (v - mean) * (v - mean);
    return {static_cast<double>(mean), static_cast<double>(std::sqrt(ss / n))};
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

HyperCube one_band(std::vector<float> v, int h, int w) {
    return {{{500.0, 10.0}}, h, w, std::move(v)};
}

} // namespace

TEST_CASE("population statistics of 1, 2, 3") {
    auto s = accumulate_stats({}, one_band({1.0f, 2.0f, 3.0f}, 1, 3));
    CHECK(s.mean(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.std(0) == doctest::Approx(0.8164965809).epsilon(1e-10));
    CHECK(s.count() == 3);
}

TEST_CASE("constant band has zero spread and normalizes to zeros") {
    auto c = one_band(std::vector<float>(9, 4.25f), 3, 3);
    auto s = accumulate_stats({}, c);
    CHECK(s.std(0) == 0.0);
    CHECK(s.std_clamped(0) == kStdFloor);
    const auto n = normalize_bandwise(c, s);
    for (float v : n.values()) CHECK(v == 0.0f);
}

TEST_CASE("streaming statistics match the two-pass oracle and are order independent") {
    std::vector<HyperCube> cubes;
    for (std::uint64_t i = 0; i < 6; ++i) cubes.push_back(random_cube(5, 4 + static_cast<int>(i), 3, 100 + i, -50, 3000));
    BandStats fwd, rev;
    for (const auto& c : cubes) fwd.add(c);
    for (auto it = cubes.rbegin(); it != cubes.rend(); ++it) rev.add(*it);
    for (int b = 0; b < 5; ++b) {
        auto [m, s] = two_pass(cubes, b);
        CHECK(close_rel(fwd.mean(b), m, 1e-9));
        CHECK(close_rel(fwd.std(b), s, 1e-9));
        CHECK(close_rel(rev.mean(b), fwd.mean(b), 1e-9));
        CHECK(close_rel(rev.std(b), fwd.std(b), 1e-9));
    }
}

TEST_CASE("merging disjoint accumulators equals one pass over everything") {
    std::vector<HyperCube> cubes;
    for (std::uint64_t i = 0; i < 7; ++i) cubes.push_back(random_cube(3, 5, 5, 7 + i, 0, 1));
    BandStats a, b, all;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        (i < 3 ? a : b).add(cubes[i]);
        all.add(cubes[i]);
    }
    auto m = BandStats::merge(a, b);
    CHECK(m.count() == all.count());
    for (int k = 0; k < 3; ++k) {
        auto [mean, sd] = two_pass(cubes, k);
        CHECK(close_rel(m.mean(k), mean, 1e-9));
        CHECK(close_rel(m.std(k), sd, 1e-9));
    }
    CHECK(BandStats::merge(BandStats{}, a) == a);
}

TEST_CASE("band-count mismatch is rejected") {
    auto s = accumulate_stats({}, random_cube(3, 2, 2, 1));
    CHECK_THROWS_AS(s.add(random_cube(4, 2, 2, 1)), ValidationError);
    CHECK_THROWS_AS(normalize_bandwise(random_cube(4, 2, 2, 1), s), ValidationError);
}

TEST_CASE("band-wise normalization by substitution and its inverse") {
    auto stats = BandStats::from_moments({{500.0, 10.0}}, {100.0}, {50.0}, 10);
    auto n = normalize_bandwise(one_band({150.0f, 100.0f}, 1, 2), stats);
    CHECK(n.at(0, 0, 0) == 1.0f);
    CHECK(n.at(0, 0, 1) == 0.0f);
    auto d = denormalize_bandwise(one_band({1.0f}, 1, 1), stats);
    CHECK(d.at(0, 0, 0) == 150.0f);
    auto unit = BandStats::from_moments({{500.0, 10.0}}, {0.0}, {1.0}, 1);
    auto c = one_band({-3.5f, 7.25f}, 1, 2);
    CHECK(denormalize_bandwise(c, unit) == c);
}

TEST_CASE("normalize then denormalize is the identity within 1e-5 relative") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto c = random_cube(6, 5, 4, seed, 10, 5000);
        auto s = accumulate_stats({}, c);
        auto back = denormalize_bandwise(normalize_bandwise(c, s), s);
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(std::abs(back.values()[i] - c.values()[i]) <= 1e-5 * std::abs(c.values()[i]));
        }
    }
}

TEST_CASE("training-set bands are standardized by their own statistics") {
    std::vector<HyperCube> cubes;
    BandStats s;
    for (std::uint64_t i = 0; i < 5; ++i) {
        cubes.push_back(random_cube(4, 6, 6, 30 + i, 200, 900));
        s.add(cubes.back());
    }
    std::vector<HyperCube> normed;
    for (const auto& c : cubes) normed.push_back(normalize_bandwise(c, s));
    for (int b = 0; b < 4; ++b) {
        auto [m, sd] = two_pass(normed, b);
        CHECK(std::abs(m) < 1e-3);
        CHECK(std::abs(sd - 1.0) < 1e-3);
    }
}

TEST_CASE("spatial average") {
    auto px = random_cube(5, 1, 1, 3);
    auto sig = spatial_average(px);
    for (int b = 0; b < 5; ++b) CHECK(sig.values[b] == static_cast<double>(px.at(b, 0, 0)));

    std::vector<float> checker(16);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) checker[y * 4 + x] = (x + y) % 2 ? 2.0f : 0.0f;
    CHECK(spatial_average(one_band(checker, 4, 4)).values[0] == 1.0);

    auto c = random_cube(3, 4, 4, 11, 0, 1000);
    auto s = spatial_average(c);
    for (int b = 0; b < 3; ++b) {
        double sum = 0;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) sum += c.at(b, y, x);
        CHECK(std::abs(s.values[b] - sum / 16.0) < 1e-7);
    }

    // Permutation invariance over pixels.
    std::vector<float> v(c.values().begin(), c.values().end());
    std::vector<float> perm(v.size());
    for (int b = 0; b < 3; ++b)
        for (int i = 0; i < 16; ++i) perm[b * 16 + i] = v[b * 16 + (i * 5 + 3) % 16];
    auto ps = spatial_average(c.with_values(perm));
    for (int b = 0; b < 3; ++b) CHECK(ps.values[b] == doctest::Approx(s.values[b]).epsilon(1e-12));
}

TEST_CASE("global normalization") {
    SpectralSignature sig{{10.0, 20.0}, {{500.0, 10.0}, {600.0, 10.0}}};
    auto n = normalize_global(sig, {10.0, 5.0});
    CHECK(n.values == std::vector<double>{0.0, 2.0});
    CHECK(normalize_global(sig, {0.0, 1.0}).values == sig.values);
    CHECK_THROWS_AS(normalize_global(sig, {0.0, 0.0}), ValidationError);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int t = 0; t < 50; ++t) {
        SpectralSignature s;
        for (int b = 0; b < 8; ++b) {
            s.values.push_back(u(rng));
            s.bands.push_back({500.0 + b, 1.0});
        }
        auto g = normalize_global(s, {u(rng), 0.1 + std::abs(u(rng))});
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) CHECK((s.values[i] < s.values[j]) == (g.values[i] < g.values[j]));
    }

    std::vector<SpectralSignature> sigs{sig, SpectralSignature{{30.0, 40.0}, sig.bands}};
    auto gs = compute_global_stats(sigs);
    CHECK(gs.mean == doctest::Approx(25.0));
    CHECK(gs.std == doctest::Approx(std::sqrt(125.0)));
}

TEST_CASE("stats file round-trip") {
    auto dir = test_support::temp_dir("pre_stats");
    auto s = accumulate_stats({}, random_cube(4, 3, 3, 8, 0, 100));
    save_stats(s, GlobalStats{3.5, 1.25}, dir / "s.csv");
    auto f = load_stats(dir / "s.csv");
    REQUIRE(f.global.has_value());
    CHECK(f.global->mean == 3.5);
    CHECK(f.global->std == 1.25);
    REQUIRE(f.bands.num_bands() == 4);
    for (int b = 0; b < 4; ++b) {
        CHECK(f.bands.mean(b) == doctest::Approx(s.mean(b)).epsilon(1e-12));
        CHECK(f.bands.std(b) == doctest::Approx(s.std(b)).epsilon(1e-12));
    }
}
