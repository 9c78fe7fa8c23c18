// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/error.hpp"
#include "spectral_bridge/metrics.hpp"
#include "spectral_bridge/srf.hpp"
#include "spectral_bridge/stats.hpp"
#include "spectral_bridge/synthgen.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

using namespace spectral_bridge;

namespace {

SceneConfig line_scene() {
    SceneConfig c;
    c.bands = 202;
    c.height = c.width = 8;
    c.lines = {{1650.0, 20.0, 0.6}};
    return c;
}

int nearest_band(const std::vector<BandSpec>& bands, double nm) {
    int best = 0;
    for (int b = 1; b < static_cast<int>(bands.size()); ++b)
        if (std::abs(bands[b].center_nm - nm) < std::abs(bands[best].center_nm - nm)) best = b;
    return best;
}

double variance(const std::vector<double>& v) {
    double m = 0, s = 0;
    for (double x : v) m += x / v.size();
    for (double x : v) s += (x - m) * (x - m);
    return s / v.size();
}

} // namespace

TEST_CASE("scenes are pure functions of config and seed") {
    auto cfg = line_scene();
    cfg.noise_std = 0.01;
    auto a = gen_scene(cfg, 42), b = gen_scene(cfg, 42), c = gen_scene(cfg, 43);
    CHECK(a.cube == b.cube);
    CHECK(std::memcmp(a.cube.values().data(), b.cube.values().data(), a.cube.size() * sizeof(float)) == 0);
    CHECK(a.line_depths == b.line_depths);
    CHECK_FALSE(a.cube == c.cube);
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    CHECK(derive_seed(7, 3) != derive_seed(7, 4));

    DatasetConfig dc;
    dc.scene = cfg;
    dc.scene.bands = 16;
    dc.tiles = 3;
    dc.patches_per_tile = 2;
    dc.seed = 5;
    auto d1 = gen_dataset(dc), d2 = gen_dataset(dc);
    REQUIRE(d1.scenes.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(d1.scenes[i].cube == d2.scenes[i].cube);
    CHECK(d1.labels.values == d2.labels.values);
    CHECK(d1.scenes[3].cube.tile_id() == d1.scenes[2].cube.tile_id());
    CHECK(d1.scenes[2].cube.tile_id() != d1.scenes[1].cube.tile_id());
}

TEST_CASE("one endmember without noise or lines gives one spectrum everywhere") {
    SceneConfig cfg;
    cfg.endmembers = 1;
    auto s = gen_scene(cfg, 1);
    for (int b = 0; b < s.cube.num_bands(); ++b) {
        const auto band = s.cube.band(b);
        for (float v : band) CHECK(v == band[0]);
    }
}

TEST_CASE("zero-depth lines leave the scene unchanged") {
    auto plain = line_scene();
    plain.lines.clear();
    auto zero = line_scene();
    zero.lines[0].max_depth = 0.0;
    auto a = gen_scene(plain, 9), b = gen_scene(zero, 9);
    CHECK(a.cube == b.cube);
    CHECK(b.line_depths == std::vector<double>{0.0});
}

TEST_CASE("scene values stay in the scaled reflectance range") {
    SceneConfig cfg;
    auto s = gen_scene(cfg, 3);
    for (float v : s.cube.values()) CHECK((v >= 0.0f && v <= 1.3f * cfg.scale));
    cfg.lines = {{2600.0, 10.0, 0.5}};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.lines = {{1600.0, 10.0, 1.0}};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("Gaussian sensor responses") {
    auto srf = gen_sensor({{1000.0, 40.0}, {1600.0, 90.0}});
    for (const auto& band : srf.bands) {
        double peak = 0;
        for (const auto& s : band.samples) {
            CHECK(s.response >= 0.0);
            peak = std::max(peak, s.response);
        }
        for (const auto& s : band.samples) {
            if (s.wavelength_nm == band.spec.center_nm) CHECK(s.response == peak);
            if (std::abs(s.wavelength_nm - band.spec.center_nm) == band.spec.fwhm_nm / 2)
                CHECK(std::abs(s.response - 0.5 * peak) <= 1e-6);
        }
    }
    // Truncation at three standard deviations.
    const double sigma = 40.0 / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    CHECK(srf.bands[0].samples.front().wavelength_nm == std::ceil(1000.0 - 3 * sigma));
    CHECK(srf.bands[0].samples.back().wavelength_nm == std::floor(1000.0 + 3 * sigma));
    CHECK(gen_sensor(broadband_sensor_defs()).bands.size() == 12);
}

TEST_CASE("labels are affine in line depth") {
    auto cfg = line_scene();
    std::vector<Scene> scenes;
    for (std::uint64_t s = 0; s < 40; ++s) scenes.push_back(gen_scene(cfg, s, "p" + std::to_string(s), "t"));
    LabelModel m;
    std::mt19937_64 rng(1);
    auto labels = gen_labels(scenes, m, rng);
    for (const auto& s : scenes)
        CHECK(labels.values.at(s.cube.patch_id()) == doctest::Approx(m.intercept + m.slope * s.line_depths[0]));
    for (const auto& a : scenes)
        for (const auto& b : scenes)
            if (a.line_depths[0] < b.line_depths[0]) CHECK(labels.values.at(a.cube.patch_id()) < labels.values.at(b.cube.patch_id()));

    auto flat = line_scene();
    flat.lines[0].max_depth = 0.0;
    std::vector<Scene> zero{gen_scene(flat, 1, "z", "t")};
    CHECK(gen_labels(zero, m, rng).values.at("z") == m.intercept);
    CHECK(labels.units == std::string(canonical_units(m.gas)));
}

TEST_CASE("line depth measured from the full spectrum predicts the labels") {
    const auto cfg = line_scene();
    const auto bands = cfg.band_list();
    const int c = nearest_band(bands, 1650.0);
    std::vector<double> est, y;
    LabelModel m;
    std::vector<Scene> scenes;
    for (std::uint64_t s = 0; s < 60; ++s) scenes.push_back(gen_scene(cfg, 100 + s, "p" + std::to_string(s), "t"));
    std::mt19937_64 rng(2);
    const auto labels = gen_labels(scenes, m, rng);
    for (const auto& s : scenes) {
        const auto sig = spatial_average(s.cube);
        // Continuum under the line from bands four steps away on either side.
        const double continuum = 0.5 * (sig.values[c - 4] + sig.values[c + 4]);
        est.push_back(1.0 - sig.values[c] / continuum);
        y.push_back(labels.values.at(s.cube.patch_id()));
    }
    // Least-squares line from estimated depth to label.
    double mx = 0, my = 0, sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        mx += est[i] / est.size();
        my += y[i] / y.size();
    }
    for (std::size_t i = 0; i < est.size(); ++i) {
        sxy += (est[i] - mx) * (y[i] - my);
        sxx += (est[i] - mx) * (est[i] - mx);
    }
    std::vector<double> fit;
    for (double e : est) fit.push_back(my + sxy / sxx * (e - mx));
    CHECK(r2_metric(y, fit) > 0.99);
}

TEST_CASE("broad bands attenuate the line signal") {
    auto cfg = line_scene();
    auto plain = cfg;
    plain.lines.clear();
    const auto bands = cfg.band_list();
    const int c = nearest_band(bands, 1650.0);
    const auto srf = gen_sensor(broadband_sensor_defs());
    const auto w = build_weight_matrix(srf, bands);
    int broad = 0;
    for (int t = 0; t < w.cols(); ++t)
        if (std::abs(w.target_bands[t].center_nm - 1650.0) < std::abs(w.target_bands[broad].center_nm - 1650.0)) broad = t;
    REQUIRE(w.target_bands[broad].fwhm_nm > cfg.lines[0].width_nm);

    std::vector<double> depth, fine, coarse;
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto with = gen_scene(cfg, s), without = gen_scene(plain, s);
        depth.push_back(with.line_depths[0]);
        const auto a = spatial_average(with.cube), b = spatial_average(without.cube);
        fine.push_back(a.values[c] - b.values[c]);
        const auto pa = spatial_average(project_cube(with.cube, w)), pb = spatial_average(project_cube(without.cube, w));
        coarse.push_back(pa.values[broad] - pb.values[broad]);
    }
    CHECK(variance(coarse) / variance(depth) < variance(fine) / variance(depth));
}

TEST_CASE("dataset files") {
    auto dir = test_support::temp_dir("synth_ds");
    DatasetConfig dc;
    dc.scene.bands = 16;
    dc.scene.height = dc.scene.width = 4;
    dc.scene.lines = {{1650.0, 20.0, 0.5}};
    dc.tiles = 2;
    dc.patches_per_tile = 2;
    auto ds = gen_dataset(dc);
    save_dataset(ds, dir);
    CHECK(std::filesystem::exists(dir / "srf.csv"));
    CHECK(std::filesystem::exists(dir / "labels.csv"));
    CHECK(std::filesystem::exists(dir / "truth.csv"));
    int cubes = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "cubes")) cubes += e.path().extension() == ".hsc";
    CHECK(cubes == 4);
    std::ifstream truth(dir / "truth.csv");
    std::string header;
    std::getline(truth, header);
    CHECK(header == "patch_id,tile_id,seed,depth_0");
}
