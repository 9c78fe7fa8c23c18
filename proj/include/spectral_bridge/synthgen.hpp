// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/cube.hpp"
#include "spectral_bridge/labels.hpp"
#include "spectral_bridge/srf.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace spectral_bridge {

/// Multiplicative Gaussian absorption feature. Each scene draws its depth uniformly in [0, max_depth).
struct AbsorptionLine {
    double center_nm = 1650.0;
    double width_nm = 15.0;   // full width at half depth
    double max_depth = 0.5;   // in [0, 1)
};

struct SceneConfig {
    int bands = 32;
    int height = 16;
    int width = 16;
    double first_nm = 420.0;
    double last_nm = 2450.0;
    double band_fwhm_nm = 0.0;     // 0: band spacing
    int endmembers = 4;
    int spline_knots = 10;
    int blobs = 4;                 // Gaussian blobs per abundance map
    double blob_scale = 4.0;       // blob std in pixels
    double brightness_jitter = 0.3;  // per-scene factor drawn from [1 - j, 1 + j]
    std::vector<AbsorptionLine> lines;
    double noise_std = 0.0;        // additive, reflectance units
    double scale = 10000.0;        // reflectance -> raw digital range
    std::uint64_t library_seed = 7;  // endmember library shared by every scene

    /// Throws ValidationError on an inconsistent configuration.
    void validate() const;
    std::vector<BandSpec> band_list() const;
};

struct Scene {
    HyperCube cube;
    std::vector<double> line_depths;  // one per configured line
};

/// Per-scene seed for scene `index` of a run with `master` seed: the first output of
/// std::mt19937_64 seeded with std::seed_seq{master, index}.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Endmember reflectance spectra in [0, 1] (cubic B-splines over wavelength), sampled at `bands`.
std::vector<std::vector<double>> endmember_library(const SceneConfig& cfg, const std::vector<BandSpec>& bands);

/// Smooth mixture scene: spatial abundance maps over a shared endmember library, a per-scene
/// brightness, multiplicative absorption lines and additive noise. Pure in (cfg, seed); the
/// continuum, line depths and noise use independent random streams.
Scene gen_scene(const SceneConfig& cfg, std::uint64_t seed, const std::string& patch_id = "scene",
                const std::string& tile_id = "tile");

/// Gaussian response of a band with the given center and FWHM, peak 1.
double gaussian_response(double center_nm, double fwhm_nm, double lambda_nm);

/// Gaussian SRFs sampled every 1 nm on a grid through the band center, truncated at +-3 sigma
/// and at the [400, 2500] nm range.
SrfTable gen_sensor(const std::vector<std::pair<double, double>>& center_fwhm);

/// Twelve broad bands resembling a Sentinel-2 instrument without its cirrus band.
std::vector<std::pair<double, double>> broadband_sensor_defs();

/// Linear label model tied to one absorption line's depth.
struct LabelModel {
    Gas gas = Gas::CH4;
    int line = 0;
    double intercept = 1800.0;
    double slope = 400.0;
    double noise_std = 0.0;
};

/// label = intercept + slope * depth(line) + noise, per scene.
GasLabelSet gen_labels(const std::vector<Scene>& scenes, const LabelModel& model, std::mt19937_64& rng);

struct DatasetConfig {
    SceneConfig scene;
    int tiles = 10;
    int patches_per_tile = 4;
    LabelModel labels;
    std::vector<std::pair<double, double>> sensor = broadband_sensor_defs();
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<Scene> scenes;
    std::vector<std::uint64_t> seeds;
    SrfTable srf;
    GasLabelSet labels;
};

/// Scene i (tile i / patches_per_tile) uses derive_seed(seed, i); label noise uses derive_seed(seed, 2^32).
Dataset gen_dataset(const DatasetConfig& cfg);

/// Writes cubes/<patch_id>.hsc, srf.csv, labels.csv and truth.csv (patch_id,tile_id,seed,depth_0..).
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

} // namespace spectral_bridge
