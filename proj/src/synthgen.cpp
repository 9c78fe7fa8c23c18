// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/synthgen.hpp"

#include "spectral_bridge/cube_io.hpp"
#include "spectral_bridge/error.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

namespace spectral_bridge {

namespace {

// FWHM = kFwhmToSigma * sigma for a Gaussian.
const double kFwhmToSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
    std::seed_seq seq{seed, id};
    return std::mt19937_64(seq);
}

enum Stream : std::uint64_t { kContinuum = 0, kLines = 1, kNoise = 2 };

} // namespace

void SceneConfig::validate() const {
    if (bands < 1 || height < 1 || width < 1) throw ValidationError("scene: bands, height and width must be >= 1");
    if (endmembers < 1 || spline_knots < 4 || blobs < 1 || blob_scale <= 0.0) {
        throw ValidationError("scene: need >= 1 endmember, >= 4 spline knots, >= 1 blob and a positive blob scale");
    }
    if (brightness_jitter < 0.0 || brightness_jitter >= 1.0) throw ValidationError("scene: brightness jitter must lie in [0, 1)");
    if (noise_std < 0.0 || scale <= 0.0) throw ValidationError("scene: noise must be >= 0 and scale > 0");
    for (const auto& l : lines) {
        if (l.center_nm < kMinWavelengthNm || l.center_nm > kMaxWavelengthNm) {
            throw ValidationError(fmt::format("scene: absorption center {} nm outside [400, 2500]", l.center_nm));
        }
        if (l.max_depth < 0.0 || l.max_depth >= 1.0 || l.width_nm <= 0.0) {
            throw ValidationError("scene: absorption depth must lie in [0, 1) and width must be positive");
        }
    }
    validate_band_list(band_list());
}

std::vector<BandSpec> SceneConfig::band_list() const {
    return uniform_bands(bands, first_nm, last_nm, band_fwhm_nm);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return stream(master, index)();
}

std::vector<std::vector<double>> endmember_library(const SceneConfig& cfg, const std::vector<BandSpec>& bands) {
    auto rng = stream(cfg.library_seed, 0);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const double step = (kMaxWavelengthNm - kMinWavelengthNm) / (cfg.spline_knots - 1);
    std::vector<std::vector<double>> out;
    for (int k = 0; k < cfg.endmembers; ++k) {
        std::vector<double> knots(static_cast<std::size_t>(cfg.spline_knots));
        for (auto& v : knots) v = u(rng);
        const boost::math::interpolators::cardinal_cubic_b_spline<double> spline(knots.begin(), knots.end(),
                                                                                  kMinWavelengthNm, step);
        std::vector<double> spectrum;
        spectrum.reserve(bands.size());
        for (const auto& b : bands) spectrum.push_back(std::clamp(spline(b.center_nm), 0.0, 1.0));
        out.push_back(std::move(spectrum));
    }
    return out;
}

Scene gen_scene(const SceneConfig& cfg, std::uint64_t seed, const std::string& patch_id, const std::string& tile_id) {
    cfg.validate();
    const auto bands = cfg.band_list();
    const auto library = endmember_library(cfg, bands);
    const int H = cfg.height, W = cfg.width, B = cfg.bands, K = cfg.endmembers;
    const auto hw = static_cast<std::size_t>(H) * W;

    auto crng = stream(seed, kContinuum);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> abundance(static_cast<std::size_t>(K) * hw, 0.0);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < cfg.blobs; ++n) {
            const double cy = unit(crng) * H, cx = unit(crng) * W;
            const double amp = 0.2 + unit(crng);
            const double s = cfg.blob_scale * (0.5 + unit(crng));
            for (int y = 0; y < H; ++y) {
                for (int x = 0; x < W; ++x) {
                    const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    abundance[k * hw + static_cast<std::size_t>(y) * W + x] += amp * std::exp(-r2 / (2 * s * s));
                }
            }
        }
    }
    for (std::size_t i = 0; i < hw; ++i) {
        double total = 0.0;
        for (int k = 0; k < K; ++k) total += abundance[k * hw + i] += 1e-3;
        for (int k = 0; k < K; ++k) abundance[k * hw + i] /= total;
    }
    const double brightness = 1.0 + cfg.brightness_jitter * (2.0 * unit(crng) - 1.0);

    auto lrng = stream(seed, kLines);
    std::vector<double> depths;
    for (const auto& l : cfg.lines) depths.push_back(l.max_depth * unit(lrng));
    std::vector<double> transmittance(static_cast<std::size_t>(B), 1.0);
    for (int b = 0; b < B; ++b) {
        for (std::size_t j = 0; j < cfg.lines.size(); ++j) {
            const auto& l = cfg.lines[j];
            transmittance[b] *= 1.0 - depths[j] * gaussian_response(l.center_nm, l.width_nm, bands[b].center_nm);
        }
    }

    auto nrng = stream(seed, kNoise);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<float> values(static_cast<std::size_t>(B) * hw);
    for (int b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < hw; ++i) {
            double r = 0.0;
            for (int k = 0; k < K; ++k) r += abundance[k * hw + i] * library[k][b];
            double v = brightness * r * transmittance[b];
            if (cfg.noise_std > 0.0) v += cfg.noise_std * normal(nrng);
            values[b * hw + i] = static_cast<float>(cfg.scale * v);
        }
    }
    return {HyperCube(bands, H, W, std::move(values), patch_id, tile_id), std::move(depths)};
}

double gaussian_response(double center_nm, double fwhm_nm, double lambda_nm) {
    const double sigma = fwhm_nm / kFwhmToSigma;
    const double z = (lambda_nm - center_nm) / sigma;
    return std::exp(-0.5 * z * z);
}

SrfTable gen_sensor(const std::vector<std::pair<double, double>>& center_fwhm) {
    SrfTable srf;
    for (std::size_t i = 0; i < center_fwhm.size(); ++i) {
        const auto [center, fwhm] = center_fwhm[i];
        SrfBand band{fmt::format("B{:02}", i + 1), BandSpec{center, fwhm}, {}};
        validate_band(band.spec);
        const double half = 3.0 * fwhm / kFwhmToSigma;
        const auto lo = static_cast<int>(std::ceil(std::max(center - half, kMinWavelengthNm) - center));
        const auto hi = static_cast<int>(std::floor(std::min(center + half, kMaxWavelengthNm) - center));
        for (int k = lo; k <= hi; ++k) {
            const double lambda = center + k;
            band.samples.push_back({lambda, gaussian_response(center, fwhm, lambda)});
        }
        srf.bands.push_back(std::move(band));
    }
    validate_srf(srf);
    return srf;
}

std::vector<std::pair<double, double>> broadband_sensor_defs() {
    return {{443, 20},  {490, 65},  {560, 35},  {665, 30},  {705, 15},   {740, 15},
            {783, 20},  {842, 115}, {865, 20},  {945, 20},  {1610, 90},  {2190, 180}};
}

GasLabelSet gen_labels(const std::vector<Scene>& scenes, const LabelModel& model, std::mt19937_64& rng) {
    GasLabelSet set;
    set.gas = model.gas;
    set.units = std::string(canonical_units(model.gas));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& s : scenes) {
        if (model.line < 0 || static_cast<std::size_t>(model.line) >= s.line_depths.size()) {
            throw ValidationError(fmt::format("labels: scene '{}' has no absorption line {}", s.cube.patch_id(), model.line));
        }
        double v = model.intercept + model.slope * s.line_depths[model.line];
        if (model.noise_std > 0.0) v += model.noise_std * normal(rng);
        if (!set.values.emplace(s.cube.patch_id(), v).second) {
            throw ValidationError(fmt::format("duplicate label for '{}'", s.cube.patch_id()));
        }
    }
    return set;
}

Dataset gen_dataset(const DatasetConfig& cfg) {
    if (cfg.tiles < 1 || cfg.patches_per_tile < 1) throw ValidationError("dataset: tiles and patches per tile must be >= 1");
    Dataset ds;
    for (int t = 0; t < cfg.tiles; ++t) {
        for (int p = 0; p < cfg.patches_per_tile; ++p) {
            const auto index = static_cast<std::uint64_t>(t) * cfg.patches_per_tile + p;
            const auto seed = derive_seed(cfg.seed, index);
            ds.seeds.push_back(seed);
            ds.scenes.push_back(gen_scene(cfg.scene, seed, fmt::format("p{:05}", index), fmt::format("t{:03}", t)));
        }
    }
    ds.srf = gen_sensor(cfg.sensor);
    if (!cfg.scene.lines.empty()) {
        std::mt19937_64 rng(derive_seed(cfg.seed, std::uint64_t{1} << 32));
        ds.labels = gen_labels(ds.scenes, cfg.labels, rng);
    } else {
        ds.labels.gas = cfg.labels.gas;
        ds.labels.units = std::string(canonical_units(cfg.labels.gas));
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "cubes");
    for (const auto& s : ds.scenes) save_cube(s.cube, dir / "cubes" / (s.cube.patch_id() + ".hsc"));
    save_srf(ds.srf, dir / "srf.csv");
    save_labels(ds.labels, dir / "labels.csv");
    std::ofstream truth(dir / "truth.csv", std::ios::trunc);
    if (!truth) throw RuntimeFailure(fmt::format("cannot write '{}'", (dir / "truth.csv").string()));
    truth << "patch_id,tile_id,seed";
    const std::size_t lines = ds.scenes.empty() ? 0 : ds.scenes.front().line_depths.size();
    for (std::size_t j = 0; j < lines; ++j) truth << ",depth_" << j;
    truth << '\n';
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        const auto& s = ds.scenes[i];
        truth << s.cube.patch_id() << ',' << s.cube.tile_id() << ',' << ds.seeds[i];
        for (double d : s.line_depths) truth << ',' << fmt::format("{}", d);
        truth << '\n';
    }
}

} // namespace spectral_bridge
