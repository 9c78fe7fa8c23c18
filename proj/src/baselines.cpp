// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/baselines.hpp"

#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace spectral_bridge {

namespace {

std::vector<char> mask_flags(const HyperCube& cube, const std::vector<int>& masked) {
    std::vector<char> flags(static_cast<std::size_t>(cube.num_bands()), 0);
    for (int b : masked) {
        if (b < 0 || b >= cube.num_bands()) throw ValidationError(fmt::format("masked band {} out of range", b));
        flags[b] = 1;
    }
    return flags;
}

} // namespace

std::vector<int> groups_to_bands(const std::vector<int>& groups, int band_group) {
    std::vector<int> bands;
    for (int g : groups) {
        for (int k = 0; k < band_group; ++k) bands.push_back(g * band_group + k);
    }
    std::sort(bands.begin(), bands.end());
    return bands;
}

HyperCube gaussian_sampling_baseline(const HyperCube& cube, const std::vector<int>& masked_bands,
                                     const BandStats& stats, std::mt19937_64& rng) {
    if (stats.num_bands() != cube.num_bands()) {
        throw ValidationError(fmt::format("statistics cover {} bands, cube has {}", stats.num_bands(), cube.num_bands()));
    }
    const auto flags = mask_flags(cube, masked_bands);
    std::vector<float> out(cube.values().begin(), cube.values().end());
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto hw = cube.pixels_per_band();
    for (int b = 0; b < cube.num_bands(); ++b) {
        if (!flags[b]) continue;
        const double mu = stats.mean(b), sigma = stats.std(b);
        for (std::size_t i = 0; i < hw; ++i) out[b * hw + i] = static_cast<float>(mu + sigma * normal(rng));
    }
    return cube.with_values(std::move(out));
}

HyperCube linear_interpolation_baseline(const HyperCube& cube, const std::vector<int>& masked_bands) {
    const auto flags = mask_flags(cube, masked_bands);
    std::vector<int> known;
    for (int b = 0; b < cube.num_bands(); ++b) {
        if (!flags[b]) known.push_back(b);
    }
    if (known.empty()) throw ValidationError("linear interpolation needs at least one unmasked band");
    std::vector<float> out(cube.values().begin(), cube.values().end());
    const auto hw = cube.pixels_per_band();
    const auto& bands = cube.bands();
    for (int b = 0; b < cube.num_bands(); ++b) {
        if (!flags[b]) continue;
        const auto above = std::upper_bound(known.begin(), known.end(), b);
        float* dst = out.data() + b * hw;
        if (above == known.begin() || above == known.end()) {
            const int nearest = above == known.begin() ? known.front() : known.back();
            std::copy_n(cube.values().data() + nearest * hw, hw, dst);
            continue;
        }
        const int hi = *above, lo = *(above - 1);
        const double t = (bands[b].center_nm - bands[lo].center_nm) / (bands[hi].center_nm - bands[lo].center_nm);
        const auto vlo = cube.band(lo), vhi = cube.band(hi);
        for (std::size_t i = 0; i < hw; ++i) dst[i] = static_cast<float>(vlo[i] + t * (static_cast<double>(vhi[i]) - vlo[i]));
    }
    return cube.with_values(std::move(out));
}

HyperCube paste_bands(const HyperCube& target, const HyperCube& source, const std::vector<int>& bands) {
    if (target.num_bands() != source.num_bands() || target.height() != source.height() ||
        target.width() != source.width()) {
        throw ValidationError("paste_bands: cube shapes differ");
    }
    mask_flags(target, bands);
    std::vector<float> out(target.values().begin(), target.values().end());
    const auto hw = target.pixels_per_band();
    for (int b : bands) std::copy_n(source.values().data() + b * hw, hw, out.data() + b * hw);
    return target.with_values(std::move(out));
}

} // namespace spectral_bridge
