// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/tokens.hpp"

#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace spectral_bridge {

void check_patch_divisibility(int bands, int height, int width, int band_group, int patch) {
    if (band_group < 1 || patch < 1) throw ValidationError("band group and patch size must be >= 1");
    if (bands % band_group != 0) {
        throw ValidationError(fmt::format("band group {} does not divide {} bands", band_group, bands));
    }
    if (height % patch != 0 || width % patch != 0) {
        throw ValidationError(fmt::format("patch size {} does not divide {}x{}", patch, height, width));
    }
}

std::vector<double> group_centers(const std::vector<BandSpec>& bands, int band_group) {
    const int groups = static_cast<int>(bands.size()) / band_group;
    std::vector<double> out(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g) {
        double sum = 0.0;
        for (int k = 0; k < band_group; ++k) sum += bands[g * band_group + k].center_nm;
        out[g] = sum / band_group;
    }
    return out;
}

PatchSet patchify(const HyperCube& cube, int band_group, int patch) {
    check_patch_divisibility(cube.num_bands(), cube.height(), cube.width(), band_group, patch);
    PatchSet ps;
    ps.band_group = band_group;
    ps.patch = patch;
    ps.groups = cube.num_bands() / band_group;
    ps.grid_h = cube.height() / patch;
    ps.grid_w = cube.width() / patch;
    ps.bands = cube.bands();
    const auto centers = group_centers(cube.bands(), band_group);
    const int len = ps.patch_length();
    ps.coords.reserve(static_cast<std::size_t>(ps.positions()) * ps.groups);
    ps.values.resize(static_cast<std::size_t>(ps.positions()) * ps.groups * len);
    float* dst = ps.values.data();
    for (int gy = 0; gy < ps.grid_h; ++gy) {
        for (int gx = 0; gx < ps.grid_w; ++gx) {
            for (int g = 0; g < ps.groups; ++g) {
                ps.coords.push_back({gx, gy, g, centers[g]});
                for (int k = 0; k < band_group; ++k) {
                    for (int py = 0; py < patch; ++py) {
                        for (int px = 0; px < patch; ++px) {
                            *dst++ = cube.at(g * band_group + k, gy * patch + py, gx * patch + px);
                        }
                    }
                }
            }
        }
    }
    return ps;
}

HyperCube reassemble(const std::vector<float>& predictions, const std::vector<TokenCoord>& coords,
                     int band_group, int patch, const std::vector<BandSpec>& bands, int height,
                     int width, const std::string& patch_id, const std::string& tile_id) {
    const int nb = static_cast<int>(bands.size());
    check_patch_divisibility(nb, height, width, band_group, patch);
    const int groups = nb / band_group;
    const int grid_h = height / patch;
    const int grid_w = width / patch;
    const int len = band_group * patch * patch;
    const std::size_t expected = static_cast<std::size_t>(groups) * grid_h * grid_w;
    if (predictions.size() != coords.size() * static_cast<std::size_t>(len)) {
        throw ValidationError("reassemble: prediction length does not match coordinate count");
    }

    std::vector<char> seen(expected, 0);
    std::vector<float> data(static_cast<std::size_t>(nb) * height * width, 0.0f);
    for (std::size_t t = 0; t < coords.size(); ++t) {
        const auto& c = coords[t];
        if (c.x < 0 || c.x >= grid_w || c.y < 0 || c.y >= grid_h || c.group < 0 || c.group >= groups) {
            throw ValidationError(fmt::format("reassemble: coordinate (x={}, y={}, group={}) out of range",
                                              c.x, c.y, c.group));
        }
        const std::size_t slot = (static_cast<std::size_t>(c.y) * grid_w + c.x) * groups + c.group;
        if (seen[slot]) {
            throw ValidationError(fmt::format("reassemble: duplicate coordinate (x={}, y={}, group={})",
                                              c.x, c.y, c.group));
        }
        seen[slot] = 1;
        const float* src = predictions.data() + t * len;
        for (int k = 0; k < band_group; ++k) {
            const int b = c.group * band_group + k;
            for (int py = 0; py < patch; ++py) {
                for (int px = 0; px < patch; ++px) {
                    const std::size_t idx =
                        (static_cast<std::size_t>(b) * height + c.y * patch + py) * width + c.x * patch + px;
                    data[idx] = *src++;
                }
            }
        }
    }
    for (std::size_t slot = 0; slot < expected; ++slot) {
        if (!seen[slot]) {
            const auto g = static_cast<int>(slot % groups);
            const auto pos = static_cast<int>(slot / groups);
            throw ValidationError(fmt::format("reassemble: missing coordinate (x={}, y={}, group={})",
                                              pos % grid_w, pos / grid_w, g));
        }
    }
    return HyperCube(bands, height, width, std::move(data), patch_id, tile_id);
}

int mask_count(double p_mask, int groups) {
    if (!(p_mask >= 0.0 && p_mask < 1.0)) {
        throw ValidationError(fmt::format("mask fraction {} outside [0, 1)", p_mask));
    }
    return static_cast<int>(std::floor(p_mask * groups + 1e-9));
}

std::vector<int> select_mask_groups(int groups, double p_mask, std::mt19937_64& rng) {
    const int k = mask_count(p_mask, groups);
    std::vector<int> all(static_cast<std::size_t>(groups));
    std::iota(all.begin(), all.end(), 0);
    // Partial Fisher-Yates: the first k entries become a uniform k-subset.
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, groups - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    std::vector<int> chosen(all.begin(), all.begin() + k);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

double scale_wavelength(double lambda_nm, int n_spatial) {
    if (!(lambda_nm >= kMinWavelengthNm && lambda_nm <= kMaxWavelengthNm)) {
        throw ValidationError(fmt::format("wavelength {} nm outside [{}, {}] nm", lambda_nm,
                                          kMinWavelengthNm, kMaxWavelengthNm));
    }
    return (lambda_nm - kMinWavelengthNm) / (kMaxWavelengthNm - kMinWavelengthNm) * n_spatial;
}

namespace {

// Writes sin/cos pairs of `pos` into out[offset, offset + width).
void sincos_block(double pos, int width, double* out) {
    for (int j = 0; j < width; ++j) {
        const int i = j / 2;
        const double freq = std::pow(10000.0, 2.0 * i / width);
        out[j] = (j % 2 == 0) ? std::sin(pos / freq) : std::cos(pos / freq);
    }
}

void check_dim(int dim) {
    if (dim < 2 || dim % 2 != 0) throw ValidationError(fmt::format("embedding dim {} must be even", dim));
}

} // namespace

std::vector<double> spatial_encoding(int x, int y, int dim) {
    check_dim(dim);
    std::vector<double> out(static_cast<std::size_t>(dim));
    const int half = dim / 2;
    sincos_block(x, half, out.data());
    sincos_block(y, dim - half, out.data() + half);
    return out;
}

std::vector<double> spectral_encoding(double lambda_nm, int dim, int n_spatial) {
    check_dim(dim);
    std::vector<double> out(static_cast<std::size_t>(dim));
    sincos_block(scale_wavelength(lambda_nm, n_spatial), dim, out.data());
    return out;
}

std::vector<double> positional_encoding(int x, int y, double lambda_nm, int dim, int n_spatial) {
    auto out = spatial_encoding(x, y, dim);
    const auto spec = spectral_encoding(lambda_nm, dim, n_spatial);
    for (int i = 0; i < dim; ++i) out[i] += spec[i];
    return out;
}

} // namespace spectral_bridge
