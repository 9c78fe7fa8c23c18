// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/cube.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace spectral_bridge {

/// Location of one b x p x p token in the cube.
struct TokenCoord {
    int x = 0;          // patch-grid column
    int y = 0;          // patch-grid row
    int group = 0;      // spectral group index
    double lambda_nm = 0.0;  // mean center wavelength of the group's bands

    bool operator==(const TokenCoord&) const = default;
};

/// Flattened patches of one cube. Tokens are ordered position-major: index = (y * grid_w + x) * groups + g,
/// and each patch is flattened as (band-in-group, row, col).
struct PatchSet {
    int band_group = 1;
    int patch = 1;
    int groups = 0;
    int grid_h = 0;
    int grid_w = 0;
    std::vector<BandSpec> bands;
    std::vector<TokenCoord> coords;
    std::vector<float> values;  // coords.size() * patch_length()

    int patch_length() const { return band_group * patch * patch; }
    int positions() const { return grid_h * grid_w; }
    std::size_t count() const { return coords.size(); }
    const float* patch_data(std::size_t token) const { return values.data() + token * patch_length(); }
};

/// Throws ValidationError unless b | B, p | H and p | W.
void check_patch_divisibility(int bands, int height, int width, int band_group, int patch);

PatchSet patchify(const HyperCube& cube, int band_group, int patch);

/// Mean center wavelength of each spectral group.
std::vector<double> group_centers(const std::vector<BandSpec>& bands, int band_group);

/// Inverse of patchify. Placement is driven by the coordinates, so any token order works;
/// a missing or duplicated coordinate is an error naming it.
HyperCube reassemble(const std::vector<float>& predictions, const std::vector<TokenCoord>& coords,
                     int band_group, int patch, const std::vector<BandSpec>& bands, int height,
                     int width, const std::string& patch_id = {}, const std::string& tile_id = {});

/// floor(p_mask * groups), guarded against decimal round-off just below an integer.
int mask_count(double p_mask, int groups);

/// Draws mask_count(p_mask, groups) distinct group indices uniformly; result is sorted.
std::vector<int> select_mask_groups(int groups, double p_mask, std::mt19937_64& rng);

/// Wavelength mapped linearly from [400, 2500] nm onto [0, n_spatial].
double scale_wavelength(double lambda_nm, int n_spatial);

/// Spatial encoding of (x, y): x fills the first d/2 components and y the rest, each as
/// interleaved sin/cos pairs. Every component lies in [-1, 1].
std::vector<double> spatial_encoding(int x, int y, int dim);

/// Sin/cos encoding of the scaled wavelength over all d components.
std::vector<double> spectral_encoding(double lambda_nm, int dim, int n_spatial);

/// Element-wise sum of the spatial and spectral encodings.
std::vector<double> positional_encoding(int x, int y, double lambda_nm, int dim, int n_spatial);

} // namespace spectral_bridge
