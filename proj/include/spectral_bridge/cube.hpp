// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/band.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spectral_bridge {

/// B x H x W reflectance cube stored band-major, with per-band wavelength metadata.
///
/// Construction validates every invariant (non-degenerate shape, strictly increasing
/// band centers, finite payload), so a HyperCube that exists is always valid.
class HyperCube {
public:
    HyperCube(std::vector<BandSpec> bands, int height, int width, std::vector<float> data,
              std::string patch_id = {}, std::string tile_id = {});

    /// Zero-filled cube with the given metadata.
    static HyperCube zeros(std::vector<BandSpec> bands, int height, int width,
                           std::string patch_id = {}, std::string tile_id = {});

    int num_bands() const { return static_cast<int>(bands_.size()); }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t pixels_per_band() const { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const { return data_.size(); }

    const std::vector<BandSpec>& bands() const { return bands_; }
    const std::string& patch_id() const { return patch_id_; }
    const std::string& tile_id() const { return tile_id_; }

    std::span<const float> values() const { return data_; }
    std::span<const float> band(int b) const;

    float at(int b, int y, int x) const {
        return data_[(static_cast<std::size_t>(b) * height_ + y) * width_ + x];
    }

    /// Copy with a new payload of identical shape (validated).
    HyperCube with_values(std::vector<float> data) const;

    /// Copy with a new band list and payload; H, W and ids are kept.
    HyperCube with_bands(std::vector<BandSpec> bands, std::vector<float> data) const;

    bool operator==(const HyperCube&) const = default;

private:
    std::vector<BandSpec> bands_;
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
    std::string patch_id_;
    std::string tile_id_;
};

} // namespace spectral_bridge
