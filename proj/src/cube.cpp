// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/cube.hpp"

#include "spectral_bridge/error.hpp"

#include <cmath>
#include <fmt/format.h>

namespace spectral_bridge {

HyperCube::HyperCube(std::vector<BandSpec> bands, int height, int width, std::vector<float> data,
                     std::string patch_id, std::string tile_id)
    : bands_(std::move(bands)), height_(height), width_(width), data_(std::move(data)),
      patch_id_(std::move(patch_id)), tile_id_(std::move(tile_id)) {
    if (bands_.empty() || height_ <= 0 || width_ <= 0) {
        throw ValidationError(fmt::format("degenerate cube shape B={} H={} W={}", bands_.size(),
                                          height_, width_));
    }
    validate_band_list(bands_);
    const std::size_t expected = bands_.size() * pixels_per_band();
    if (data_.size() != expected) {
        throw ValidationError(fmt::format("cube payload has {} values, expected B*H*W = {}",
                                          data_.size(), expected));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            const auto hw = pixels_per_band();
            throw ValidationError(fmt::format("non-finite value at index {} (band {}, y {}, x {})",
                                              i, i / hw, (i % hw) / width_, i % width_));
        }
    }
    for (char c : patch_id_ + tile_id_) {
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
            throw ValidationError("patch and tile ids must not contain whitespace");
        }
    }
}

HyperCube HyperCube::zeros(std::vector<BandSpec> bands, int height, int width,
                           std::string patch_id, std::string tile_id) {
    const std::size_t n = bands.size() * static_cast<std::size_t>(std::max(height, 0)) *
                          static_cast<std::size_t>(std::max(width, 0));
    return HyperCube(std::move(bands), height, width, std::vector<float>(n, 0.0f),
                     std::move(patch_id), std::move(tile_id));
}

std::span<const float> HyperCube::band(int b) const {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(b) * pixels_per_band(),
                                                 pixels_per_band());
}

HyperCube HyperCube::with_values(std::vector<float> data) const {
    return HyperCube(bands_, height_, width_, std::move(data), patch_id_, tile_id_);
}

HyperCube HyperCube::with_bands(std::vector<BandSpec> bands, std::vector<float> data) const {
    return HyperCube(std::move(bands), height_, width_, std::move(data), patch_id_, tile_id_);
}

} // namespace spectral_bridge
