// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/cube.hpp"
#include "spectral_bridge/stats.hpp"

#include <random>
#include <vector>

namespace spectral_bridge {

/// Band indices covered by the given spectral groups of size `band_group`.
std::vector<int> groups_to_bands(const std::vector<int>& groups, int band_group);

/// Masked bands filled with independent N(mean_b, std_b^2) draws; other bands are copied.
HyperCube gaussian_sampling_baseline(const HyperCube& cube, const std::vector<int>& masked_bands,
                                     const BandStats& stats, std::mt19937_64& rng);

/// Masked bands linearly interpolated in wavelength between the nearest unmasked bands below and
/// above; outside the unmasked range the nearest unmasked value is repeated.
HyperCube linear_interpolation_baseline(const HyperCube& cube, const std::vector<int>& masked_bands);

/// Copies the listed bands of `source` into `target` (same shape).
HyperCube paste_bands(const HyperCube& target, const HyperCube& source, const std::vector<int>& bands);

} // namespace spectral_bridge
