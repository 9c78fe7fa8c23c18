// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/cube.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace spectral_bridge {

struct SrfSample {
    double wavelength_nm = 0.0;
    double response = 0.0;
};

/// Tabulated response curve of one target (multispectral) band.
struct SrfBand {
    std::string name;
    BandSpec spec;
    std::vector<SrfSample> samples;  // strictly increasing wavelength, response >= 0
};

struct SrfTable {
    std::vector<SrfBand> bands;

    std::vector<BandSpec> target_bands() const;
};

/// Throws ValidationError on negative responses, non-increasing samples or unordered bands.
void validate_srf(const SrfTable& srf);

// CSV: "band_name,center_nm,fwhm_nm,sample_nm,response", one row per sample.
SrfTable load_srf(const std::filesystem::path& path);
void save_srf(const SrfTable& srf, const std::filesystem::path& path);

/// Column-stochastic B_source x B_target resampling matrix, stored row-major.
struct WeightMatrix {
    std::vector<BandSpec> source_bands;
    std::vector<BandSpec> target_bands;
    std::vector<double> weights;

    int rows() const { return static_cast<int>(source_bands.size()); }
    int cols() const { return static_cast<int>(target_bands.size()); }
    double operator()(int source, int target) const { return weights[static_cast<std::size_t>(source) * cols() + target]; }
    double& operator()(int source, int target) { return weights[static_cast<std::size_t>(source) * cols() + target]; }
};

/// Sums each target band's SRF samples falling inside every source band's closed
/// [center - fwhm/2, center + fwhm/2] interval, then normalizes every column to unit sum.
///
/// A sample sitting exactly on an edge shared by two source bands counts toward the lower
/// band only. A target band with no overlap is an error naming the band.
WeightMatrix build_weight_matrix(const SrfTable& srf, const std::vector<BandSpec>& source_bands);

/// Per pixel: y = x . W. The output carries the target band list; H, W and ids are kept.
HyperCube project_cube(const HyperCube& cube, const WeightMatrix& w);

} // namespace spectral_bridge
