// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/cube.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace spectral_bridge {

/// Lower bound applied to a band's std at use time.
inline constexpr double kStdFloor = 1e-8;

/// Streaming per-band mean / population variance (Welford), mergeable across accumulators.
class BandStats {
public:
    BandStats() = default;

    /// Frozen statistics, e.g. read back from disk.
    static BandStats from_moments(std::vector<BandSpec> bands, std::vector<double> mean,
                                  std::vector<double> std, std::uint64_t count);

    /// Exact accumulator state (mean and sum of squared deviations), for lossless persistence.
    static BandStats from_raw(std::vector<BandSpec> bands, std::vector<double> mean,
                              std::vector<double> m2, std::uint64_t count);
    const std::vector<double>& raw_mean() const { return mean_; }
    const std::vector<double>& raw_m2() const { return m2_; }

    bool empty() const { return bands_.empty(); }
    int num_bands() const { return static_cast<int>(bands_.size()); }
    std::uint64_t count() const { return count_; }
    const std::vector<BandSpec>& bands() const { return bands_; }

    double mean(int b) const { return mean_[b]; }
    /// Population standard deviation.
    double std(int b) const;
    /// max(std, kStdFloor): the divisor used by normalization.
    double std_clamped(int b) const;

    /// Welford update with every pixel of every band of the cube.
    void add(const HyperCube& cube);

    /// Parallel-variance combination (Chan et al.) of two accumulators over disjoint data.
    static BandStats merge(const BandStats& a, const BandStats& b);

    bool operator==(const BandStats&) const = default;

private:
    std::vector<BandSpec> bands_;
    std::vector<double> mean_;
    std::vector<double> m2_;
    std::uint64_t count_ = 0;  // pixels seen per band
};

/// Returns `stats` updated with `cube`. Throws ValidationError on band-count mismatch.
BandStats accumulate_stats(BandStats stats, const HyperCube& cube);

HyperCube normalize_bandwise(const HyperCube& cube, const BandStats& stats);
HyperCube denormalize_bandwise(const HyperCube& cube, const BandStats& stats);

/// Scalar statistics shared by all bands (downstream regression input scaling).
struct GlobalStats {
    double mean = 0.0;
    double std = 1.0;
    bool operator==(const GlobalStats&) const = default;
};

struct SpectralSignature {
    std::vector<double> values;
    std::vector<BandSpec> bands;
};

/// Mean reflectance of each band over all H*W pixels.
SpectralSignature spatial_average(const HyperCube& cube);

/// Mean/population std over every value of every signature.
GlobalStats compute_global_stats(std::span<const SpectralSignature> signatures);

/// (x - mean) / std with one scalar pair for all bands. Throws if std <= 0.
SpectralSignature normalize_global(const SpectralSignature& sig, const GlobalStats& g);

// CSV: optional "# count=<n>", header "band_index,center_nm,mean,std",
// one row per band, then an optional "GLOBAL,,mean,std" row.
void save_stats(const BandStats& stats, const std::optional<GlobalStats>& global,
                const std::filesystem::path& path);

struct StatsFile {
    BandStats bands;
    std::optional<GlobalStats> global;
};
StatsFile load_stats(const std::filesystem::path& path);

} // namespace spectral_bridge
