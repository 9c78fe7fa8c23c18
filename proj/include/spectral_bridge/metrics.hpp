// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/cube.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spectral_bridge {

// Cube metrics require equal band count, height and width (ValidationError otherwise).
double mae_metric(const HyperCube& x, const HyperCube& xhat);
double mse_metric(const HyperCube& x, const HyperCube& xhat);

/// 10 log10(max(x)^2 / MSE) with max over the ground truth; +infinity when MSE = 0.
double psnr_metric(const HyperCube& x, const HyperCube& xhat);

/// SSIM constants used verbatim as additive stabilizers.
inline constexpr double kSsimC1 = 0.01;
inline constexpr double kSsimC2 = 0.03;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Window side actually used for an image of the given size: min(size, 11), made odd.
int ssim_window_size(int height, int width);

/// Gaussian-windowed SSIM averaged over all valid window positions of each band, then over bands.
double ssim_metric(const HyperCube& x, const HyperCube& xhat);

struct SamResult {
    double mean_deg = 0.0;     // NaN if every pixel was skipped
    std::size_t skipped = 0;   // pixels where either spectrum is the zero vector
};
SamResult sam_details(const HyperCube& x, const HyperCube& xhat);
/// Mean per-pixel spectral angle in degrees.
double sam_metric(const HyperCube& x, const HyperCube& xhat);

// Vector metrics for regression (sizes must match and be non-empty).
double mae_metric(std::span<const double> y, std::span<const double> yhat);
double mse_metric(std::span<const double> y, std::span<const double> yhat);
double rmse_metric(std::span<const double> y, std::span<const double> yhat);
/// 1 - SS_res / SS_tot; NaN when the labels have zero variance.
double r2_metric(std::span<const double> y, std::span<const double> yhat);

struct ReconMetrics {
    std::string patch_id;
    double mae = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double sam_deg = 0.0;
};

struct ReconReport {
    std::vector<ReconMetrics> images;
    ReconMetrics aggregate;  // patch_id "AGGREGATE", arithmetic mean of each column
};

ReconMetrics recon_metrics(const HyperCube& truth, const HyperCube& pred);
ReconReport make_recon_report(std::vector<ReconMetrics> images);

struct RegressionMetrics {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
};

struct RegressionReport {
    std::vector<std::string> patch_ids;
    std::vector<double> labels;
    std::vector<double> predictions;
    RegressionMetrics aggregate;
};

RegressionReport make_regression_report(std::vector<std::string> ids, std::vector<double> labels,
                                        std::vector<double> predictions);

// CSV "patch_id,mae,psnr_db,ssim,sam_deg", one row per image and a final AGGREGATE row.
void save_recon_report(const ReconReport& r, const std::filesystem::path& path);
/// Reads a reconstruction report; a missing column is an error naming it.
ReconReport load_recon_report(const std::filesystem::path& path);

// CSV "patch_id,mae,mse,rmse,r2": per sample |e|, e^2, |e| and an empty r2, then an
// AGGREGATE row with the set-level metrics.
void save_regression_report(const RegressionReport& r, const std::filesystem::path& path);
/// Aggregate row of a regression report; a missing column is an error naming it.
RegressionMetrics load_regression_aggregate(const std::filesystem::path& path);

} // namespace spectral_bridge
