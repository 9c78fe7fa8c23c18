// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/metrics.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <numbers>

namespace spectral_bridge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_shapes(const HyperCube& x, const HyperCube& xhat) {
    if (x.num_bands() != xhat.num_bands() || x.height() != xhat.height() || x.width() != xhat.width()) {
        throw ValidationError(fmt::format("metric shape mismatch: {}x{}x{} vs {}x{}x{}", x.num_bands(), x.height(),
                                          x.width(), xhat.num_bands(), xhat.height(), xhat.width()));
    }
}

void check_sizes(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size() || y.empty()) {
        throw ValidationError(fmt::format("metric size mismatch: {} labels vs {} predictions", y.size(), yhat.size()));
    }
}

std::vector<double> gaussian_window(int size) {
    std::vector<double> w(static_cast<std::size_t>(size));
    const int half = size / 2;
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-0.5 * (i - half) * (i - half) / (kSsimSigma * kSsimSigma));
        total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
}

/// Valid-mode separable filtering of an h x w image with a 1-D kernel along both axes.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int oh = h - n + 1, ow = w - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += k[j] * img[static_cast<std::size_t>(y) * w + x + j];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

double nan_mean(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::size_t column(const std::vector<std::string>& header, const std::string& name, const std::string& where) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (csv::trim(header[i]) == name) return i;
    }
    throw ValidationError(fmt::format("{}: missing column '{}'", where, name));
}

double field(const std::vector<std::string>& f, std::size_t i, const std::string& where) {
    if (i >= f.size()) throw ValidationError(where + ": too few fields");
    const auto text = csv::trim(f[i]);
    if (text.empty()) return kNaN;
    const auto v = csv::parse_double(text);
    if (!v) throw ValidationError(fmt::format("{}: cannot parse '{}'", where, text));
    return *v;
}

} // namespace

double mae_metric(const HyperCube& x, const HyperCube& xhat) {
    check_shapes(x, xhat);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(static_cast<double>(x.values()[i]) - xhat.values()[i]);
    return s / static_cast<double>(x.size());
}

double mse_metric(const HyperCube& x, const HyperCube& xhat) {
    check_shapes(x, xhat);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x.values()[i]) - xhat.values()[i];
        s += d * d;
    }
    return s / static_cast<double>(x.size());
}

double psnr_metric(const HyperCube& x, const HyperCube& xhat) {
    const double mse = mse_metric(x, xhat);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    const double peak = *std::max_element(x.values().begin(), x.values().end());
    return 10.0 * std::log10(peak * peak / mse);
}

int ssim_window_size(int height, int width) {
    int n = std::min({kSsimWindow, height, width});
    if (n % 2 == 0) --n;
    return std::max(n, 1);
}

double ssim_metric(const HyperCube& x, const HyperCube& xhat) {
    check_shapes(x, xhat);
    const int h = x.height(), w = x.width();
    const auto kernel = gaussian_window(ssim_window_size(h, w));
    const auto hw = x.pixels_per_band();
    std::vector<double> a(hw), b(hw), aa(hw), bb(hw), ab(hw);
    double total = 0.0;
    for (int band = 0; band < x.num_bands(); ++band) {
        const auto xa = x.band(band), xb = xhat.band(band);
        for (std::size_t i = 0; i < hw; ++i) {
            a[i] = xa[i];
            b[i] = xb[i];
            aa[i] = a[i] * a[i];
            bb[i] = b[i] * b[i];
            ab[i] = a[i] * b[i];
        }
        const auto mu_a = filter_valid(a, h, w, kernel), mu_b = filter_valid(b, h, w, kernel);
        const auto e_aa = filter_valid(aa, h, w, kernel), e_bb = filter_valid(bb, h, w, kernel);
        const auto e_ab = filter_valid(ab, h, w, kernel);
        double band_sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            band_sum += ((2 * mu_a[i] * mu_b[i] + kSsimC1) * (2 * cov + kSsimC2)) /
                        ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kSsimC1) * (va + vb + kSsimC2));
        }
        total += band_sum / static_cast<double>(mu_a.size());
    }
    return total / x.num_bands();
}

SamResult sam_details(const HyperCube& x, const HyperCube& xhat) {
    check_shapes(x, xhat);
    const auto hw = x.pixels_per_band();
    SamResult r;
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t p = 0; p < hw; ++p) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (int b = 0; b < x.num_bands(); ++b) {
            const double u = x.values()[b * hw + p], v = xhat.values()[b * hw + p];
            dot += u * v;
            na += u * u;
            nb += v * v;
        }
        if (na == 0.0 || nb == 0.0) {
            ++r.skipped;
            continue;
        }
        // One square root of the product: exact power-of-two rescaling then yields cos = 1 exactly.
        const double c = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
        sum += std::acos(c) * 180.0 / std::numbers::pi;
        ++used;
    }
    r.mean_deg = used > 0 ? sum / static_cast<double>(used) : kNaN;
    return r;
}

double sam_metric(const HyperCube& x, const HyperCube& xhat) { return sam_details(x, xhat).mean_deg; }

double mae_metric(std::span<const double> y, std::span<const double> yhat) {
    check_sizes(y, yhat);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

double mse_metric(std::span<const double> y, std::span<const double> yhat) {
    check_sizes(y, yhat);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

double rmse_metric(std::span<const double> y, std::span<const double> yhat) { return std::sqrt(mse_metric(y, yhat)); }

double r2_metric(std::span<const double> y, std::span<const double> yhat) {
    check_sizes(y, yhat);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) return kNaN;
    return 1.0 - ss_res / ss_tot;
}

ReconMetrics recon_metrics(const HyperCube& truth, const HyperCube& pred) {
    return {truth.patch_id(), mae_metric(truth, pred), psnr_metric(truth, pred), ssim_metric(truth, pred),
            sam_metric(truth, pred)};
}

ReconReport make_recon_report(std::vector<ReconMetrics> images) {
    ReconReport r;
    r.images = std::move(images);
    std::vector<double> mae, psnr, ssim, sam;
    for (const auto& m : r.images) {
        mae.push_back(m.mae);
        psnr.push_back(m.psnr_db);
        ssim.push_back(m.ssim);
        sam.push_back(m.sam_deg);
    }
    r.aggregate = {"AGGREGATE", nan_mean(mae), nan_mean(psnr), nan_mean(ssim), nan_mean(sam)};
    return r;
}

RegressionReport make_regression_report(std::vector<std::string> ids, std::vector<double> labels,
                                        std::vector<double> predictions) {
    if (ids.size() != labels.size()) throw ValidationError("regression report: id/label count mismatch");
    RegressionReport r{std::move(ids), std::move(labels), std::move(predictions), {}};
    const double mse = mse_metric(r.labels, r.predictions);
    r.aggregate = {mae_metric(r.labels, r.predictions), mse, std::sqrt(mse), r2_metric(r.labels, r.predictions)};
    return r;
}

void save_recon_report(const ReconReport& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
    out << "patch_id,mae,psnr_db,ssim,sam_deg\n";
    auto row = [&](const ReconMetrics& m) {
        out << m.patch_id << ',' << csv::format_double(m.mae) << ',' << csv::format_double(m.psnr_db) << ','
            << csv::format_double(m.ssim) << ',' << csv::format_double(m.sam_deg) << '\n';
    };
    for (const auto& m : r.images) row(m);
    row(r.aggregate);
}

ReconReport load_recon_report(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw ValidationError(fmt::format("{}: empty report", path.string()));
    const auto header = csv::split_line(lines[0].text);
    const auto where = path.string();
    const std::size_t c_id = column(header, "patch_id", where), c_mae = column(header, "mae", where),
                      c_psnr = column(header, "psnr_db", where), c_ssim = column(header, "ssim", where),
                      c_sam = column(header, "sam_deg", where);
    ReconReport r;
    bool have_aggregate = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = csv::split_line(lines[i].text);
        const auto at = fmt::format("{}:{}", where, lines[i].number);
        if (c_id >= f.size()) throw ValidationError(at + ": too few fields");
        ReconMetrics m{std::string(csv::trim(f[c_id])), field(f, c_mae, at), field(f, c_psnr, at),
                       field(f, c_ssim, at), field(f, c_sam, at)};
        if (m.patch_id == "AGGREGATE") {
            r.aggregate = m;
            have_aggregate = true;
        } else {
            r.images.push_back(std::move(m));
        }
    }
    if (!have_aggregate) r.aggregate = make_recon_report(r.images).aggregate;
    return r;
}

void save_regression_report(const RegressionReport& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
    out << "patch_id,mae,mse,rmse,r2\n";
    for (std::size_t i = 0; i < r.patch_ids.size(); ++i) {
        const double e = r.labels[i] - r.predictions[i];
        out << r.patch_ids[i] << ',' << csv::format_double(std::abs(e)) << ',' << csv::format_double(e * e) << ','
            << csv::format_double(std::abs(e)) << ",\n";
    }
    const auto& a = r.aggregate;
    out << "AGGREGATE," << csv::format_double(a.mae) << ',' << csv::format_double(a.mse) << ','
        << csv::format_double(a.rmse) << ',' << csv::format_double(a.r2) << '\n';
}

RegressionMetrics load_regression_aggregate(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw ValidationError(fmt::format("{}: empty report", path.string()));
    const auto header = csv::split_line(lines[0].text);
    const auto where = path.string();
    const std::size_t c_id = column(header, "patch_id", where), c_mae = column(header, "mae", where),
                      c_mse = column(header, "mse", where), c_rmse = column(header, "rmse", where),
                      c_r2 = column(header, "r2", where);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = csv::split_line(lines[i].text);
        const auto at = fmt::format("{}:{}", where, lines[i].number);
        if (c_id < f.size() && csv::trim(f[c_id]) == "AGGREGATE") {
            return {field(f, c_mae, at), field(f, c_mse, at), field(f, c_rmse, at), field(f, c_r2, at)};
        }
    }
    throw ValidationError(fmt::format("{}: no AGGREGATE row", where));
}

} // namespace spectral_bridge
