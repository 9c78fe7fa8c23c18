// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/stats.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

namespace spectral_bridge {

BandStats BandStats::from_moments(std::vector<BandSpec> bands, std::vector<double> mean,
                                  std::vector<double> std, std::uint64_t count) {
    if (mean.size() != bands.size() || std.size() != bands.size()) {
        throw ValidationError("band stats: mean/std length does not match band count");
    }
    if (count == 0) throw ValidationError("band stats: count must be positive");
    BandStats s;
    s.bands_ = std::move(bands);
    s.mean_ = std::move(mean);
    s.m2_.resize(std.size());
    s.count_ = count;
    for (std::size_t b = 0; b < std.size(); ++b) {
        if (!(std[b] >= 0.0) || !std::isfinite(std[b]) || !std::isfinite(s.mean_[b])) {
            throw ValidationError(fmt::format("band stats: invalid moments for band {}", b));
        }
        s.m2_[b] = std[b] * std[b] * static_cast<double>(count);
    }
    return s;
}

BandStats BandStats::from_raw(std::vector<BandSpec> bands, std::vector<double> mean,
                             std::vector<double> m2, std::uint64_t count) {
    if (mean.size() != bands.size() || m2.size() != bands.size()) {
        throw ValidationError("band stats: mean/m2 length does not match band count");
    }
    if (count == 0) throw ValidationError("band stats: count must be positive");
    BandStats s;
    s.bands_ = std::move(bands);
    s.mean_ = std::move(mean);
    s.m2_ = std::move(m2);
    s.count_ = count;
    return s;
}

double BandStats::std(int b) const {
    if (count_ == 0) throw ValidationError("band stats used before any data was accumulated");
    return std::sqrt(m2_[b] / static_cast<double>(count_));
}

double BandStats::std_clamped(int b) const { return std::max(std(b), kStdFloor); }

void BandStats::add(const HyperCube& cube) {
    if (bands_.empty()) {
        bands_ = cube.bands();
        mean_.assign(bands_.size(), 0.0);
        m2_.assign(bands_.size(), 0.0);
    } else if (cube.num_bands() != num_bands()) {
        throw ValidationError(fmt::format("band stats cover {} bands but cube has {}", num_bands(),
                                          cube.num_bands()));
    }
    for (int b = 0; b < cube.num_bands(); ++b) {
        auto n = static_cast<double>(count_);
        double mean = mean_[b];
        double m2 = m2_[b];
        for (float v : cube.band(b)) {
            n += 1.0;
            const double delta = v - mean;
            mean += delta / n;
            m2 += delta * (v - mean);
        }
        mean_[b] = mean;
        m2_[b] = m2;
    }
    count_ += cube.pixels_per_band();
}

BandStats BandStats::merge(const BandStats& a, const BandStats& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.num_bands() != b.num_bands()) {
        throw ValidationError("cannot merge band stats with different band counts");
    }
    BandStats out = a;
    const auto na = static_cast<double>(a.count_);
    const auto nb = static_cast<double>(b.count_);
    const double n = na + nb;
    for (int i = 0; i < a.num_bands(); ++i) {
        const double delta = b.mean_[i] - a.mean_[i];
        out.mean_[i] = a.mean_[i] + delta * nb / n;
        out.m2_[i] = a.m2_[i] + b.m2_[i] + delta * delta * na * nb / n;
    }
    out.count_ = a.count_ + b.count_;
    return out;
}

BandStats accumulate_stats(BandStats stats, const HyperCube& cube) {
    stats.add(cube);
    return stats;
}

namespace {

void check_cover(const HyperCube& cube, const BandStats& stats) {
    if (stats.num_bands() != cube.num_bands()) {
        throw ValidationError(fmt::format("stats cover {} bands, cube has {}", stats.num_bands(),
                                          cube.num_bands()));
    }
}

} // namespace

HyperCube normalize_bandwise(const HyperCube& cube, const BandStats& stats) {
    check_cover(cube, stats);
    std::vector<float> out(cube.size());
    const auto hw = cube.pixels_per_band();
    for (int b = 0; b < cube.num_bands(); ++b) {
        const double mu = stats.mean(b);
        const double sigma = stats.std_clamped(b);
        auto src = cube.band(b);
        for (std::size_t i = 0; i < hw; ++i) {
            out[b * hw + i] = static_cast<float>((src[i] - mu) / sigma);
        }
    }
    return cube.with_values(std::move(out));
}

HyperCube denormalize_bandwise(const HyperCube& cube, const BandStats& stats) {
    check_cover(cube, stats);
    std::vector<float> out(cube.size());
    const auto hw = cube.pixels_per_band();
    for (int b = 0; b < cube.num_bands(); ++b) {
        const double mu = stats.mean(b);
        const double sigma = stats.std_clamped(b);
        auto src = cube.band(b);
        for (std::size_t i = 0; i < hw; ++i) {
            out[b * hw + i] = static_cast<float>(src[i] * sigma + mu);
        }
    }
    return cube.with_values(std::move(out));
}

SpectralSignature spatial_average(const HyperCube& cube) {
    SpectralSignature sig;
    sig.bands = cube.bands();
    sig.values.resize(static_cast<std::size_t>(cube.num_bands()));
    const auto n = static_cast<double>(cube.pixels_per_band());
    for (int b = 0; b < cube.num_bands(); ++b) {
        double sum = 0.0;
        for (float v : cube.band(b)) sum += v;
        sig.values[b] = sum / n;
    }
    return sig;
}

GlobalStats compute_global_stats(std::span<const SpectralSignature> signatures) {
    double n = 0.0, mean = 0.0, m2 = 0.0;
    for (const auto& s : signatures) {
        for (double v : s.values) {
            n += 1.0;
            const double delta = v - mean;
            mean += delta / n;
            m2 += delta * (v - mean);
        }
    }
    if (n == 0.0) throw ValidationError("global stats need at least one value");
    return {mean, std::sqrt(m2 / n)};
}

SpectralSignature normalize_global(const SpectralSignature& sig, const GlobalStats& g) {
    if (!(g.std > 0.0)) throw ValidationError("global normalization requires std > 0");
    SpectralSignature out = sig;
    for (double& v : out.values) v = (v - g.mean) / g.std;
    return out;
}

void save_stats(const BandStats& stats, const std::optional<GlobalStats>& global,
                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
    out << "# count=" << stats.count() << '\n';
    out << "band_index,center_nm,mean,std\n";
    for (int b = 0; b < stats.num_bands(); ++b) {
        out << b << ',' << csv::format_double(stats.bands()[b].center_nm) << ','
            << csv::format_double(stats.mean(b)) << ',' << csv::format_double(stats.std(b)) << '\n';
    }
    if (global) {
        out << "GLOBAL,," << csv::format_double(global->mean) << ','
            << csv::format_double(global->std) << '\n';
    }
}

StatsFile load_stats(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    std::size_t i = 0;
    std::uint64_t count = 1;
    if (i < lines.size() && lines[i].text.rfind("# count=", 0) == 0) {
        auto c = csv::parse_int(lines[i].text.substr(8));
        if (!c || *c <= 0) throw ValidationError(fmt::format("{}: bad count line", path.string()));
        count = static_cast<std::uint64_t>(*c);
        ++i;
    }
    if (i >= lines.size()) throw ValidationError(fmt::format("{}: missing header", path.string()));
    csv::expect_header(lines[i++], {"band_index", "center_nm", "mean", "std"}, path.string());

    std::vector<BandSpec> bands;
    std::vector<double> mean, std;
    StatsFile out;
    for (; i < lines.size(); ++i) {
        auto f = csv::split_line(lines[i].text);
        const auto where = fmt::format("{}:{}", path.string(), lines[i].number);
        if (f.size() != 4) throw ValidationError(where + ": expected 4 fields");
        auto m = csv::parse_double(f[2]);
        auto s = csv::parse_double(f[3]);
        if (!m || !s) throw ValidationError(where + ": unparseable mean/std");
        if (f[0] == "GLOBAL") {
            out.global = GlobalStats{*m, *s};
            continue;
        }
        auto idx = csv::parse_int(f[0]);
        auto c = csv::parse_double(f[1]);
        if (!idx || !c || *idx != static_cast<std::int64_t>(bands.size())) {
            throw ValidationError(where + ": band rows must be numbered 0..B-1 in order");
        }
        // Only the center is persisted; the width is irrelevant to normalization.
        bands.push_back({*c, 1.0});
        mean.push_back(*m);
        std.push_back(*s);
    }
    if (!bands.empty()) out.bands = BandStats::from_moments(std::move(bands), std::move(mean), std::move(std), count);
    return out;
}

} // namespace spectral_bridge
