// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/srf.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

namespace spectral_bridge {

std::vector<BandSpec> SrfTable::target_bands() const {
    std::vector<BandSpec> out;
    out.reserve(bands.size());
    for (const auto& b : bands) out.push_back(b.spec);
    return out;
}

void validate_srf(const SrfTable& srf) {
    if (srf.bands.empty()) throw ValidationError("SRF table has no bands");
    validate_band_list(srf.target_bands());
    for (const auto& band : srf.bands) {
        if (band.samples.empty()) {
            throw ValidationError(fmt::format("SRF band '{}' has no samples", band.name));
        }
        for (std::size_t i = 0; i < band.samples.size(); ++i) {
            const auto& s = band.samples[i];
            if (!std::isfinite(s.response) || s.response < 0.0) {
                throw ValidationError(fmt::format("SRF band '{}': negative or non-finite response at {} nm",
                                                  band.name, s.wavelength_nm));
            }
            if (i > 0 && !(s.wavelength_nm > band.samples[i - 1].wavelength_nm)) {
                throw ValidationError(fmt::format("SRF band '{}': sample wavelengths must strictly increase",
                                                  band.name));
            }
        }
    }
}

SrfTable load_srf(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw ValidationError(fmt::format("{}: empty SRF file", path.string()));
    csv::expect_header(lines[0], {"band_name", "center_nm", "fwhm_nm", "sample_nm", "response"},
                       path.string());
    SrfTable srf;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = csv::split_line(lines[i].text);
        const auto where = fmt::format("{}:{}", path.string(), lines[i].number);
        if (f.size() != 5 || f[0].empty()) throw ValidationError(where + ": expected 5 fields");
        auto c = csv::parse_double(f[1]);
        auto w = csv::parse_double(f[2]);
        auto s = csv::parse_double(f[3]);
        auto r = csv::parse_double(f[4]);
        if (!c || !w || !s || !r) throw ValidationError(where + ": unparseable number");
        if (srf.bands.empty() || srf.bands.back().name != f[0]) {
            for (const auto& b : srf.bands) {
                if (b.name == f[0]) throw ValidationError(where + ": rows of band '" + f[0] + "' are not contiguous");
            }
            srf.bands.push_back({f[0], {*c, *w}, {}});
        } else if (srf.bands.back().spec != BandSpec{*c, *w}) {
            throw ValidationError(where + ": center/fwhm differ between rows of one band");
        }
        srf.bands.back().samples.push_back({*s, *r});
    }
    validate_srf(srf);
    return srf;
}

void save_srf(const SrfTable& srf, const std::filesystem::path& path) {
    validate_srf(srf);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
    out << "band_name,center_nm,fwhm_nm,sample_nm,response\n";
    for (const auto& b : srf.bands) {
        for (const auto& s : b.samples) {
            out << b.name << ',' << csv::format_double(b.spec.center_nm) << ','
                << csv::format_double(b.spec.fwhm_nm) << ',' << csv::format_double(s.wavelength_nm)
                << ',' << csv::format_double(s.response) << '\n';
        }
    }
}

WeightMatrix build_weight_matrix(const SrfTable& srf, const std::vector<BandSpec>& source_bands) {
    validate_srf(srf);
    validate_band_list(source_bands);
    if (source_bands.empty()) throw ValidationError("weight matrix needs at least one source band");

    WeightMatrix w;
    w.source_bands = source_bands;
    w.target_bands = srf.target_bands();
    w.weights.assign(source_bands.size() * srf.bands.size(), 0.0);

    const auto src = static_cast<int>(source_bands.size());
    std::vector<std::string> orphans;
    for (int t = 0; t < w.cols(); ++t) {
        const auto& samples = srf.bands[t].samples;
        auto by_wavelength = [](const SrfSample& s, double nm) { return s.wavelength_nm < nm; };
        for (int i = 0; i < src; ++i) {
            const double lo = source_bands[i].lower_edge();
            const double hi = source_bands[i].upper_edge();
            auto first = std::lower_bound(samples.begin(), samples.end(), lo, by_wavelength);
            // Shared-edge tie: a lower band ending exactly at `lo` already owns that sample.
            if (first != samples.end() && first->wavelength_nm == lo) {
                for (int k = 0; k < i; ++k) {
                    if (source_bands[k].upper_edge() == lo) {
                        ++first;
                        break;
                    }
                }
            }
            double sum = 0.0;
            for (auto it = first; it != samples.end() && it->wavelength_nm <= hi; ++it) sum += it->response;
            w(i, t) = sum;
        }
        double total = 0.0;
        for (int i = 0; i < src; ++i) total += w(i, t);
        if (!(total > 0.0)) {
            orphans.push_back(srf.bands[t].name);
            continue;
        }
        for (int i = 0; i < src; ++i) w(i, t) /= total;
    }
    if (!orphans.empty()) {
        throw ValidationError(fmt::format("SRF target band(s) with no source-band overlap: {}",
                                          fmt::join(orphans, ", ")));
    }
    return w;
}

HyperCube project_cube(const HyperCube& cube, const WeightMatrix& w) {
    if (!bands_match(cube.bands(), w.source_bands, 0.01)) {
        throw ValidationError(fmt::format(
            "cube bands ({} bands) do not match weight-matrix source bands ({} bands)",
            cube.num_bands(), w.rows()));
    }
    const auto hw = cube.pixels_per_band();
    std::vector<double> acc(static_cast<std::size_t>(w.cols()) * hw, 0.0);
    // Fixed reduction order: source bands ascending for every output value.
    for (int i = 0; i < w.rows(); ++i) {
        auto band = cube.band(i);
        for (int t = 0; t < w.cols(); ++t) {
            const double weight = w(i, t);
            if (weight == 0.0) continue;
            double* dst = acc.data() + static_cast<std::size_t>(t) * hw;
            for (std::size_t p = 0; p < hw; ++p) dst[p] += weight * band[p];
        }
    }
    std::vector<float> out(acc.begin(), acc.end());
    return cube.with_bands(w.target_bands, std::move(out));
}

} // namespace spectral_bridge
