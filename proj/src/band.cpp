// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/band.hpp"

#include "spectral_bridge/error.hpp"

#include <cmath>
#include <fmt/format.h>

namespace spectral_bridge {

void validate_band(const BandSpec& band) {
    if (!std::isfinite(band.center_nm) || band.center_nm < kMinWavelengthNm ||
        band.center_nm > kMaxWavelengthNm) {
        throw ValidationError(fmt::format("band center {} nm outside [{}, {}] nm", band.center_nm,
                                          kMinWavelengthNm, kMaxWavelengthNm));
    }
    if (!std::isfinite(band.fwhm_nm) || band.fwhm_nm <= 0.0) {
        throw ValidationError(fmt::format("band fwhm {} nm must be positive", band.fwhm_nm));
    }
}

void validate_band_list(std::span<const BandSpec> bands) {
    for (std::size_t i = 0; i < bands.size(); ++i) {
        validate_band(bands[i]);
        if (i > 0 && !(bands[i].center_nm > bands[i - 1].center_nm)) {
            throw ValidationError(fmt::format(
                "band centers must strictly increase: band {} ({} nm) after band {} ({} nm)", i,
                bands[i].center_nm, i - 1, bands[i - 1].center_nm));
        }
    }
}

std::vector<BandSpec> uniform_bands(int count, double first_nm, double last_nm, double fwhm_nm) {
    if (count < 1) throw ValidationError("uniform_bands: count must be >= 1");
    std::vector<BandSpec> bands(static_cast<std::size_t>(count));
    const double step = count > 1 ? (last_nm - first_nm) / (count - 1) : 0.0;
    const double fwhm = fwhm_nm > 0.0 ? fwhm_nm : (step > 0.0 ? step : 10.0);
    for (int i = 0; i < count; ++i) {
        bands[i] = {first_nm + step * i, fwhm};
    }
    validate_band_list(bands);
    return bands;
}

bool bands_match(std::span<const BandSpec> a, std::span<const BandSpec> b, double tolerance_nm) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i].center_nm - b[i].center_nm) > tolerance_nm) return false;
    }
    return true;
}

} // namespace spectral_bridge
