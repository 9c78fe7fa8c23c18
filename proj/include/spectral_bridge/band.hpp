// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace spectral_bridge {

inline constexpr double kMinWavelengthNm = 400.0;
inline constexpr double kMaxWavelengthNm = 2500.0;

/// One spectral band: center wavelength and full width at half maximum, both in nm.
struct BandSpec {
    double center_nm = 0.0;
    double fwhm_nm = 0.0;

    double lower_edge() const { return center_nm - 0.5 * fwhm_nm; }
    double upper_edge() const { return center_nm + 0.5 * fwhm_nm; }

    bool operator==(const BandSpec&) const = default;
};

/// Throws ValidationError unless 400 <= center <= 2500 and fwhm > 0.
void validate_band(const BandSpec& band);

/// Throws ValidationError unless every band is valid and centers strictly increase.
void validate_band_list(std::span<const BandSpec> bands);

/// Evenly spaced bands over [first_nm, last_nm]; fwhm defaults to the spacing.
std::vector<BandSpec> uniform_bands(int count, double first_nm, double last_nm, double fwhm_nm = 0.0);

/// True if both lists have equal length and centers agree within tolerance_nm.
bool bands_match(std::span<const BandSpec> a, std::span<const BandSpec> b, double tolerance_nm = 0.01);

} // namespace spectral_bridge
