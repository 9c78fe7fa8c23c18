// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace spectral_bridge {

enum class Gas { NO2, CH4, CO2 };

std::string_view to_string(Gas g);
Gas parse_gas(std::string_view s);

/// Canonical unit string per gas: NO2 "mol/m2", CH4 "ppb", CO2 "ppm".
std::string_view canonical_units(Gas g);

/// True if `units` names the canonical unit of `gas` (a few spellings of mol m^-2 are accepted).
bool units_match(Gas gas, std::string_view units);

struct GasLabelSet {
    Gas gas = Gas::CH4;
    std::string units;
    std::map<std::string, double> values;
    std::size_t skipped = 0;  // rows with an empty value
};

/// Reads "patch_id,gas,units,value" rows for one gas; rows of other gases are ignored.
/// Blank values are skipped and counted; anything unparseable is an error with its line number.
GasLabelSet load_labels(const std::filesystem::path& path, Gas gas);

void save_labels(const GasLabelSet& labels, const std::filesystem::path& path);

} // namespace spectral_bridge
