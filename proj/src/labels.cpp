// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/labels.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>

namespace spectral_bridge {

std::string_view to_string(Gas g) {
    switch (g) {
    case Gas::NO2: return "NO2";
    case Gas::CH4: return "CH4";
    case Gas::CO2: return "CO2";
    }
    return "?";
}

Gas parse_gas(std::string_view s) {
    if (s == "NO2" || s == "no2") return Gas::NO2;
    if (s == "CH4" || s == "ch4") return Gas::CH4;
    if (s == "CO2" || s == "co2") return Gas::CO2;
    throw ValidationError(fmt::format("unknown gas '{}'", s));
}

std::string_view canonical_units(Gas g) {
    switch (g) {
    case Gas::NO2: return "mol/m2";
    case Gas::CH4: return "ppb";
    case Gas::CO2: return "ppm";
    }
    return "";
}

bool units_match(Gas gas, std::string_view units) {
    if (gas == Gas::NO2) {
        return units == "mol/m2" || units == "mol m-2" || units == "mol/m^2" || units == "mol_m-2";
    }
    return units == canonical_units(gas);
}

GasLabelSet load_labels(const std::filesystem::path& path, Gas gas) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw ValidationError(fmt::format("{}: empty label file", path.string()));
    csv::expect_header(lines[0], {"patch_id", "gas", "units", "value"}, path.string());

    GasLabelSet out;
    out.gas = gas;
    out.units = std::string(canonical_units(gas));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& line = lines[i];
        auto f = csv::split_line(line.text);
        if (f.size() != 4 || f[0].empty()) {
            throw ValidationError(fmt::format("{}:{}: expected 4 fields 'patch_id,gas,units,value'",
                                              path.string(), line.number));
        }
        Gas row_gas;
        try {
            row_gas = parse_gas(f[1]);
        } catch (const ValidationError&) {
            throw ValidationError(fmt::format("{}:{}: unknown gas '{}'", path.string(), line.number, f[1]));
        }
        if (row_gas != gas) continue;
        if (!units_match(gas, f[2])) {
            throw ValidationError(fmt::format("{}:{}: units '{}' inconsistent with {} (expected {})",
                                              path.string(), line.number, f[2], to_string(gas),
                                              canonical_units(gas)));
        }
        if (f[3].empty()) {
            ++out.skipped;
            continue;
        }
        auto v = csv::parse_double(f[3]);
        if (!v || !std::isfinite(*v)) {
            throw ValidationError(fmt::format("{}:{}: unparseable value '{}'", path.string(),
                                              line.number, f[3]));
        }
        if (!out.values.emplace(f[0], *v).second) {
            throw ValidationError(fmt::format("{}:{}: duplicate label for patch '{}'", path.string(),
                                              line.number, f[0]));
        }
    }
    return out;
}

void save_labels(const GasLabelSet& labels, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
    out << "patch_id,gas,units,value\n";
    for (const auto& [id, v] : labels.values) {
        out << id << ',' << to_string(labels.gas) << ',' << canonical_units(labels.gas) << ','
            << csv::format_double(v) << '\n';
    }
}

} // namespace spectral_bridge
