// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/cube_io.hpp"

#include "detail/binary_io.hpp"
#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace spectral_bridge {
namespace {

std::string next_header_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(fmt::format("malformed cube header: missing {}", what));
    }
    return line;
}

} // namespace

HyperCube read_cube(std::istream& in) {
    std::istringstream first(next_header_line(in, "magic line"));
    std::string magic;
    long long nb = -1, h = -1, w = -1;
    std::string trailing;
    if (!(first >> magic >> nb >> h >> w) || magic != "HSC1" || (first >> trailing)) {
        throw ValidationError("malformed cube header: expected 'HSC1 <B> <H> <W>'");
    }
    if (nb <= 0 || h <= 0 || w <= 0 || nb > 100000 || h > 1000000 || w > 1000000) {
        throw ValidationError(fmt::format("malformed cube header: bad dims B={} H={} W={}", nb, h, w));
    }

    std::vector<BandSpec> bands;
    bands.reserve(static_cast<std::size_t>(nb));
    std::string line;
    while (static_cast<long long>(bands.size()) < nb) {
        line = next_header_line(in, "band lines");
        if (line.rfind("patch=", 0) == 0) {
            throw ValidationError(fmt::format("band count mismatch: header declares {} bands, found {}",
                                              nb, bands.size()));
        }
        std::istringstream ls(line);
        std::string c, f;
        if (!(ls >> c >> f) || (ls >> trailing)) {
            throw ValidationError(fmt::format("malformed band line '{}'", line));
        }
        auto center = csv::parse_double(c);
        auto fwhm = csv::parse_double(f);
        if (!center || !fwhm) throw ValidationError(fmt::format("malformed band line '{}'", line));
        bands.push_back({*center, *fwhm});
    }

    line = next_header_line(in, "id line");
    if (line.rfind("patch=", 0) != 0) {
        throw ValidationError(fmt::format("band count mismatch: expected id line after {} bands, got '{}'",
                                          nb, line));
    }
    std::istringstream ids(line);
    std::string patch_tok, tile_tok;
    if (!(ids >> patch_tok >> tile_tok) || patch_tok.rfind("patch=", 0) != 0 ||
        tile_tok.rfind("tile=", 0) != 0 || (ids >> trailing)) {
        throw ValidationError(fmt::format("malformed id line '{}'", line));
    }

    std::vector<float> data(static_cast<std::size_t>(nb * h * w));
    if (!detail::read_f32_le(in, data)) {
        throw ValidationError("dimension mismatch: payload shorter than B*H*W floats");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw ValidationError("dimension mismatch: payload longer than B*H*W floats");
    }
    return HyperCube(std::move(bands), static_cast<int>(h), static_cast<int>(w), std::move(data),
                     patch_tok.substr(6), tile_tok.substr(5));
}

HyperCube load_cube(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure(fmt::format("cannot open cube '{}'", path.string()));
    try {
        return read_cube(in);
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_cube(const HyperCube& cube, std::ostream& out) {
    // Re-check the band invariants before any byte is written.
    validate_band_list(cube.bands());
    out << fmt::format("HSC1 {} {} {}\n", cube.num_bands(), cube.height(), cube.width());
    for (const auto& b : cube.bands()) {
        out << csv::format_double(b.center_nm) << ' ' << csv::format_double(b.fwhm_nm) << '\n';
    }
    out << "patch=" << cube.patch_id() << " tile=" << cube.tile_id() << '\n';
    detail::write_f32_le(out, cube.values());
}

void save_cube(const HyperCube& cube, const std::filesystem::path& path) {
    validate_band_list(cube.bands());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write cube '{}'", path.string()));
    write_cube(cube, out);
    out.flush();
    if (!out) throw RuntimeFailure(fmt::format("I/O error writing '{}'", path.string()));
}

std::vector<std::filesystem::path> list_cube_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ValidationError(fmt::format("'{}' is not a directory", dir.string()));
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".hsc") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace spectral_bridge
