// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/cube.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace spectral_bridge {

// HSC v1 layout:
//   "HSC1 <B> <H> <W>\n"
//   B lines "<center_nm> <fwhm_nm>\n"
//   "patch=<id> tile=<id>\n"
//   B*H*W little-endian float32 values, band-major.

HyperCube load_cube(const std::filesystem::path& path);
HyperCube read_cube(std::istream& in);

void save_cube(const HyperCube& cube, const std::filesystem::path& path);
void write_cube(const HyperCube& cube, std::ostream& out);

/// All *.hsc files in a directory, sorted by file name.
std::vector<std::filesystem::path> list_cube_files(const std::filesystem::path& dir);

} // namespace spectral_bridge
