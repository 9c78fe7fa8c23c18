// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace spectral_bridge {

enum class Split { train, val, test };
enum class SplitMode { easy, hard };

std::string_view to_string(Split s);
std::string_view to_string(SplitMode m);
Split parse_split(std::string_view s);
SplitMode parse_split_mode(std::string_view s);

struct PatchRef {
    std::string patch_id;
    std::string tile_id;
};

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

/// patch_id -> split, with the tile of each patch kept for provenance.
struct SplitAssignment {
    SplitMode mode = SplitMode::easy;
    std::map<std::string, Split> split_of;
    std::map<std::string, std::string> tile_of;

    std::vector<std::string> patches_in(Split s) const;
    std::size_t count(Split s) const;
};

/// Deterministic train/val/test partition.
///
/// Easy mode shuffles patch ids and cuts them with largest-remainder rounding of the ratios.
/// Hard mode shuffles tiles and hands each whole tile to the split with the largest
/// patch-count deficit, reserving one tile for every split that would otherwise stay empty.
SplitAssignment make_splits(const std::vector<PatchRef>& patches, SplitMode mode,
                            const SplitRatios& ratios, std::uint64_t seed);

/// Throws ValidationError if a tile appears in more than one split (hard mode) or ids are unknown.
void check_split_integrity(const SplitAssignment& split);

// CSV: "# mode=<easy|hard>" then "patch_id,tile_id,split" rows.
void save_splits(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment load_splits(const std::filesystem::path& path);

} // namespace spectral_bridge
