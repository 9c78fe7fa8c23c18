// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/splits.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace spectral_bridge {
namespace {

constexpr std::array<Split, 3> kSplits{Split::train, Split::val, Split::test};

// Largest-remainder apportionment of n items to the three ratios.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& r) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = r[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        rem[i] = exact - static_cast<double>(counts[i]);
        used += counts[i];
    }
    while (used < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (rem[i] > rem[best]) best = i;
        }
        ++counts[best];
        rem[best] = -1.0;
        ++used;
    }
    return counts;
}

} // namespace

std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

std::string_view to_string(SplitMode m) { return m == SplitMode::easy ? "easy" : "hard"; }

Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ValidationError(fmt::format("unknown split '{}'", s));
}

SplitMode parse_split_mode(std::string_view s) {
    if (s == "easy") return SplitMode::easy;
    if (s == "hard") return SplitMode::hard;
    throw ValidationError(fmt::format("unknown split mode '{}'", s));
}

std::vector<std::string> SplitAssignment::patches_in(Split s) const {
    std::vector<std::string> out;
    for (const auto& [id, split] : split_of) {
        if (split == s) out.push_back(id);
    }
    return out;
}

std::size_t SplitAssignment::count(Split s) const {
    return static_cast<std::size_t>(std::count_if(split_of.begin(), split_of.end(),
                                                  [s](const auto& kv) { return kv.second == s; }));
}

SplitAssignment make_splits(const std::vector<PatchRef>& patches, SplitMode mode,
                            const SplitRatios& ratios, std::uint64_t seed) {
    const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
    if (patches.empty()) throw ValidationError("make_splits: patch list is empty");
    for (double x : r) {
        if (!(x > 0.0)) throw ValidationError("make_splits: ratios must be positive");
    }
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
        throw ValidationError("make_splits: ratios must sum to 1");
    }

    SplitAssignment out;
    out.mode = mode;
    for (const auto& p : patches) {
        if (!out.tile_of.emplace(p.patch_id, p.tile_id).second) {
            throw ValidationError(fmt::format("make_splits: duplicate patch id '{}'", p.patch_id));
        }
    }

    std::mt19937_64 rng(seed);

    if (mode == SplitMode::easy) {
        std::vector<std::string> ids;
        ids.reserve(patches.size());
        for (const auto& [id, tile] : out.tile_of) ids.push_back(id);
        std::shuffle(ids.begin(), ids.end(), rng);
        const auto counts = apportion(ids.size(), r);
        std::size_t k = 0;
        for (int s = 0; s < 3; ++s) {
            for (std::size_t i = 0; i < counts[s]; ++i) out.split_of[ids[k++]] = kSplits[s];
        }
        return out;
    }

    // Hard mode: whole tiles move together.
    std::map<std::string, std::vector<std::string>> by_tile;
    for (const auto& [id, tile] : out.tile_of) by_tile[tile].push_back(id);
    if (by_tile.size() < 3) {
        throw ValidationError(fmt::format(
            "make_splits: hard mode needs at least 3 distinct tiles for 3 non-empty splits, got {}",
            by_tile.size()));
    }
    std::vector<std::string> tiles;
    for (const auto& [tile, ids] : by_tile) tiles.push_back(tile);
    std::shuffle(tiles.begin(), tiles.end(), rng);

    const double n = static_cast<double>(patches.size());
    std::array<double, 3> target{r[0] * n, r[1] * n, r[2] * n};
    std::array<double, 3> current{};
    std::array<std::size_t, 3> tiles_in{};

    for (std::size_t t = 0; t < tiles.size(); ++t) {
        const std::size_t remaining = tiles.size() - t;
        const auto empty = static_cast<std::size_t>(std::count(tiles_in.begin(), tiles_in.end(), 0u));
        int best = -1;
        for (int s = 0; s < 3; ++s) {
            if (remaining <= empty && tiles_in[s] != 0) continue;
            if (best < 0 || target[s] - current[s] > target[best] - current[best]) best = s;
        }
        const auto& ids = by_tile[tiles[t]];
        for (const auto& id : ids) out.split_of[id] = kSplits[best];
        current[best] += static_cast<double>(ids.size());
        ++tiles_in[best];
    }
    return out;
}

void check_split_integrity(const SplitAssignment& split) {
    if (split.split_of.size() != split.tile_of.size()) {
        throw ValidationError("split assignment does not cover the patch set");
    }
    if (split.mode != SplitMode::hard) return;
    std::map<std::string, Split> tile_split;
    for (const auto& [id, s] : split.split_of) {
        auto it = split.tile_of.find(id);
        if (it == split.tile_of.end()) throw ValidationError(fmt::format("patch '{}' has no tile", id));
        auto [pos, inserted] = tile_split.emplace(it->second, s);
        if (!inserted && pos->second != s) {
            throw ValidationError(fmt::format("tile '{}' straddles splits", it->second));
        }
    }
}

void save_splits(const SplitAssignment& split, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
    out << "# mode=" << to_string(split.mode) << "\n";
    out << "patch_id,tile_id,split\n";
    for (const auto& [id, s] : split.split_of) {
        out << id << ',' << split.tile_of.at(id) << ',' << to_string(s) << '\n';
    }
}

SplitAssignment load_splits(const std::filesystem::path& path) {
    auto lines = csv::read_lines(path);
    SplitAssignment out;
    std::size_t i = 0;
    if (i < lines.size() && lines[i].text.rfind("# mode=", 0) == 0) {
        out.mode = parse_split_mode(csv::trim(lines[i].text.substr(7)));
        ++i;
    }
    if (i >= lines.size()) throw ValidationError(fmt::format("{}: missing header", path.string()));
    csv::expect_header(lines[i++], {"patch_id", "tile_id", "split"}, path.string());
    for (; i < lines.size(); ++i) {
        auto f = csv::split_line(lines[i].text);
        if (f.size() != 3 || f[0].empty()) {
            throw ValidationError(fmt::format("{}:{}: malformed split row", path.string(), lines[i].number));
        }
        if (!out.split_of.emplace(f[0], parse_split(f[2])).second) {
            throw ValidationError(fmt::format("{}:{}: duplicate patch id '{}'", path.string(),
                                              lines[i].number, f[0]));
        }
        out.tile_of.emplace(f[0], f[1]);
    }
    check_split_integrity(out);
    return out;
}

} // namespace spectral_bridge
