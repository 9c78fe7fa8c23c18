// SPDX-License-Identifier: Apache-2.0
//
// INI experiment configuration shared by every CLI stage. Sections: [paths], [split], [model],
// [regressor], [scene], [dataset], [sweep], [evaluate], [report]. Relative paths resolve
// against the directory of the config file.
#pragma once

#include "spectral_bridge/mae_config.hpp"
#include "spectral_bridge/regressor.hpp"
#include "spectral_bridge/splits.hpp"
#include "spectral_bridge/synthgen.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spectral_bridge {

struct ReportInput {
    std::string input;      // row label, e.g. "SS2"
    std::string variant;    // e.g. "finetuned"; empty when absent
    std::filesystem::path path;
};

struct ExperimentConfig {
    std::map<std::string, std::filesystem::path> paths;
    SplitMode split_mode = SplitMode::hard;
    SplitRatios split_ratios;
    std::uint64_t split_seed = 0;
    ModelConfig model;
    RegressorConfig regressor;
    DatasetConfig dataset;
    std::vector<double> fractions{0.001, 0.01, 0.1, 1.0};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    Split eval_split = Split::test;
    std::vector<ReportInput> reports;
    std::string canonical_text;  // normalized key=value dump, input of the config hash

    /// Path for `key`; throws ValidationError naming the key when unset.
    const std::filesystem::path& path(const std::string& key) const;
    /// As path(), and additionally requires the file or directory to exist (RuntimeFailure otherwise).
    const std::filesystem::path& existing_path(const std::string& key) const;
    bool has_path(const std::string& key) const { return paths.count(key) != 0; }

    /// Sets the seed of every stochastic component.
    void apply_seed(std::uint64_t seed);
};

/// Parses INI text. `overrides` are "section.key=value" strings applied after the file.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir,
                                         const std::vector<std::string>& overrides = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides = {});

/// Lower-case hex SHA-256 of the input bytes.
std::string sha256_hex(const std::string& bytes);

/// Writes `manifest.txt` with stage, config hash, seed and extra key/value lines.
void write_manifest(const std::filesystem::path& out_dir, const std::string& stage, const ExperimentConfig& cfg,
                    std::uint64_t seed,
                    const std::vector<std::pair<std::string, std::string>>& extra = {});

} // namespace spectral_bridge
