// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/checkpoint.hpp"
#include "spectral_bridge/config.hpp"
#include "spectral_bridge/cube.hpp"
#include "spectral_bridge/training.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spectral_bridge {

/// Every cube file of a directory, in file-name order.
std::vector<HyperCube> load_cube_dir(const std::filesystem::path& dir);
/// Writes `<patch_id>.hsc` per cube into `dir` (created if needed).
void save_cube_dir(const std::vector<HyperCube>& cubes, const std::filesystem::path& dir);

/// Pairs multispectral and hyperspectral cubes by patch id; both sides must cover the same ids.
std::vector<CubePair> pair_cubes(const std::vector<HyperCube>& ms, const std::vector<HyperCube>& hs);

/// Cubes whose patch id the split assigns to `which`; throws if a cube is absent from the split.
std::vector<HyperCube> select_split(const std::vector<HyperCube>& cubes, const SplitAssignment& split, Split which);
std::vector<CubePair> select_split(const std::vector<CubePair>& pairs, const SplitAssignment& split, Split which);

/// Mean reflectance MAE of reconstructions over the pairs.
double mean_reconstruction_mae(const std::vector<CubePair>& pairs, const ModelCheckpoint& ckpt);

// ---- data-efficiency sweep ----

struct SweepCell {
    double fraction = 0.0;
    std::string init;            // "scratch" or "pretrained"
    std::vector<double> maes;    // one per seed, in seed order
    double mean = 0.0;
    double std = 0.0;            // population spread over seeds
};

/// floor(fraction * n) with a round-off guard; throws ValidationError when that is zero.
std::size_t subset_size(double fraction, std::size_t n);
/// Indices of a uniform subset of the training set, deterministic per (fraction, seed).
std::vector<std::size_t> sample_subset(std::size_t n, double fraction, std::uint64_t seed);

/// For every fraction and seed, fine-tunes on the same training subset from scratch and (when
/// given) from the pretrained checkpoint, then scores reflectance MAE on `test`.
std::vector<SweepCell> run_sweep(const std::vector<CubePair>& train, const std::vector<CubePair>& val,
                                 const std::vector<CubePair>& test, const std::optional<ModelCheckpoint>& pretrained,
                                 const ModelConfig& cfg, const std::vector<double>& fractions,
                                 const std::vector<std::uint64_t>& seeds);
void save_sweep(const std::vector<SweepCell>& cells, const std::filesystem::path& path);

// ---- comparison tables ----

struct ReportTable {
    std::string kind;                  // "reconstruction" or "regression"
    std::vector<std::string> metrics;  // column names after input/variant
    struct Row {
        std::string input;
        std::string variant;
        std::vector<double> values;
    };
    std::vector<Row> rows;
};

/// One row per input file, taken from its AGGREGATE row. All inputs must share one schema, and
/// each aggregate must equal the per-row mean of the additive columns within 1e-9.
ReportTable build_report(const std::vector<ReportInput>& inputs);
std::string format_report_text(const ReportTable& t);
void save_report_csv(const ReportTable& t, const std::filesystem::path& path);

// ---- CLI stages: read inputs named in the config, write artifacts into `out` ----

void stage_synthgen(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_stats(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_degrade(const std::filesystem::path& input, const std::filesystem::path& srf,
                   const std::filesystem::path& output);
void stage_degrade_dir(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_pretrain(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_finetune(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_reconstruct(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_signatures(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_ghg_train(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_ghg_eval(const ExperimentConfig& cfg, const std::filesystem::path& out);
void stage_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out);
/// Returns the text table it also writes to `out/table.txt`.
std::string stage_report(const ExperimentConfig& cfg, const std::filesystem::path& out);

} // namespace spectral_bridge
