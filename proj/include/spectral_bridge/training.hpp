// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/checkpoint.hpp"
#include "spectral_bridge/cube.hpp"
#include "spectral_bridge/mae_config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spectral_bridge {

struct LogEntry {
    int step = 0;
    std::string split;  // "train" or "val"
    double loss = 0.0;
};

struct TrainResult {
    ModelCheckpoint final_model;
    ModelCheckpoint best_model;   // lowest validation loss; equals final_model without validation data
    std::vector<LogEntry> log;
    double best_val_loss = 0.0;   // NaN without validation data
};

/// Multispectral input cube and the hyperspectral cube it was derived from (same H, W).
struct CubePair {
    HyperCube ms;
    HyperCube hs;
};

/// Resolves n_spatial = 0 to the patch-grid size of the given cube dimensions.
ModelConfig resolve_config(ModelConfig cfg, int height, int width);

/// Masked-autoencoder pretraining on band-wise normalized hyperspectral cubes. Statistics come
/// from `train` unless supplied. Throws RuntimeFailure if the loss becomes non-finite.
TrainResult pretrain(const std::vector<HyperCube>& train, const std::vector<HyperCube>& val,
                     const ModelConfig& cfg, const std::optional<BandStats>& hs_stats = std::nullopt);

/// Trains the multispectral-to-hyperspectral reconstruction. With `init` the trunk starts from its
/// weights and hyperspectral statistics; without it the model is randomly initialized.
/// Zero steps return `init` unchanged.
TrainResult finetune(const std::vector<CubePair>& train, const std::vector<CubePair>& val,
                     const std::optional<ModelCheckpoint>& init, const ModelConfig& cfg);

/// Hyperspectral cube in reflectance units predicted from a raw multispectral cube.
HyperCube reconstruct(const HyperCube& ms_raw, const ModelCheckpoint& ckpt);

/// Hyperspectral cube in reflectance units with the listed spectral groups predicted from the rest.
HyperCube reconstruct_masked(const HyperCube& hs_raw, const std::vector<int>& masked_groups,
                             const ModelCheckpoint& ckpt);

/// Fine-tuning objective (normalized MAE over all hyperspectral values) of a checkpoint on pairs.
double finetune_loss(const std::vector<CubePair>& pairs, const ModelCheckpoint& ckpt);

void save_training_log(const std::vector<LogEntry>& log, const std::filesystem::path& path);

} // namespace spectral_bridge
