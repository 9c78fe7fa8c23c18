// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace spectral_bridge {

enum class Arm { hyperspectral, multispectral };
enum class Stage { pretrained, finetuned };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

/// Architecture and optimization settings of the spectral masked autoencoder.
struct ModelConfig {
    int embed_dim = 64;
    int band_group = 1;       // hyperspectral bands per token
    int spatial_patch = 4;
    int encoder_layers = 4;
    int decoder_layers = 2;
    int heads = 4;
    int mlp_ratio = 4;
    int ms_band_group = 1;    // multispectral bands per token
    double mask_fraction = 0.8;
    int n_spatial = 0;        // 0: resolve to H / spatial_patch from the training cubes
    bool masked_only_loss = false;

    double learning_rate = 1e-3;
    int batch_size = 8;
    int steps = 1000;
    int eval_interval = 50;
    double grad_clip = 1.0;   // 0 disables clipping
    std::uint64_t seed = 0;

    /// Throws ValidationError on an inconsistent configuration.
    void validate() const;

    /// Same tensor shapes and positional scaling (training hyperparameters may differ).
    bool same_architecture(const ModelConfig& other) const;

    std::map<std::string, std::string> to_map() const;
    /// Applies one key; returns false if the key is not a model setting.
    bool set(const std::string& key, const std::string& value);

    bool operator==(const ModelConfig&) const = default;
};

} // namespace spectral_bridge
