// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/container.hpp"
#include "spectral_bridge/mae_config.hpp"
#include "spectral_bridge/nn.hpp"
#include "spectral_bridge/stats.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace spectral_bridge {

/// Everything needed to rebuild a trained spectral MAE: parameters, the configuration that
/// shaped them, the band layouts of both input arms and the normalization statistics.
struct ModelCheckpoint {
    ModelConfig config;
    Stage stage = Stage::pretrained;
    std::vector<BandSpec> hs_bands;
    std::vector<BandSpec> ms_bands;  // empty until fine-tuned
    BandStats hs_stats;
    std::optional<BandStats> ms_stats;
    nn::ParamStore<float> params;

    bool operator==(const ModelCheckpoint&) const = default;
};

Container to_container(const ModelCheckpoint& ckpt);
ModelCheckpoint model_checkpoint_from(const Container& c);

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

// Helpers shared with the regressor checkpoint.
std::string encode_bands(const std::vector<BandSpec>& bands);
std::vector<BandSpec> decode_bands(const std::string& text);
std::string encode_doubles(const std::vector<double>& v);
std::vector<double> decode_doubles(const std::string& text);
TensorRecord to_record(const std::string& name, const nn::Mat<float>& m);
void put_stats(Container& c, const std::string& prefix, const BandStats& s);
BandStats get_stats(const Container& c, const std::string& prefix);

} // namespace spectral_bridge
