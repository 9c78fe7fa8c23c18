// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/mae_config.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/error.hpp"

#include <fmt/format.h>

namespace spectral_bridge {

std::string_view to_string(Stage s) { return s == Stage::pretrained ? "pretrained" : "finetuned"; }

Stage parse_stage(std::string_view s) {
    if (s == "pretrained") return Stage::pretrained;
    if (s == "finetuned") return Stage::finetuned;
    throw ValidationError(fmt::format("unknown training stage '{}'", s));
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ValidationError("model config: " + msg); };
    if (embed_dim < 2 || heads < 1 || embed_dim % (2 * heads) != 0) {
        fail(fmt::format("embed_dim {} must be divisible by 2*heads ({})", embed_dim, 2 * heads));
    }
    if (band_group < 1 || ms_band_group < 1 || spatial_patch < 1) fail("group and patch sizes must be >= 1");
    if (encoder_layers < 1 || decoder_layers < 1) fail("encoder and decoder need at least one layer");
    if (mlp_ratio < 1) fail("mlp_ratio must be >= 1");
    if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) fail("mask_fraction must lie in [0, 1)");
    if (n_spatial < 0) fail("n_spatial must be >= 0");
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (steps < 0) fail("steps must be >= 0");
    if (eval_interval < 1) fail("eval_interval must be >= 1");
    if (grad_clip < 0.0) fail("grad_clip must be >= 0");
}

bool ModelConfig::same_architecture(const ModelConfig& o) const {
    return embed_dim == o.embed_dim && band_group == o.band_group && spatial_patch == o.spatial_patch &&
           encoder_layers == o.encoder_layers && decoder_layers == o.decoder_layers && heads == o.heads &&
           mlp_ratio == o.mlp_ratio && ms_band_group == o.ms_band_group && n_spatial == o.n_spatial;
}

std::map<std::string, std::string> ModelConfig::to_map() const {
    return {
        {"embed_dim", std::to_string(embed_dim)},
        {"band_group", std::to_string(band_group)},
        {"spatial_patch", std::to_string(spatial_patch)},
        {"encoder_layers", std::to_string(encoder_layers)},
        {"decoder_layers", std::to_string(decoder_layers)},
        {"heads", std::to_string(heads)},
        {"mlp_ratio", std::to_string(mlp_ratio)},
        {"ms_band_group", std::to_string(ms_band_group)},
        {"mask_fraction", csv::format_double(mask_fraction)},
        {"n_spatial", std::to_string(n_spatial)},
        {"masked_only_loss", masked_only_loss ? "true" : "false"},
        {"learning_rate", csv::format_double(learning_rate)},
        {"batch_size", std::to_string(batch_size)},
        {"steps", std::to_string(steps)},
        {"eval_interval", std::to_string(eval_interval)},
        {"grad_clip", csv::format_double(grad_clip)},
        {"seed", std::to_string(seed)},
    };
}

namespace {

int as_int(const std::string& key, const std::string& v) {
    auto x = csv::parse_int(v);
    if (!x) throw ValidationError(fmt::format("model config: '{}' expects an integer, got '{}'", key, v));
    return static_cast<int>(*x);
}

double as_double(const std::string& key, const std::string& v) {
    auto x = csv::parse_double(v);
    if (!x) throw ValidationError(fmt::format("model config: '{}' expects a number, got '{}'", key, v));
    return *x;
}

bool as_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError(fmt::format("model config: '{}' expects true/false, got '{}'", key, v));
}

} // namespace

bool ModelConfig::set(const std::string& key, const std::string& value) {
    if (key == "embed_dim") embed_dim = as_int(key, value);
    else if (key == "band_group") band_group = as_int(key, value);
    else if (key == "spatial_patch") spatial_patch = as_int(key, value);
    else if (key == "encoder_layers") encoder_layers = as_int(key, value);
    else if (key == "decoder_layers") decoder_layers = as_int(key, value);
    else if (key == "heads") heads = as_int(key, value);
    else if (key == "mlp_ratio") mlp_ratio = as_int(key, value);
    else if (key == "ms_band_group") ms_band_group = as_int(key, value);
    else if (key == "mask_fraction") mask_fraction = as_double(key, value);
    else if (key == "n_spatial") n_spatial = as_int(key, value);
    else if (key == "masked_only_loss") masked_only_loss = as_bool(key, value);
    else if (key == "learning_rate") learning_rate = as_double(key, value);
    else if (key == "batch_size") batch_size = as_int(key, value);
    else if (key == "steps") steps = as_int(key, value);
    else if (key == "eval_interval") eval_interval = as_int(key, value);
    else if (key == "grad_clip") grad_clip = as_double(key, value);
    else if (key == "seed") {
        auto x = csv::parse_int(value);
        if (!x || *x < 0) throw ValidationError("model config: seed must be a non-negative integer");
        seed = static_cast<std::uint64_t>(*x);
    } else {
        return false;
    }
    return true;
}

} // namespace spectral_bridge
