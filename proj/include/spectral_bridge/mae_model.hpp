// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spectral_bridge/checkpoint.hpp"
#include "spectral_bridge/mae_config.hpp"
#include "spectral_bridge/nn.hpp"
#include "spectral_bridge/tokens.hpp"

#include <optional>
#include <vector>

namespace spectral_bridge {

/// Embedded tokens of one cube plus their positional encodings.
template <typename T>
struct TokenGrid {
    nn::Mat<T> tokens;     // E_i + E_pos, or Z_mask + E_pos for masked groups
    nn::Mat<T> positions;  // E_pos
    std::vector<TokenCoord> coords;
    std::vector<bool> group_masked;
    int groups = 0;
};

/// Row layout of one batched forward pass.
///
/// Encoder rows are embedded patches of the chosen arm, `enc_len` tokens per spatial position.
/// Decoder rows are either an encoder latent (dec_source >= 0) or a mask query (-1) placed at
/// `dec_pos`; `dec_len` tokens per position. `out_rows` are the decoder rows sent through the
/// output head, in target order.
template <typename T>
struct ForwardPlan {
    Arm arm = Arm::hyperspectral;
    nn::Mat<T> enc_patches;
    nn::Mat<T> enc_pos;
    int enc_len = 0;
    std::vector<int> dec_source;
    nn::Mat<T> dec_pos;
    int dec_len = 0;
    std::vector<int> out_rows;
};

template <typename T>
struct ForwardCache {
    nn::Mat<T> enc_tokens;
    std::vector<typename nn::TransformerBlock<T>::Cache> enc_blocks;
    typename nn::LayerNorm<T>::Cache enc_norm;
    nn::Mat<T> latents;
    nn::Mat<T> dec_in;
    std::vector<typename nn::TransformerBlock<T>::Cache> dec_blocks;
    typename nn::LayerNorm<T>::Cache dec_norm;
    nn::Mat<T> head_in;
    nn::Mat<T> pred;
};

/// Spectral transformer masked autoencoder.
///
/// Self-attention only mixes tokens that share a spatial position. The encoder sees visible
/// tokens, the decoder sees visible latents together with positioned mask tokens, and a linear
/// head maps every decoder output back to a b*p*p pixel patch. Two input projections exist:
/// one for hyperspectral groups (pretraining) and one for multispectral groups (fine-tuning).
template <typename T>
class SpectralMae {
public:
    SpectralMae(ModelConfig config, std::vector<BandSpec> hs_bands, std::vector<BandSpec> ms_bands = {});

    static SpectralMae from_checkpoint(const ModelCheckpoint& ckpt);
    ModelCheckpoint to_checkpoint(Stage stage, const BandStats& hs_stats,
                                  const std::optional<BandStats>& ms_stats) const;

    /// Random initialization from `seed` (Xavier linears, unit LayerNorm, N(0, 0.02) mask token).
    void initialize(std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const std::vector<BandSpec>& hs_bands() const { return hs_bands_; }
    const std::vector<BandSpec>& ms_bands() const { return ms_bands_; }
    void set_ms_bands(std::vector<BandSpec> bands);
    nn::ParamStore<T>& params() { return params_; }
    const nn::ParamStore<T>& params() const { return params_; }
    int hs_groups() const { return static_cast<int>(hs_bands_.size()) / config_.band_group; }
    int patch_length(Arm arm) const;

    /// W_embed x + b_embed for every row of `patches`.
    nn::Mat<T> embed(const nn::Mat<T>& patches, Arm arm) const;

    /// Positional encodings for tokens ordered (y * grid_w + x) * groups + g.
    nn::Mat<T> position_table(int grid_w, int grid_h, const std::vector<double>& group_centers) const;

    TokenGrid<T> token_grid(const PatchSet& patches, Arm arm) const;

    /// Replaces every token of the listed groups (at all spatial positions) with Z_mask + E_pos.
    void apply_band_mask(TokenGrid<T>& grid, const std::vector<int>& masked_groups) const;

    /// Encoder stack + final norm over sequences of `seq_len` tokens. Optionally returns the
    /// attention probabilities of each layer (rows: (sequence * heads + head) * L + query).
    nn::Mat<T> encode(const nn::Mat<T>& tokens, int seq_len, std::vector<nn::Mat<T>>* attention = nullptr) const;

    /// Decoder stack + final norm + output head for every row.
    nn::Mat<T> decode(const nn::Mat<T>& tokens, int seq_len, std::vector<nn::Mat<T>>* attention = nullptr) const;

    /// Pretraining layout: visible hyperspectral groups go through the encoder, every group is predicted.
    ForwardPlan<T> pretrain_plan(const std::vector<const PatchSet*>& batch,
                                 const std::vector<std::vector<int>>& masked_groups) const;

    /// Fine-tuning layout: multispectral tokens go through the encoder; one mask query per
    /// hyperspectral group predicts that group.
    ForwardPlan<T> finetune_plan(const std::vector<const PatchSet*>& ms_batch) const;

    void forward(const ForwardPlan<T>& plan, ForwardCache<T>& cache) const;

    /// Accumulates parameter gradients of a scalar loss given d(loss)/d(pred).
    void backward(const ForwardPlan<T>& plan, const ForwardCache<T>& cache, const nn::Mat<T>& dpred,
                  nn::ParamStore<T>& grads) const;

private:
    void build();
    void run_encoder(const nn::Mat<T>& tokens, int seq_len, ForwardCache<T>& cache) const;

    ModelConfig config_;
    std::vector<BandSpec> hs_bands_;
    std::vector<BandSpec> ms_bands_;
    nn::ParamStore<T> params_;

    nn::Linear<T> hs_embed_;
    nn::Linear<T> ms_embed_;
    std::size_t mask_token_ = 0;
    std::vector<nn::TransformerBlock<T>> encoder_;
    nn::LayerNorm<T> encoder_norm_;
    std::vector<nn::TransformerBlock<T>> decoder_;
    nn::LayerNorm<T> decoder_norm_;
    nn::Linear<T> head_;
};

/// Mean absolute error over the selected rows (all rows if `row_used` is empty).
/// Writes d(loss)/d(pred) into `dpred` when non-null.
template <typename T>
T mae_loss(const nn::Mat<T>& pred, const nn::Mat<T>& target, const std::vector<char>& row_used,
           nn::Mat<T>* dpred);

/// Target rows matching a plan's out_rows for a batch of patch sets (concatenated in order).
template <typename T>
nn::Mat<T> stack_patches(const std::vector<const PatchSet*>& batch);

extern template class SpectralMae<float>;
extern template class SpectralMae<double>;

} // namespace spectral_bridge
