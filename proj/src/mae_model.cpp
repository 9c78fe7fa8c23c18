// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/mae_model.hpp"

#include "spectral_bridge/error.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <random>

namespace spectral_bridge {

template <typename T>
SpectralMae<T>::SpectralMae(ModelConfig config, std::vector<BandSpec> hs_bands, std::vector<BandSpec> ms_bands)
    : config_(std::move(config)), hs_bands_(std::move(hs_bands)) {
    config_.validate();
    if (config_.n_spatial < 1) throw ValidationError("model: n_spatial must be resolved (>= 1) before construction");
    validate_band_list(hs_bands_);
    if (hs_bands_.empty() || hs_bands_.size() % config_.band_group != 0) {
        throw ValidationError(fmt::format("model: band group {} does not divide {} hyperspectral bands",
                                          config_.band_group, hs_bands_.size()));
    }
    set_ms_bands(std::move(ms_bands));
    build();
}

template <typename T>
void SpectralMae<T>::set_ms_bands(std::vector<BandSpec> bands) {
    validate_band_list(bands);
    if (bands.size() % config_.ms_band_group != 0) {
        throw ValidationError(fmt::format("model: multispectral group {} does not divide {} bands",
                                          config_.ms_band_group, bands.size()));
    }
    ms_bands_ = std::move(bands);
}

template <typename T>
int SpectralMae<T>::patch_length(Arm arm) const {
    const int p2 = config_.spatial_patch * config_.spatial_patch;
    return (arm == Arm::hyperspectral ? config_.band_group : config_.ms_band_group) * p2;
}

template <typename T>
void SpectralMae<T>::build() {
    const int d = config_.embed_dim;
    hs_embed_ = nn::Linear<T>::create(params_, "hs_embed", patch_length(Arm::hyperspectral), d);
    ms_embed_ = nn::Linear<T>::create(params_, "ms_embed", patch_length(Arm::multispectral), d);
    mask_token_ = params_.add("mask_token", 1, d);
    for (int i = 0; i < config_.encoder_layers; ++i) {
        encoder_.push_back(nn::TransformerBlock<T>::create(params_, fmt::format("encoder.{}", i), d,
                                                           config_.heads, d * config_.mlp_ratio));
    }
    encoder_norm_ = nn::LayerNorm<T>::create(params_, "encoder.norm", d);
    for (int i = 0; i < config_.decoder_layers; ++i) {
        decoder_.push_back(nn::TransformerBlock<T>::create(params_, fmt::format("decoder.{}", i), d,
                                                           config_.heads, d * config_.mlp_ratio));
    }
    decoder_norm_ = nn::LayerNorm<T>::create(params_, "decoder.norm", d);
    head_ = nn::Linear<T>::create(params_, "head", d, patch_length(Arm::hyperspectral));
}

template <typename T>
void SpectralMae<T>::initialize(std::uint64_t seed) {
    std::seed_seq seq{seed, std::uint64_t{0x6d6165}};
    std::mt19937_64 rng(seq);
    hs_embed_.init(params_, rng);
    ms_embed_.init(params_, rng);
    std::normal_distribution<double> normal(0.0, 0.02);
    auto& mt = params_[mask_token_];
    for (Eigen::Index i = 0; i < mt.size(); ++i) mt.data()[i] = static_cast<T>(normal(rng));
    for (const auto& b : encoder_) b.init(params_, rng);
    encoder_norm_.init(params_);
    for (const auto& b : decoder_) b.init(params_, rng);
    decoder_norm_.init(params_);
    head_.init(params_, rng);
}

template <typename T>
SpectralMae<T> SpectralMae<T>::from_checkpoint(const ModelCheckpoint& ckpt) {
    SpectralMae<T> model(ckpt.config, ckpt.hs_bands, ckpt.ms_bands);
    if (ckpt.params.size() != model.params_.size()) {
        throw ValidationError(fmt::format("checkpoint has {} tensors, model expects {}", ckpt.params.size(),
                                          model.params_.size()));
    }
    for (std::size_t i = 0; i < model.params_.size(); ++i) {
        const auto& src = ckpt.params[i];
        auto& dst = model.params_[i];
        if (ckpt.params.name(i) != model.params_.name(i) || src.rows() != dst.rows() || src.cols() != dst.cols()) {
            throw ValidationError(fmt::format("checkpoint tensor '{}' ({}x{}) does not match model tensor '{}' ({}x{})",
                                              ckpt.params.name(i), src.rows(), src.cols(),
                                              model.params_.name(i), dst.rows(), dst.cols()));
        }
        dst = src.template cast<T>();
    }
    return model;
}

template <typename T>
ModelCheckpoint SpectralMae<T>::to_checkpoint(Stage stage, const BandStats& hs_stats,
                                              const std::optional<BandStats>& ms_stats) const {
    ModelCheckpoint ckpt;
    ckpt.config = config_;
    ckpt.stage = stage;
    ckpt.hs_bands = hs_bands_;
    ckpt.ms_bands = ms_bands_;
    ckpt.hs_stats = hs_stats;
    ckpt.ms_stats = ms_stats;
    ckpt.params = params_.template cast<float>();
    return ckpt;
}

template <typename T>
nn::Mat<T> SpectralMae<T>::embed(const nn::Mat<T>& patches, Arm arm) const {
    if (patches.cols() != patch_length(arm)) {
        throw ValidationError(fmt::format("embed: patch length {} does not match the {} arm ({})",
                                          patches.cols(), arm == Arm::hyperspectral ? "hyperspectral" : "multispectral",
                                          patch_length(arm)));
    }
    nn::Mat<T> out;
    (arm == Arm::hyperspectral ? hs_embed_ : ms_embed_).forward(params_, patches, out);
    return out;
}

template <typename T>
nn::Mat<T> SpectralMae<T>::position_table(int grid_w, int grid_h, const std::vector<double>& centers) const {
    const int d = config_.embed_dim;
    const auto groups = static_cast<int>(centers.size());
    std::vector<std::vector<double>> spectral;
    spectral.reserve(centers.size());
    for (double c : centers) spectral.push_back(spectral_encoding(c, d, config_.n_spatial));
    nn::Mat<T> table(static_cast<Eigen::Index>(grid_w) * grid_h * groups, d);
    Eigen::Index row = 0;
    for (int y = 0; y < grid_h; ++y) {
        for (int x = 0; x < grid_w; ++x) {
            const auto spatial = spatial_encoding(x, y, d);
            for (int g = 0; g < groups; ++g, ++row) {
                for (int k = 0; k < d; ++k) table(row, k) = static_cast<T>(spatial[k] + spectral[g][k]);
            }
        }
    }
    return table;
}

namespace {

template <typename T>
nn::Mat<T> to_matrix(const PatchSet& ps) {
    nn::Mat<T> m(static_cast<Eigen::Index>(ps.count()), ps.patch_length());
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(ps.values[i]);
    return m;
}

std::vector<double> centers_of(const PatchSet& ps) {
    std::vector<double> out(static_cast<std::size_t>(ps.groups));
    for (int g = 0; g < ps.groups; ++g) out[g] = ps.coords[g].lambda_nm;
    return out;
}

} // namespace

template <typename T>
TokenGrid<T> SpectralMae<T>::token_grid(const PatchSet& patches, Arm arm) const {
    TokenGrid<T> grid;
    grid.positions = position_table(patches.grid_w, patches.grid_h, centers_of(patches));
    grid.tokens = embed(to_matrix<T>(patches), arm) + grid.positions;
    grid.coords = patches.coords;
    grid.groups = patches.groups;
    grid.group_masked.assign(static_cast<std::size_t>(patches.groups), false);
    return grid;
}

template <typename T>
void SpectralMae<T>::apply_band_mask(TokenGrid<T>& grid, const std::vector<int>& masked_groups) const {
    for (int g : masked_groups) {
        if (g < 0 || g >= grid.groups) throw ValidationError(fmt::format("mask group {} out of range", g));
        grid.group_masked[g] = true;
    }
    for (std::size_t r = 0; r < grid.coords.size(); ++r) {
        if (grid.group_masked[grid.coords[r].group]) {
            grid.tokens.row(static_cast<Eigen::Index>(r)) =
                params_[mask_token_].row(0) + grid.positions.row(static_cast<Eigen::Index>(r));
        }
    }
}

template <typename T>
nn::Mat<T> SpectralMae<T>::encode(const nn::Mat<T>& tokens, int seq_len, std::vector<nn::Mat<T>>* attention) const {
    ForwardCache<T> cache;
    run_encoder(tokens, seq_len, cache);
    if (attention != nullptr) {
        attention->clear();
        for (const auto& c : cache.enc_blocks) attention->push_back(c.ca.probs);
    }
    return cache.latents;
}

template <typename T>
nn::Mat<T> SpectralMae<T>::decode(const nn::Mat<T>& tokens, int seq_len, std::vector<nn::Mat<T>>* attention) const {
    if (attention != nullptr) attention->clear();
    nn::Mat<T> x = tokens, y;
    for (const auto& block : decoder_) {
        typename nn::TransformerBlock<T>::Cache c;
        block.forward(params_, x, seq_len, y, c);
        if (attention != nullptr) attention->push_back(c.ca.probs);
        x.swap(y);
    }
    typename nn::LayerNorm<T>::Cache nc;
    decoder_norm_.forward(params_, x, y, nc);
    nn::Mat<T> out;
    head_.forward(params_, y, out);
    return out;
}

template <typename T>
void SpectralMae<T>::run_encoder(const nn::Mat<T>& tokens, int seq_len, ForwardCache<T>& cache) const {
    cache.enc_blocks.resize(encoder_.size());
    nn::Mat<T> x = tokens, y;
    for (std::size_t i = 0; i < encoder_.size(); ++i) {
        encoder_[i].forward(params_, x, seq_len, y, cache.enc_blocks[i]);
        x.swap(y);
    }
    encoder_norm_.forward(params_, x, cache.latents, cache.enc_norm);
}

template <typename T>
ForwardPlan<T> SpectralMae<T>::pretrain_plan(const std::vector<const PatchSet*>& batch,
                                             const std::vector<std::vector<int>>& masked_groups) const {
    if (batch.empty() || batch.size() != masked_groups.size()) {
        throw ValidationError("pretrain_plan: batch and mask lists must be non-empty and equally long");
    }
    const int groups = hs_groups();
    const int d = config_.embed_dim;
    const int visible = groups - static_cast<int>(masked_groups.front().size());
    if (visible < 1) throw ValidationError("pretrain_plan: every spectral group is masked");

    std::size_t enc_rows = 0, dec_rows = 0;
    for (std::size_t c = 0; c < batch.size(); ++c) {
        const auto& ps = *batch[c];
        if (ps.groups != groups || ps.band_group != config_.band_group || ps.patch != config_.spatial_patch) {
            throw ValidationError("pretrain_plan: patch layout does not match the model configuration");
        }
        if (groups - static_cast<int>(masked_groups[c].size()) != visible) {
            throw ValidationError("pretrain_plan: all cubes in a batch must mask the same number of groups");
        }
        enc_rows += static_cast<std::size_t>(ps.positions()) * visible;
        dec_rows += ps.count();
    }

    ForwardPlan<T> plan;
    plan.arm = Arm::hyperspectral;
    plan.enc_len = visible;
    plan.dec_len = groups;
    plan.enc_patches.resize(static_cast<Eigen::Index>(enc_rows), patch_length(Arm::hyperspectral));
    plan.enc_pos.resize(static_cast<Eigen::Index>(enc_rows), d);
    plan.dec_pos.resize(static_cast<Eigen::Index>(dec_rows), d);
    plan.dec_source.reserve(dec_rows);
    plan.out_rows.reserve(dec_rows);

    const auto centers = group_centers(hs_bands_, config_.band_group);
    Eigen::Index er = 0, dr = 0;
    std::vector<char> is_masked(static_cast<std::size_t>(groups));
    for (std::size_t c = 0; c < batch.size(); ++c) {
        const auto& ps = *batch[c];
        const auto pos = position_table(ps.grid_w, ps.grid_h, centers);
        std::fill(is_masked.begin(), is_masked.end(), 0);
        for (int g : masked_groups[c]) {
            if (g < 0 || g >= groups || is_masked[g]) throw ValidationError("pretrain_plan: invalid mask set");
            is_masked[g] = 1;
        }
        for (std::size_t t = 0; t < ps.count(); ++t, ++dr) {
            const int g = ps.coords[t].group;
            const auto row = static_cast<Eigen::Index>(t);
            plan.dec_pos.row(dr) = pos.row(row);
            plan.out_rows.push_back(static_cast<int>(dr));
            if (is_masked[g]) {
                plan.dec_source.push_back(-1);
                continue;
            }
            const float* src = ps.patch_data(t);
            for (int k = 0; k < ps.patch_length(); ++k) plan.enc_patches(er, k) = static_cast<T>(src[k]);
            plan.enc_pos.row(er) = pos.row(row);
            plan.dec_source.push_back(static_cast<int>(er));
            ++er;
        }
    }
    return plan;
}

template <typename T>
ForwardPlan<T> SpectralMae<T>::finetune_plan(const std::vector<const PatchSet*>& ms_batch) const {
    if (ms_batch.empty()) throw ValidationError("finetune_plan: empty batch");
    const int d = config_.embed_dim;
    const int hs = hs_groups();
    const int ms = ms_batch.front()->groups;
    const auto hs_centers = group_centers(hs_bands_, config_.band_group);

    std::size_t enc_rows = 0, dec_rows = 0;
    for (const auto* ps : ms_batch) {
        if (ps->groups != ms || ps->band_group != config_.ms_band_group || ps->patch != config_.spatial_patch) {
            throw ValidationError("finetune_plan: multispectral patch layout does not match the configuration");
        }
        if (!ms_bands_.empty() && !bands_match(ps->bands, ms_bands_)) {
            throw ValidationError("finetune_plan: multispectral bands differ from the model's input bands");
        }
        enc_rows += ps->count();
        dec_rows += static_cast<std::size_t>(ps->positions()) * (ms + hs);
    }

    ForwardPlan<T> plan;
    plan.arm = Arm::multispectral;
    plan.enc_len = ms;
    plan.dec_len = ms + hs;
    plan.enc_patches.resize(static_cast<Eigen::Index>(enc_rows), patch_length(Arm::multispectral));
    plan.enc_pos.resize(static_cast<Eigen::Index>(enc_rows), d);
    plan.dec_pos = nn::Mat<T>::Zero(static_cast<Eigen::Index>(dec_rows), d);
    plan.dec_source.reserve(dec_rows);

    Eigen::Index er = 0, dr = 0;
    for (const auto* ps : ms_batch) {
        const auto ms_pos = position_table(ps->grid_w, ps->grid_h, centers_of(*ps));
        const auto hs_pos = position_table(ps->grid_w, ps->grid_h, hs_centers);
        for (int s = 0; s < ps->positions(); ++s) {
            for (int g = 0; g < ms; ++g, ++er, ++dr) {
                const std::size_t t = static_cast<std::size_t>(s) * ms + g;
                const float* src = ps->patch_data(t);
                for (int k = 0; k < ps->patch_length(); ++k) plan.enc_patches(er, k) = static_cast<T>(src[k]);
                plan.enc_pos.row(er) = ms_pos.row(static_cast<Eigen::Index>(t));
                plan.dec_source.push_back(static_cast<int>(er));
            }
            for (int g = 0; g < hs; ++g, ++dr) {
                plan.dec_pos.row(dr) = hs_pos.row(static_cast<Eigen::Index>(s) * hs + g);
                plan.dec_source.push_back(-1);
                plan.out_rows.push_back(static_cast<int>(dr));
            }
        }
    }
    return plan;
}

template <typename T>
void SpectralMae<T>::forward(const ForwardPlan<T>& plan, ForwardCache<T>& cache) const {
    cache.enc_tokens = embed(plan.enc_patches, plan.arm) + plan.enc_pos;
    run_encoder(cache.enc_tokens, plan.enc_len, cache);

    const auto n_dec = static_cast<Eigen::Index>(plan.dec_source.size());
    cache.dec_in.resize(n_dec, config_.embed_dim);
    for (Eigen::Index r = 0; r < n_dec; ++r) {
        const int src = plan.dec_source[r];
        if (src >= 0) {
            cache.dec_in.row(r) = cache.latents.row(src);
        } else {
            cache.dec_in.row(r) = params_[mask_token_].row(0) + plan.dec_pos.row(r);
        }
    }

    cache.dec_blocks.resize(decoder_.size());
    nn::Mat<T> x = cache.dec_in, y;
    for (std::size_t i = 0; i < decoder_.size(); ++i) {
        decoder_[i].forward(params_, x, plan.dec_len, y, cache.dec_blocks[i]);
        x.swap(y);
    }
    decoder_norm_.forward(params_, x, y, cache.dec_norm);

    cache.head_in.resize(static_cast<Eigen::Index>(plan.out_rows.size()), config_.embed_dim);
    for (std::size_t i = 0; i < plan.out_rows.size(); ++i) {
        cache.head_in.row(static_cast<Eigen::Index>(i)) = y.row(plan.out_rows[i]);
    }
    head_.forward(params_, cache.head_in, cache.pred);
}

template <typename T>
void SpectralMae<T>::backward(const ForwardPlan<T>& plan, const ForwardCache<T>& cache, const nn::Mat<T>& dpred,
                              nn::ParamStore<T>& grads) const {
    nn::Mat<T> dhead;
    head_.backward(params_, cache.head_in, dpred, grads, &dhead);

    const auto n_dec = static_cast<Eigen::Index>(plan.dec_source.size());
    nn::Mat<T> dy = nn::Mat<T>::Zero(n_dec, config_.embed_dim);
    for (std::size_t i = 0; i < plan.out_rows.size(); ++i) dy.row(plan.out_rows[i]) += dhead.row(static_cast<Eigen::Index>(i));

    nn::Mat<T> dx;
    decoder_norm_.backward(params_, cache.dec_norm, dy, grads, dx);
    for (std::size_t i = decoder_.size(); i-- > 0;) {
        decoder_[i].backward(params_, plan.dec_len, cache.dec_blocks[i], dx, grads, dy);
        dx.swap(dy);
    }

    nn::Mat<T> dlatents = nn::Mat<T>::Zero(cache.latents.rows(), cache.latents.cols());
    auto& dmask = grads[mask_token_];
    for (Eigen::Index r = 0; r < n_dec; ++r) {
        const int src = plan.dec_source[r];
        if (src >= 0) {
            dlatents.row(src) += dx.row(r);
        } else {
            dmask.row(0) += dx.row(r);
        }
    }

    encoder_norm_.backward(params_, cache.enc_norm, dlatents, grads, dx);
    for (std::size_t i = encoder_.size(); i-- > 0;) {
        encoder_[i].backward(params_, plan.enc_len, cache.enc_blocks[i], dx, grads, dy);
        dx.swap(dy);
    }
    (plan.arm == Arm::hyperspectral ? hs_embed_ : ms_embed_).backward(params_, plan.enc_patches, dx, grads, nullptr);
}

template <typename T>
T mae_loss(const nn::Mat<T>& pred, const nn::Mat<T>& target, const std::vector<char>& row_used, nn::Mat<T>* dpred) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw ValidationError("mae_loss: prediction and target shapes differ");
    }
    if (!row_used.empty() && row_used.size() != static_cast<std::size_t>(pred.rows())) {
        throw ValidationError("mae_loss: row mask length mismatch");
    }
    Eigen::Index used = 0;
    for (Eigen::Index r = 0; r < pred.rows(); ++r) used += row_used.empty() || row_used[r] ? 1 : 0;
    if (dpred != nullptr) dpred->setZero(pred.rows(), pred.cols());
    if (used == 0) return T(0);
    const double count = static_cast<double>(used) * static_cast<double>(pred.cols());
    const T inv = static_cast<T>(1.0 / count);
    double sum = 0.0;
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        if (!row_used.empty() && !row_used[r]) continue;
        for (Eigen::Index k = 0; k < pred.cols(); ++k) {
            const T diff = pred(r, k) - target(r, k);
            sum += std::abs(static_cast<double>(diff));
            if (dpred != nullptr) (*dpred)(r, k) = diff > T(0) ? inv : (diff < T(0) ? -inv : T(0));
        }
    }
    return static_cast<T>(sum / count);
}

template <typename T>
nn::Mat<T> stack_patches(const std::vector<const PatchSet*>& batch) {
    Eigen::Index rows = 0;
    const int len = batch.empty() ? 0 : batch.front()->patch_length();
    for (const auto* ps : batch) {
        if (ps->patch_length() != len) throw ValidationError("stack_patches: mixed patch lengths");
        rows += static_cast<Eigen::Index>(ps->count());
    }
    nn::Mat<T> out(rows, len);
    Eigen::Index r = 0;
    for (const auto* ps : batch) {
        for (std::size_t t = 0; t < ps->count(); ++t, ++r) {
            const float* src = ps->patch_data(t);
            for (int k = 0; k < len; ++k) out(r, k) = static_cast<T>(src[k]);
        }
    }
    return out;
}

template class SpectralMae<float>;
template class SpectralMae<double>;
template float mae_loss<float>(const nn::Mat<float>&, const nn::Mat<float>&, const std::vector<char>&, nn::Mat<float>*);
template double mae_loss<double>(const nn::Mat<double>&, const nn::Mat<double>&, const std::vector<char>&, nn::Mat<double>*);
template nn::Mat<float> stack_patches<float>(const std::vector<const PatchSet*>&);
template nn::Mat<double> stack_patches<double>(const std::vector<const PatchSet*>&);

} // namespace spectral_bridge
