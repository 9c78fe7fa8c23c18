// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/training.hpp"

#include "spectral_bridge/error.hpp"
#include "spectral_bridge/mae_model.hpp"
#include "spectral_bridge/stats.hpp"
#include "spectral_bridge/tokens.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/os.h>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace spectral_bridge {

namespace {

struct Batch {
    ForwardPlan<float> plan;
    nn::Mat<float> target;
    std::vector<char> rows;  // empty: every row contributes
};

using BatchFn = std::function<Batch(const std::vector<std::size_t>&, std::mt19937_64&)>;
using SnapshotFn = std::function<ModelCheckpoint(const SpectralMae<float>&)>;

double cosine_lr(double base, int step, int steps) {
    return 0.5 * base * (1.0 + std::cos(std::numbers::pi * step / std::max(steps, 1)));
}

/// Row-weighted loss of one forward pass; returns {loss, element count}.
std::pair<double, double> batch_loss(const SpectralMae<float>& model, const Batch& b) {
    ForwardCache<float> cache;
    model.forward(b.plan, cache);
    const double loss = mae_loss<float>(cache.pred, b.target, b.rows, nullptr);
    std::size_t used = b.rows.empty() ? static_cast<std::size_t>(b.target.rows())
                                      : static_cast<std::size_t>(std::count(b.rows.begin(), b.rows.end(), 1));
    return {loss, static_cast<double>(used) * static_cast<double>(b.target.cols())};
}

double dataset_loss(const SpectralMae<float>& model, std::size_t n, int batch_size,
                    const std::function<Batch(const std::vector<std::size_t>&)>& make) {
    double sum = 0.0, weight = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(n, start + batch_size); ++i) idx.push_back(i);
        const auto [loss, w] = batch_loss(model, make(idx));
        sum += loss * w;
        weight += w;
    }
    return weight > 0.0 ? sum / weight : 0.0;
}

TrainResult train_loop(SpectralMae<float>& model, const ModelConfig& cfg, std::size_t n_train,
                       const BatchFn& make_batch, const std::function<double()>& val_loss,
                       const SnapshotFn& snapshot) {
    std::seed_seq seq{cfg.seed, std::uint64_t{1}};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    nn::Adam<float> adam(model.params());
    auto grads = model.params().zeros_like();

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::quiet_NaN();
    auto evaluate = [&](int step) {
        if (!val_loss) return;
        const double v = val_loss();
        result.log.push_back({step, "val", v});
        if (std::isfinite(v) && !(v >= result.best_val_loss)) {
            result.best_val_loss = v;
            result.best_model = snapshot(model);
        }
    };
    evaluate(0);

    const auto batch_size = static_cast<std::size_t>(std::max(1, cfg.batch_size));
    ForwardCache<float> cache;
    nn::Mat<float> dpred;
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<std::size_t> idx;
        while (idx.size() < std::min(batch_size, n_train)) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            idx.push_back(order[cursor++]);
        }
        const Batch batch = make_batch(idx, rng);
        model.forward(batch.plan, cache);
        const double loss = mae_loss<float>(cache.pred, batch.target, batch.rows, &dpred);
        if (!std::isfinite(loss)) {
            throw RuntimeFailure(fmt::format("training diverged: non-finite loss at step {} (lr {:.3g})", step,
                                             cosine_lr(cfg.learning_rate, step, cfg.steps)));
        }
        result.log.push_back({step, "train", loss});
        grads.set_zero();
        model.backward(batch.plan, cache, dpred, grads);
        nn::clip_grad_norm(grads, cfg.grad_clip);
        adam.step(model.params(), grads, cosine_lr(cfg.learning_rate, step, cfg.steps));
        if ((step + 1) % std::max(1, cfg.eval_interval) == 0 || step + 1 == cfg.steps) evaluate(step + 1);
    }

    result.final_model = snapshot(model);
    if (!val_loss) result.best_model = result.final_model;
    return result;
}

void require_same_bands(const std::vector<BandSpec>& ref, const HyperCube& cube, const char* what) {
    if (!bands_match(ref, cube.bands())) {
        throw ValidationError(fmt::format("{} cube '{}' has a band layout different from the first cube", what,
                                          cube.patch_id()));
    }
}

std::vector<PatchSet> normalized_patches(const std::vector<HyperCube>& cubes, const BandStats& stats, int group,
                                         int patch) {
    std::vector<PatchSet> out;
    out.reserve(cubes.size());
    for (const auto& c : cubes) out.push_back(patchify(normalize_bandwise(c, stats), group, patch));
    return out;
}

std::vector<const PatchSet*> pick(const std::vector<PatchSet>& sets, const std::vector<std::size_t>& idx) {
    std::vector<const PatchSet*> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(&sets[i]);
    return out;
}

std::vector<char> query_rows(const ForwardPlan<float>& plan) {
    std::vector<char> rows(plan.out_rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = plan.dec_source[plan.out_rows[i]] < 0 ? 1 : 0;
    return rows;
}

HyperCube to_cube(const nn::Mat<float>& pred, const std::vector<TokenCoord>& coords, const ModelConfig& cfg,
                  const ModelCheckpoint& ckpt, const HyperCube& like) {
    const std::vector<float> values(pred.data(), pred.data() + pred.size());
    const auto cube = reassemble(values, coords, cfg.band_group, cfg.spatial_patch, ckpt.hs_bands, like.height(),
                                 like.width(), like.patch_id(), like.tile_id());
    return denormalize_bandwise(cube, ckpt.hs_stats);
}

std::vector<TokenCoord> hs_coords(const PatchSet& ms, const std::vector<double>& centers) {
    std::vector<TokenCoord> coords;
    coords.reserve(static_cast<std::size_t>(ms.positions()) * centers.size());
    for (int y = 0; y < ms.grid_h; ++y) {
        for (int x = 0; x < ms.grid_w; ++x) {
            for (std::size_t g = 0; g < centers.size(); ++g) {
                coords.push_back({x, y, static_cast<int>(g), centers[g]});
            }
        }
    }
    return coords;
}

void check_pairs(const std::vector<CubePair>& pairs) {
    for (const auto& p : pairs) {
        if (p.ms.height() != p.hs.height() || p.ms.width() != p.hs.width()) {
            throw ValidationError(fmt::format("pair '{}': multispectral {}x{} and hyperspectral {}x{} grids differ",
                                              p.hs.patch_id(), p.ms.height(), p.ms.width(), p.hs.height(),
                                              p.hs.width()));
        }
        require_same_bands(pairs.front().hs.bands(), p.hs, "hyperspectral");
        require_same_bands(pairs.front().ms.bands(), p.ms, "multispectral");
    }
}

} // namespace

ModelConfig resolve_config(ModelConfig cfg, int height, int width) {
    if (cfg.n_spatial == 0) cfg.n_spatial = std::max(height, width) / std::max(1, cfg.spatial_patch);
    cfg.validate();
    return cfg;
}

TrainResult pretrain(const std::vector<HyperCube>& train, const std::vector<HyperCube>& val, const ModelConfig& cfg,
                     const std::optional<BandStats>& hs_stats) {
    if (train.empty()) throw ValidationError("pretrain: empty training set");
    const auto& bands = train.front().bands();
    for (const auto& c : train) require_same_bands(bands, c, "training");
    for (const auto& c : val) require_same_bands(bands, c, "validation");
    const auto rc = resolve_config(cfg, train.front().height(), train.front().width());

    BandStats stats;
    if (hs_stats) {
        stats = *hs_stats;
    } else {
        for (const auto& c : train) stats.add(c);
    }
    const auto train_ps = normalized_patches(train, stats, rc.band_group, rc.spatial_patch);
    const auto val_ps = normalized_patches(val, stats, rc.band_group, rc.spatial_patch);

    SpectralMae<float> model(rc, bands);
    model.initialize(rc.seed);
    const int groups = model.hs_groups();

    std::vector<std::vector<int>> val_masks;
    {
        std::seed_seq seq{rc.seed, std::uint64_t{2}};
        std::mt19937_64 rng(seq);
        for (std::size_t i = 0; i < val_ps.size(); ++i) val_masks.push_back(select_mask_groups(groups, rc.mask_fraction, rng));
    }

    auto assemble = [&](const std::vector<PatchSet>& sets, const std::vector<std::size_t>& idx,
                        const std::vector<std::vector<int>>& masks) {
        Batch b;
        const auto ptrs = pick(sets, idx);
        b.plan = model.pretrain_plan(ptrs, masks);
        b.target = stack_patches<float>(ptrs);
        if (rc.masked_only_loss) b.rows = query_rows(b.plan);
        return b;
    };
    const BatchFn make_batch = [&](const std::vector<std::size_t>& idx, std::mt19937_64& rng) {
        std::vector<std::vector<int>> masks;
        for (std::size_t i = 0; i < idx.size(); ++i) masks.push_back(select_mask_groups(groups, rc.mask_fraction, rng));
        return assemble(train_ps, idx, masks);
    };
    std::function<double()> val_loss;
    if (!val_ps.empty()) {
        val_loss = [&] {
            return dataset_loss(model, val_ps.size(), rc.batch_size, [&](const std::vector<std::size_t>& idx) {
                std::vector<std::vector<int>> masks;
                for (auto i : idx) masks.push_back(val_masks[i]);
                return assemble(val_ps, idx, masks);
            });
        };
    }
    const SnapshotFn snapshot = [&](const SpectralMae<float>& m) {
        return m.to_checkpoint(Stage::pretrained, stats, std::nullopt);
    };
    return train_loop(model, rc, train_ps.size(), make_batch, val_loss, snapshot);
}

TrainResult finetune(const std::vector<CubePair>& train, const std::vector<CubePair>& val,
                     const std::optional<ModelCheckpoint>& init, const ModelConfig& cfg) {
    if (init && cfg.steps == 0) {
        return {*init, *init, {}, std::numeric_limits<double>::quiet_NaN()};
    }
    if (train.empty()) throw ValidationError("finetune: empty training set");
    check_pairs(train);
    for (const auto& p : val) {
        require_same_bands(train.front().hs.bands(), p.hs, "hyperspectral validation");
        require_same_bands(train.front().ms.bands(), p.ms, "multispectral validation");
    }
    check_pairs(val);
    const auto& hs_bands = train.front().hs.bands();
    const auto& ms_bands = train.front().ms.bands();
    auto rc = resolve_config(cfg, train.front().hs.height(), train.front().hs.width());

    std::optional<SpectralMae<float>> model;
    BandStats hs_stats;
    if (init) {
        if (!init->config.same_architecture(rc)) {
            throw ValidationError("finetune: configuration is incompatible with the initial checkpoint's architecture");
        }
        if (!bands_match(init->hs_bands, hs_bands)) {
            throw ValidationError("finetune: hyperspectral bands differ from the initial checkpoint");
        }
        model.emplace(SpectralMae<float>::from_checkpoint(*init));
        hs_stats = init->hs_stats;
    } else {
        model.emplace(rc, hs_bands);
        model->initialize(rc.seed);
        for (const auto& p : train) hs_stats.add(p.hs);
    }
    model->set_ms_bands(ms_bands);
    BandStats ms_stats;
    for (const auto& p : train) ms_stats.add(p.ms);

    auto split = [&](const std::vector<CubePair>& pairs, std::vector<PatchSet>& ms, std::vector<PatchSet>& hs) {
        for (const auto& p : pairs) {
            ms.push_back(patchify(normalize_bandwise(p.ms, ms_stats), rc.ms_band_group, rc.spatial_patch));
            hs.push_back(patchify(normalize_bandwise(p.hs, hs_stats), rc.band_group, rc.spatial_patch));
        }
    };
    std::vector<PatchSet> train_ms, train_hs, val_ms, val_hs;
    split(train, train_ms, train_hs);
    split(val, val_ms, val_hs);

    auto assemble = [&](const std::vector<PatchSet>& ms, const std::vector<PatchSet>& hs,
                        const std::vector<std::size_t>& idx) {
        Batch b;
        b.plan = model->finetune_plan(pick(ms, idx));
        b.target = stack_patches<float>(pick(hs, idx));
        return b;
    };
    const BatchFn make_batch = [&](const std::vector<std::size_t>& idx, std::mt19937_64&) {
        return assemble(train_ms, train_hs, idx);
    };
    std::function<double()> val_loss;
    if (!val_ms.empty()) {
        val_loss = [&] {
            return dataset_loss(*model, val_ms.size(), rc.batch_size,
                                [&](const std::vector<std::size_t>& idx) { return assemble(val_ms, val_hs, idx); });
        };
    }
    const SnapshotFn snapshot = [&](const SpectralMae<float>& m) {
        auto ck = m.to_checkpoint(Stage::finetuned, hs_stats, ms_stats);
        ck.config = rc;
        return ck;
    };
    return train_loop(*model, rc, train_ms.size(), make_batch, val_loss, snapshot);
}

HyperCube reconstruct(const HyperCube& ms_raw, const ModelCheckpoint& ckpt) {
    if (ckpt.stage != Stage::finetuned) {
        throw ValidationError(fmt::format("reconstruct requires a fine-tuned checkpoint, got stage '{}'",
                                          to_string(ckpt.stage)));
    }
    if (!ckpt.ms_stats || !bands_match(ckpt.ms_bands, ms_raw.bands())) {
        throw ValidationError(fmt::format("reconstruct: cube '{}' bands do not match the checkpoint's input bands",
                                          ms_raw.patch_id()));
    }
    const auto model = SpectralMae<float>::from_checkpoint(ckpt);
    const auto& cfg = model.config();
    const auto ps = patchify(normalize_bandwise(ms_raw, *ckpt.ms_stats), cfg.ms_band_group, cfg.spatial_patch);
    const auto plan = model.finetune_plan({&ps});
    ForwardCache<float> cache;
    model.forward(plan, cache);
    const auto coords = hs_coords(ps, group_centers(ckpt.hs_bands, cfg.band_group));
    return to_cube(cache.pred, coords, cfg, ckpt, ms_raw);
}

HyperCube reconstruct_masked(const HyperCube& hs_raw, const std::vector<int>& masked_groups,
                             const ModelCheckpoint& ckpt) {
    if (!bands_match(ckpt.hs_bands, hs_raw.bands())) {
        throw ValidationError(fmt::format("reconstruct: cube '{}' bands do not match the checkpoint", hs_raw.patch_id()));
    }
    const auto model = SpectralMae<float>::from_checkpoint(ckpt);
    const auto& cfg = model.config();
    const auto ps = patchify(normalize_bandwise(hs_raw, ckpt.hs_stats), cfg.band_group, cfg.spatial_patch);
    const auto plan = model.pretrain_plan({&ps}, {masked_groups});
    ForwardCache<float> cache;
    model.forward(plan, cache);
    return to_cube(cache.pred, ps.coords, cfg, ckpt, hs_raw);
}

double finetune_loss(const std::vector<CubePair>& pairs, const ModelCheckpoint& ckpt) {
    if (ckpt.stage != Stage::finetuned || !ckpt.ms_stats) {
        throw ValidationError("finetune_loss requires a fine-tuned checkpoint");
    }
    check_pairs(pairs);
    const auto model = SpectralMae<float>::from_checkpoint(ckpt);
    const auto& cfg = model.config();
    double sum = 0.0, weight = 0.0;
    for (const auto& p : pairs) {
        Batch b;
        const auto ms = patchify(normalize_bandwise(p.ms, *ckpt.ms_stats), cfg.ms_band_group, cfg.spatial_patch);
        const auto hs = patchify(normalize_bandwise(p.hs, ckpt.hs_stats), cfg.band_group, cfg.spatial_patch);
        b.plan = model.finetune_plan({&ms});
        b.target = stack_patches<float>({&hs});
        const auto [loss, w] = batch_loss(model, b);
        sum += loss * w;
        weight += w;
    }
    return weight > 0.0 ? sum / weight : 0.0;
}

void save_training_log(const std::vector<LogEntry>& log, const std::filesystem::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("step,split,loss\n");
    for (const auto& e : log) out.print("{},{},{}\n", e.step, e.split, e.loss);
}

} // namespace spectral_bridge
