// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/experiments.hpp"

#include "spectral_bridge/csv.hpp"
#include "spectral_bridge/cube_io.hpp"
#include "spectral_bridge/error.hpp"
#include "spectral_bridge/labels.hpp"
#include "spectral_bridge/metrics.hpp"
#include "spectral_bridge/regressor.hpp"
#include "spectral_bridge/srf.hpp"
#include "spectral_bridge/stats.hpp"
#include "spectral_bridge/synthgen.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace spectral_bridge {

namespace fs = std::filesystem;

std::vector<HyperCube> load_cube_dir(const fs::path& dir) {
    std::vector<HyperCube> out;
    for (const auto& f : list_cube_files(dir)) out.push_back(load_cube(f));
    if (out.empty()) throw ValidationError(fmt::format("no .hsc cubes in '{}'", dir.string()));
    return out;
}

void save_cube_dir(const std::vector<HyperCube>& cubes, const fs::path& dir) {
    fs::create_directories(dir);
    for (const auto& c : cubes) {
        if (c.patch_id().empty()) throw ValidationError("cannot save a cube without a patch id into a directory");
        save_cube(c, dir / (c.patch_id() + ".hsc"));
    }
}

std::vector<CubePair> pair_cubes(const std::vector<HyperCube>& ms, const std::vector<HyperCube>& hs) {
    std::map<std::string, const HyperCube*> by_id;
    for (const auto& c : hs) {
        if (!by_id.emplace(c.patch_id(), &c).second) {
            throw ValidationError(fmt::format("duplicate hyperspectral patch '{}'", c.patch_id()));
        }
    }
    if (ms.size() != hs.size()) {
        throw ValidationError(fmt::format("{} multispectral vs {} hyperspectral cubes", ms.size(), hs.size()));
    }
    std::vector<CubePair> out;
    for (const auto& m : ms) {
        auto it = by_id.find(m.patch_id());
        if (it == by_id.end()) throw ValidationError(fmt::format("no hyperspectral cube for patch '{}'", m.patch_id()));
        out.push_back({m, *it->second});
    }
    return out;
}

namespace {

Split split_for(const SplitAssignment& split, const std::string& id) {
    auto it = split.split_of.find(id);
    if (it == split.split_of.end()) throw ValidationError(fmt::format("patch '{}' is missing from the split file", id));
    return it->second;
}

} // namespace

std::vector<HyperCube> select_split(const std::vector<HyperCube>& cubes, const SplitAssignment& split, Split which) {
    std::vector<HyperCube> out;
    for (const auto& c : cubes) {
        if (split_for(split, c.patch_id()) == which) out.push_back(c);
    }
    return out;
}

std::vector<CubePair> select_split(const std::vector<CubePair>& pairs, const SplitAssignment& split, Split which) {
    std::vector<CubePair> out;
    for (const auto& p : pairs) {
        if (split_for(split, p.hs.patch_id()) == which) out.push_back(p);
    }
    return out;
}

double mean_reconstruction_mae(const std::vector<CubePair>& pairs, const ModelCheckpoint& ckpt) {
    if (pairs.empty()) throw ValidationError("no cubes to evaluate");
    double sum = 0.0;
    for (const auto& p : pairs) sum += mae_metric(p.hs, reconstruct(p.ms, ckpt));
    return sum / static_cast<double>(pairs.size());
}

// ---- sweep ----

std::size_t subset_size(double fraction, std::size_t n) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ValidationError(fmt::format("fraction {} outside (0, 1]", fraction));
    }
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    if (k == 0) {
        throw ValidationError(fmt::format("fraction {} of {} training cubes is an empty subset", fraction, n));
    }
    return k;
}

std::vector<std::size_t> sample_subset(std::size_t n, double fraction, std::uint64_t seed) {
    const auto k = subset_size(fraction, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::seed_seq seq{seed, std::uint64_t{3}};
    std::mt19937_64 rng(seq);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<SweepCell> run_sweep(const std::vector<CubePair>& train, const std::vector<CubePair>& val,
                                 const std::vector<CubePair>& test, const std::optional<ModelCheckpoint>& pretrained,
                                 const ModelConfig& cfg, const std::vector<double>& fractions,
                                 const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ValidationError("sweep needs at least one seed");
    if (fractions.empty()) throw ValidationError("sweep needs at least one fraction");
    if (test.empty()) throw ValidationError("sweep needs a non-empty test set");
    for (double f : fractions) subset_size(f, train.size());

    std::vector<SweepCell> cells;
    for (double f : fractions) {
        SweepCell scratch{f, "scratch", {}, 0.0, 0.0};
        SweepCell warm{f, "pretrained", {}, 0.0, 0.0};
        for (auto seed : seeds) {
            std::vector<CubePair> subset;
            for (auto i : sample_subset(train.size(), f, seed)) subset.push_back(train[i]);
            ModelConfig c = cfg;
            c.seed = seed;
            scratch.maes.push_back(mean_reconstruction_mae(test, finetune(subset, val, std::nullopt, c).best_model));
            if (pretrained) {
                warm.maes.push_back(mean_reconstruction_mae(test, finetune(subset, val, pretrained, c).best_model));
            }
        }
        for (auto* cell : {&scratch, &warm}) {
            if (cell->maes.empty()) continue;
            const double n = static_cast<double>(cell->maes.size());
            cell->mean = std::accumulate(cell->maes.begin(), cell->maes.end(), 0.0) / n;
            double ss = 0.0;
            for (double m : cell->maes) ss += (m - cell->mean) * (m - cell->mean);
            cell->std = std::sqrt(ss / n);
            cells.push_back(*cell);
        }
    }
    return cells;
}

void save_sweep(const std::vector<SweepCell>& cells, const fs::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("fraction,init,runs,mean_mae,std_mae\n");
    for (const auto& c : cells) {
        out.print("{},{},{},{},{}\n", c.fraction, c.init, c.maes.size(), c.mean, c.std);
    }
}

// ---- report ----

namespace {

std::vector<std::string> header_of(const fs::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw ValidationError(fmt::format("{}: empty report", path.string()));
    std::vector<std::string> h;
    for (const auto& f : csv::split_line(lines[0].text)) h.emplace_back(csv::trim(f));
    return h;
}

bool has(const std::vector<std::string>& h, const char* name) { return std::find(h.begin(), h.end(), name) != h.end(); }

void check_mean(const fs::path& path, const char* column, double aggregate, const std::vector<double>& values) {
    if (values.empty() || !std::isfinite(aggregate)) return;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (std::abs(mean - aggregate) > 1e-9 * std::max(1.0, std::abs(mean))) {
        throw ValidationError(fmt::format("{}: AGGREGATE {} = {} differs from the row mean {}", path.string(), column,
                                          aggregate, mean));
    }
}

// Per-sample mae and mse columns of a regression report.
std::pair<std::vector<double>, std::vector<double>> regression_rows(const fs::path& path) {
    const auto lines = csv::read_lines(path);
    const auto h = header_of(path);
    const auto col = [&](const char* n) { return static_cast<std::size_t>(std::find(h.begin(), h.end(), n) - h.begin()); };
    const auto c_id = col("patch_id"), c_mae = col("mae"), c_mse = col("mse");
    std::vector<double> mae, mse;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = csv::split_line(lines[i].text);
        if (f.size() <= std::max({c_id, c_mae, c_mse}) || csv::trim(f[c_id]) == "AGGREGATE") continue;
        auto a = csv::parse_double(f[c_mae]);
        auto b = csv::parse_double(f[c_mse]);
        if (!a || !b) throw ValidationError(fmt::format("{}:{}: non-numeric metric", path.string(), lines[i].number));
        mae.push_back(*a);
        mse.push_back(*b);
    }
    return {mae, mse};
}

} // namespace

ReportTable build_report(const std::vector<ReportInput>& inputs) {
    if (inputs.empty()) throw ValidationError("report needs at least one input CSV");
    ReportTable t;
    for (const auto& in : inputs) {
        const auto h = header_of(in.path);
        const bool recon = has(h, "psnr_db") || has(h, "ssim") || has(h, "sam_deg");
        const bool regr = has(h, "r2") || has(h, "rmse") || has(h, "mse");
        if (recon == regr) {
            throw ValidationError(fmt::format("{}: header matches neither the reconstruction nor the regression schema",
                                              in.path.string()));
        }
        const std::string kind = recon ? "reconstruction" : "regression";
        if (t.kind.empty()) {
            t.kind = kind;
            t.metrics = recon ? std::vector<std::string>{"mae", "psnr_db", "ssim", "sam_deg"}
                              : std::vector<std::string>{"mae", "mse", "rmse", "r2"};
        } else if (t.kind != kind) {
            throw ValidationError(fmt::format("{}: {} report mixed into a {} table", in.path.string(), kind, t.kind));
        }
        ReportTable::Row row{in.input, in.variant, {}};
        if (recon) {
            const auto r = load_recon_report(in.path);
            std::vector<double> mae, psnr, ssim, sam;
            for (const auto& m : r.images) {
                mae.push_back(m.mae);
                psnr.push_back(m.psnr_db);
                ssim.push_back(m.ssim);
                sam.push_back(m.sam_deg);
            }
            check_mean(in.path, "mae", r.aggregate.mae, mae);
            check_mean(in.path, "psnr_db", r.aggregate.psnr_db, psnr);
            check_mean(in.path, "ssim", r.aggregate.ssim, ssim);
            check_mean(in.path, "sam_deg", r.aggregate.sam_deg, sam);
            row.values = {r.aggregate.mae, r.aggregate.psnr_db, r.aggregate.ssim, r.aggregate.sam_deg};
        } else {
            const auto a = load_regression_aggregate(in.path);
            const auto [mae, mse] = regression_rows(in.path);
            check_mean(in.path, "mae", a.mae, mae);
            check_mean(in.path, "mse", a.mse, mse);
            row.values = {a.mae, a.mse, a.rmse, a.r2};
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string format_report_text(const ReportTable& t) {
    std::vector<std::string> head{"input", "variant"};
    head.insert(head.end(), t.metrics.begin(), t.metrics.end());
    std::vector<std::vector<std::string>> cells{head};
    for (const auto& r : t.rows) {
        std::vector<std::string> line{r.input, r.variant.empty() ? "-" : r.variant};
        for (double v : r.values) line.push_back(fmt::format("{:.4f}", v));
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    }
    std::string out;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        for (std::size_t i = 0; i < cells[k].size(); ++i) {
            // Labels left-aligned, numbers right-aligned.
            out += i < 2 ? fmt::format("{:<{}}", cells[k][i], width[i]) : fmt::format("{:>{}}", cells[k][i], width[i]);
            out += i + 1 < cells[k].size() ? "  " : "\n";
        }
        if (k == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            out += std::string(total - 2, '-') + "\n";
        }
    }
    return out;
}

void save_report_csv(const ReportTable& t, const fs::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("input,variant");
    for (const auto& m : t.metrics) out.print(",{}", m);
    out.print("\n");
    for (const auto& r : t.rows) {
        out.print("{},{}", r.input, r.variant);
        for (double v : r.values) out.print(",{}", v);
        out.print("\n");
    }
}

// ---- stages ----

namespace {

SplitAssignment splits_of(const ExperimentConfig& cfg) { return load_splits(cfg.existing_path("splits")); }

std::vector<CubePair> load_pairs(const ExperimentConfig& cfg) {
    return pair_cubes(load_cube_dir(cfg.existing_path("ms_dir")), load_cube_dir(cfg.existing_path("hs_dir")));
}

void save_train_result(const TrainResult& r, const fs::path& out) {
    fs::create_directories(out);
    save_checkpoint(r.final_model, out / "final.ckpt");
    save_checkpoint(r.best_model, out / "best.ckpt");
    save_training_log(r.log, out / "train_log.csv");
}

} // namespace

void stage_synthgen(const ExperimentConfig& cfg, const fs::path& out) {
    const auto ds = gen_dataset(cfg.dataset);
    save_dataset(ds, out);
    std::vector<PatchRef> refs;
    for (const auto& s : ds.scenes) refs.push_back({s.cube.patch_id(), s.cube.tile_id()});
    save_splits(make_splits(refs, cfg.split_mode, cfg.split_ratios, cfg.split_seed), out / "splits.csv");
}

void stage_stats(const ExperimentConfig& cfg, const fs::path& out) {
    const auto cubes = load_cube_dir(cfg.existing_path("hs_dir"));
    SplitAssignment split;
    if (cfg.has_path("splits")) {
        split = splits_of(cfg);
    } else {
        std::vector<PatchRef> refs;
        for (const auto& c : cubes) refs.push_back({c.patch_id(), c.tile_id()});
        split = make_splits(refs, cfg.split_mode, cfg.split_ratios, cfg.split_seed);
    }
    check_split_integrity(split);
    fs::create_directories(out);
    save_splits(split, out / "splits.csv");
    const auto train = select_split(cubes, split, Split::train);
    if (train.empty()) throw ValidationError("training split is empty");
    BandStats stats;
    std::vector<SpectralSignature> sigs;
    for (const auto& c : train) {
        stats.add(c);
        sigs.push_back(spatial_average(c));
    }
    save_stats(stats, compute_global_stats(sigs), out / "stats.csv");
}

void stage_degrade(const fs::path& input, const fs::path& srf, const fs::path& output) {
    const auto cube = load_cube(input);
    const auto w = build_weight_matrix(load_srf(srf), cube.bands());
    if (output.has_parent_path()) fs::create_directories(output.parent_path());
    save_cube(project_cube(cube, w), output);
}

void stage_degrade_dir(const ExperimentConfig& cfg, const fs::path& out) {
    const auto cubes = load_cube_dir(cfg.existing_path("hs_dir"));
    const auto srf = load_srf(cfg.existing_path("srf"));
    const auto w = build_weight_matrix(srf, cubes.front().bands());
    std::vector<HyperCube> ms;
    for (const auto& c : cubes) {
        if (!bands_match(c.bands(), w.source_bands)) {
            throw ValidationError(fmt::format("cube '{}' has a different band layout", c.patch_id()));
        }
        ms.push_back(project_cube(c, w));
    }
    save_cube_dir(ms, out / "cubes");
}

void stage_pretrain(const ExperimentConfig& cfg, const fs::path& out) {
    const auto cubes = load_cube_dir(cfg.existing_path("hs_dir"));
    const auto split = splits_of(cfg);
    std::optional<BandStats> stats;
    if (cfg.has_path("stats")) stats = load_stats(cfg.existing_path("stats")).bands;
    save_train_result(pretrain(select_split(cubes, split, Split::train), select_split(cubes, split, Split::val),
                               cfg.model, stats),
                      out);
}

void stage_finetune(const ExperimentConfig& cfg, const fs::path& out) {
    const auto pairs = load_pairs(cfg);
    const auto split = splits_of(cfg);
    std::optional<ModelCheckpoint> init;
    if (cfg.has_path("init")) init = load_checkpoint(cfg.existing_path("init"));
    save_train_result(finetune(select_split(pairs, split, Split::train), select_split(pairs, split, Split::val), init,
                               cfg.model),
                      out);
}

void stage_reconstruct(const ExperimentConfig& cfg, const fs::path& out) {
    const auto ckpt = load_checkpoint(cfg.existing_path("finetuned"));
    std::vector<HyperCube> rec;
    for (const auto& c : load_cube_dir(cfg.existing_path("ms_dir"))) rec.push_back(reconstruct(c, ckpt));
    save_cube_dir(rec, out / "cubes");
}

void stage_evaluate(const ExperimentConfig& cfg, const fs::path& out) {
    const auto split = splits_of(cfg);
    const auto truth = select_split(load_cube_dir(cfg.existing_path("hs_dir")), split, cfg.eval_split);
    const auto pred = load_cube_dir(cfg.existing_path("recon_dir"));
    std::map<std::string, const HyperCube*> by_id;
    for (const auto& p : pred) by_id[p.patch_id()] = &p;
    std::vector<ReconMetrics> rows;
    for (const auto& t : truth) {
        auto it = by_id.find(t.patch_id());
        if (it == by_id.end()) throw ValidationError(fmt::format("no reconstruction for patch '{}'", t.patch_id()));
        rows.push_back(recon_metrics(t, *it->second));
    }
    if (rows.empty()) throw ValidationError(fmt::format("split '{}' is empty", to_string(cfg.eval_split)));
    fs::create_directories(out);
    save_recon_report(make_recon_report(std::move(rows)), out / "report.csv");
}

void stage_signatures(const ExperimentConfig& cfg, const fs::path& out) {
    fs::create_directories(out);
    save_signatures(signatures_of(load_cube_dir(cfg.existing_path("source_dir"))), out / "signatures.csv");
}

void stage_ghg_train(const ExperimentConfig& cfg, const fs::path& out) {
    const auto sigs = load_signatures(cfg.existing_path("signatures"));
    const auto labels = load_labels(cfg.existing_path("labels"), cfg.regressor.gas);
    const auto result = train_regressor(sigs, labels, cfg.regressor, splits_of(cfg));
    fs::create_directories(out);
    save_regressor(result.model, out / "regressor.ckpt");
    save_training_log(result.log, out / "train_log.csv");
}

void stage_ghg_eval(const ExperimentConfig& cfg, const fs::path& out) {
    const auto ckpt = load_regressor(cfg.existing_path("regressor"));
    const auto sigs = load_signatures(cfg.existing_path("signatures"));
    const auto labels = load_labels(cfg.existing_path("labels"), ckpt.config.gas);
    const auto subset = sigs.subset(splits_of(cfg).patches_in(cfg.eval_split));
    if (subset.size() == 0) throw ValidationError(fmt::format("split '{}' is empty", to_string(cfg.eval_split)));
    fs::create_directories(out);
    save_regression_report(evaluate_regressor(ckpt, subset, labels), out / "report.csv");
}

void stage_sweep(const ExperimentConfig& cfg, const fs::path& out) {
    const auto pairs = load_pairs(cfg);
    const auto split = splits_of(cfg);
    std::optional<ModelCheckpoint> pre;
    if (cfg.has_path("pretrained")) pre = load_checkpoint(cfg.existing_path("pretrained"));
    const auto cells = run_sweep(select_split(pairs, split, Split::train), select_split(pairs, split, Split::val),
                                 select_split(pairs, split, Split::test), pre, cfg.model, cfg.fractions, cfg.seeds);
    fs::create_directories(out);
    save_sweep(cells, out / "sweep.csv");
}

std::string stage_report(const ExperimentConfig& cfg, const fs::path& out) {
    const auto table = build_report(cfg.reports);
    const auto text = format_report_text(table);
    fs::create_directories(out);
    save_report_csv(table, out / "table.csv");
    auto f = fmt::output_file((out / "table.txt").string());
    f.print("{}", text);
    return text;
}

} // namespace spectral_bridge
