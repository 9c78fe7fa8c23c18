// SPDX-License-Identifier: Apache-2.0
//
// spectral-bridge <stage> --config FILE [--seed N] [--out DIR] [--set section.key=value ...]
// Exit codes: 0 success, 2 validation error, 1 runtime failure.

#include "spectral_bridge/config.hpp"
#include "spectral_bridge/error.hpp"
#include "spectral_bridge/experiments.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <functional>
#include <iostream>
#include <map>
#include <optional>

namespace sb = spectral_bridge;
namespace fs = std::filesystem;

namespace {

enum class SeedOf { model, regressor, dataset, split };

struct StageDef {
    std::string help;
    SeedOf seed;
    std::function<void(const sb::ExperimentConfig&, const fs::path&)> run;
};

std::uint64_t effective_seed(const sb::ExperimentConfig& cfg, SeedOf s) {
    switch (s) {
    case SeedOf::model: return cfg.model.seed;
    case SeedOf::regressor: return cfg.regressor.seed;
    case SeedOf::dataset: return cfg.dataset.seed;
    case SeedOf::split: return cfg.split_seed;
    }
    return 0;
}

const std::map<std::string, StageDef>& stages() {
    static const std::map<std::string, StageDef> defs{
        {"synthgen", {"Generate a synthetic dataset (cubes, SRF, labels, truth, splits)", SeedOf::dataset,
                      sb::stage_synthgen}},
        {"stats", {"Per-band statistics over the training split", SeedOf::split, sb::stage_stats}},
        {"degrade", {"Project hyperspectral cubes through an SRF", SeedOf::model, sb::stage_degrade_dir}},
        {"pretrain", {"Masked-autoencoder pretraining", SeedOf::model, sb::stage_pretrain}},
        {"finetune", {"Multispectral-to-hyperspectral fine-tuning", SeedOf::model, sb::stage_finetune}},
        {"reconstruct", {"Reconstruct hyperspectral cubes from multispectral ones", SeedOf::model,
                         sb::stage_reconstruct}},
        {"evaluate", {"Reconstruction metrics report", SeedOf::model, sb::stage_evaluate}},
        {"signatures", {"Spatially averaged spectral signatures of a cube directory", SeedOf::model,
                        sb::stage_signatures}},
        {"ghg-train", {"Train the gas-concentration regressor", SeedOf::regressor, sb::stage_ghg_train}},
        {"ghg-eval", {"Evaluate the gas-concentration regressor", SeedOf::regressor, sb::stage_ghg_eval}},
        {"sweep", {"Data-efficiency sweep over training fractions and seeds", SeedOf::model, sb::stage_sweep}},
        {"report", {"Comparison table from evaluation CSVs", SeedOf::model,
                    [](const sb::ExperimentConfig& c, const fs::path& out) { std::cout << sb::stage_report(c, out); }}},
    };
    return defs;
}

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;
    std::string input, srf, output;  // degrade, single-cube form
};

int run_stage(const std::string& name, const Options& o) {
    const auto& def = stages().at(name);
    if (name == "degrade" && !o.input.empty()) {
        if (o.srf.empty() || o.output.empty()) throw sb::ValidationError("degrade --input needs --srf and --output");
        sb::stage_degrade(o.input, o.srf, o.output);
        return 0;
    }
    if (o.config.empty()) throw sb::ValidationError(fmt::format("{} needs --config", name));
    if (o.out.empty()) throw sb::ValidationError(fmt::format("{} needs --out", name));
    auto cfg = sb::load_experiment_config(o.config, o.overrides);
    if (o.seed) cfg.apply_seed(*o.seed);
    const fs::path out(o.out);
    fs::create_directories(out);
    def.run(cfg, out);
    sb::write_manifest(out, name, cfg, effective_seed(cfg, def.seed), {{"config", fs::absolute(o.config).string()}});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral reconstruction and greenhouse-gas regression toolkit"};
    app.require_subcommand(1);
    Options opt;
    for (const auto& [name, def] : stages()) {
        auto* sub = app.add_subcommand(name, def.help);
        sub->add_option("--config", opt.config, "INI experiment configuration");
        sub->add_option("--seed", opt.seed, "Seed for every stochastic component (overrides the config)");
        sub->add_option("--out", opt.out, "Output directory");
        sub->add_option("--set", opt.overrides, "Config override section.key=value (repeatable)");
        if (name == "degrade") {
            sub->add_option("--input", opt.input, "Single hyperspectral cube");
            sub->add_option("--srf", opt.srf, "SRF CSV");
            sub->add_option("--output", opt.output, "Output cube path");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        return run_stage(name, opt);
    } catch (const sb::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    }
}
