// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/config.hpp"
#include "spectral_bridge/error.hpp"
#include "spectral_bridge/experiments.hpp"
#include "spectral_bridge/metrics.hpp"
#include "spectral_bridge/srf.hpp"
#include "spectral_bridge/synthgen.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace spectral_bridge;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"(
[paths]
hs_dir = data/hs
splits = /abs/splits.csv

[split]
mode = easy
train = 0.7
val = 0.2
test = 0.1
seed = 3

[model]
embed_dim = 16
heads = 2
steps = 10

[regressor]
hidden = 8;8

[scene]
bands = 12
lines = 1600:20:0.5;2100:30:0.3

[dataset]
tiles = 5
sensor = 500:40;900:60

[sweep]
fractions = 0.5,1.0
seeds = 7,8

[evaluate]
split = val

[report]
S2:finetuned = a.csv
EnMAP = b.csv
)";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("experiment config parsing") {
    const auto c = parse_experiment_config(kConfig, "/base");
    CHECK(c.path("hs_dir") == fs::path("/base/data/hs"));
    CHECK(c.path("splits") == fs::path("/abs/splits.csv"));
    CHECK(c.split_mode == SplitMode::easy);
    CHECK(c.split_ratios.train == 0.7);
    CHECK(c.split_seed == 3);
    CHECK(c.model.embed_dim == 16);
    CHECK(c.model.heads == 2);
    CHECK(c.regressor.hidden == std::vector<int>{8, 8});
    CHECK(c.dataset.scene.bands == 12);
    REQUIRE(c.dataset.scene.lines.size() == 2);
    CHECK(c.dataset.scene.lines[1].width_nm == 30.0);
    CHECK(c.dataset.tiles == 5);
    CHECK(c.dataset.sensor.size() == 2);
    CHECK(c.fractions == std::vector<double>{0.5, 1.0});
    CHECK(c.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(c.eval_split == Split::val);
    REQUIRE(c.reports.size() == 2);
    CHECK(c.reports[0].input == "S2");
    CHECK(c.reports[0].variant == "finetuned");
    CHECK(c.reports[0].path == fs::path("/base/a.csv"));
    CHECK(c.reports[1].variant.empty());
    CHECK_THROWS_WITH_AS(c.path("ms_dir"), doctest::Contains("ms_dir"), ValidationError);
    CHECK_FALSE(c.has_path("ms_dir"));
}

TEST_CASE("overrides, seeds and rejected keys") {
    const auto c = parse_experiment_config(kConfig, "/base", {"model.steps=99", "paths.ms_dir=ms"});
    CHECK(c.model.steps == 99);
    CHECK(c.path("ms_dir") == fs::path("/base/ms"));
    CHECK(c.canonical_text != parse_experiment_config(kConfig, "/base").canonical_text);
    CHECK(parse_experiment_config(kConfig, "/base").canonical_text ==
          parse_experiment_config(kConfig, "/base").canonical_text);

    auto s = c;
    s.apply_seed(42);
    CHECK(s.model.seed == 42);
    CHECK(s.regressor.seed == 42);
    CHECK(s.dataset.seed == 42);
    CHECK(s.split_seed == 42);

    CHECK_THROWS_AS(parse_experiment_config("[model]\nwidth = 3\n", "/"), ValidationError);
    CHECK_THROWS_AS(parse_experiment_config("[nosuch]\nx = 1\n", "/"), ValidationError);
    CHECK_THROWS_AS(parse_experiment_config("[model]\nembed_dim = 10\nheads = 4\n", "/"), ValidationError);
    CHECK_THROWS_AS(parse_experiment_config("[sweep]\nfractions = 0,1\n", "/"), ValidationError);
    CHECK_THROWS_AS(parse_experiment_config("", "/", {"model.steps"}), ValidationError);
    CHECK_THROWS_AS(load_experiment_config("/no/such/config.ini"), RuntimeFailure);
}

TEST_CASE("sha256 and manifests") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    auto dir = test_support::temp_dir("exp_manifest");
    const auto c = parse_experiment_config(kConfig, "/base");
    write_manifest(dir, "pretrain", c, 17, {{"note", "x"}});
    const auto text = slurp(dir / "manifest.txt");
    CHECK(text.find("stage=pretrain\n") != std::string::npos);
    CHECK(text.find("config_sha256=" + sha256_hex(c.canonical_text) + "\n") != std::string::npos);
    CHECK(text.find("seed=17\n") != std::string::npos);
    CHECK(text.find("note=x\n") != std::string::npos);
}

TEST_CASE("subset sampling") {
    CHECK(subset_size(0.1, 100) == 10);
    CHECK(subset_size(0.29, 100) == 29);
    CHECK(subset_size(1.0, 7) == 7);
    CHECK_THROWS_WITH_AS(subset_size(0.001, 100), doctest::Contains("empty subset"), ValidationError);
    CHECK_THROWS_AS(subset_size(1.5, 10), ValidationError);
    const auto a = sample_subset(50, 0.2, 3);
    CHECK(a == sample_subset(50, 0.2, 3));
    CHECK(a != sample_subset(50, 0.2, 4));
    CHECK(a.size() == 10);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == a.size());
    for (auto i : a) CHECK(i < 50);
}

namespace {

struct PairData {
    std::vector<CubePair> train, val, test;
};

PairData sweep_data() {
    DatasetConfig dc;
    dc.scene.bands = 16;
    dc.scene.height = dc.scene.width = 4;
    dc.scene.noise_std = 0.002;
    dc.scene.endmembers = 12;
    dc.scene.spline_knots = 16;
    dc.tiles = 32;
    dc.seed = 31;
    const auto ds = gen_dataset(dc);
    const auto w = build_weight_matrix(ds.srf, dc.scene.band_list());
    PairData d;
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
        CubePair p{project_cube(ds.scenes[i].cube, w), ds.scenes[i].cube};
        (i % 10 == 0 ? d.val : i % 10 == 1 ? d.test : d.train).push_back(std::move(p));
    }
    return d;
}

ModelConfig sweep_model() {
    ModelConfig c;
    c.embed_dim = 32;
    c.heads = 4;
    c.encoder_layers = 1;
    c.decoder_layers = 1;
    c.spatial_patch = 1;
    c.n_spatial = 256;
    c.batch_size = 8;
    c.learning_rate = 6e-3;
    c.mask_fraction = 0.5;
    c.eval_interval = 50;
    return c;
}

} // namespace

TEST_CASE("one fraction and one seed give a scratch and a pretrained row") {
    const auto d = sweep_data();
    auto cfg = sweep_model();
    cfg.steps = 5;
    std::vector<HyperCube> hs;
    for (const auto& p : d.train) hs.push_back(p.hs);
    const auto pre = pretrain(hs, {}, cfg).final_model;
    const auto cells = run_sweep(d.train, d.val, d.test, pre, cfg, {1.0}, {1});
    REQUIRE(cells.size() == 2);
    std::set<std::string> inits{cells[0].init, cells[1].init};
    CHECK(inits == std::set<std::string>{"pretrained", "scratch"});
    for (const auto& c : cells) {
        CHECK(c.maes.size() == 1);
        CHECK(c.std == 0.0);
        CHECK(c.mean == c.maes[0]);
    }
    CHECK(run_sweep(d.train, d.val, d.test, std::nullopt, cfg, {1.0}, {1}).size() == 1);
    CHECK_THROWS_AS(run_sweep(d.train, d.val, d.test, pre, cfg, {0.001}, {1}), ValidationError);

    auto dir = test_support::temp_dir("exp_sweep");
    save_sweep(cells, dir / "s.csv");
    const auto text = slurp(dir / "s.csv");
    CHECK(text.rfind("fraction,init,runs,mean_mae,std_mae\n", 0) == 0);
}

TEST_CASE("the pretrained arm improves with more data") {
    const auto d = sweep_data();
    auto cfg = sweep_model();
    cfg.steps = 300;
    std::vector<HyperCube> hs, hv;
    for (const auto& p : d.train) hs.push_back(p.hs);
    for (const auto& p : d.val) hv.push_back(p.hs);
    const auto pre = pretrain(hs, hv, cfg).best_model;
    cfg.steps = 150;
    // 102 training pairs: the 1% fraction is a single pair.
    const auto cells = run_sweep(d.train, d.val, d.test, pre, cfg, {0.01, 1.0}, {1, 2, 3});
    double low = 0, high = 0;
    for (const auto& c : cells) {
        if (c.init != "pretrained") continue;
        CHECK(c.maes.size() == 3);
        (c.fraction == 1.0 ? high : low) = c.mean;
    }
    MESSAGE("pretrained mean MAE at 1%: ", low, ", at 100%: ", high);
    CHECK(high <= low);
}

namespace {

void write_recon(const fs::path& p, const std::vector<ReconMetrics>& rows) {
    save_recon_report(make_recon_report(rows), p);
}

} // namespace

TEST_CASE("comparison tables") {
    auto dir = test_support::temp_dir("exp_report");
    write_recon(dir / "a.csv", {{"p1", 10, 30, 0.9, 3}, {"p2", 20, 28, 0.8, 5}});
    write_recon(dir / "b.csv", {{"p1", 40, 20, 0.5, 9}});
    const auto t = build_report({{"S2", "finetuned", dir / "a.csv"}, {"SS2", "", dir / "b.csv"}});
    CHECK(t.kind == "reconstruction");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].values[0] == doctest::Approx(15.0));
    CHECK(t.rows[1].input == "SS2");
    const auto text = format_report_text(t);
    CHECK(text.find("S2") != std::string::npos);
    CHECK(text.find("15.0000") != std::string::npos);

    std::ofstream(dir / "nocol.csv") << "patch_id,mae,psnr_db,sam_deg\np1,1,2,3\nAGGREGATE,1,2,3\n";
    CHECK_THROWS_WITH_AS(build_report({{"X", "", dir / "nocol.csv"}}), doctest::Contains("ssim"), ValidationError);

    std::ofstream(dir / "bad_agg.csv") << "patch_id,mae,psnr_db,ssim,sam_deg\np1,1,2,0.5,3\np2,3,2,0.5,3\n"
                                          "AGGREGATE,2.5,2,0.5,3\n";
    CHECK_THROWS_WITH_AS(build_report({{"X", "", dir / "bad_agg.csv"}}), doctest::Contains("AGGREGATE"),
                         ValidationError);

    save_regression_report(make_regression_report({"a", "b", "c"}, {1, 2, 4}, {1, 2, 3}), dir / "g.csv");
    CHECK_THROWS_AS(build_report({{"X", "", dir / "a.csv"}, {"Y", "", dir / "g.csv"}}), ValidationError);
    const auto g = build_report({{"Y", "", dir / "g.csv"}});
    CHECK(g.kind == "regression");
    CHECK(g.rows[0].values[0] == doctest::Approx(1.0 / 3));
    save_report_csv(g, dir / "table.csv");
    CHECK(slurp(dir / "table.csv").rfind("input,variant,mae,mse,rmse,r2\n", 0) == 0);
}

TEST_CASE("cube directories and split selection") {
    auto dir = test_support::temp_dir("exp_dirs");
    std::vector<HyperCube> cubes;
    std::vector<PatchRef> refs;
    for (int i = 0; i < 6; ++i) {
        cubes.push_back(test_support::random_cube(3, 2, 2, i, 0, 1, "p" + std::to_string(i), "t" + std::to_string(i)));
        refs.push_back({cubes.back().patch_id(), cubes.back().tile_id()});
    }
    save_cube_dir(cubes, dir / "cubes");
    const auto back = load_cube_dir(dir / "cubes");
    CHECK(back == cubes);
    CHECK_THROWS_AS(load_cube_dir(dir), ValidationError);

    const auto split = make_splits(refs, SplitMode::hard, {0.5, 0.25, 0.25}, 1);
    std::size_t total = 0;
    for (auto s : {Split::train, Split::val, Split::test}) {
        const auto sel = select_split(cubes, split, s);
        for (const auto& c : sel) CHECK(split.split_of.at(c.patch_id()) == s);
        total += sel.size();
    }
    CHECK(total == cubes.size());
    auto partial = split;
    partial.split_of.erase("p0");
    CHECK_THROWS_WITH_AS(select_split(cubes, partial, Split::train), doctest::Contains("p0"), ValidationError);

    std::vector<HyperCube> ms;
    for (auto it = cubes.rbegin(); it != cubes.rend(); ++it) ms.push_back(*it);
    const auto pairs = pair_cubes(ms, cubes);
    for (const auto& p : pairs) CHECK(p.ms.patch_id() == p.hs.patch_id());
    ms.pop_back();
    CHECK_THROWS_AS(pair_cubes(ms, cubes), ValidationError);
}
