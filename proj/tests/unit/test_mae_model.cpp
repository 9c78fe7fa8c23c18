// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/error.hpp"
#include "spectral_bridge/mae_model.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace spectral_bridge;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.embed_dim = 8;
    cfg.heads = 2;
    cfg.encoder_layers = 1;
    cfg.decoder_layers = 1;
    cfg.band_group = 1;
    cfg.spatial_patch = 2;
    cfg.n_spatial = 2;
    cfg.mask_fraction = 0.5;
    return cfg;
}

template <typename Fn>
double max_group_error(SpectralMae<double>& model, const nn::ParamStore<double>& analytic, Fn&& loss,
                       std::string* worst = nullptr) {
    const double h = 1e-6;
    double worst_err = 0.0;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        auto& p = model.params()[i];
        nn::Mat<double> numeric(p.rows(), p.cols());
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            const double saved = p.data()[k];
            p.data()[k] = saved + h;
            const double up = loss();
            p.data()[k] = saved - h;
            const double down = loss();
            p.data()[k] = saved;
            numeric.data()[k] = (up - down) / (2 * h);
        }
        const double scale = std::max({analytic[i].norm(), numeric.norm(), 1e-10});
        const double err = (analytic[i] - numeric).norm() / scale;
        if (err > worst_err) {
            worst_err = err;
            if (worst != nullptr) *worst = model.params().name(i);
        }
    }
    return worst_err;
}

} // namespace

TEST_CASE("pretraining gradients match central differences for every parameter group") {
    const auto cube = test_support::random_cube(4, 4, 4, 11, -1.0, 1.0);
    const auto ps = patchify(cube, 1, 2);
    SpectralMae<double> model(tiny_config(), cube.bands());
    model.initialize(5);

    const std::vector<const PatchSet*> batch{&ps};
    const auto plan = model.pretrain_plan(batch, {{0, 2}});
    const auto target = stack_patches<double>(batch);
    auto loss = [&] {
        ForwardCache<double> c;
        model.forward(plan, c);
        return mae_loss<double>(c.pred, target, {}, nullptr);
    };

    ForwardCache<double> cache;
    model.forward(plan, cache);
    nn::Mat<double> dpred;
    mae_loss<double>(cache.pred, target, {}, &dpred);
    auto grads = model.params().zeros_like();
    model.backward(plan, cache, dpred, grads);

    CHECK(grads[*grads.find("mask_token")].norm() > 0.0);
    CHECK(grads[*grads.find("ms_embed.weight")].norm() == 0.0);
    std::string worst;
    const double err = max_group_error(model, grads, loss, &worst);
    INFO("worst group: " << worst);
    CHECK(err < 1e-3);
}

TEST_CASE("fine-tuning gradients match central differences") {
    const auto hs = test_support::random_cube(4, 4, 4, 12, -1.0, 1.0);
    std::vector<float> msv(2 * 16);
    for (std::size_t i = 0; i < msv.size(); ++i) msv[i] = static_cast<float>(std::sin(0.37 * i));
    const HyperCube ms(uniform_bands(2, 600.0, 1600.0), 4, 4, msv, "p0", "t0");
    SpectralMae<double> model(tiny_config(), hs.bands(), ms.bands());
    model.initialize(9);

    const auto ms_ps = patchify(ms, 1, 2);
    const auto hs_ps = patchify(hs, 1, 2);
    const auto plan = model.finetune_plan({&ms_ps});
    const auto target = stack_patches<double>({&hs_ps});
    auto loss = [&] {
        ForwardCache<double> c;
        model.forward(plan, c);
        return mae_loss<double>(c.pred, target, {}, nullptr);
    };
    ForwardCache<double> cache;
    model.forward(plan, cache);
    REQUIRE(cache.pred.rows() == target.rows());
    nn::Mat<double> dpred;
    mae_loss<double>(cache.pred, target, {}, &dpred);
    auto grads = model.params().zeros_like();
    model.backward(plan, cache, dpred, grads);
    CHECK(grads[*grads.find("hs_embed.weight")].norm() == 0.0);
    std::string worst;
    const double err = max_group_error(model, grads, loss, &worst);
    INFO("worst group: " << worst);
    CHECK(err < 1e-3);
}

TEST_CASE("masked-only loss ignores visible rows") {
    nn::Mat<double> pred(2, 2), target(2, 2), d;
    pred << 1, 2, 3, 4;
    target << 0, 0, 0, 0;
    CHECK(mae_loss<double>(pred, target, {}, nullptr) == doctest::Approx(2.5));
    CHECK(mae_loss<double>(pred, target, {0, 1}, &d) == doctest::Approx(3.5));
    CHECK(d(0, 0) == 0.0);
    CHECK(d(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("embedding is affine and a zero patch yields the bias") {
    const auto cube = test_support::random_cube(4, 4, 4, 3);
    SpectralMae<double> model(tiny_config(), cube.bands());
    model.initialize(1);
    nn::Mat<double> zero = nn::Mat<double>::Zero(1, 4);
    const auto e0 = model.embed(zero, Arm::hyperspectral);
    CHECK((e0 - model.params()[*model.params().find("hs_embed.bias")]).norm() == 0.0);
    nn::Mat<double> u = nn::Mat<double>::Random(1, 4), v = nn::Mat<double>::Random(1, 4);
    const double a = 1.7;
    const auto lhs = model.embed(a * u + v, Arm::hyperspectral);
    const auto rhs = a * model.embed(u, Arm::hyperspectral) + model.embed(v, Arm::hyperspectral) - a * e0;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-6);
    CHECK_THROWS_AS(model.embed(nn::Mat<double>::Zero(1, 5), Arm::hyperspectral), ValidationError);
}

TEST_CASE("encoder is equivariant to spectral token order and attention rows are stochastic") {
    const auto cube = test_support::random_cube(4, 4, 4, 21);
    SpectralMae<double> model(tiny_config(), cube.bands());
    model.initialize(2);
    const auto grid = model.token_grid(patchify(cube, 1, 2), Arm::hyperspectral);
    std::vector<nn::Mat<double>> attn;
    const auto out = model.encode(grid.tokens, 4, &attn);
    REQUIRE(attn.size() == 1);
    for (Eigen::Index r = 0; r < attn[0].rows(); ++r) CHECK(std::abs(attn[0].row(r).sum() - 1.0) < 1e-6);

    nn::Mat<double> permuted = grid.tokens;
    const int perm[4] = {2, 0, 3, 1};
    for (int g = 0; g < 4; ++g) permuted.row(g) = grid.tokens.row(perm[g]);
    const auto out_p = model.encode(permuted, 4);
    for (int g = 0; g < 4; ++g) CHECK((out_p.row(g) - out.row(perm[g])).cwiseAbs().maxCoeff() < 1e-12);

    const auto single = model.encode(grid.tokens.topRows(3), 1);
    CHECK(single.allFinite());
}

TEST_CASE("mask token only affects masked predictions") {
    const auto cube = test_support::random_cube(4, 4, 4, 31);
    const auto ps = patchify(cube, 1, 2);
    SpectralMae<double> model(tiny_config(), cube.bands());
    model.initialize(3);
    auto& mt = model.params()[*model.params().find("mask_token")];

    const auto none = model.pretrain_plan({&ps}, {{}});
    const auto some = model.pretrain_plan({&ps}, {{1}});
    ForwardCache<double> a, b, c, e;
    model.forward(none, a);
    model.forward(some, b);
    mt.array() += 0.01;
    model.forward(none, c);
    model.forward(some, e);
    CHECK(a.pred == c.pred);
    CHECK((b.pred - e.pred).norm() > 0.0);
}

TEST_CASE("apply_band_mask replaces whole groups at every position") {
    const auto cube = test_support::random_cube(4, 4, 4, 41);
    SpectralMae<double> model(tiny_config(), cube.bands());
    model.initialize(4);
    auto grid = model.token_grid(patchify(cube, 1, 2), Arm::hyperspectral);
    const auto before = grid.tokens;
    model.apply_band_mask(grid, {0, 3});
    const auto& mt = model.params()[*model.params().find("mask_token")];
    for (std::size_t r = 0; r < grid.coords.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        const int g = grid.coords[r].group;
        if (g == 0 || g == 3) {
            CHECK(grid.tokens.row(row) == (mt.row(0) + grid.positions.row(row)));
        } else {
            CHECK(grid.tokens.row(row) == before.row(row));
        }
    }
    CHECK(grid.group_masked == std::vector<bool>{true, false, false, true});
}

TEST_CASE("checkpoint round trip reproduces the forward pass bit-exactly") {
    const auto cube = test_support::random_cube(4, 4, 4, 51);
    const auto ps = patchify(cube, 1, 2);
    SpectralMae<float> model(tiny_config(), cube.bands(), uniform_bands(2, 600.0, 1600.0));
    model.initialize(6);
    BandStats stats;
    stats.add(cube);
    const auto dir = test_support::temp_dir("mae_ckpt");
    save_checkpoint(model.to_checkpoint(Stage::pretrained, stats, std::nullopt), dir / "m.ckpt");
    const auto reloaded = SpectralMae<float>::from_checkpoint(load_checkpoint(dir / "m.ckpt"));
    CHECK(reloaded.params() == model.params());
    const auto plan = model.pretrain_plan({&ps}, {{1, 2}});
    ForwardCache<float> a, b;
    model.forward(plan, a);
    reloaded.forward(plan, b);
    CHECK(a.pred == b.pred);
}

TEST_CASE("plans reject incompatible inputs") {
    const auto cube = test_support::random_cube(4, 4, 4, 61);
    SpectralMae<double> model(tiny_config(), cube.bands());
    const auto wrong = patchify(cube, 2, 2);
    CHECK_THROWS_AS(model.pretrain_plan({&wrong}, {{}}), ValidationError);
    const auto ps = patchify(cube, 1, 2);
    CHECK_THROWS_AS(model.pretrain_plan({&ps}, {{0, 1, 2, 3}}), ValidationError);
    CHECK_THROWS_AS(model.pretrain_plan({&ps, &ps}, {{0}, {0, 1}}), ValidationError);
    auto bad = tiny_config();
    bad.heads = 3;
    CHECK_THROWS_AS(SpectralMae<double>(bad, cube.bands()), ValidationError);
}
