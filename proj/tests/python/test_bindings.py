# SPDX-License-Identifier: Apache-2.0
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import spectral_bridge as sb

ROOT = Path(__file__).resolve().parents[2]


def random_cube(seed, bands=4, h=12, w=12):
    return np.random.default_rng(seed).uniform(0, 1, (bands, h, w)).astype(np.float32)


def test_image_metrics_against_numpy():
    x, y = random_cube(1), random_cube(2)
    d = x.astype(np.float64) - y
    assert sb.mae(x, y) == pytest.approx(np.abs(d).mean(), rel=1e-12)
    assert sb.mse(x, y) == pytest.approx((d * d).mean(), rel=1e-12)
    assert sb.psnr(x, y) == pytest.approx(10 * np.log10(float(x.max()) ** 2 / (d * d).mean()), rel=1e-12)
    assert sb.ssim(x, x) == 1.0
    assert sb.sam(2 * x, x) == 0.0
    assert 0.0 < sb.ssim(x, y) < 1.0


def test_regression_metrics_mean_predictor():
    y = [1.0, 2.0, 4.0, 9.0]
    m = sb.regression_metrics(y, [4.0] * 4)
    assert m["r2"] == 0.0
    assert m["rmse"] == pytest.approx(np.sqrt(m["mse"]))


def test_shape_errors_raise_value_error():
    with pytest.raises(ValueError):
        sb.mae(random_cube(1), random_cube(1, h=8))
    with pytest.raises(sb.ValidationError):
        sb.mae(np.zeros((4, 4), np.float32), np.zeros((4, 4), np.float32))


def test_scene_projection_and_weights(tmp_path):
    scene = sb.gen_scene(bands=16, height=4, width=4, seed=3, lines=[(1650.0, 20.0, 0.5)])
    cube = scene["values"]
    assert cube.shape == (16, 4, 4) and cube.dtype == np.float32
    assert len(scene["line_depths"]) == 1

    srf = tmp_path / "srf.csv"
    srf.write_text(
        "band_name,center_nm,fwhm_nm,sample_nm,response\n"
        + "".join(f"wide,1200,400,{l},1\n" for l in range(1000, 1401, 50))
    )
    w, targets = sb.weight_matrix(srf, scene["centers"], scene["fwhm"])
    assert targets == [1200.0]
    assert w.sum(axis=0) == pytest.approx([1.0])
    projected = sb.project(cube, scene["centers"], srf, scene["fwhm"])
    expected = np.einsum("bt,bhw->thw", w, cube.astype(np.float64))
    np.testing.assert_allclose(projected, expected, rtol=1e-6)


def test_cube_file_round_trip(tmp_path):
    x = random_cube(5, bands=3, h=2, w=5)
    centers = [500.0, 800.0, 1200.0]
    sb.save_cube(tmp_path / "c.hsc", x, centers, patch_id="p1", tile_id="t1")
    back = sb.load_cube(tmp_path / "c.hsc")
    np.testing.assert_array_equal(back["values"], x)
    assert back["centers"] == centers
    assert (back["patch_id"], back["tile_id"]) == ("p1", "t1")


def test_tokens_and_splits():
    assert sb.scale_wavelength(400.0, 256) == 0.0
    assert sb.scale_wavelength(2500.0, 256) == 256.0
    assert sb.mask_count(0.8, 101) == 80
    enc = sb.positional_encoding(3, 4, 1000.0, 16, 256)
    assert len(enc) == 16 and all(-2.0 <= v <= 2.0 for v in enc)
    patches = [(f"p{i}", f"t{i // 3}") for i in range(30)]
    split = sb.make_splits(patches, "hard", (0.6, 0.2, 0.2), 4)
    assert split == sb.make_splits(patches, "hard", (0.6, 0.2, 0.2), 4)
    by_tile = {}
    for pid, tile in patches:
        by_tile.setdefault(tile, set()).add(split[pid])
    assert all(len(s) == 1 for s in by_tile.values())


@pytest.mark.skipif("SPECTRAL_BRIDGE" not in os.environ, reason="CLI binary not provided")
def test_reconstruct_with_cli_checkpoint(tmp_path):
    cli = os.environ["SPECTRAL_BRIDGE"]
    config = ROOT / "configs" / "pipeline.ini"
    paths = [
        "--set", f"paths.hs_dir={tmp_path}/data/cubes",
        "--set", f"paths.srf={tmp_path}/data/srf.csv",
        "--set", f"paths.splits={tmp_path}/data/splits.csv",
        "--set", f"paths.labels={tmp_path}/data/labels.csv",
        "--set", f"paths.ms_dir={tmp_path}/ms/cubes",
        "--set", "dataset.tiles=4",
        "--set", "model.steps=10",
    ]
    for stage, out in [("synthgen", "data"), ("degrade", "ms"), ("finetune", "ft")]:
        subprocess.run([cli, stage, "--config", str(config), "--out", str(tmp_path / out), *paths], check=True)
    ms_file = sorted((tmp_path / "ms" / "cubes").glob("*.hsc"))[0]
    ms = sb.load_cube(ms_file)
    hs, centers = sb.reconstruct(ms["values"], tmp_path / "ft" / "best.ckpt")
    assert hs.shape == (16, 4, 4)
    assert len(centers) == 16
    assert np.isfinite(hs).all()
    again, _ = sb.reconstruct(ms["values"], tmp_path / "ft" / "best.ckpt")
    np.testing.assert_array_equal(hs, again)
