# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the spectral_bridge C++ core.

Cubes are float32 arrays shaped (bands, height, width).
"""

from ._core import (
    RuntimeFailure,
    ValidationError,
    gen_scene,
    load_cube,
    mae,
    make_splits,
    mask_count,
    mse,
    positional_encoding,
    project,
    psnr,
    reconstruct,
    regression_metrics,
    sam,
    save_cube,
    scale_wavelength,
    ssim,
    weight_matrix,
)

__all__ = [
    "RuntimeFailure",
    "ValidationError",
    "gen_scene",
    "load_cube",
    "mae",
    "make_splits",
    "mask_count",
    "mse",
    "positional_encoding",
    "project",
    "psnr",
    "reconstruct",
    "regression_metrics",
    "sam",
    "save_cube",
    "scale_wavelength",
    "ssim",
    "weight_matrix",
]
