"""PSNR and SSIM under the usual super-resolution benchmark conventions.

Inputs are `Image`s in 0..255 float units. Both metrics can be computed on
BT.601 luma ("y") or on all color channels ("rgb"), after shaving a border.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Literal

import numpy as np
from scipy import signal

from mlrn.image import Image
from mlrn.tensor import ShapeError

if TYPE_CHECKING:
    from mlrn.tensor.tensor import FloatArray

logger = logging.getLogger(__name__)

ChannelMode = Literal["y", "rgb"]

PIXEL_MAX = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * PIXEL_MAX) ** 2
SSIM_C2 = (0.03 * PIXEL_MAX) ** 2

_Y_WEIGHTS = np.array([65.481, 128.553, 24.966]) / 255.0


def rgb_to_y(image: Image) -> Image:
    """Studio-swing BT.601 luma; single-channel images are returned unchanged."""
    if image.channels == 1:
        return image
    luma = 16.0 + np.tensordot(_Y_WEIGHTS, image.data, axes=([0], [0]))
    return Image(luma[np.newaxis])


def _prepare(
    ref: Image, test: Image, shave: int, mode: ChannelMode
) -> tuple[FloatArray, FloatArray]:
    if ref.data.shape != test.data.shape:
        raise ShapeError(
            f"cannot compare a {ref.data.shape} image with a {test.data.shape} one"
        )
    if shave < 0 or 2 * shave >= min(ref.height, ref.width):
        raise ValueError(
            f"shave {shave} does not leave any pixels of a "
            f"{ref.height}x{ref.width} image"
        )
    if mode == "y":
        ref, test = rgb_to_y(ref), rgb_to_y(test)
    region = np.s_[:, shave : ref.height - shave, shave : ref.width - shave]
    return ref.data[region], test.data[region]


def psnr(ref: Image, test: Image, shave: int = 0, mode: ChannelMode = "y") -> float:
    """Peak signal-to-noise ratio in dB; `math.inf` for identical regions."""
    x, y = _prepare(ref, test, shave, mode)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PIXEL_MAX**2 / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> FloatArray:
    """Normalized 2-D Gaussian, like MATLAB's fspecial('gaussian', size, sigma)."""
    offsets = np.arange(size) - (size - 1) / 2.0
    profile = np.exp(-(offsets**2) / (2.0 * sigma**2))
    window = np.outer(profile, profile)
    return window / window.sum()


def _ssim_plane(x: FloatArray, y: FloatArray, window: FloatArray) -> float:
    def filtered(plane: FloatArray) -> FloatArray:
        return signal.convolve2d(plane, window, mode="valid")

    mu_x, mu_y = filtered(x), filtered(y)
    mu_xx, mu_yy, mu_xy = mu_x * mu_x, mu_y * mu_y, mu_x * mu_y
    sigma_xx = filtered(x * x) - mu_xx
    sigma_yy = filtered(y * y) - mu_yy
    sigma_xy = filtered(x * y) - mu_xy

    numerator = (2.0 * mu_xy + SSIM_C1) * (2.0 * sigma_xy + SSIM_C2)
    denominator = (mu_xx + mu_yy + SSIM_C1) * (sigma_xx + sigma_yy + SSIM_C2)
    return float(np.mean(numerator / denominator))


def ssim(ref: Image, test: Image, shave: int = 0, mode: ChannelMode = "y") -> float:
    """Mean SSIM over all fully contained 11x11 Gaussian windows.

    In "rgb" mode the per-channel values are averaged.
    """
    x, y = _prepare(ref, test, shave, mode)
    if min(x.shape[1:]) < SSIM_WINDOW:
        raise ValueError(
            f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels after shaving, "
            f"got {x.shape[1]}x{x.shape[2]}"
        )
    window = gaussian_window()
    return float(
        np.mean([_ssim_plane(x[c], y[c], window) for c in range(x.shape[0])])
    )
