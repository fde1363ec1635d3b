from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image as PILImage

from mlrn.config import DataConfig, MlrnConfig, RunConfig, TrainConfig

TINY_MODEL = MlrnConfig(g=2, n_blocks=1, scale=2)


def write_png(path: Path, pixels: np.ndarray) -> Path:
    """Writes (h, w) or (h, w, c) uint8 samples as an 8-bit PNG."""
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(np.asarray(pixels, dtype=np.uint8)).save(path, format="PNG")
    return path


def smooth_rgb(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Gradient plus mild noise, so bicubic degradation stays meaningful."""
    y, x = np.mgrid[0:height, 0:width]
    base = np.stack([4.0 * x + 40, 4.0 * y + 60, 2.0 * (x + y) + 20], axis=-1)
    noisy = base + rng.uniform(-10, 10, size=base.shape)
    return np.clip(noisy, 0, 255).astype(np.uint8)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def toy_hr_dir(tmp_path: Path) -> Path:
    """Four 24x24 RGB images in `<tmp>/toy/HR`."""
    rng = np.random.default_rng(7)
    hr_dir = tmp_path / "toy" / "HR"
    for index in range(4):
        write_png(hr_dir / f"img_{index:02d}.png", smooth_rgb(rng, 24, 24))
    return hr_dir


def tiny_run(hr_dir: Path, **train: object) -> RunConfig:
    settings: dict[str, object] = {
        "batch_size": 2,
        "patch_hr": 8,
        "iters_per_epoch": 2,
        "epochs": 2,
        "halve_every": 1,
        "lr0": 1e-3,
        "val_count": 1,
    }
    settings.update(train)
    return RunConfig(
        model=TINY_MODEL,
        train=TrainConfig(**settings),
        data=DataConfig(hr_dir=hr_dir),
    )
