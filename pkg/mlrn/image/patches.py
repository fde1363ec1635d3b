from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any

import numpy as np

from mlrn.image.dataset import Dataset, DatasetError, ImagePair
from mlrn.tensor import ShapeError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from mlrn.tensor.tensor import FloatArray

logger = logging.getLogger(__name__)


def sample_patch(
    pair: ImagePair, patch_hr: int, rng: np.random.Generator
) -> tuple[FloatArray, FloatArray]:
    """Uniform random aligned crop; the HR offset is always r times the LR offset."""
    r = pair.scale
    if patch_hr % r:
        raise DatasetError(f"patch size {patch_hr} is not divisible by scale {r}")
    patch_lr = patch_hr // r
    if pair.lr.height < patch_lr or pair.lr.width < patch_lr:
        raise DatasetError(
            f"{pair.source_id}: {pair.hr.height}x{pair.hr.width} is smaller than "
            f"the {patch_hr}x{patch_hr} patch"
        )
    top = int(rng.integers(pair.lr.height - patch_lr + 1))
    left = int(rng.integers(pair.lr.width - patch_lr + 1))
    lr_patch = pair.lr.data[:, top : top + patch_lr, left : left + patch_lr]
    hr_patch = pair.hr.data[
        :, r * top : r * top + patch_hr, r * left : r * left + patch_hr
    ]
    return lr_patch.copy(), hr_patch.copy()


def augment(
    lr_patch: FloatArray, hr_patch: FloatArray, rng: np.random.Generator
) -> tuple[FloatArray, FloatArray]:
    """Horizontal flip, vertical flip and 90 degree rotation, each with p = 0.5.

    All three draws are always taken so the stream position does not depend on
    the outcomes.
    """
    hflip, vflip, rotate = rng.random(3) < 0.5
    patches = [lr_patch, hr_patch]
    if hflip:
        patches = [p[:, :, ::-1] for p in patches]
    if vflip:
        patches = [p[:, ::-1, :] for p in patches]
    if rotate:
        patches = [np.rot90(p, axes=(1, 2)) for p in patches]
    return np.ascontiguousarray(patches[0]), np.ascontiguousarray(patches[1])


def _mean_column(data: FloatArray, mean_rgb: Sequence[float]) -> FloatArray:
    channel_axis = data.ndim - 3
    if len(mean_rgb) != data.shape[channel_axis]:
        raise ShapeError(
            f"{len(mean_rgb)} mean values for {data.shape[channel_axis]} channels"
        )
    return np.asarray(mean_rgb, dtype=np.float64).reshape(-1, 1, 1)


def normalize(data: FloatArray, mean_rgb: Sequence[float]) -> FloatArray:
    """Subtracts the per-channel mean from (c, h, w) or (n, c, h, w) data."""
    return data - _mean_column(data, mean_rgb)


def denormalize(data: FloatArray, mean_rgb: Sequence[float]) -> FloatArray:
    return data + _mean_column(data, mean_rgb)


class PatchSampler:
    """Seeded stream of normalized (lr, hr) training batches.

    Every random decision (image choice, crop offset, augmentation) is drawn
    from one generator, so `(dataset, seed)` fixes the whole stream.
    """

    def __init__(
        self,
        dataset: Dataset,
        patch_hr: int,
        batch_size: int,
        mean_rgb: Sequence[float],
        seed: int,
    ) -> None:
        if len(dataset) == 0:
            raise DatasetError("cannot sample patches from an empty dataset")
        self._dataset = dataset
        self._patch_hr = patch_hr
        self._batch_size = batch_size
        self._mean_rgb = tuple(mean_rgb)
        self._rng = np.random.default_rng(seed)

    def next_batch(self) -> tuple[FloatArray, FloatArray]:
        """(batch, c, p/r, p/r) LR and (batch, c, p, p) HR arrays, mean removed."""
        lr_batch, hr_batch = [], []
        for _ in range(self._batch_size):
            pair = self._dataset.pairs[int(self._rng.integers(len(self._dataset)))]
            lr_patch, hr_patch = sample_patch(pair, self._patch_hr, self._rng)
            lr_patch, hr_patch = augment(lr_patch, hr_patch, self._rng)
            lr_batch.append(normalize(lr_patch, self._mean_rgb))
            hr_batch.append(normalize(hr_patch, self._mean_rgb))
        return np.stack(lr_batch), np.stack(hr_batch)

    @property
    def state(self) -> dict[str, Any]:
        return dict(self._rng.bit_generator.state)

    @state.setter
    def state(self, value: dict[str, Any]) -> None:
        self._rng.bit_generator.state = value
