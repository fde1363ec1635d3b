from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Literal

import numpy as np

from mlrn.image.image import Image, load_image
from mlrn.image.resize import Boundary, bicubic_resize
from mlrn.json_utils import read_json, write_json

if TYPE_CHECKING:
    from collections.abc import Collection, Iterable, Sequence

    from mlrn.tensor.tensor import FloatArray

logger = logging.getLogger(__name__)

MEAN_CACHE_NAME = "mean_rgb.json"
HR_DIR_NAME = "HR"


class DatasetError(ValueError):
    pass


@dataclass
class ImagePair:
    hr: Image
    lr: Image
    scale: int
    source_id: str
    source_path: Path | None = None
    degradation: str = "bicubic"


@dataclass(frozen=True)
class DatasetSpec:
    """Where a dataset lives. Without `lr_dir` the LR images are generated."""

    hr_dir: Path
    scale: int
    lr_dir: Path | None = None
    split: Literal["train", "val", "test"] = "train"

    @classmethod
    def from_root(
        cls,
        root: Path,
        scale: int,
        split: Literal["train", "val", "test"] = "train",
    ) -> DatasetSpec:
        """Accepts `<root>/HR` with optional `<root>/LR_x{r}`, or a flat PNG folder."""
        hr_dir = root / HR_DIR_NAME
        if not hr_dir.is_dir():
            return cls(hr_dir=root, scale=scale, split=split)
        lr_dir = root / f"LR_x{scale}"
        return cls(
            hr_dir=hr_dir,
            scale=scale,
            lr_dir=lr_dir if lr_dir.is_dir() else None,
            split=split,
        )

    @property
    def mean_cache_path(self) -> Path:
        root = self.hr_dir.parent if self.hr_dir.name == HR_DIR_NAME else self.hr_dir
        return root / MEAN_CACHE_NAME


@dataclass
class Dataset:
    pairs: list[ImagePair]
    scale: int
    spec: DatasetSpec | None = None
    mean_rgb: tuple[float, ...] | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def channels(self) -> int:
        return self.pairs[0].hr.channels


def png_files(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise DatasetError(f"{directory} is not a directory")
    return sorted(directory.glob("*.png"), key=lambda path: path.stem)


def crop_to_multiple(hr: Image, r: int) -> Image:
    """Top-left anchored crop so both dimensions are divisible by `r`."""
    if hr.height < r or hr.width < r:
        raise DatasetError(
            f"a {hr.height}x{hr.width} image is smaller than the scale factor {r}"
        )
    return hr.crop(0, 0, hr.height - hr.height % r, hr.width - hr.width % r)


def degrade(
    hr: Image,
    r: int,
    source_id: str = "",
    boundary: Boundary = "replicate",
) -> ImagePair:
    """Bicubic ×r downscale of the divisibility-cropped HR, quantized to 8 bit."""
    if r not in (2, 3, 4):
        raise DatasetError(f"scale must be 2, 3 or 4, got {r}")
    cropped = crop_to_multiple(hr, r)
    if (cropped.height, cropped.width) != (hr.height, hr.width):
        logger.info(
            "%s: cropped %dx%d to %dx%d for scale %d",
            source_id or "image",
            hr.height,
            hr.width,
            cropped.height,
            cropped.width,
            r,
        )
    lr = bicubic_resize(cropped, cropped.height // r, cropped.width // r, boundary)
    return ImagePair(hr=cropped, lr=lr.quantized(), scale=r, source_id=source_id)


def _load_pair(
    hr_path: Path, lr_path: Path | None, scale: int, boundary: Boundary
) -> ImagePair:
    hr = load_image(hr_path)
    if lr_path is None:
        pair = degrade(hr, scale, hr_path.stem, boundary)
        pair.source_path = hr_path
        return pair

    lr = load_image(lr_path)
    cropped = crop_to_multiple(hr, scale)
    expected = (cropped.height // scale, cropped.width // scale)
    if (lr.height, lr.width) != expected or lr.channels != hr.channels:
        raise DatasetError(
            f"{lr_path} is {lr.channels}x{lr.height}x{lr.width}, expected "
            f"{hr.channels}x{expected[0]}x{expected[1]} for scale {scale}"
        )
    return ImagePair(
        hr=cropped,
        lr=lr,
        scale=scale,
        source_id=hr_path.stem,
        source_path=hr_path,
        degradation="provided",
    )


def load_dataset(
    spec: DatasetSpec,
    threads: int | None = None,
    boundary: Boundary = "replicate",
) -> Dataset:
    """Loads and pairs every PNG of a dataset, decoding in a thread pool.

    Pairs come back sorted by file stem regardless of worker count.
    """
    hr_paths = png_files(spec.hr_dir)
    if not hr_paths:
        raise DatasetError(f"no PNG images in {spec.hr_dir}")

    lr_paths: Sequence[Path | None] = [None] * len(hr_paths)
    if spec.lr_dir is not None:
        lr_files = png_files(spec.lr_dir)
        hr_stems = [path.stem for path in hr_paths]
        lr_stems = [path.stem for path in lr_files]
        if hr_stems != lr_stems:
            unmatched = sorted(set(hr_stems) ^ set(lr_stems))
            raise DatasetError(
                f"{spec.hr_dir} and {spec.lr_dir} stems differ: {unmatched}"
            )
        lr_paths = lr_files

    with ThreadPoolExecutor(max_workers=threads) as pool:
        pairs = list(
            pool.map(
                _load_pair,
                hr_paths,
                lr_paths,
                [spec.scale] * len(hr_paths),
                [boundary] * len(hr_paths),
            )
        )
    channels = {pair.hr.channels for pair in pairs}
    if len(channels) > 1:
        raise DatasetError(f"{spec.hr_dir} mixes grayscale and color images")
    logger.info(
        "Loaded %d %s pairs at x%d from %s",
        len(pairs),
        spec.split,
        spec.scale,
        spec.hr_dir,
    )
    return Dataset(pairs=pairs, scale=spec.scale, spec=spec)


def split_holdout(dataset: Dataset, count: int = 10) -> tuple[Dataset, Dataset]:
    """Holds out the last `count` pairs for validation.

    At least one pair always stays in the training part. A single-image
    dataset is used for both.
    """
    if len(dataset) == 1:
        logger.warning("Only one image: validating on the training image")
        return dataset, dataset
    held = min(count, len(dataset) - 1)
    if held < count:
        logger.warning("Holding out %d images instead of %d", held, count)
    train = Dataset(dataset.pairs[: len(dataset) - held], dataset.scale, dataset.spec)
    val = Dataset(dataset.pairs[len(dataset) - held :], dataset.scale, dataset.spec)
    return train, val


def dataset_mean(images: Iterable[Image]) -> tuple[float, ...]:
    """Per-channel mean over all pixels of all images, accumulated in float64."""
    totals: FloatArray | None = None
    pixels = 0
    for image in images:
        sums = image.data.sum(axis=(1, 2))
        if totals is None:
            totals = np.zeros_like(sums)
        elif totals.shape != sums.shape:
            raise DatasetError("images disagree on channel count")
        totals += sums
        pixels += image.height * image.width
    if totals is None:
        raise DatasetError("cannot compute the mean of an empty dataset")
    return tuple(float(total / pixels) for total in totals)


def compute_dataset_mean(
    spec: DatasetSpec, exclude: Collection[str] = ()
) -> tuple[float, ...]:
    """Streams every HR image of `spec` from disk, one at a time.

    Images whose stem is in `exclude` (a validation holdout) are skipped.
    """
    paths = [path for path in png_files(spec.hr_dir) if path.stem not in exclude]
    return dataset_mean(load_image(path) for path in paths)


def cached_dataset_mean(
    spec: DatasetSpec, exclude: Collection[str] = ()
) -> tuple[float, ...]:
    """`compute_dataset_mean` with a JSON cache beside the dataset.

    The cache is keyed by the image count and the excluded stems.
    """
    cache = spec.mean_cache_path
    count = len(png_files(spec.hr_dir))
    excluded = sorted(exclude)
    if cache.is_file():
        stored = read_json(cache)
        if (
            isinstance(stored, dict)
            and stored.get("image_count") == count
            and stored.get("excluded", []) == excluded
        ):
            logger.debug("Using cached dataset mean from %s", cache)
            return tuple(float(value) for value in stored["mean_rgb"])
        logger.info("Ignoring stale mean cache %s", cache)

    mean = compute_dataset_mean(spec, excluded)
    try:
        write_json(
            cache,
            {"mean_rgb": list(mean), "image_count": count, "excluded": excluded},
        )
    except OSError as exc:
        logger.warning("Could not write mean cache %s: %s", cache, exc)
    return mean
