from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from mlrn.image import DatasetError, bicubic_resize, load_image, png_files
from mlrn.metrics.quality import ChannelMode, psnr, ssim

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence
    from pathlib import Path

    from mlrn.image import Boundary, Dataset, Image

logger = logging.getLogger(__name__)

AVERAGE_ID = "AVERAGE"
CSV_COLUMNS = ("image_id", "psnr_db", "ssim", "scale", "channel_mode", "shave")


@dataclass(frozen=True)
class MetricReport:
    image_id: str
    psnr_db: float
    ssim: float
    scale: int
    channel_mode: ChannelMode
    shave: int

    @property
    def summary(self) -> str:
        """Two-decimal PSNR and four-decimal SSIM, e.g. 33.66/0.9299."""
        return f"{self.psnr_db:.2f}/{self.ssim:.4f}"

    def row(self) -> list[str]:
        return [
            self.image_id,
            f"{self.psnr_db:.6f}",
            f"{self.ssim:.6f}",
            str(self.scale),
            self.channel_mode,
            str(self.shave),
        ]


@dataclass
class Evaluation:
    reports: list[MetricReport]
    average: MetricReport
    missing: list[str] = field(default_factory=list)


def evaluate_image(  # noqa: PLR0913
    image_id: str,
    ref: Image,
    test: Image,
    scale: int,
    channel_mode: ChannelMode = "y",
    shave: int | None = None,
) -> MetricReport:
    border = scale if shave is None else shave
    return MetricReport(
        image_id=image_id,
        psnr_db=psnr(ref, test, border, channel_mode),
        ssim=ssim(ref, test, border, channel_mode),
        scale=scale,
        channel_mode=channel_mode,
        shave=border,
    )


def average_reports(reports: Sequence[MetricReport]) -> MetricReport:
    """Arithmetic means in image-id order.

    Infinite PSNRs (identical images) are left out of the PSNR mean; when every
    image is identical the average is infinite too.
    """
    if not reports:
        raise ValueError("cannot average an empty list of reports")
    ordered = sorted(reports, key=lambda report: report.image_id)
    finite = [r.psnr_db for r in ordered if math.isfinite(r.psnr_db)]
    first = ordered[0]
    return MetricReport(
        image_id=AVERAGE_ID,
        psnr_db=float(np.mean(finite)) if finite else math.inf,
        ssim=float(np.mean([r.ssim for r in ordered])),
        scale=first.scale,
        channel_mode=first.channel_mode,
        shave=first.shave,
    )


def evaluate_dir(  # noqa: PLR0913
    ref_dir: Path,
    test_dir: Path,
    scale: int,
    channel_mode: ChannelMode = "y",
    shave: int | None = None,
    threads: int | None = None,
) -> Evaluation:
    """Compares stem-matched PNGs; files without a counterpart are skipped."""
    ref_files = {path.stem: path for path in png_files(ref_dir)}
    test_files = {path.stem: path for path in png_files(test_dir)}
    missing = sorted(set(ref_files) ^ set(test_files))
    for stem in missing:
        logger.warning("%s has no counterpart, skipping", stem)
    stems = sorted(set(ref_files) & set(test_files))
    if not stems:
        raise DatasetError(f"{ref_dir} and {test_dir} share no image stems")

    def evaluate_stem(stem: str) -> MetricReport:
        ref, test = load_image(ref_files[stem]), load_image(test_files[stem])
        return evaluate_image(stem, ref, test, scale, channel_mode, shave)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        reports = list(pool.map(evaluate_stem, stems))
    return Evaluation(reports, average_reports(reports), missing)


def evaluate_upscaler(
    upscale: Callable[[Image], Image],
    dataset: Dataset,
    channel_mode: ChannelMode = "y",
    shave: int | None = None,
) -> Evaluation:
    """Scores `upscale(lr)`, quantized to 8 bit, against each HR image."""
    reports = []
    for pair in dataset.pairs:
        upscaled = upscale(pair.lr).quantized()
        reports.append(
            evaluate_image(
                pair.source_id, pair.hr, upscaled, dataset.scale, channel_mode, shave
            )
        )
    return Evaluation(reports, average_reports(reports))


def bicubic_baseline(
    dataset: Dataset,
    channel_mode: ChannelMode = "y",
    shave: int | None = None,
    boundary: Boundary = "replicate",
) -> Evaluation:
    """Scores plain bicubic upscaling of each LR image against its HR image."""
    r = dataset.scale

    def upscale(lr: Image) -> Image:
        return bicubic_resize(lr, lr.height * r, lr.width * r, boundary)

    evaluation = evaluate_upscaler(upscale, dataset, channel_mode, shave)
    logger.info("Bicubic x%d baseline PSNR/SSIM: %s", r, evaluation.average.summary)
    return evaluation


def write_metrics_csv(
    path: Path, reports: Sequence[MetricReport], average: MetricReport
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(report.row() for report in reports)
        writer.writerow(average.row())
    logger.debug("Wrote %d metric rows to %s", len(reports) + 1, path)
