"""Implementations of the `mlrn` subcommands.

Commands that read inputs are split in two: a `plan_*` function checks the
arguments and loads what it can, raising before anything is written, and
returns a job that does the work. Every job returns its exit code: 0 on
success, 1 when a quality check fails (gradient check threshold, missing
evaluation counterparts, partial degradation failures). Usage,
configuration and I/O errors propagate as exceptions and are mapped to 2 by
`mlrn.cli.main`.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from functools import partial
from typing import TYPE_CHECKING

from mlrn.config import MetricConfig
from mlrn.image import (
    DatasetError,
    DatasetSpec,
    ImageIOError,
    degrade,
    load_dataset,
    load_image,
    png_files,
    save_image,
)
from mlrn.metrics import (
    bicubic_baseline,
    evaluate_dir,
    evaluate_upscaler,
    write_metrics_csv,
)
from mlrn.model import (
    VARIANT_FLAGS,
    gradcheck_suite,
    load_checkpoint,
    parameter_count,
    variant_config,
)
from mlrn.tensor import CheckpointError, ShapeError
from mlrn.training import model_upscaler, prepare_data, run_training

if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path

    from mlrn.config import RunConfig
    from mlrn.image import Boundary
    from mlrn.metrics import Evaluation
    from mlrn.model import Checkpoint

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalRequest:
    """What `mlrn eval` scores: two directories, a checkpoint or the baseline."""

    checkpoint: Path | None = None
    baseline: str | None = None
    dataset: Path | None = None
    ref_dir: Path | None = None
    test_dir: Path | None = None
    scale: int | None = None
    metric: MetricConfig = field(default_factory=MetricConfig)


def require_images(directory: Path) -> list[Path]:
    paths = png_files(directory)
    if not paths:
        raise DatasetError(f"no PNG images in {directory}")
    return paths


def plan_degrade(
    hr_dir: Path, out_dir: Path, scales: list[int], boundary: Boundary = "replicate"
) -> Callable[[], int]:
    return partial(cmd_degrade, require_images(hr_dir), out_dir, scales, boundary)


def cmd_degrade(
    hr_paths: list[Path],
    out_dir: Path,
    scales: list[int],
    boundary: Boundary = "replicate",
) -> int:
    """Writes `LR_x{r}/<stem>.png` for every HR image and scale."""
    failures: list[str] = []
    counts = dict.fromkeys(scales, 0)
    for path in hr_paths:
        try:
            hr = load_image(path)
            for r in scales:
                pair = degrade(hr, r, path.stem, boundary)
                save_image(pair.lr, out_dir / f"LR_x{r}" / f"{path.stem}.png")
                counts[r] += 1
        except (ImageIOError, DatasetError) as exc:
            logger.error("%s: %s", path, exc)
            failures.append(path.name)

    for r, count in counts.items():
        print(f"x{r}: {count} images -> {out_dir / f'LR_x{r}'}")
    if failures:
        print(f"failed: {', '.join(failures)}")
        return 1
    return 0


def plan_training(
    command: str, run: RunConfig, out_dir: Path, threads: int | None = None
) -> Callable[[], int]:
    """Checks the training images exist; `command` is "train" or "ablate"."""
    require_images(run.data.hr_dir)
    job = cmd_ablate if command == "ablate" else cmd_train
    return partial(job, run, out_dir, threads)


def cmd_train(run: RunConfig, out_dir: Path, threads: int | None = None) -> int:
    result = run_training(run, out_dir, threads)
    records = result.log.records
    final = next(
        (r.val_psnr_db for r in reversed(records) if r.val_psnr_db is not None), None
    )
    if final is None:
        print("training finished without validation")
    else:
        print(f"final validation PSNR: {final:.2f} dB")
    return 0


def _report(evaluation: Evaluation, out_dir: Path) -> int:
    write_metrics_csv(out_dir / "metrics.csv", evaluation.reports, evaluation.average)
    print(f"PSNR/SSIM: {evaluation.average.summary}")
    if evaluation.missing:
        print(f"missing counterparts: {', '.join(evaluation.missing)}")
        return 1
    return 0


def _checkpoint_mean(checkpoint: Checkpoint) -> tuple[float, ...]:
    mean = checkpoint.metadata.get("mean_rgb")
    if mean is None:
        logger.warning("Checkpoint has no dataset mean, assuming zero")
        return (0.0,) * checkpoint.model.config.in_channels
    return tuple(float(value) for value in mean)


def plan_eval(
    out_dir: Path, request: EvalRequest, threads: int | None = None
) -> Callable[[], int]:
    """Evaluates a checkpoint, the bicubic baseline or two image directories."""
    if request.ref_dir is not None and request.test_dir is not None:
        return _plan_compare(
            out_dir, request.ref_dir, request.test_dir, request, threads
        )
    if request.dataset is None:
        raise DatasetError("--dataset is required unless --ref-dir/--test-dir is given")
    if request.checkpoint is not None:
        return _plan_checkpoint_eval(
            out_dir, request.checkpoint, request.dataset, request, threads
        )
    if request.baseline != "bicubic":
        raise DatasetError("one of --checkpoint or --baseline bicubic is required")
    return _plan_baseline_eval(out_dir, request.dataset, request, threads)


def _plan_compare(
    out_dir: Path,
    ref_dir: Path,
    test_dir: Path,
    request: EvalRequest,
    threads: int | None,
) -> Callable[[], int]:
    scale = request.scale
    if scale is None:
        raise DatasetError("--scale is required to compare directories")
    ref_stems = {path.stem for path in png_files(ref_dir)}
    if not ref_stems & {path.stem for path in png_files(test_dir)}:
        raise DatasetError(f"{ref_dir} and {test_dir} share no image stems")
    metric = request.metric

    def run() -> int:
        evaluation = evaluate_dir(
            ref_dir, test_dir, scale, metric.channel_mode, metric.shave, threads
        )
        return _report(evaluation, out_dir)

    return run


def _plan_checkpoint_eval(
    out_dir: Path,
    checkpoint_path: Path,
    dataset_dir: Path,
    request: EvalRequest,
    threads: int | None,
) -> Callable[[], int]:
    checkpoint = load_checkpoint(checkpoint_path)
    model_scale = checkpoint.model.config.scale
    if request.scale is not None and request.scale != model_scale:
        raise CheckpointError(
            f"checkpoint is for x{model_scale}, evaluation asked for x{request.scale}"
        )
    spec = DatasetSpec.from_root(dataset_dir, model_scale, "test")
    require_images(spec.hr_dir)
    upscale = model_upscaler(checkpoint.model, _checkpoint_mean(checkpoint))
    metric = request.metric

    def run() -> int:
        dataset = load_dataset(spec, threads, metric.boundary)
        evaluation = evaluate_upscaler(
            upscale, dataset, metric.channel_mode, metric.shave
        )
        return _report(evaluation, out_dir)

    return run


def _plan_baseline_eval(
    out_dir: Path, dataset_dir: Path, request: EvalRequest, threads: int | None
) -> Callable[[], int]:
    if request.scale is None:
        raise DatasetError("--scale is required for the bicubic baseline")
    spec = DatasetSpec.from_root(dataset_dir, request.scale, "test")
    require_images(spec.hr_dir)
    metric = request.metric

    def run() -> int:
        dataset = load_dataset(spec, threads, metric.boundary)
        evaluation = bicubic_baseline(
            dataset, metric.channel_mode, metric.shave, metric.boundary
        )
        return _report(evaluation, out_dir)

    return run


def plan_infer(
    checkpoint_path: Path, input_path: Path, output_path: Path
) -> Callable[[], int]:
    checkpoint = load_checkpoint(checkpoint_path)
    lr = load_image(input_path)
    expected = checkpoint.model.config.in_channels
    if lr.channels != expected:
        raise ShapeError(
            f"{input_path} has {lr.channels} channels, the model expects {expected}"
        )
    upscale = model_upscaler(checkpoint.model, _checkpoint_mean(checkpoint))

    def run() -> int:
        started = time.perf_counter()
        sr = upscale(lr)
        elapsed = time.perf_counter() - started
        save_image(sr, output_path)
        print(
            f"{lr.width}x{lr.height} -> {sr.width}x{sr.height} in {elapsed:.2f} s: "
            f"{output_path}"
        )
        return 0

    return run


def cmd_gradcheck(threshold: float, seed: int = 0) -> int:
    report = gradcheck_suite(threshold, seed)
    for name, error in report.errors.items():
        status = "ok" if name not in report.failures else "FAIL"
        print(f"{name:<14} {error:.3e} {status}")
    if not report.passed:
        print(f"above threshold {threshold:.1e}: {', '.join(report.failures)}")
        return 1
    return 0


def cmd_ablate(run: RunConfig, out_dir: Path, threads: int | None = None) -> int:
    """Trains all four fusion/skip variants on shared data and seeds."""
    data = prepare_data(run, threads)
    curves: dict[str, dict[int, float | None]] = {}
    finals: dict[str, float | None] = {}
    for name in VARIANT_FLAGS:
        variant_run = run.model_copy(
            update={"model": variant_config(run.model, name)}
        )
        result = run_training(variant_run, out_dir / name, threads, data)
        curves[name] = {r.epoch: r.val_psnr_db for r in result.log.records}
        finals[name] = next(
            (
                r.val_psnr_db
                for r in reversed(result.log.records)
                if r.val_psnr_db is not None
            ),
            None,
        )

    epochs = sorted({epoch for curve in curves.values() for epoch in curve})
    with (out_dir / "ablation_curves.csv").open("w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(["epoch", *VARIANT_FLAGS])
        for epoch in epochs:
            writer.writerow(
                [epoch, *(_cell(curves[name].get(epoch)) for name in VARIANT_FLAGS)]
            )

    rows = [
        ["", *VARIANT_FLAGS],
        ["GFF", *(_mark(flags[0]) for flags in VARIANT_FLAGS.values())],
        ["RSC", *(_mark(flags[1]) for flags in VARIANT_FLAGS.values())],
        [
            "parameters",
            *(
                str(parameter_count(variant_config(run.model, name)))
                for name in VARIANT_FLAGS
            ),
        ],
        ["PSNR", *(_cell(finals[name], ".2f") for name in VARIANT_FLAGS)],
    ]
    with (out_dir / "ablation_summary.csv").open("w", newline="") as stream:
        csv.writer(stream).writerows(rows)
    for row in rows:
        print("".join(f"{cell:>12}" for cell in row))
    return 0


def _cell(value: float | None, fmt: str = ".6f") -> str:
    return "" if value is None else format(value, fmt)


def _mark(flag: bool) -> str:
    return "on" if flag else "off"

