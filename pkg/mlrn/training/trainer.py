from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from mlrn.image import (
    DatasetError,
    Image,
    PatchSampler,
    denormalize,
    normalize,
)
from mlrn.json_utils import write_json
from mlrn.metrics import Evaluation, evaluate_upscaler
from mlrn.model import Model, forward, load_checkpoint, save_checkpoint
from mlrn.tensor import CheckpointError, Tensor, l1_loss, no_grad
from mlrn.training.adam import Adam, AdamState

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence
    from pathlib import Path

    from mlrn.config import MetricConfig, TrainConfig
    from mlrn.image import Dataset

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "mean_l1_loss", "lr", "val_psnr_db", "wall_seconds")
BEST_RECORD_NAME = "best.json"


class TrainingError(RuntimeError):
    """Raised when the loss stops being finite."""


def lr_schedule(epoch: int, config: TrainConfig) -> float:
    """lr0 halved once every `halve_every` epochs (epoch counted from 0)."""
    if epoch < 0:
        raise ValueError(f"epoch must be nonnegative, got {epoch}")
    return config.lr0 / 2 ** (epoch // config.halve_every)


@dataclass
class EpochRecord:
    epoch: int
    mean_l1_loss: float
    lr: float
    val_psnr_db: float | None
    wall_seconds: float

    def row(self) -> list[str]:
        val = "" if self.val_psnr_db is None else f"{self.val_psnr_db:.6f}"
        return [
            str(self.epoch),
            f"{self.mean_l1_loss:.8f}",
            f"{self.lr:.6e}",
            val,
            f"{self.wall_seconds:.3f}",
        ]


class TrainLog:
    """Per-epoch CSV log, rewritten in full on every append."""

    def __init__(self, path: Path | None, records: Sequence[EpochRecord] = ()) -> None:
        self.path = path
        self.records = list(records)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as stream:
            writer = csv.writer(stream)
            writer.writerow(LOG_COLUMNS)
            writer.writerows(r.row() for r in self.records)


@dataclass
class TrainResult:
    model: Model
    log: TrainLog
    best: dict[str, Any] | None = None
    checkpoints: list[Path] = field(default_factory=list)


def model_upscaler(model: Model, mean_rgb: Sequence[float]) -> Callable[[Image], Image]:
    """Whole-image inference in 0..255 units, without graph recording."""

    def upscale(lr: Image) -> Image:
        with no_grad():
            sr = forward(model, Tensor(normalize(lr.data, mean_rgb)[np.newaxis]))
        return Image(denormalize(sr.values[0], mean_rgb))

    return upscale


def evaluate_model(
    model: Model,
    dataset: Dataset,
    mean_rgb: Sequence[float],
    metric: MetricConfig | None = None,
) -> Evaluation:
    channel_mode = metric.channel_mode if metric is not None else "y"
    shave = metric.shave_for(dataset.scale) if metric is not None else None
    return evaluate_upscaler(
        model_upscaler(model, mean_rgb), dataset, channel_mode, shave
    )


def _check_compatible(model: Model, dataset: Dataset, config: TrainConfig) -> None:
    if dataset.scale != model.config.scale:
        raise DatasetError(
            f"dataset scale x{dataset.scale} does not match model scale "
            f"x{model.config.scale}"
        )
    if dataset.channels != model.config.in_channels:
        raise DatasetError(
            f"dataset has {dataset.channels} channels, model expects "
            f"{model.config.in_channels}"
        )
    if config.patch_hr % dataset.scale:
        raise DatasetError(
            f"patch size {config.patch_hr} is not divisible by x{dataset.scale}"
        )


@dataclass
class _Resume:
    start_epoch: int = 0
    records: list[EpochRecord] = field(default_factory=list)
    best: dict[str, Any] | None = None


def _restore(
    path: Path, model: Model, optimizer: Adam, sampler: PatchSampler
) -> _Resume:
    checkpoint = load_checkpoint(path)
    if checkpoint.model.config != model.config:
        raise CheckpointError(
            f"{path} was trained with {checkpoint.model.config}, not {model.config}"
        )
    metadata = checkpoint.metadata
    try:
        model.load_state_dict(checkpoint.model.state_dict())
        optimizer.state = AdamState.from_tensors(checkpoint.extra, metadata["adam_t"])
        sampler.state = metadata["sampler_state"]
        records = [EpochRecord(**record) for record in metadata["log"]]
        start_epoch = int(metadata["epoch"])
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"{path} has no usable resume state: {exc}") from exc
    logger.info("Resuming after epoch %d from %s", start_epoch, path)
    return _Resume(start_epoch, records, metadata.get("best"))


def _train_epoch(
    model: Model, optimizer: Adam, sampler: PatchSampler, iters: int, lr: float
) -> float:
    total = 0.0
    for step in range(iters):
        lr_batch, hr_batch = sampler.next_batch()
        loss = l1_loss(forward(model, Tensor(lr_batch)), Tensor(hr_batch))
        value = loss.item()
        if not math.isfinite(value):
            raise TrainingError(f"loss became {value} at step {step}")
        loss.backward()
        optimizer.step(lr)
        optimizer.zero_grad()
        total += value
        logger.debug("step %d loss %.6f", step, value)
    return total / iters


def train(  # noqa: PLR0913
    model: Model,
    dataset: Dataset,
    config: TrainConfig,
    mean_rgb: Sequence[float],
    val_dataset: Dataset | None = None,
    metric: MetricConfig | None = None,
    out_dir: Path | None = None,
) -> TrainResult:
    """Trains `model` in place with L1 loss and Adam.

    With `out_dir`, writes `train_log.csv`, a checkpoint per validation
    (`checkpoints/epoch_XXXX.mlrn`) and `best.json`.
    """
    _check_compatible(model, dataset, config)
    optimizer = Adam(model.parameters(), config.beta1, config.beta2, config.eps)
    sampler = PatchSampler(
        dataset, config.patch_hr, config.batch_size, mean_rgb, config.seed
    )
    resume = _Resume()
    if config.resume_from is not None:
        resume = _restore(config.resume_from, model, optimizer, sampler)

    log = TrainLog(out_dir / "train_log.csv" if out_dir else None, resume.records)
    result = TrainResult(model=model, log=log, best=resume.best)
    for epoch in range(resume.start_epoch, config.epochs):
        started = time.perf_counter()
        lr = lr_schedule(epoch, config)
        mean_loss = _train_epoch(model, optimizer, sampler, config.iters_per_epoch, lr)

        val_psnr = None
        number = epoch + 1
        if val_dataset is not None and (
            number % config.eval_every == 0 or number == config.epochs
        ):
            evaluation = evaluate_model(model, val_dataset, mean_rgb, metric)
            val_psnr = evaluation.average.psnr_db

        record = EpochRecord(
            number, mean_loss, lr, val_psnr, time.perf_counter() - started
        )
        log.append(record)
        logger.info(
            "epoch %d: loss %.4f lr %.2e val PSNR %s",
            number,
            mean_loss,
            lr,
            "-" if val_psnr is None else f"{val_psnr:.2f}",
        )
        if out_dir is not None and (val_psnr is not None or number == config.epochs):
            _write_checkpoint(out_dir, result, optimizer, sampler, mean_rgb, config)
    return result


def _write_checkpoint(  # noqa: PLR0913
    out_dir: Path,
    result: TrainResult,
    optimizer: Adam,
    sampler: PatchSampler,
    mean_rgb: Sequence[float],
    config: TrainConfig,
) -> None:
    record = result.log.records[-1]
    path = out_dir / "checkpoints" / f"epoch_{record.epoch:04d}.mlrn"
    best = result.best
    val_psnr = record.val_psnr_db
    if val_psnr is not None and (best is None or val_psnr > best["val_psnr_db"]):
        best = {
            "checkpoint": path.name,
            "epoch": record.epoch,
            "val_psnr_db": val_psnr,
        }
    metadata = {
        "epoch": record.epoch,
        "adam_t": optimizer.state.t,
        "sampler_state": sampler.state,
        "mean_rgb": list(mean_rgb),
        "train_config": config.model_dump(mode="json"),
        "log": [asdict(r) for r in result.log.records],
        "best": best,
    }
    save_checkpoint(path, result.model, optimizer.state.tensors(), metadata)
    result.checkpoints.append(path)
    if best is not result.best:
        result.best = best
        write_json(out_dir / BEST_RECORD_NAME, best)
