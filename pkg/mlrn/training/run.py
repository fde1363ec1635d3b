from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

from mlrn.image import (
    Dataset,
    DatasetSpec,
    cached_dataset_mean,
    load_dataset,
    split_holdout,
)
from mlrn.model import build
from mlrn.training.trainer import TrainResult, train

if TYPE_CHECKING:
    from pathlib import Path

    from mlrn.config import RunConfig

logger = logging.getLogger(__name__)


@dataclass
class PreparedData:
    train: Dataset
    val: Dataset | None
    mean_rgb: tuple[float, ...]


def prepare_data(run: RunConfig, threads: int | None = None) -> PreparedData:
    """Loads the training set, its validation split and the channel mean.

    Without `data.val_hr_dir` the last `train.val_count` images are held out
    and left out of the mean.
    """
    spec = DatasetSpec(
        hr_dir=run.data.hr_dir, scale=run.model.scale, lr_dir=run.data.lr_dir
    )
    dataset = load_dataset(spec, threads, run.metric.boundary)

    val: Dataset | None
    held_out: set[str] = set()
    if run.data.val_hr_dir is not None:
        val_spec = DatasetSpec.from_root(run.data.val_hr_dir, run.model.scale, "val")
        val = load_dataset(val_spec, threads, run.metric.boundary)
        train_set = dataset
    elif run.train.val_count == 0:
        train_set, val = dataset, None
    else:
        train_set, val = split_holdout(dataset, run.train.val_count)
        if val is not train_set:
            held_out = {pair.source_id for pair in val.pairs}

    if run.data.mean_rgb is not None:
        mean_rgb = tuple(run.data.mean_rgb)
    else:
        mean_rgb = cached_dataset_mean(spec, held_out)
    logger.info(
        "Training on %d images, validating on %d, mean %s",
        len(train_set),
        0 if val is None else len(val),
        ", ".join(f"{value:.3f}" for value in mean_rgb),
    )
    return PreparedData(train=train_set, val=val, mean_rgb=mean_rgb)


def run_training(
    run: RunConfig,
    out_dir: Path | None,
    threads: int | None = None,
    data: PreparedData | None = None,
) -> TrainResult:
    """Builds a fresh model from `run.model` and trains it on `run.data`."""
    if data is None:
        data = prepare_data(run, threads)
    model = build(run.model, run.train.init_seed)
    return train(
        model,
        data.train,
        run.train,
        data.mean_rgb,
        val_dataset=data.val,
        metric=run.metric,
        out_dir=out_dir,
    )
