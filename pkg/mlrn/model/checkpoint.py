"""Model checkpoints: a tensor container plus a JSON sidecar.

`<stem>.mlrn` holds the parameters (and optionally extra named tensors such
as optimizer moments); `<stem>.json` holds the architecture keys, the init
seed and free-form metadata used for resuming.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from pydantic import ValidationError

from mlrn.config import MlrnConfig
from mlrn.json_utils import read_json, write_json
from mlrn.model.network import Model
from mlrn.tensor import CheckpointError, ShapeError, Tensor, load_tensors, save_tensors

if TYPE_CHECKING:
    from collections.abc import Mapping
    from pathlib import Path

    from mlrn.tensor.tensor import FloatArray

logger = logging.getLogger(__name__)

EXTRA_PREFIX = "extra/"


@dataclass
class Checkpoint:
    model: Model
    extra: dict[str, FloatArray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def save_checkpoint(
    path: Path,
    model: Model,
    extra: Mapping[str, FloatArray] | None = None,
    metadata: Mapping[str, Any] | None = None,
) -> None:
    tensors = model.state_dict()
    for name, values in (extra or {}).items():
        tensors[EXTRA_PREFIX + name] = values
    path.parent.mkdir(parents=True, exist_ok=True)
    save_tensors(path, tensors)

    sidecar: dict[str, Any] = model.config.model_dump()
    sidecar["init_seed"] = model.init_seed
    if metadata:
        sidecar["metadata"] = dict(metadata)
    write_json(sidecar_path(path), sidecar)
    logger.info("Saved checkpoint %s", path)


def load_checkpoint(path: Path) -> Checkpoint:
    """Restores a model; raises `CheckpointError` on any mismatch."""
    try:
        sidecar = read_json(sidecar_path(path))
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read sidecar of {path}: {exc}") from exc
    if not isinstance(sidecar, dict):
        raise CheckpointError(f"sidecar of {path} is not a JSON object")

    metadata = sidecar.pop("metadata", {})
    init_seed = sidecar.pop("init_seed", 0)
    try:
        config = MlrnConfig(**sidecar)
    except ValidationError as exc:
        raise CheckpointError(f"invalid model config in {path}: {exc}") from exc

    tensors = load_tensors(path)
    params = {
        name: Tensor(values, requires_grad=True)
        for name, values in tensors.items()
        if not name.startswith(EXTRA_PREFIX)
    }
    try:
        model = Model.from_tensors(config, params, init_seed=init_seed)
    except ShapeError as exc:
        raise CheckpointError(f"{path} does not match its config: {exc}") from exc
    unused = set(params) - set(model.parameters())
    if unused:
        raise CheckpointError(f"{path} holds unknown tensors {sorted(unused)}")

    extra = {
        name.removeprefix(EXTRA_PREFIX): values
        for name, values in tensors.items()
        if name.startswith(EXTRA_PREFIX)
    }
    logger.debug("Loaded checkpoint %s (%d extra tensors)", path, len(extra))
    return Checkpoint(model=model, extra=extra, metadata=metadata)
