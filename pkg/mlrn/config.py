from pathlib import Path
from typing import Literal

from confz import BaseConfig, EnvSource
from pydantic import BaseModel, ConfigDict, Field, model_validator

try:
    from typing import Self  # type: ignore
except ImportError:
    from typing_extensions import Self

VariantName = Literal["N_BASE", "N_GFF", "N_RSC", "N_GFF_RSC"]


class MlrnConfig(BaseModel):
    """Architecture hyperparameters. Defaults are the full-size network."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    g: int = Field(default=32, ge=1)
    n_blocks: int = Field(default=8, ge=1)
    scale: Literal[2, 3, 4] = 2
    use_gff: bool = True
    use_rsc: bool = True
    in_channels: int = Field(default=3, ge=1)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    batch_size: int = Field(default=16, ge=1)
    patch_hr: int = Field(default=192, ge=1)
    lr0: float = Field(default=1e-4, ge=0.0)
    halve_every: int = Field(default=200, ge=1)
    iters_per_epoch: int = Field(default=1000, ge=1)
    epochs: int = Field(default=1000, ge=1)
    beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    seed: int = Field(default=0, ge=0)
    init_seed: int = Field(default=0, ge=0)
    eval_every: int = Field(default=1, ge=1)
    val_count: int = Field(default=10, ge=0)
    resume_from: Path | None = None


class DataConfig(BaseModel):
    """Training data. `hr_dir` is the only setting without a default."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    hr_dir: Path
    lr_dir: Path | None = None
    val_hr_dir: Path | None = None
    mean_rgb: tuple[float, ...] | None = None


class MetricConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    channel_mode: Literal["y", "rgb"] = "y"
    shave: int | None = Field(default=None, ge=0)
    """Border to exclude; `None` means the scale factor."""
    boundary: Literal["replicate", "symmetric", "antisymmetric"] = "replicate"

    def shave_for(self, scale: int) -> int:
        return scale if self.shave is None else self.shave


class RunConfig(BaseConfig):  # type: ignore
    """Everything one `train` or `ablate` run depends on."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    model: MlrnConfig = MlrnConfig()
    train: TrainConfig = TrainConfig()
    data: DataConfig
    metric: MetricConfig = MetricConfig()

    @model_validator(mode="after")
    def check_patch_matches_scale(self) -> Self:
        if self.train.patch_hr % self.model.scale != 0:
            raise ValueError(
                f"train.patch_hr={self.train.patch_hr} is not divisible by "
                f"model.scale={self.model.scale}"
            )
        return self


class RuntimeConfig(BaseConfig):  # type: ignore
    threads: int | None = Field(default=None, ge=1)
    """Worker-pool cap for image decoding; `None` lets the pool decide."""

    CONFIG_SOURCES = EnvSource(prefix="MLRN_", allow_all=True)
