from mlrn.training.adam import Adam, AdamState, adam_step
from mlrn.training.run import PreparedData, prepare_data, run_training
from mlrn.training.trainer import (
    LOG_COLUMNS,
    EpochRecord,
    TrainingError,
    TrainLog,
    TrainResult,
    evaluate_model,
    lr_schedule,
    model_upscaler,
    train,
)

__all__ = [
    "LOG_COLUMNS",
    "Adam",
    "AdamState",
    "EpochRecord",
    "PreparedData",
    "TrainLog",
    "TrainResult",
    "TrainingError",
    "adam_step",
    "evaluate_model",
    "lr_schedule",
    "model_upscaler",
    "prepare_data",
    "run_training",
    "train",
]
