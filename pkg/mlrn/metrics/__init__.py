from mlrn.metrics.quality import ChannelMode, gaussian_window, psnr, rgb_to_y, ssim
from mlrn.metrics.report import (
    AVERAGE_ID,
    CSV_COLUMNS,
    Evaluation,
    MetricReport,
    average_reports,
    bicubic_baseline,
    evaluate_dir,
    evaluate_image,
    evaluate_upscaler,
    write_metrics_csv,
)

__all__ = [
    "AVERAGE_ID",
    "CSV_COLUMNS",
    "ChannelMode",
    "Evaluation",
    "MetricReport",
    "average_reports",
    "bicubic_baseline",
    "evaluate_dir",
    "evaluate_image",
    "evaluate_upscaler",
    "gaussian_window",
    "psnr",
    "rgb_to_y",
    "ssim",
    "write_metrics_csv",
]
