"""Command line entry point, `mlrn <command> ...`.

Exit codes: 0 on success, 1 when a quality check fails or training diverges,
2 for usage, configuration and input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import datetime
from functools import partial
from pathlib import Path
from typing import TYPE_CHECKING, Any

from pydantic import ValidationError

from mlrn.cli import commands
from mlrn.cli.session import LOG_FORMAT, RunSession
from mlrn.config import MetricConfig, RuntimeConfig
from mlrn.create_config import ConfigError, load_run_config
from mlrn.image import BOUNDARIES, DatasetError, ImageIOError
from mlrn.model import DEFAULT_THRESHOLD
from mlrn.tensor import CheckpointError, ShapeError
from mlrn.training import TrainingError

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

USAGE_ERRORS = (
    ConfigError,
    ImageIOError,
    DatasetError,
    CheckpointError,
    ShapeError,
    ValidationError,
)


def _default_out_dir() -> Path:
    return Path("runs") / datetime.now().strftime("%Y%m%d-%H%M%S")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--log-level", default="INFO")
    common.add_argument("--threads", type=int, default=None)

    run_options = argparse.ArgumentParser(add_help=False)
    run_options.add_argument("--config", type=Path, default=None)
    run_options.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted override, e.g. model.g=8 (repeatable)",
    )

    parser = argparse.ArgumentParser(
        prog="mlrn", description="Multi-level residual super-resolution toolkit."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    degrade = sub.add_parser(
        "degrade", parents=[common], help="write bicubic LR images"
    )
    degrade.add_argument("hr_dir", type=Path)
    degrade.add_argument("out_dir", type=Path)
    degrade.add_argument("--scales", type=int, nargs="+", default=[2, 3, 4])
    degrade.add_argument("--boundary", choices=BOUNDARIES, default="replicate")

    sub.add_parser("train", parents=[common, run_options], help="train one model")
    sub.add_parser(
        "ablate", parents=[common, run_options], help="train all four variants"
    )

    evaluate = sub.add_parser("eval", parents=[common], help="PSNR/SSIM evaluation")
    evaluate.add_argument("--checkpoint", type=Path, default=None)
    evaluate.add_argument("--baseline", choices=("bicubic",), default=None)
    evaluate.add_argument("--dataset", type=Path, default=None)
    evaluate.add_argument("--ref-dir", type=Path, default=None)
    evaluate.add_argument("--test-dir", type=Path, default=None)
    evaluate.add_argument("--scale", type=int, choices=(2, 3, 4), default=None)
    evaluate.add_argument("--mode", choices=("y", "rgb"), default="y")
    evaluate.add_argument("--shave", type=int, default=None)
    evaluate.add_argument("--boundary", choices=BOUNDARIES, default="replicate")

    infer = sub.add_parser("infer", parents=[common], help="upscale one image")
    infer.add_argument("checkpoint", type=Path)
    infer.add_argument("input", type=Path)
    infer.add_argument("output", type=Path)

    gradcheck = sub.add_parser(
        "gradcheck", parents=[common], help="finite-difference gradient check"
    )
    gradcheck.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    gradcheck.add_argument("--seed", type=int, default=0)
    return parser


def _eval_request(args: argparse.Namespace) -> commands.EvalRequest:
    return commands.EvalRequest(
        checkpoint=args.checkpoint,
        baseline=args.baseline,
        dataset=args.dataset,
        ref_dir=args.ref_dir,
        test_dir=args.test_dir,
        scale=args.scale,
        metric=MetricConfig(
            channel_mode=args.mode, shave=args.shave, boundary=args.boundary
        ),
    )


def _dispatch(args: argparse.Namespace, out_dir: Path, threads: int | None) -> int:
    """Validates the invocation, then runs it inside a `RunSession`.

    Nothing is written to `out_dir` when validation fails.
    """
    config: dict[str, Any] | None = None
    if args.command == "degrade":
        job = commands.plan_degrade(
            args.hr_dir, args.out_dir, args.scales, args.boundary
        )
    elif args.command in ("train", "ablate"):
        run = load_run_config(args.config, args.overrides)
        job = commands.plan_training(args.command, run, out_dir, threads)
        config = run.model_dump(mode="json")
    elif args.command == "eval":
        job = commands.plan_eval(out_dir, _eval_request(args), threads)
    elif args.command == "infer":
        job = commands.plan_infer(args.checkpoint, args.input, args.output)
    else:
        job = partial(commands.cmd_gradcheck, args.threshold, args.seed)
    with RunSession(out_dir, args.command, config):
        return job()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format=LOG_FORMAT)

    out_dir = args.out if args.out is not None else _default_out_dir()
    threads = args.threads
    try:
        if threads is None:
            threads = RuntimeConfig().threads
        return _dispatch(args, out_dir, threads)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
