from __future__ import annotations

import json
import logging
from typing import TYPE_CHECKING, Any

from confz import DataSource, FileSource
from confz.exceptions import ConfigException as ConfZException
from pydantic import ValidationError

from mlrn.config import RunConfig

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


def json_loads_or_return_input(input_string: str) -> Any:
    """
    Try to parse a string as JSON, if it fails return the original string.
    """
    try:
        return json.loads(input_string)
    except (TypeError, json.JSONDecodeError):
        return input_string


def parse_overrides(overrides: Sequence[str]) -> dict[str, Any]:
    """Turns `["model.g=8", "train.seed=3"]` into a nested dictionary.

    Values are read as JSON where possible ("8" -> 8, "true" -> True) and kept
    as strings otherwise, so paths need no quoting.
    """
    nested: dict[str, Any] = {}
    for item in overrides:
        key, sep, raw_value = item.partition("=")
        if not sep or not key:
            raise _config_error(f"override {item!r} is not of the form key=value")
        *parents, leaf = key.strip().split(".")
        target = nested
        for part in parents:
            child = target.setdefault(part, {})
            if not isinstance(child, dict):
                raise _config_error(f"override {item!r} conflicts with {part!r}")
            target = child
        target[leaf] = json_loads_or_return_input(raw_value.strip())
    return nested


def load_run_config(
    config_path: Path | None, overrides: Sequence[str] = ()
) -> RunConfig:
    """Loads a `RunConfig` from an optional JSON file plus dotted overrides.

    Overrides win over the file. Unknown keys and invalid values raise
    `ConfigError`.
    """
    sources: list[FileSource | DataSource] = []
    if config_path is not None:
        if not config_path.is_file():
            raise _config_error(f"config file {config_path} does not exist")
        sources.append(FileSource(file=config_path))
    sources.append(DataSource(data=parse_overrides(overrides)))

    try:
        config = RunConfig(config_sources=sources)
    except (ConfZException, ValidationError) as exc:
        raise _config_error(f"invalid run configuration: {exc}") from exc
    logger.debug("Loaded run configuration %s", config)
    return config


def _config_error(error_msg: str) -> ConfigError:
    logger.error(error_msg)
    return ConfigError(error_msg)
