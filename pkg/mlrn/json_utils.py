from __future__ import annotations

import json
import math
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from pathlib import Path

_NON_FINITE = {"Infinity": math.inf, "-Infinity": -math.inf}


def _quote_non_finite(data: Any) -> Any:
    if isinstance(data, float) and math.isinf(data):
        return "Infinity" if data > 0 else "-Infinity"
    if isinstance(data, dict):
        return {key: _quote_non_finite(value) for key, value in data.items()}
    if isinstance(data, list | tuple):
        return [_quote_non_finite(element) for element in data]
    return data


def _unquote_non_finite(data: Any) -> Any:
    if isinstance(data, str):
        return _NON_FINITE.get(data, data)
    if isinstance(data, dict):
        return {key: _unquote_non_finite(value) for key, value in data.items()}
    if isinstance(data, list):
        return [_unquote_non_finite(element) for element in data]
    return data


def json_dumps(data: Any) -> str:
    """
    Serialize to strict JSON. 'Infinity' is an unallowed token in JSON, thus
    infinite floats (the identical-image PSNR sentinel) are written as strings.
    """
    return json.dumps(
        _quote_non_finite(data), indent=2, sort_keys=True, allow_nan=False
    )


def json_loads(json_string: str) -> Any:
    """Inverse of `json_dumps`: "Infinity" / "-Infinity" strings become floats."""
    return _unquote_non_finite(json.loads(json_string))


def write_json(path: Path, data: Any) -> None:
    path.write_text(json_dumps(data) + "\n", encoding="utf-8")


def read_json(path: Path) -> Any:
    return json_loads(path.read_text(encoding="utf-8"))
