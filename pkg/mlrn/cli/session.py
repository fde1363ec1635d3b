from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any

try:
    from typing import Self  # type: ignore
except ImportError:
    from typing_extensions import Self

from mlrn.json_utils import write_json

if TYPE_CHECKING:
    from pathlib import Path
    from types import TracebackType

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"


class RunSession:
    """Output directory of one CLI command.

    Implements Python's context manager protocol: on entry the directory is
    created, the effective configuration is echoed to `config.json` and a file
    handler starts copying all log records to `run.log`; on exit the handler is
    detached and closed, even in the case of an error.

    Example:
        ```python
        with RunSession(Path("runs/smoke"), "train", config.model_dump(mode="json")):
            run_training(config, Path("runs/smoke"))
        ```
    """

    def __init__(
        self, out_dir: Path, command: str, config: dict[str, Any] | None = None
    ) -> None:
        self.out_dir = out_dir
        self.command = command
        self._config = config
        self._handler: logging.FileHandler | None = None

    @property
    def config_path(self) -> Path:
        return self.out_dir / "config.json"

    def __enter__(self) -> Self:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._handler = logging.FileHandler(self.out_dir / "run.log", encoding="utf-8")
        self._handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(self._handler)
        if self._config is not None:
            write_json(self.config_path, self._config)
        logger.info("Starting %s in %s", self.command, self.out_dir)
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_value: BaseException | None,
        exc_traceback: TracebackType | None,
    ) -> None:
        if exc_value is not None:
            logger.error("%s failed: %s", self.command, exc_value)
        else:
            logger.info("Finished %s", self.command)
        if self._handler is not None:
            logging.getLogger().removeHandler(self._handler)
            self._handler.close()
            self._handler = None
