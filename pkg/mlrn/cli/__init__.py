from mlrn.cli.main import build_parser, main
from mlrn.cli.session import RunSession

__all__ = ["RunSession", "build_parser", "main"]
