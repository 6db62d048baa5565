"""
SecClass - Structured Logging
JSON Lines log records with per-stage timings.

Library modules only call logging.getLogger(__name__); handlers are
installed once by the CLI through configure_logging().

MIT License - SecClass contributors, 2026
"""

import json
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Union

logger = logging.getLogger(__name__)

# Attributes every LogRecord carries; anything else came in through `extra`.
_RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {
    "message", "asctime",
}


class JsonLinesFormatter(logging.Formatter):
    """Format each record as a single JSON object."""

    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            "ts": round(record.created, 6),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith("_"):
                payload[key] = value
        if record.exc_info:
            payload["exc"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str, sort_keys=True)


def configure_logging(
    level: Union[int, str] = logging.INFO,
    log_file: Optional[Path] = None,
    json_lines: bool = True,
) -> None:
    """Install handlers on the package logger (idempotent)."""
    root = logging.getLogger("seclass")
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    formatter: logging.Formatter
    if json_lines:
        formatter = JsonLinesFormatter()
    else:
        formatter = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")

    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(formatter)
    stream.setLevel(level)
    root.addHandler(stream)

    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, mode="w", encoding="utf-8")
        file_handler.setFormatter(JsonLinesFormatter())
        root.addHandler(file_handler)

    root.setLevel(level)
    root.propagate = False


def add_log_file(log_file: Path) -> logging.Handler:
    """Attach an extra JSON Lines file handler; caller removes it."""
    log_file.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_file, mode="w", encoding="utf-8")
    handler.setFormatter(JsonLinesFormatter())
    logging.getLogger("seclass").addHandler(handler)
    return handler


@contextmanager
def stage(name: str, log: Optional[logging.Logger] = None, **fields: Any) -> Iterator[Dict[str, Any]]:
    """
    Time a pipeline stage.

    Yields a dict the caller may fill with result fields; they are
    attached to the stage_end record together with elapsed_ms.
    """
    log = log or logger
    result: Dict[str, Any] = {}
    log.info("stage_start %s", name, extra={"event": "stage_start", "stage": name, **fields})
    start = time.perf_counter()
    try:
        yield result
    finally:
        elapsed_ms = round((time.perf_counter() - start) * 1000, 3)
        log.info(
            "stage_end %s (%.1f ms)", name, elapsed_ms,
            extra={"event": "stage_end", "stage": name, "elapsed_ms": elapsed_ms, **fields, **result},
        )
