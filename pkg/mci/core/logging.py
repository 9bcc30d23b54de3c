import json
import logging
import sys
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, TextIO

import numpy as np

# attributes every LogRecord carries; anything else arrived through `extra=`
_RESERVED_KEYS = frozenset(logging.LogRecord("", 0, "", 0, "", None, None).__dict__) | {"message", "asctime"}


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if isinstance(value, Path):
        return str(value)
    return str(value)


class StructuredFormatter(logging.Formatter):
    """One JSON object per line: timestamp, level, logger, message, event, extra."""

    def formatTime(self, record: logging.LogRecord, datefmt: Optional[str] = None) -> str:
        stamp = datetime.fromtimestamp(record.created, tz=timezone.utc)
        return stamp.strftime(datefmt) if datefmt else stamp.isoformat(timespec="milliseconds")

    def format(self, record: logging.LogRecord) -> str:
        base: Dict[str, Any] = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        extras = {
            key: value
            for key, value in record.__dict__.items()
            if key not in _RESERVED_KEYS and not key.startswith("_")
        }
        event = extras.pop("event", None)
        if event:
            base["event"] = event
        if extras:
            base["extra"] = extras
        if record.exc_info:
            base["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(base, default=_json_default)


def init_logging(level: str = "INFO", stream: Optional[TextIO] = None) -> logging.Handler:
    """Route every record to stderr as JSON; stdout carries command results only."""
    handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
    handler.setFormatter(StructuredFormatter())
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), handlers=[handler], force=True)
    # joblib chatter would interleave with the JSON lines
    logging.getLogger("joblib").setLevel(logging.WARNING)
    return handler


def get_logger(name: Optional[str] = None) -> logging.Logger:
    if not name:
        return logging.getLogger("mci")
    return logging.getLogger(name if name.startswith("mci") else f"mci.{name}")
