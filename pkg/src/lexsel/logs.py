"""Line-delimited JSON logging on stderr.

Data goes to stdout or files; diagnostics go to stderr as one JSON object
per line so shell pipelines can separate the two without guessing.
"""

from __future__ import annotations

import json
import logging
import sys
import time

_CORE_ATTRS = frozenset(
    logging.LogRecord("", 0, "", 0, "", (), None).__dict__
) | {"message", "asctime"}


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        obj = {
            "ts": round(record.created, 3),
            "level": record.levelname.lower(),
            "logger": record.name,
            "event": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _CORE_ATTRS and not key.startswith("_"):
                obj[key] = value
        if record.exc_info:
            obj["exc"] = self.formatException(record.exc_info)
        return json.dumps(obj, ensure_ascii=False, default=str)


def setup_logging(level: str = "info") -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter())
    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


def emit(event: str, **fields) -> None:
    """One structured line straight to stderr, bypassing logger config.
    Used for machine-readable announcements like the bound server port."""
    obj = {"ts": round(time.time(), 3), "event": event, **fields}
    print(json.dumps(obj, ensure_ascii=False, default=str), file=sys.stderr, flush=True)
