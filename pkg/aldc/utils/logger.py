"""
Structured JSON Logger

One JSON object per record on stderr, so experiment logs can be grepped or
loaded next to the report files. stdout stays free for the CLI summary.
"""

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict

_PACKAGE_LOGGER = "aldc"


class JSONFormatter(logging.Formatter):
    """
    Formatter that outputs logs as JSON.

    Fields: timestamp, level, message, logger, module, function, line,
    plus the exception trace and any ``extra_fields`` dict passed via
    ``extra={"extra_fields": {...}}``.
    """

    def format(self, record: logging.LogRecord) -> str:
        log_data: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "message": record.getMessage(),
            "logger": record.name,
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        extra_fields = getattr(record, "extra_fields", None)
        if isinstance(extra_fields, dict):
            log_data.update(extra_fields)

        return json.dumps(log_data)


def configure_logging(level: str = "INFO", fmt: str = "json") -> logging.Logger:
    """
    Attach a single stderr handler to the package logger.

    Args:
        level: Logging level name
        fmt: "json" for JSONFormatter, "text" for a bracketed plain format

    Returns:
        The configured package logger
    """
    logger = logging.getLogger(_PACKAGE_LOGGER)
    logger.setLevel(level)

    # Remove existing handlers to avoid duplicates on repeated CLI calls
    logger.handlers = []

    handler = logging.StreamHandler(sys.stderr)
    if fmt == "json":
        handler.setFormatter(JSONFormatter())
    else:
        handler.setFormatter(logging.Formatter("[%(levelname)s] [%(name)s] %(message)s"))
    logger.addHandler(handler)
    logger.propagate = False

    return logger
