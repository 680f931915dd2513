"""
Runtime Settings with Environment Validation

Process-level knobs (logging, sweep parallelism, default output directory)
read from the environment. Experiment parameters live in
ExperimentConfig (aldc.data.models), not here.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv(Path.cwd() / ".env")

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
_LOG_FORMATS = ("json", "text")


class Settings:
    """
    Environment-backed settings.
    Fails fast if a variable is set to an unusable value.
    """

    LOG_LEVEL: str = os.getenv("ALDC_LOG_LEVEL", "INFO").upper()
    LOG_FORMAT: str = os.getenv("ALDC_LOG_FORMAT", "json").lower()
    SWEEP_WORKERS_RAW: str = os.getenv("ALDC_SWEEP_WORKERS", "1")
    OUTPUT_DIR: str = os.getenv("ALDC_OUTPUT_DIR", "results")

    @classmethod
    def sweep_workers(cls) -> int:
        """Thread pool size for sweep points (>= 1)."""
        return int(cls.SWEEP_WORKERS_RAW)

    @classmethod
    def validate(cls) -> None:
        """
        Validate settings at startup.
        Raises RuntimeError listing every unusable variable.
        """
        problems = []

        if cls.LOG_LEVEL not in _LOG_LEVELS:
            problems.append(f"ALDC_LOG_LEVEL={cls.LOG_LEVEL!r} (expected one of {', '.join(_LOG_LEVELS)})")
        if cls.LOG_FORMAT not in _LOG_FORMATS:
            problems.append(f"ALDC_LOG_FORMAT={cls.LOG_FORMAT!r} (expected json or text)")
        try:
            if int(cls.SWEEP_WORKERS_RAW) < 1:
                problems.append("ALDC_SWEEP_WORKERS must be >= 1")
        except ValueError:
            problems.append(f"ALDC_SWEEP_WORKERS={cls.SWEEP_WORKERS_RAW!r} is not an integer")

        if problems:
            raise RuntimeError("invalid settings: " + "; ".join(problems))
