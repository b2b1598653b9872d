"""Sieve configuration loaded from environment variables."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv


@dataclass(frozen=True)
class SieveConfig:
    """Immutable tunables for both factorization pipelines."""

    safety_margin: int = 5
    max_retries: int = 5
    min_half_width: int = 100
    max_half_width: int = 65_536
    quantum_max_half_width: int = 256
    min_smoothness_bound: int = 30
    max_smoothness_bound: int = 200_000
    trial_division_limit: int = 1_000_000
    workers: int = 1
    block_size: int = 4096
    trace_term_cap: int = 100_000
    log_level: str = "WARNING"
    log_file: str | None = None


_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}

logger = logging.getLogger(__name__)


def _parse_int_env(name: str, default: str) -> int:
    """Parse an integer environment variable with a clear error on bad values."""
    raw = os.environ.get(name, default)
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"Environment variable {name} must be an integer, got {raw!r}") from exc


def load_config() -> SieveConfig:
    """Load sieve config from environment variables.

    Reads a ``.env`` file if present, then builds a :class:`SieveConfig` from:

    - ``QSIEVE_SAFETY_MARGIN`` (default ``5``): relations collected beyond ``|fb| + 1``
    - ``QSIEVE_MAX_RETRIES`` (default ``5``): B/M escalations before giving up
    - ``QSIEVE_MIN_HALF_WIDTH`` (default ``100``)
    - ``QSIEVE_MAX_HALF_WIDTH`` (default ``65536``): classical interval cap
    - ``QSIEVE_QUANTUM_MAX_HALF_WIDTH`` (default ``256``): simulated interval cap
    - ``QSIEVE_MIN_SMOOTHNESS_BOUND`` (default ``30``)
    - ``QSIEVE_MAX_SMOOTHNESS_BOUND`` (default ``200000``)
    - ``QSIEVE_TRIAL_DIVISION_LIMIT`` (default ``1000000``): largest √n certified prime
    - ``QSIEVE_WORKERS`` (default ``1``): relation-collection threads
    - ``QSIEVE_BLOCK_SIZE`` (default ``4096``)
    - ``QSIEVE_TRACE_TERM_CAP`` (default ``100000``)
    - ``QSIEVE_LOG_LEVEL`` (default ``"WARNING"``)
    - ``QSIEVE_LOG_FILE`` (default ``None``, no rotating log file)
    """
    load_dotenv(Path(__file__).resolve().parent.parent / ".env")

    log_level = os.environ.get("QSIEVE_LOG_LEVEL", "WARNING").upper()
    if log_level not in _LOG_LEVELS:
        raise ValueError(
            f"Environment variable QSIEVE_LOG_LEVEL must be one of "
            f"{sorted(_LOG_LEVELS)}, got {log_level!r}"
        )
    log_file = os.environ.get("QSIEVE_LOG_FILE")

    cfg = SieveConfig(
        safety_margin=_parse_int_env("QSIEVE_SAFETY_MARGIN", "5"),
        max_retries=_parse_int_env("QSIEVE_MAX_RETRIES", "5"),
        min_half_width=_parse_int_env("QSIEVE_MIN_HALF_WIDTH", "100"),
        max_half_width=_parse_int_env("QSIEVE_MAX_HALF_WIDTH", "65536"),
        quantum_max_half_width=_parse_int_env("QSIEVE_QUANTUM_MAX_HALF_WIDTH", "256"),
        min_smoothness_bound=_parse_int_env("QSIEVE_MIN_SMOOTHNESS_BOUND", "30"),
        max_smoothness_bound=_parse_int_env("QSIEVE_MAX_SMOOTHNESS_BOUND", "200000"),
        trial_division_limit=_parse_int_env("QSIEVE_TRIAL_DIVISION_LIMIT", "1000000"),
        workers=_parse_int_env("QSIEVE_WORKERS", "1"),
        block_size=_parse_int_env("QSIEVE_BLOCK_SIZE", "4096"),
        trace_term_cap=_parse_int_env("QSIEVE_TRACE_TERM_CAP", "100000"),
        log_level=log_level,
        log_file=log_file if log_file else None,
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: SieveConfig) -> None:
    """Reject configurations no pipeline can run with."""
    if cfg.safety_margin < 0:
        raise ValueError(f"safety_margin must be >= 0, got {cfg.safety_margin}")
    if cfg.max_retries < 0:
        raise ValueError(f"max_retries must be >= 0, got {cfg.max_retries}")
    if cfg.min_half_width < 1:
        raise ValueError(f"min_half_width must be >= 1, got {cfg.min_half_width}")
    for name in ("max_half_width", "quantum_max_half_width"):
        value = getattr(cfg, name)
        if value < cfg.min_half_width:
            raise ValueError(f"{name} ({value}) must be >= min_half_width ({cfg.min_half_width})")
    if cfg.min_smoothness_bound < 3:
        raise ValueError(f"min_smoothness_bound must be >= 3, got {cfg.min_smoothness_bound}")
    if cfg.max_smoothness_bound < cfg.min_smoothness_bound:
        raise ValueError("max_smoothness_bound must be >= min_smoothness_bound")
    if cfg.workers < 1:
        raise ValueError(f"workers must be >= 1, got {cfg.workers}")
    if cfg.block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {cfg.block_size}")
    if cfg.trace_term_cap < 1:
        raise ValueError(f"trace_term_cap must be >= 1, got {cfg.trace_term_cap}")
    if cfg.workers > 1:
        logger.debug("Relation collection will use %d worker threads", cfg.workers)
