"""Runtime settings read from the environment.

Environment Variables:
    DOWNUP_MAX_ENUM_LEAVES: largest n for which 𝕋_[n] may be enumerated (default: 9)
    DOWNUP_MAX_KERNEL_ENTRIES: bound on |X| times the largest row support (default: 10**8)
    DOWNUP_LOG_LEVEL: logging level used by the command line (default: WARNING)
    DOWNUP_WORKERS: process workers for Monte Carlo replicas (default: 1)
"""

import logging
import os
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from .constants import (
    DEFAULT_LOG_LEVEL,
    DEFAULT_MAX_ENUM_LEAVES,
    DEFAULT_MAX_KERNEL_ENTRIES,
    DEFAULT_WORKERS,
    MAX_LABEL,
)
from .exceptions import SettingsConfigError

logger = logging.getLogger(__name__)

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseModel):
    """Validated snapshot of the environment-driven settings."""

    model_config = ConfigDict(frozen=True)

    max_enum_leaves: int = Field(default=DEFAULT_MAX_ENUM_LEAVES, ge=1, le=MAX_LABEL)
    max_kernel_entries: int = Field(default=DEFAULT_MAX_KERNEL_ENTRIES, ge=1)
    log_level: str = DEFAULT_LOG_LEVEL
    workers: int = Field(default=DEFAULT_WORKERS, ge=1)


def _positive_int(var: str, default: int) -> int:
    raw = os.getenv(var)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise SettingsConfigError(var, raw) from None
    if value < 1:
        raise SettingsConfigError(var, raw)
    return value


def get_settings() -> Settings:
    """Read settings from the environment.

    Settings are read on every call so tests and long-lived processes see
    environment changes.

    Returns:
        A frozen Settings instance

    Raises:
        SettingsConfigError: If a variable is not a positive integer or an
            unknown log level
    """
    max_enum = _positive_int("DOWNUP_MAX_ENUM_LEAVES", DEFAULT_MAX_ENUM_LEAVES)
    if max_enum > MAX_LABEL:
        raise SettingsConfigError("DOWNUP_MAX_ENUM_LEAVES", str(max_enum))

    level = os.getenv("DOWNUP_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()
    if level not in _LOG_LEVELS:
        raise SettingsConfigError("DOWNUP_LOG_LEVEL", level)

    return Settings(
        max_enum_leaves=max_enum,
        max_kernel_entries=_positive_int("DOWNUP_MAX_KERNEL_ENTRIES", DEFAULT_MAX_KERNEL_ENTRIES),
        log_level=level,
        workers=_positive_int("DOWNUP_WORKERS", DEFAULT_WORKERS),
    )


def get_settings_info() -> dict[str, Any]:
    """Get the current settings as a plain dictionary for display."""
    settings = get_settings()
    info = settings.model_dump()
    logger.debug("Effective settings: %s", info)
    return info


def configure_logging(level: str | None = None) -> None:
    """Configure root logging for command-line use.

    Args:
        level: Explicit level name; falls back to DOWNUP_LOG_LEVEL
    """
    chosen = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, chosen, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
