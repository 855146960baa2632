"""Environment-driven limits for the enumeration oracles.

Values are read from the process environment, after loading a ``.env`` file
from the working directory if one exists.
"""

import os
from dataclasses import dataclass
from functools import lru_cache

from dotenv import load_dotenv

from .logger import get_logger

logger = get_logger(__name__)


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default
    if value < 1:
        logger.warning(f"Ignoring non-positive {name}={value}, using {default}")
        return default
    return value


@dataclass(frozen=True)
class Settings:
    """Resource caps shared by the brute-force oracles."""

    max_edges: int = 24
    max_spins: int = 20
    max_config_length: int = 10
    max_config_edges: int = 12
    max_labelled_steps: int = 10

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from SLISING_* environment variables."""
        load_dotenv()
        settings = cls(
            max_edges=_env_int("SLISING_MAX_EDGES", cls.max_edges),
            max_spins=_env_int("SLISING_MAX_SPINS", cls.max_spins),
            max_config_length=_env_int("SLISING_MAX_CONFIG_LENGTH", cls.max_config_length),
            max_config_edges=_env_int("SLISING_MAX_CONFIG_EDGES", cls.max_config_edges),
            max_labelled_steps=_env_int("SLISING_MAX_LABELLED_STEPS", cls.max_labelled_steps),
        )
        logger.debug(f"Loaded settings: {settings}")
        return settings


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the process-wide settings (call ``get_settings.cache_clear()`` to reload)."""
    return Settings.from_env()
