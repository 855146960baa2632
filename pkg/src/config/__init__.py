"""Configuration module for slising.

This module contains logging setup, environment-driven limits and bundled data files.
"""

from .logger import LoggerConfig, get_logger
from .settings import Settings, get_settings

__all__ = ["LoggerConfig", "Settings", "get_logger", "get_settings"]
