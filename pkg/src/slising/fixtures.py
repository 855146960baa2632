"""Bundled fixture graphs used by the verification suites and the tests."""

import json
from functools import lru_cache
from pathlib import Path
from typing import Any

from config import get_logger

from .errors import InputError
from .graph import EmbeddedGraph, build_rectangle

logger = get_logger(__name__)

FIXTURES_PATH = Path(__file__).parent.parent / "config" / "appdata" / "fixtures.json"


@lru_cache(maxsize=1)
def _raw_fixtures() -> dict[str, Any]:
    try:
        with open(FIXTURES_PATH, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error loading fixtures from {FIXTURES_PATH}: {e}")
        raise


def fixture_names() -> list[str]:
    return list(_raw_fixtures())


def load_fixture(name: str) -> EmbeddedGraph:
    """
    Build a bundled fixture graph.

    Args:
        name: Fixture key, e.g. ``"four_cycle"`` or ``"rectangle_2x3"``

    Raises:
        InputError: If the fixture does not exist
    """
    try:
        entry = _raw_fixtures()[name]
    except KeyError:
        raise InputError(f"Unknown fixture {name!r}; available: {fixture_names()}") from None
    if "rectangle" in entry:
        return build_rectangle(entry["rectangle"]["width"], entry["rectangle"]["height"])
    return EmbeddedGraph.from_json_dict(entry["graph"])


def load_fixtures() -> dict[str, EmbeddedGraph]:
    return {name: load_fixture(name) for name in fixture_names()}
