"""Shared fixtures for the slising test suite."""

import pytest

from config import get_settings
from slising.fixtures import load_fixture
from slising.graph import EmbeddedGraph, build_rectangle


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Each test sees settings rebuilt from its own environment."""
    for name in (
        "SLISING_MAX_EDGES",
        "SLISING_MAX_SPINS",
        "SLISING_MAX_CONFIG_LENGTH",
        "SLISING_MAX_CONFIG_EDGES",
        "SLISING_MAX_LABELLED_STEPS",
    ):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def four_cycle() -> EmbeddedGraph:
    return load_fixture("four_cycle")


@pytest.fixture
def crossing_pair() -> EmbeddedGraph:
    return load_fixture("crossing_pair")


@pytest.fixture
def figure_eight() -> EmbeddedGraph:
    return load_fixture("figure_eight")


@pytest.fixture
def square_3x3() -> EmbeddedGraph:
    return build_rectangle(3, 3)
