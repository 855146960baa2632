"""Utility functions for the slising command line: argument parsing, records and output."""

import json
import math
import sys
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
import pandas as pd

from config import get_logger
from slising.errors import InputError
from slising.fixtures import load_fixture
from slising.graph import EmbeddedGraph, build_rectangle, load_graph

logger = get_logger(__name__)

T = TypeVar("T")

SIGNIFICANT_DIGITS = 15


def round_sig(value: Any) -> Any:
    """Round floats (recursively) to 15 significant digits for stable output."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, complex):
        return {"real": round_sig(value.real), "imag": round_sig(value.imag)}
    if isinstance(value, np.generic):
        return round_sig(value.item())
    if isinstance(value, dict):
        return {str(k): round_sig(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [round_sig(v) for v in value]
    return value


@dataclass
class Record:
    """One computed value as emitted by the commands."""

    observable: str
    method: str
    graph: str
    beta: float | None
    value: float
    error_bound: float | None = None
    runtime_ms: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return round_sig(asdict(self))


def timed(fn: Callable[[], T], timing: bool = True) -> tuple[T, float | None]:
    """Run ``fn`` and return its result with the elapsed milliseconds (None without timing)."""
    start = time.perf_counter()
    result = fn()
    elapsed = (time.perf_counter() - start) * 1000
    return result, round(elapsed, 3) if timing else None


def parse_pair(text: str) -> tuple[int, int]:
    """Parse ``"i,j"`` into lattice coordinates."""
    try:
        i, j = (int(part) for part in text.split(","))
    except ValueError:
        raise InputError(f"Expected a lattice point 'i,j', got {text!r}") from None
    return i, j


def parse_int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"Expected comma-separated integers, got {text!r}") from None
    if not values:
        raise InputError("Expected at least one integer")
    return values


def parse_beta_grid(text: str) -> list[float]:
    """
    Parse ``"start:step:stop"`` (inclusive) or a comma-separated list of β values.

    Raises:
        InputError: On malformed input or a nonpositive β
    """
    try:
        if ":" in text:
            start, step, stop = (float(part) for part in text.split(":"))
            if step <= 0:
                raise InputError(f"Grid step must be positive, got {step}")
            grid = np.round(np.arange(start, stop + step / 2, step), 12).tolist()
        else:
            grid = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"Malformed β grid {text!r}") from None
    if not grid or min(grid) <= 0:
        raise InputError(f"β values must be positive, got {text!r}")
    return grid


def parse_rectangle(text: str) -> tuple[int, int]:
    """Parse ``"WxH"``."""
    try:
        width, height = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise InputError(f"Expected a rectangle 'WxH', got {text!r}") from None
    return width, height


def resolve_graph(
    graph_path: str | None, rectangle: str | None, fixture: str | None
) -> EmbeddedGraph:
    """Graph from exactly one of a JSON file, a builtin rectangle or a bundled fixture."""
    chosen = [option for option in (graph_path, rectangle, fixture) if option]
    if len(chosen) != 1:
        raise InputError("Give exactly one of --graph, --rectangle or --fixture")
    if graph_path:
        return load_graph(graph_path)
    if rectangle:
        return build_rectangle(*parse_rectangle(rectangle))
    return load_fixture(fixture)


def write_json(payload: Any, out: str | None) -> None:
    text = json.dumps(round_sig(payload), sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")
    logger.info(f"Wrote {out}")


def write_table(rows: list[dict[str, Any]], out: str) -> pd.DataFrame:
    """Write rows as CSV with 15 significant digits."""
    frame = pd.DataFrame(rows)
    frame.to_csv(out, index=False, float_format="%.15g")
    logger.info(f"Wrote {len(frame)} rows to {out}")
    return frame


def emit(payload: dict[str, Any], rows: list[dict[str, Any]], out: str | None) -> None:
    """JSON payload to stdout or a ``.json`` file, or the flat rows to a ``.csv`` file."""
    if out is not None and out.lower().endswith(".csv"):
        write_table(rows, out)
    elif out is None or out.lower().endswith(".json"):
        write_json(payload, out)
    else:
        raise InputError(f"Output file must end in .json or .csv, got {out!r}")
