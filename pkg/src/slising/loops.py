"""Canonical loops on embedded graphs and their signed weights.

A loop is a closed non-backtracking walk stored in its canonical representation:
the lexicographically smallest of its rotations and of the rotations of its
reversal, comparing vertex coordinates x first.
"""

import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cmp_to_key
from math import gcd
from pathlib import Path

import pandas as pd

from config import get_logger

from .errors import GeometryError, InputError, InvalidPathError
from .graph import Coordinate, EdgeWeights, EmbeddedGraph, Weight

logger = get_logger(__name__)

NORM_CONSTANT = math.sqrt(2) + 1
WINDING_TOLERANCE = 1e-9

# The eight lattice directions, counterclockwise from east
_COMPASS = {
    (1, 0): 0,
    (1, 1): 1,
    (0, 1): 2,
    (-1, 1): 3,
    (-1, 0): 4,
    (-1, -1): 5,
    (0, -1): 6,
    (1, -1): 7,
}


@dataclass(frozen=True)
class Loop:
    """Canonical closed non-backtracking walk.

    ``edge_ids[i]`` is the edge of the step from ``vertices[i]`` to ``vertices[i + 1]``
    (cyclically); ``winding_turns`` is the winding angle divided by 2π.
    """

    vertices: tuple[int, ...]
    edge_ids: tuple[int, ...]
    multiplicity: int
    winding_turns: int
    length: int

    @property
    def steps(self) -> int:
        return len(self.vertices)

    @property
    def winding(self) -> float:
        return 2 * math.pi * self.winding_turns

    @property
    def sign(self) -> int:
        """-exp(i * winding / 2), i.e. +1 for an odd number of turns."""
        return 1 if self.winding_turns % 2 else -1

    @property
    def is_edge_disjoint(self) -> bool:
        return len(set(self.edge_ids)) == len(self.edge_ids)


LoopPredicate = Callable[[Loop], bool]


def _direction(a: Coordinate, b: Coordinate) -> tuple[int, int]:
    dx, dy = b.x - a.x, b.y - a.y
    g = gcd(dx, dy)
    if g == 0:
        raise GeometryError(f"Zero-length step at {a}")
    return dx // g, dy // g


def turning_angle(u: Coordinate, v: Coordinate, w: Coordinate) -> float:
    """
    Signed angle from the vector v - u to w - v, counterclockwise positive.

    Lattice directions use an exact table; other directions fall back to atan2.

    Raises:
        GeometryError: For a zero-length step or a reversal (angle ±π)
    """
    d1, d2 = _direction(u, v), _direction(v, w)
    if d1 == (-d2[0], -d2[1]):
        raise GeometryError(f"Backtracking turn at {v}")
    if d1 in _COMPASS and d2 in _COMPASS:
        eighths = (_COMPASS[d2] - _COMPASS[d1]) % 8
        if eighths > 4:
            eighths -= 8
        return eighths * math.pi / 4
    a = (v.x - u.x, v.y - u.y)
    b = (w.x - v.x, w.y - v.y)
    return math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])


def counterclockwise_neighbors(
    graph: EmbeddedGraph, v: int, neighbors: Iterable[int]
) -> list[int]:
    """
    Sort ``neighbors`` of ``v`` counterclockwise starting from east.

    Lattice directions are ranked through the compass table, other directions by
    exact cross products.
    """
    centre = graph.coordinates[v]
    heading = {w: _direction(centre, graph.coordinates[w]) for w in neighbors}
    if all(d in _COMPASS for d in heading.values()):
        return sorted(heading, key=lambda w: _COMPASS[heading[w]])

    def compare(a: int, b: int) -> int:
        if heading[a] == heading[b]:
            return 0
        return -1 if _ccw_before((1, 0), heading[a], heading[b]) else 1

    return sorted(heading, key=cmp_to_key(compare))


def winding_turns(graph: EmbeddedGraph, vertices: Sequence[int]) -> int:
    """
    Sum of turning angles around a closed path, in units of 2π.

    Raises:
        GeometryError: If the sum is not within tolerance of a multiple of 2π
    """
    coords = graph.coordinates
    n = len(vertices)
    alpha = math.fsum(
        turning_angle(coords[vertices[i - 1]], coords[vertices[i]], coords[vertices[(i + 1) % n]])
        for i in range(n)
    )
    turns = round(alpha / (2 * math.pi))
    if abs(alpha - 2 * math.pi * turns) > WINDING_TOLERANCE:
        raise GeometryError(f"Winding angle {alpha} is not a multiple of 2π")
    return turns


def canonical_sequence(graph: EmbeddedGraph, path: Sequence[int]) -> tuple[int, ...]:
    """Lexicographic minimum over all rotations of ``path`` and of its reversal."""
    rank = graph.rank
    forward = tuple(path)
    n = len(forward)
    best: tuple[int, ...] = forward
    best_key = tuple(rank[v] for v in forward)
    for seq in (forward, forward[::-1]):
        for s in range(n):
            candidate = seq[s:] + seq[:s]
            key = tuple(rank[v] for v in candidate)
            if key < best_key:
                best, best_key = candidate, key
    return best


def _smallest_period(seq: tuple[int, ...]) -> int:
    n = len(seq)
    for p in range(1, n + 1):
        if n % p == 0 and seq[p:] + seq[:p] == seq:
            return p
    return n


def _make_loop(graph: EmbeddedGraph, seq: tuple[int, ...]) -> Loop:
    n = len(seq)
    edge_ids = tuple(graph.edge_id(seq[i], seq[(i + 1) % n]) for i in range(n))
    return Loop(
        vertices=seq,
        edge_ids=edge_ids,
        multiplicity=n // _smallest_period(seq),
        winding_turns=winding_turns(graph, seq),
        length=sum(1 for e in edge_ids if not graph.is_additional(e)),
    )


def validate_closed_path(graph: EmbeddedGraph, path: Sequence[int]) -> None:
    """
    Check that ``path`` is a closed non-backtracking walk on ``graph``.

    Raises:
        InvalidPathError: On a short path, a non-edge step or a backtracking step
    """
    n = len(path)
    if n < 3:
        raise InvalidPathError(f"A closed non-backtracking path needs at least 3 steps, got {n}")
    for i in range(n):
        if not graph.has_edge(path[i], path[(i + 1) % n]):
            raise InvalidPathError(f"Step {path[i]} -> {path[(i + 1) % n]} is not an edge")
        if path[(i + 2) % n] == path[i]:
            raise InvalidPathError(f"Path backtracks at position {(i + 1) % n}")


def canonicalize(graph: EmbeddedGraph, path: Sequence[int]) -> Loop:
    """
    Canonical loop of a closed non-backtracking path.

    Args:
        graph: Graph the path lives on
        path: Vertex ids ``(v_0, ..., v_{n-1})``; the closing step back to ``v_0`` is implied

    Returns:
        The Loop with multiplicity, winding, sign and length filled in

    Raises:
        InvalidPathError: If the path is not closed and non-backtracking
    """
    validate_closed_path(graph, path)
    return _make_loop(graph, canonical_sequence(graph, path))


def loop_sign(loop: Loop) -> int:
    """Sign of a loop, -exp(iα/2) snapped to ±1."""
    return loop.sign


def loop_weight(loop: Loop, x: EdgeWeights) -> Weight:
    """
    Signed weight ``sign / m`` times the product of all step weights.

    Raises:
        InputError: If ``x`` does not cover every step edge
    """
    if loop.edge_ids and max(loop.edge_ids) >= len(x.values):
        raise InputError("Weight vector does not cover every edge of the loop")
    product: Weight = 1.0
    for e in loop.edge_ids:
        product *= x[e]
    return loop.sign * product / loop.multiplicity


# Predicates


def anchored_at(v: int) -> LoopPredicate:
    """Loops whose lexicographically smallest vertex is ``v``."""
    return lambda loop: loop.vertices[0] == v


def odd_on_edges(edges: Iterable[int]) -> LoopPredicate:
    """Loops taking an odd number of steps on the marked edges."""
    marked = frozenset(edges)
    return lambda loop: sum(1 for e in loop.edge_ids if e in marked) % 2 == 1


def visits_edge_once(edge: int) -> LoopPredicate:
    return lambda loop: loop.edge_ids.count(edge) == 1


def edge_disjoint(loop: Loop) -> bool:
    return loop.is_edge_disjoint


# Enumeration


def enumerate_loops(
    graph: EmbeddedGraph,
    max_steps: int,
    predicate: LoopPredicate | None = None,
    anchors: Iterable[int] | None = None,
    max_length: int | None = None,
) -> Iterator[Loop]:
    """
    Yield every canonical loop with at most ``max_steps`` steps exactly once.

    The search runs a depth-first walk from each anchor over vertices that are not
    lexicographically smaller than it, so each loop is found from its minimal vertex.

    Args:
        graph: Graph to search
        max_steps: Largest step count
        predicate: Optional filter applied to each canonical loop
        anchors: Restrict to loops whose minimal vertex is one of these
        max_length: Optional bound on the number of representative steps
    """
    if max_steps < 3:
        return
    rank = graph.rank
    moves = [
        [(w, 0 if graph.is_additional(graph.edge_id(v, w)) else 1) for w in graph.neighbors(v)]
        for v in range(graph.n_vertices)
    ]
    length_cap = max_steps if max_length is None else max_length
    starts = range(graph.n_vertices) if anchors is None else set(anchors)

    def walk(path: list[int], length: int) -> Iterator[Loop]:
        anchor = path[0]
        v = path[-1]
        prev = path[-2] if len(path) > 1 else -1
        for w, step_length in moves[v]:
            if w == prev or rank[w] < rank[anchor]:
                continue
            new_length = length + step_length
            if new_length > length_cap:
                continue
            # Closing step: no backtrack through the anchor, forward direction not larger
            if w == anchor and len(path) >= 3 and path[1] != v and rank[path[1]] <= rank[v]:
                seq = tuple(path)
                if canonical_sequence(graph, seq) == seq:
                    loop = _make_loop(graph, seq)
                    if predicate is None or predicate(loop):
                        yield loop
            if len(path) < max_steps:
                path.append(w)
                yield from walk(path, new_length)
                path.pop()

    found = 0
    for anchor in sorted(starts, key=rank.__getitem__):
        for loop in walk([anchor], 0):
            found += 1
            yield loop
    logger.debug(f"Enumerated {found} loops with at most {max_steps} steps on {graph.describe()}")


@dataclass
class LoopSeriesAccumulator:
    """Per-length sums of loop weights up to ``r_max`` with a bound on the omitted tail."""

    r_max: int
    sums: dict[int, Weight] = field(default_factory=dict)
    counts: dict[int, int] = field(default_factory=dict)
    tail_bound: float = math.inf

    def add(self, loop: Loop, weight: Weight) -> None:
        r = loop.length
        self.sums[r] = self.sums.get(r, 0.0) + weight
        self.counts[r] = self.counts.get(r, 0) + 1

    def __getitem__(self, r: int) -> Weight:
        return self.sums.get(r, 0.0)

    def total(self) -> Weight:
        values = list(self.sums.values())
        if any(isinstance(s, complex) for s in values):
            return sum(values)
        return math.fsum(values)

    def series(self) -> list[Weight]:
        """``[f_1, ..., f_{r_max}]``."""
        return [self[r] for r in range(1, self.r_max + 1)]

    def merge(self, other: "LoopSeriesAccumulator") -> "LoopSeriesAccumulator":
        """Sum of two accumulators over disjoint loop sets."""
        merged = LoopSeriesAccumulator(max(self.r_max, other.r_max), dict(self.sums), dict(self.counts))
        for r, s in other.sums.items():
            merged.sums[r] = merged.sums.get(r, 0.0) + s
            merged.counts[r] = merged.counts.get(r, 0) + other.counts[r]
        merged.tail_bound = self.tail_bound + other.tail_bound
        return merged


def log_series_tail(q: float, r_max: int) -> float:
    """Sum of q^r / r over r > r_max; infinite when q >= 1."""
    if q >= 1:
        return math.inf
    if q <= 0:
        return 0.0
    if q > 0.99:
        head = math.fsum(q**r / r for r in range(1, r_max + 1))
        return max(-math.log1p(-q) - head, 0.0)
    total, r = 0.0, r_max + 1
    term = q**r / r
    while term > 1e-300 and term > 1e-18 * total:
        total += term
        r += 1
        term = q**r / r
    return total


def length_sums(
    graph: EmbeddedGraph,
    x: EdgeWeights,
    r_max: int,
    predicate: LoopPredicate | None = None,
    anchors: Iterable[int] | None = None,
    max_steps: int | None = None,
) -> LoopSeriesAccumulator:
    """
    Accumulate f_r(x) for r <= r_max over the loops passing ``predicate``.

    Args:
        graph: Graph to enumerate on
        x: Edge weights
        r_max: Largest loop length (representative steps)
        predicate: Optional loop filter
        anchors: Restrict to loops whose minimal vertex is one of these
        max_steps: Step bound; defaults to ``r_max`` when there are no additional edges

    Returns:
        Accumulator whose tail bound is the norm bound of rectangles without additional
        edges (2 r^-1 ((√2+1)|x|)^r per vertex or anchor), infinite otherwise
    """
    n_additional = len(graph.additional_edges)
    if max_steps is None:
        max_steps = r_max if n_additional == 0 else r_max * (1 + n_additional) + n_additional
    anchor_list = None if anchors is None else list(anchors)
    accumulator = LoopSeriesAccumulator(r_max)
    for loop in enumerate_loops(graph, max_steps, predicate, anchor_list, max_length=r_max):
        accumulator.add(loop, loop_weight(loop, x))

    if graph.rectangle is not None and n_additional == 0:
        sites = graph.n_vertices if anchor_list is None else len(anchor_list)
        accumulator.tail_bound = 2 * sites * log_series_tail(NORM_CONSTANT * x.sup_norm, r_max)
    logger.debug(
        f"Length sums up to r={r_max}: {sum(accumulator.counts.values())} loops, "
        f"tail bound {accumulator.tail_bound:.3e}"
    )
    return accumulator


# Self-crossings


def _cross(a: tuple[int, int], b: tuple[int, int]) -> int:
    return a[0] * b[1] - a[1] * b[0]


def _ccw_before(a: tuple[int, int], d1: tuple[int, int], d2: tuple[int, int]) -> bool:
    """True iff d1 comes strictly before d2 sweeping counterclockwise from a."""

    def half(d: tuple[int, int]) -> int:
        c = _cross(a, d)
        return 0 if c > 0 or (c == 0 and a[0] * d[0] + a[1] * d[1] > 0) else 1

    h1, h2 = half(d1), half(d2)
    if h1 != h2:
        return h1 < h2
    return _cross(d1, d2) > 0


def _separates(
    center: Coordinate, u: Coordinate, w: Coordinate, x: Coordinate, z: Coordinate
) -> bool:
    """Whether the half-lines from center towards u and w separate x from z."""

    def vec(p: Coordinate) -> tuple[int, int]:
        return p.x - center.x, p.y - center.y

    a, b = vec(u), vec(w)
    inside_x = _ccw_before(a, vec(x), b)
    inside_z = _ccw_before(a, vec(z), b)
    return inside_x != inside_z


def self_crossings(graph: EmbeddedGraph, loop: Loop) -> tuple[int, int]:
    """
    Vertex and edge self-crossing counts of an edge-disjoint loop.

    Raises:
        InputError: If the loop repeats an edge
    """
    if not loop.is_edge_disjoint:
        raise InputError("Self-crossings are defined for edge-disjoint loops only")
    seq, coords, n = loop.vertices, graph.coordinates, loop.steps
    c_edges = sum(
        1
        for i in range(n)
        for j in range(i + 1, n)
        if graph.crosses(loop.edge_ids[i], loop.edge_ids[j])
    )
    c_vertices = 0
    for i in range(n):
        for j in range(i + 1, n):
            if seq[i] != seq[j]:
                continue
            if _separates(
                coords[seq[i]],
                coords[seq[i - 1]],
                coords[seq[(i + 1) % n]],
                coords[seq[j - 1]],
                coords[seq[(j + 1) % n]],
            ):
                c_vertices += 1
    return c_vertices, c_edges


# Census export


def census_frame(graph: EmbeddedGraph, loops: Iterable[Loop]) -> pd.DataFrame:
    """Loops as rows (n, r, m, sign, sequence) in canonical order."""
    rank = graph.rank
    ordered = sorted(loops, key=lambda loop: (loop.steps, [rank[v] for v in loop.vertices]))
    rows = []
    for loop in ordered:
        points = []
        for v in loop.vertices:
            x, y = graph.position(v)
            points.append(f"({x},{y})")
        rows.append(
            {
                "n": loop.steps,
                "r": loop.length,
                "m": loop.multiplicity,
                "sign": loop.sign,
                "sequence": " ".join(points),
            }
        )
    return pd.DataFrame(rows, columns=["n", "r", "m", "sign", "sequence"])


def write_census(graph: EmbeddedGraph, loops: Iterable[Loop], path: str | Path) -> pd.DataFrame:
    """Write the loop census CSV and return the table."""
    frame = census_frame(graph, loops)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} loops to {path}")
    return frame
