"""Plane-embedded graphs with exact coordinates, crossings and even subgraphs.

Coordinates are integer numerators over a power-of-two denominator shared by the
whole graph, so lattice points and face centres are exact and every geometric test
reduces to integer orientation predicates.
"""

import json
from bisect import bisect_left, bisect_right
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, NamedTuple

import networkx as nx
import numpy as np

from config import get_logger, get_settings

from .errors import CapExceededError, EmptyDualError, InputError, InvalidGraphError

logger = get_logger(__name__)

DEFAULT_DENOMINATOR = 2

Weight = float | complex


class EdgeKind(str, Enum):
    """Representative edges count towards loop length; additional edges do not."""

    REPRESENTATIVE = "representative"
    ADDITIONAL = "additional"


class Coordinate(NamedTuple):
    """Point stored as integer numerators; tuple order is lexicographic, x first."""

    x: int
    y: int

    def shifted(self, dx: int, dy: int) -> "Coordinate":
        return Coordinate(self.x + dx, self.y + dy)


class Edge(NamedTuple):
    u: int
    v: int
    kind: EdgeKind = EdgeKind.REPRESENTATIVE


@dataclass(frozen=True)
class Rectangle:
    """Grid metadata for graphs built by :func:`build_rectangle`."""

    width: int
    height: int
    origin: Coordinate


def coordinate(x: Any, y: Any, denominator: int = DEFAULT_DENOMINATOR) -> Coordinate:
    """
    Convert real coordinates to exact numerators.

    Args:
        x: Real x coordinate (int, Fraction, float or decimal string)
        y: Real y coordinate
        denominator: Power-of-two denominator of the target graph

    Returns:
        Coordinate holding ``x * denominator`` and ``y * denominator``

    Raises:
        InputError: If a value is not exactly representable over the denominator
    """
    numerators = []
    for value in (x, y):
        scaled = Fraction(value) * denominator
        if scaled.denominator != 1:
            raise InputError(f"{value} is not a multiple of 1/{denominator}")
        numerators.append(int(scaled))
    return Coordinate(*numerators)


def orientation(a: Coordinate, b: Coordinate, c: Coordinate) -> int:
    """Sign of the cross product (b - a) x (c - a)."""
    cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    return (cross > 0) - (cross < 0)


def segments_cross(p1: Coordinate, q1: Coordinate, p2: Coordinate, q2: Coordinate) -> bool:
    """True iff the two segments meet in a single point interior to both."""
    o1 = orientation(p1, q1, p2)
    o2 = orientation(p1, q1, q2)
    o3 = orientation(p2, q2, p1)
    o4 = orientation(p2, q2, q1)
    return 0 not in (o1, o2, o3, o4) and o1 != o2 and o3 != o4


def _in_segment_interior(a: Coordinate, b: Coordinate, p: Coordinate) -> bool:
    if p in (a, b) or orientation(a, b, p) != 0:
        return False
    return min(a.x, b.x) <= p.x <= max(a.x, b.x) and min(a.y, b.y) <= p.y <= max(a.y, b.y)


def _iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class EmbeddedGraph:
    """Finite graph drawn with straight segments, additional edges forming a forest."""

    def __init__(
        self,
        coordinates: Sequence[Coordinate],
        edges: Iterable[tuple[int, int] | tuple[int, int, EdgeKind]],
        denominator: int = DEFAULT_DENOMINATOR,
        rectangle: Rectangle | None = None,
    ):
        """
        Validate the embedding and compute the crossing registry.

        Args:
            coordinates: Numerator coordinates, indexed by vertex id
            edges: Pairs ``(u, v)`` or triples ``(u, v, kind)``
            denominator: Positive power of two shared by all coordinates
            rectangle: Grid metadata when the graph is a lattice rectangle

        Raises:
            InvalidGraphError: On duplicate vertices, self-loops, multiple edges, a vertex
                inside an edge segment, or a cycle of additional edges
        """
        if denominator < 1 or denominator & (denominator - 1):
            raise InvalidGraphError(f"Denominator must be a power of two, got {denominator}")
        self.denominator = denominator
        self.coordinates: tuple[Coordinate, ...] = tuple(Coordinate(*c) for c in coordinates)
        self.rectangle = rectangle

        self._index = {c: v for v, c in enumerate(self.coordinates)}
        if len(self._index) != len(self.coordinates):
            raise InvalidGraphError("Two vertices share a coordinate")

        normalized: list[Edge] = []
        self._edge_ids: dict[tuple[int, int], int] = {}
        n = len(self.coordinates)
        for raw in edges:
            u, v = int(raw[0]), int(raw[1])
            kind = EdgeKind(raw[2]) if len(raw) > 2 else EdgeKind.REPRESENTATIVE
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidGraphError(f"Edge ({u}, {v}) references an unknown vertex")
            if u == v:
                raise InvalidGraphError(f"Self-loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key in self._edge_ids:
                raise InvalidGraphError(f"Multiple edges between {key[0]} and {key[1]}")
            self._edge_ids[key] = len(normalized)
            normalized.append(Edge(key[0], key[1], kind))
        self.edges: tuple[Edge, ...] = tuple(normalized)

        self._check_no_vertex_on_edge()
        self._check_additional_forest()

        # Lexicographic rank of each vertex; all loop canonical forms compare ranks
        order = sorted(range(n), key=self.coordinates.__getitem__)
        rank = [0] * n
        for position, v in enumerate(order):
            rank[v] = position
        self.rank: tuple[int, ...] = tuple(rank)

        adjacency: list[list[int]] = [[] for _ in range(n)]
        for edge in self.edges:
            adjacency[edge.u].append(edge.v)
            adjacency[edge.v].append(edge.u)
        self._adjacency = tuple(tuple(sorted(nbrs, key=rank.__getitem__)) for nbrs in adjacency)

        self.crossings: frozenset[tuple[int, int]] = self._compute_crossings()
        self._crossing_masks = tuple((1 << e) | (1 << f) for e, f in self.crossings)
        logger.debug(
            f"Built graph with {n} vertices, {len(self.edges)} edges, "
            f"{len(self.crossings)} crossings"
        )

    def _check_no_vertex_on_edge(self) -> None:
        by_x = sorted(range(self.n_vertices), key=self.coordinates.__getitem__)
        xs = [self.coordinates[w].x for w in by_x]
        for e, edge in enumerate(self.edges):
            a, b = self.coordinates[edge.u], self.coordinates[edge.v]
            lo, hi = bisect_left(xs, min(a.x, b.x)), bisect_right(xs, max(a.x, b.x))
            for w in by_x[lo:hi]:
                if _in_segment_interior(a, b, self.coordinates[w]):
                    raise InvalidGraphError(f"Vertex {w} lies inside edge {e} ({edge.u}, {edge.v})")

    def _check_additional_forest(self) -> None:
        if not self.coordinates:
            return
        additional = nx.Graph()
        additional.add_nodes_from(range(self.n_vertices))
        additional.add_edges_from(
            (edge.u, edge.v) for edge in self.edges if edge.kind is EdgeKind.ADDITIONAL
        )
        if not nx.is_forest(additional):
            raise InvalidGraphError("Additional edges contain a cycle")

    def _compute_crossings(self) -> frozenset[tuple[int, int]]:
        # Sweep over edges sorted by their left end; only x-overlapping pairs are tested
        spans = []
        for e, edge in enumerate(self.edges):
            a, b = self.coordinates[edge.u], self.coordinates[edge.v]
            spans.append((min(a.x, b.x), max(a.x, b.x), e, a, b))
        spans.sort()
        found = set()
        for i, (_, x_hi, e, a, b) in enumerate(spans):
            for j in range(i + 1, len(spans)):
                x_lo2, _, f, c, d = spans[j]
                if x_lo2 > x_hi:
                    break
                if segments_cross(a, b, c, d):
                    found.add((min(e, f), max(e, f)))
        return frozenset(found)

    # Basic queries

    @property
    def n_vertices(self) -> int:
        return len(self.coordinates)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Neighbours of ``v`` in lexicographic coordinate order."""
        return self._adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_ids

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self._edge_ids[(min(u, v), max(u, v))]
        except KeyError:
            raise InputError(f"No edge between vertices {u} and {v}") from None

    def is_additional(self, e: int) -> bool:
        return self.edges[e].kind is EdgeKind.ADDITIONAL

    @property
    def representative_edges(self) -> tuple[int, ...]:
        return tuple(e for e in range(self.n_edges) if not self.is_additional(e))

    @property
    def additional_edges(self) -> tuple[int, ...]:
        return tuple(e for e in range(self.n_edges) if self.is_additional(e))

    def directed_representative_edges(self) -> list[tuple[int, int]]:
        """Both orientations of every representative edge, in edge-id order."""
        directed = []
        for e in self.representative_edges:
            edge = self.edges[e]
            directed.extend([(edge.u, edge.v), (edge.v, edge.u)])
        return directed

    def crosses(self, e: int, f: int) -> bool:
        return (min(e, f), max(e, f)) in self.crossings

    def crossing_count(self, f: Iterable[int]) -> int:
        """Number of unordered crossing pairs inside the edge subset ``f``."""
        return crossing_count(self, f)

    def vertex_at(self, x: Any, y: Any) -> int:
        """Vertex id at real coordinates ``(x, y)``."""
        key = coordinate(x, y, self.denominator)
        try:
            return self._index[key]
        except KeyError:
            raise InputError(f"No vertex at ({x}, {y})") from None

    def position(self, v: int) -> tuple[Fraction, Fraction]:
        """Real coordinates of vertex ``v``."""
        c = self.coordinates[v]
        return Fraction(c.x, self.denominator), Fraction(c.y, self.denominator)

    def boundary(self) -> frozenset[int]:
        """Vertices on the outer border of a rectangle."""
        if self.rectangle is None:
            raise InputError("Boundary is only defined for rectangles")
        rect, d = self.rectangle, self.denominator
        x_max = rect.origin.x + (rect.width - 1) * d
        y_max = rect.origin.y + (rect.height - 1) * d
        return frozenset(
            v
            for v, c in enumerate(self.coordinates)
            if c.x in (rect.origin.x, x_max) or c.y in (rect.origin.y, y_max)
        )

    @property
    def cycle_space_dimension(self) -> int:
        return self.n_edges - self.n_vertices + nx.number_connected_components(self.to_networkx())

    def to_networkx(self) -> nx.Graph:
        """Undirected networkx view; edges carry their id and kind."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_vertices))
        for e, edge in enumerate(self.edges):
            graph.add_edge(edge.u, edge.v, id=e, kind=edge.kind.value)
        return graph

    def describe(self) -> str:
        if self.rectangle is not None:
            return f"rectangle {self.rectangle.width}x{self.rectangle.height}"
        return f"graph |V|={self.n_vertices} |E|={self.n_edges}"

    def __repr__(self) -> str:
        return f"EmbeddedGraph({self.describe()}, crossings={len(self.crossings)})"

    # Derived graphs

    def translated(self, dx: int, dy: int) -> "EmbeddedGraph":
        """Copy shifted by ``(dx, dy)`` numerators."""
        rectangle = None
        if self.rectangle is not None:
            rectangle = Rectangle(
                self.rectangle.width, self.rectangle.height, self.rectangle.origin.shifted(dx, dy)
            )
        return EmbeddedGraph(
            [c.shifted(dx, dy) for c in self.coordinates],
            [(edge.u, edge.v, edge.kind) for edge in self.edges],
            self.denominator,
            rectangle,
        )

    def disjoint_union(self, other: "EmbeddedGraph") -> "EmbeddedGraph":
        """Union with ``other`` translated to the right of this graph's bounding box."""
        if other.denominator != self.denominator:
            raise InputError("Cannot join graphs with different denominators")
        if not self.coordinates or not other.coordinates:
            shift = 0
        else:
            shift = (
                max(c.x for c in self.coordinates)
                - min(c.x for c in other.coordinates)
                + self.denominator
            )
        moved = other.translated(shift, 0)
        offset = self.n_vertices
        edges = [(edge.u, edge.v, edge.kind) for edge in self.edges]
        edges += [(edge.u + offset, edge.v + offset, edge.kind) for edge in moved.edges]
        return EmbeddedGraph(self.coordinates + moved.coordinates, edges, self.denominator)

    def with_additional(
        self,
        coordinates: Sequence[Coordinate],
        edges: Iterable[tuple[int, int]],
    ) -> "EmbeddedGraph":
        """Augment with new vertices and additional edges (ids continue after ours)."""
        all_edges: list[tuple[int, int, EdgeKind]] = [
            (edge.u, edge.v, edge.kind) for edge in self.edges
        ]
        all_edges += [(u, v, EdgeKind.ADDITIONAL) for u, v in edges]
        return EmbeddedGraph(
            self.coordinates + tuple(coordinates), all_edges, self.denominator, self.rectangle
        )

    # Serialization

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "denominator": self.denominator,
            "vertices": [{"id": v, "x": c.x, "y": c.y} for v, c in enumerate(self.coordinates)],
            "edges": [{"u": e.u, "v": e.v, "kind": e.kind.value} for e in self.edges],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping[str, Any]) -> "EmbeddedGraph":
        """
        Build a graph from the JSON layout.

        Vertex ids may be arbitrary integers; they are renumbered in the order given.

        Raises:
            InputError: On missing fields or unknown vertex ids
        """
        try:
            denominator = int(data.get("denominator", DEFAULT_DENOMINATOR))
            ids = {int(item["id"]): i for i, item in enumerate(data["vertices"])}
            coords = [Coordinate(int(item["x"]), int(item["y"])) for item in data["vertices"]]
            edges = [
                (ids[int(item["u"])], ids[int(item["v"])], EdgeKind(item.get("kind", "representative")))
                for item in data.get("edges", [])
            ]
        except (KeyError, TypeError, ValueError) as e:
            logger.error(f"Malformed graph JSON: {e}")
            raise InputError(f"Malformed graph JSON: {e}") from e
        return cls(coords, edges, denominator)


class EdgeWeights:
    """Read-only weight vector indexed by edge id."""

    def __init__(self, graph: EmbeddedGraph, values: Sequence[Weight] | np.ndarray):
        array = np.array(values)
        if array.shape != (graph.n_edges,):
            raise InputError(f"Expected {graph.n_edges} edge weights, got shape {array.shape}")
        if not np.iscomplexobj(array):
            array = array.astype(float)
        array.setflags(write=False)
        self.graph = graph
        self.values = array

    @classmethod
    def constant(cls, graph: EmbeddedGraph, value: Weight) -> "EdgeWeights":
        return cls(graph, np.full(graph.n_edges, value))

    @classmethod
    def from_pairs(
        cls,
        graph: EmbeddedGraph,
        default: Weight,
        overrides: Mapping[tuple[int, int], Weight] | None = None,
    ) -> "EdgeWeights":
        values = np.full(graph.n_edges, default, dtype=complex if isinstance(default, complex) else float)
        if overrides and any(isinstance(w, complex) for w in overrides.values()):
            values = values.astype(complex)
        for (u, v), w in (overrides or {}).items():
            values[graph.edge_id(u, v)] = w
        return cls(graph, values)

    @classmethod
    def from_json_dict(cls, graph: EmbeddedGraph, data: Mapping[str, Any]) -> "EdgeWeights":
        """Parse ``{"default": w, "overrides": [{"u", "v", "w"}]}``."""
        try:
            overrides = {
                (int(item["u"]), int(item["v"])): float(item["w"])
                for item in data.get("overrides", [])
            }
            return cls.from_pairs(graph, float(data.get("default", 0.0)), overrides)
        except (KeyError, TypeError, ValueError) as e:
            logger.error(f"Malformed weights JSON: {e}")
            raise InputError(f"Malformed weights JSON: {e}") from e

    def __getitem__(self, e: int) -> Weight:
        return self.values[e].item()

    def weight(self, u: int, v: int) -> Weight:
        return self[self.graph.edge_id(u, v)]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @property
    def sup_norm(self) -> float:
        """``max |x_e|``, zero for an edgeless graph."""
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def with_values(self, overrides: Mapping[int, Weight]) -> "EdgeWeights":
        """Copy with some edge ids reassigned."""
        dtype = complex if self.is_complex or any(isinstance(w, complex) for w in overrides.values()) else float
        values = self.values.astype(dtype)
        for e, w in overrides.items():
            values[e] = w
        return EdgeWeights(self.graph, values)

    def __repr__(self) -> str:
        return f"EdgeWeights({self.values.tolist()})"


# Builders


def build_rectangle(
    width: int,
    height: int,
    origin: Coordinate | None = None,
    denominator: int = DEFAULT_DENOMINATOR,
) -> EmbeddedGraph:
    """
    Build the grid graph on ``width x height`` lattice points.

    Vertex ``i * height + j`` sits at ``origin + (i, j)``; with the x-first order
    vertex ids coincide with lexicographic ranks.

    Raises:
        InputError: If width or height is below 1
    """
    origin = origin or Coordinate(0, 0)
    if width < 1 or height < 1:
        raise InputError(f"Rectangle dimensions must be positive, got {width}x{height}")
    d = denominator
    coords = [origin.shifted(i * d, j * d) for i in range(width) for j in range(height)]
    edges = []
    for i in range(width):
        for j in range(height):
            v = i * height + j
            if i + 1 < width:
                edges.append((v, v + height))
            if j + 1 < height:
                edges.append((v, v + 1))
    return EmbeddedGraph(coords, edges, denominator, Rectangle(width, height, origin))


def build_weak_dual(g: EmbeddedGraph) -> EmbeddedGraph:
    """
    Rectangle of face centres of a lattice rectangle.

    Raises:
        InputError: If ``g`` is not a rectangle or its denominator cannot express half-integers
        EmptyDualError: If width or height is 1
    """
    if g.rectangle is None:
        raise InputError("Weak dual requires a rectangle")
    if g.denominator % 2:
        raise InputError("Weak dual needs an even denominator for half-integer points")
    rect = g.rectangle
    if rect.width < 2 or rect.height < 2:
        raise EmptyDualError(f"Rectangle {rect.width}x{rect.height} has no bounded faces")
    half = g.denominator // 2
    return build_rectangle(
        rect.width - 1, rect.height - 1, rect.origin.shifted(half, half), g.denominator
    )


def dual_crossing_map(primal: EmbeddedGraph, dual: EmbeddedGraph) -> dict[int, int]:
    """Map each dual edge id to the id of the unique primal edge it crosses."""
    mapping = {}
    for f, dual_edge in enumerate(dual.edges):
        a, b = dual.coordinates[dual_edge.u], dual.coordinates[dual_edge.v]
        crossed = [
            e
            for e, edge in enumerate(primal.edges)
            if segments_cross(a, b, primal.coordinates[edge.u], primal.coordinates[edge.v])
        ]
        if len(crossed) != 1:
            raise InvalidGraphError(f"Dual edge {f} crosses {len(crossed)} primal edges")
        mapping[f] = crossed[0]
    return mapping


def load_graph(path: str | Path) -> EmbeddedGraph:
    """Read a graph JSON file."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Cannot read graph file {path}: {e}")
        raise InputError(f"Cannot read graph file {path}: {e}") from e
    return EmbeddedGraph.from_json_dict(data)


def load_weights(path: str | Path, graph: EmbeddedGraph) -> EdgeWeights:
    """Read a weights JSON file for ``graph``."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Cannot read weights file {path}: {e}")
        raise InputError(f"Cannot read weights file {path}: {e}") from e
    return EdgeWeights.from_json_dict(graph, data)


# Even subgraphs


def crossing_count(g: EmbeddedGraph, f: Iterable[int]) -> int:
    """
    Count crossing pairs inside an edge subset.

    Raises:
        InputError: If ``f`` holds an unknown edge id
    """
    edges = set(f)
    unknown = [e for e in edges if not (isinstance(e, int) and 0 <= e < g.n_edges)]
    if unknown:
        raise InputError(f"Unknown edge ids: {sorted(unknown, key=str)}")
    return sum(1 for e, h in g.crossings if e in edges and h in edges)


def _cycle_basis_masks(g: EmbeddedGraph) -> list[int]:
    masks = []
    for cycle in nx.cycle_basis(g.to_networkx()):
        mask = 0
        for a, b in zip(cycle, cycle[1:] + cycle[:1], strict=True):
            mask |= 1 << g.edge_id(a, b)
        masks.append(mask)
    return masks


def _even_masks(g: EmbeddedGraph, method: str = "auto", cap: int | None = None) -> Iterator[int]:
    cap = get_settings().max_edges if cap is None else cap
    dim = g.cycle_space_dimension
    if method == "auto":
        method = "basis" if dim < g.n_edges - 8 or g.n_edges > cap else "subsets"
    if method == "basis":
        if dim > cap:
            raise CapExceededError("Cycle-space dimension", dim, cap, "SLISING_MAX_EDGES")
        basis = _cycle_basis_masks(g)
        logger.debug(f"Enumerating 2^{len(basis)} even subsets from a cycle basis")
        mask = 0
        yield mask
        for i in range(1, 1 << len(basis)):
            mask ^= basis[(i & -i).bit_length() - 1]
            yield mask
    elif method == "subsets":
        if g.n_edges > cap:
            raise CapExceededError("Edge count", g.n_edges, cap, "SLISING_MAX_EDGES")
        incidence = [0] * g.n_vertices
        for e, edge in enumerate(g.edges):
            incidence[edge.u] |= 1 << e
            incidence[edge.v] |= 1 << e
        logger.debug(f"Scanning all 2^{g.n_edges} edge subsets")
        for mask in range(1 << g.n_edges):
            if all((mask & inc).bit_count() % 2 == 0 for inc in incidence):
                yield mask
    else:
        raise InputError(f"Unknown enumeration method {method!r}")


def enumerate_even_subsets(
    g: EmbeddedGraph, method: str = "auto", cap: int | None = None
) -> Iterator[frozenset[int]]:
    """
    Yield every even edge subset, the empty set first.

    Args:
        g: Graph to enumerate
        method: ``"basis"`` (cycle-space combinations), ``"subsets"`` (scan of all subsets)
            or ``"auto"``
        cap: Size cap, defaults to ``SLISING_MAX_EDGES``

    Raises:
        CapExceededError: If the enumeration is larger than the cap
    """
    for mask in _even_masks(g, method, cap):
        yield frozenset(_iter_bits(mask))


def generating_function_bruteforce(
    g: EmbeddedGraph, x: EdgeWeights, cap: int | None = None, method: str = "auto"
) -> Weight:
    """Z(x) = sum over even F of (-1)^C_F times the product of x_e over F."""
    values = x.values.tolist()
    total: Weight = 0.0
    for mask in _even_masks(g, method, cap):
        term: Weight = 1.0
        for e in _iter_bits(mask):
            term *= values[e]
        if sum(1 for pair in g._crossing_masks if mask & pair == pair) % 2:
            term = -term
        total += term
    return total


def even_subset_census(g: EmbeddedGraph, cap: int | None = None) -> Counter[int]:
    """Signed count of even subsets by size: the coefficients of Z for constant weights."""
    census: Counter[int] = Counter()
    for mask in _even_masks(g, "auto", cap):
        sign = -1 if sum(1 for p in g._crossing_masks if mask & p == p) % 2 else 1
        census[mask.bit_count()] += sign
    return census
