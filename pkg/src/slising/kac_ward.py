"""Kac-Ward transition matrices, determinants, the torus extension and Onsager's integral."""

import math
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from config import get_logger

from .errors import DomainError, InputError, NumericalConsistencyError
from .graph import Coordinate, EdgeWeights, EmbeddedGraph, build_rectangle
from .loops import NORM_CONSTANT, LoopSeriesAccumulator, turning_angle

logger = get_logger(__name__)

BETA_CRITICAL = math.log1p(math.sqrt(2)) / 2
IMAGINARY_TOLERANCE = 1e-9
TRACE_TOLERANCE = 1e-9

# Compass headings used for torus blocks, in counterclockwise order
HEADINGS = ("E", "N", "W", "S")


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Λ(x) indexed by directed representative edges."""

    graph: EmbeddedGraph
    weights: EdgeWeights
    index: tuple[tuple[int, int], ...]
    matrix: np.ndarray = field(repr=False)
    spectral_radius_bound: float

    @property
    def dimension(self) -> int:
        return len(self.index)

    def position(self, u: int, v: int) -> int:
        """Row/column of the directed edge u -> v."""
        try:
            return self.index.index((u, v))
        except ValueError:
            raise InputError(f"{u} -> {v} is not a directed representative edge") from None

    def scaled(self, factor: float) -> np.ndarray:
        return factor * self.matrix


def _chain_links(
    graph: EmbeddedGraph, u: int, v: int, weights: EdgeWeights
) -> Iterator[tuple[int, int, float, complex]]:
    """
    Walk the additional-edge forest from ``v`` having arrived from ``u``.

    Yields ``(w, previous, accumulated angle, weight product)`` for each vertex ``w``
    reached through at least one additional edge.
    """
    coords = graph.coordinates
    stack = []
    for a in graph.neighbors(v):
        e = graph.edge_id(v, a)
        if graph.is_additional(e):
            stack.append((a, v, turning_angle(coords[u], coords[v], coords[a]), weights[e]))
    while stack:
        w, prev, angle, product = stack.pop()
        yield w, prev, angle, product
        for a in graph.neighbors(w):
            e = graph.edge_id(w, a)
            if a != prev and graph.is_additional(e):
                turn = turning_angle(coords[prev], coords[w], coords[a])
                stack.append((a, w, angle + turn, product * weights[e]))


def build_transition_matrix(graph: EmbeddedGraph, x: EdgeWeights) -> TransitionMatrix:
    """
    Build Λ(x) over directed representative edges.

    Entry (u->v, v->z) is ``x_uv exp(i∠/2)`` for z != u. When v reaches w through a
    chain of additional edges, entry (u->v, w->z) is ``x_uv`` times the chain weights
    times ``exp(i/2 * sum of the turning angles along the way)``.

    Raises:
        InvalidGraphError: Propagated from the graph if additional edges form a cycle
    """
    index = tuple(graph.directed_representative_edges())
    position = {edge: k for k, edge in enumerate(index)}
    coords = graph.coordinates
    rep_neighbors = [
        [z for z in graph.neighbors(v) if not graph.is_additional(graph.edge_id(v, z))]
        for v in range(graph.n_vertices)
    ]

    matrix = np.zeros((len(index), len(index)), dtype=complex)
    for row, (u, v) in enumerate(index):
        x_uv = x.weight(u, v)
        if x_uv == 0:
            continue
        for z in rep_neighbors[v]:
            if z != u:
                angle = turning_angle(coords[u], coords[v], coords[z])
                matrix[row, position[(v, z)]] = x_uv * np.exp(0.5j * angle)
        for w, prev, angle, product in _chain_links(graph, u, v, x):
            for z in rep_neighbors[w]:
                total = angle + turning_angle(coords[prev], coords[w], coords[z])
                matrix[row, position[(w, z)]] += x_uv * product * np.exp(0.5j * total)
    matrix.setflags(write=False)

    if graph.rectangle is not None and not graph.additional_edges:
        bound = NORM_CONSTANT * x.sup_norm
    else:
        bound = operator_norm(matrix)
    logger.debug(f"Built {len(index)}x{len(index)} transition matrix, ρ bound {bound:.6f}")
    return TransitionMatrix(graph, x, index, matrix, bound)


def operator_norm(matrix: np.ndarray) -> float:
    """Largest singular value; zero for an empty matrix."""
    if matrix.size == 0:
        return 0.0
    return float(scipy.linalg.norm(matrix, 2))


def operator_norm_bound(m: TransitionMatrix) -> float:
    """Operator norm ‖Λ(x)‖ computed from a dense SVD."""
    return operator_norm(m.matrix)


def spectral_radius(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(scipy.linalg.eigvals(matrix))))


def certify_spectral_radius(m: TransitionMatrix) -> float:
    """
    Return an upper bound or value for ρ(Λ) that is below 1.

    The cheap norm bound is tried first, then the eigenvalues of Λ.

    Raises:
        DomainError: If ρ(Λ) >= 1
    """
    if m.spectral_radius_bound < 1:
        return m.spectral_radius_bound
    rho = spectral_radius(m.matrix)
    if rho < 1:
        logger.debug(f"Norm bound {m.spectral_radius_bound:.6f} inconclusive, ρ = {rho:.6f}")
        return rho
    logger.error(f"Spectral radius {rho:.6f} is not below 1")
    raise DomainError(f"Spectral radius {rho:.6f} >= 1, determinant formula not certified")


def lu_determinant(a: np.ndarray) -> complex:
    """Determinant from an LU factorization with partial pivoting."""
    if a.size == 0:
        return 1.0 + 0.0j
    lu, piv = scipy.linalg.lu_factor(a)
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    det = complex(np.prod(np.diag(lu)))
    return -det if swaps % 2 else det


def _checked_real(det: complex, label: str) -> float:
    if abs(det.imag) > IMAGINARY_TOLERANCE * max(abs(det), 1e-300) or det.real <= 0:
        logger.error(f"{label} determinant {det} is not real and positive")
        raise NumericalConsistencyError(f"{label} determinant {det} is not real and positive")
    return det.real


def kac_ward_determinant(m: TransitionMatrix) -> complex:
    """det(Id - Λ(x))."""
    return lu_determinant(np.eye(m.dimension) - m.matrix)


def determinant_evaluation(m: TransitionMatrix, certify: bool = True) -> float:
    """
    Z(x) = sqrt(det(Id - Λ(x))).

    Args:
        m: Transition matrix
        certify: Require ρ(Λ) < 1 before evaluating

    Raises:
        DomainError: If ρ(Λ) >= 1 and ``certify`` is set
        NumericalConsistencyError: If the determinant is not real and positive
    """
    if certify:
        certify_spectral_radius(m)
    return math.sqrt(_checked_real(kac_ward_determinant(m), "Kac-Ward"))


@dataclass(frozen=True)
class TraceReport:
    """Per-length comparison of tr Λ^r with -2 r f_r."""

    traces: dict[int, complex]
    expected: dict[int, float]
    residuals: dict[int, float]
    ok: bool

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "residuals": {str(r): v for r, v in self.residuals.items()},
            "max_residual": max(self.residuals.values(), default=0.0),
        }


def trace_identity_check(
    m: TransitionMatrix, census: LoopSeriesAccumulator, n_max: int
) -> TraceReport:
    """
    Compare tr Λ^r against -2 r f_r for r = 1..n_max.

    ``census`` must hold all loops of length up to ``n_max`` with the same weights.
    """
    traces, expected, residuals = {}, {}, {}
    power = np.eye(m.dimension, dtype=complex)
    for r in range(1, n_max + 1):
        power = power @ m.matrix
        trace = complex(np.trace(power))
        target = -2 * r * census[r]
        traces[r], expected[r] = trace, target
        residuals[r] = abs(trace - target) / (1 + abs(trace))
    ok = all(res < TRACE_TOLERANCE for res in residuals.values())
    if not ok:
        worst = max(residuals, key=residuals.__getitem__)
        logger.warning(f"Trace identity fails at r={worst}: residual {residuals[worst]:.3e}")
    return TraceReport(traces, expected, residuals, ok)


# Torus


@dataclass(frozen=True)
class TorusSpec:
    """M x N rectangle closed into a torus by chains of additional edges."""

    M: int
    N: int
    chain_weight_product: float = -1.0

    def __post_init__(self) -> None:
        if self.M < 2 or self.N < 2:
            raise InputError(f"Torus needs M, N >= 2, got {self.M}x{self.N}")


def build_torus(spec: TorusSpec) -> tuple[EmbeddedGraph, TransitionMatrix]:
    """
    Wrap an M x N rectangle around a torus with chains drawn outside it.

    Row j gets a new vertex (M, j) joined to (M-1, j) by a representative edge; from it a
    chain of additional edges runs around the bottom-right, under the rectangle and up the
    left side into (0, j), turning right four times. Column i gets (i, N) above (i, N-1)
    and a chain at half-integer offsets back to (i, 0), turning left four times. One edge
    of every chain carries ``chain_weight_product``, all other weights are 1.
    """
    M, N = spec.M, spec.N
    base = build_rectangle(M, N)
    d = base.denominator
    coords: list[Coordinate] = list(base.coordinates)
    edges: list[tuple] = [(e.u, e.v, e.kind) for e in base.edges]
    designated: set[tuple[int, int]] = set()

    def lattice(i: int, j: int) -> int:
        return i * N + j

    def add(point: Coordinate) -> int:
        coords.append(point)
        return len(coords) - 1

    def chain(start: int, corners: list[Coordinate], end: int) -> None:
        previous = start
        for k, corner in enumerate(corners):
            current = add(corner)
            edges.append((previous, current, "additional"))
            if k == 0:
                designated.add((min(previous, current), max(previous, current)))
            previous = current
        edges.append((previous, end, "additional"))

    half = d // 2
    for j in range(N):
        off = (j + 1) * d
        a = add(Coordinate(M * d, j * d))
        edges.append((lattice(M - 1, j), a))
        corners = [
            Coordinate(M * d + off, j * d),
            Coordinate(M * d + off, -off),
            Coordinate(-off, -off),
            Coordinate(-off, j * d),
        ]
        chain(a, corners, lattice(0, j))
    for i in range(M):
        off = i * d + half
        b = add(Coordinate(i * d, N * d))
        edges.append((lattice(i, N - 1), b))
        corners = [
            Coordinate(i * d, N * d + off),
            Coordinate(-off, N * d + off),
            Coordinate(-off, -off),
            Coordinate(i * d, -off),
        ]
        chain(b, corners, lattice(i, 0))

    graph = EmbeddedGraph(coords, edges, d)
    values = np.ones(graph.n_edges)
    for u, v in designated:
        values[graph.edge_id(u, v)] = spec.chain_weight_product
    matrix = build_transition_matrix(graph, EdgeWeights(graph, values))
    logger.debug(f"Built {M}x{N} torus with {graph.n_vertices} vertices")
    return graph, matrix


def torus_edge(spec: TorusSpec, graph: EmbeddedGraph, i: int, j: int, heading: str) -> tuple[int, int]:
    """Directed representative edge leaving torus site (i, j) in a compass heading."""
    M, N = spec.M, spec.N
    i, j = i % M, j % N
    site = graph.vertex_at(i, j)
    if heading == "E":
        return site, graph.vertex_at(i + 1, j)
    if heading == "N":
        return site, graph.vertex_at(i, j + 1)
    if heading == "W":
        return (site, graph.vertex_at(i - 1, j)) if i > 0 else (
            graph.vertex_at(M, j),
            graph.vertex_at(M - 1, j),
        )
    if heading == "S":
        return (site, graph.vertex_at(i, j - 1)) if j > 0 else (
            graph.vertex_at(i, N),
            graph.vertex_at(i, N - 1),
        )
    raise InputError(f"Unknown heading {heading!r}")


def torus_vertex_block(spec: TorusSpec, m: TransitionMatrix, i: int, j: int) -> np.ndarray:
    """
    4x4 block of Λ^torus between edges entering and edges leaving site (i, j).

    Rows are the headings of the incoming edges, columns of the outgoing ones, both in
    E, N, W, S order.
    """
    back = {"E": (-1, 0), "N": (0, -1), "W": (1, 0), "S": (0, 1)}
    block = np.zeros((4, 4), dtype=complex)
    for r, h_in in enumerate(HEADINGS):
        di, dj = back[h_in]
        row = m.position(*torus_edge(spec, m.graph, i + di, j + dj, h_in))
        for c, h_out in enumerate(HEADINGS):
            block[r, c] = m.matrix[row, m.position(*torus_edge(spec, m.graph, i, j, h_out))]
    return block


def torus_determinant(m: TransitionMatrix, x: float) -> float:
    """det(Id - x Λ^torus), checked to be real."""
    det = lu_determinant(np.eye(m.dimension) - x * m.matrix)
    if abs(det.imag) > IMAGINARY_TOLERANCE * max(abs(det), 1e-300):
        raise NumericalConsistencyError(f"Torus determinant {det} is not real")
    return det.real


def torus_fourier_determinant(spec: TorusSpec, x: float) -> float:
    """
    Product over Fourier modes of (1+x²)² - 2x(1-x²)(cos ω_p + cos ω_q).

    Raises:
        DomainError: Unless 0 <= x < √2 - 1
    """
    if not 0 <= x < math.sqrt(2) - 1:
        raise DomainError(f"Torus weight {x} outside [0, √2-1)")
    omega_p = 2 * math.pi * np.arange(spec.M) / spec.M
    omega_q = 2 * math.pi * np.arange(spec.N) / spec.N
    cosines = np.add.outer(np.cos(omega_p), np.cos(omega_q))
    factors = (1 + x**2) ** 2 - 2 * x * (1 - x**2) * cosines
    return float(np.prod(factors))


# Onsager


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    nodes: int
    converged: bool


def _onsager_grid(beta: float, nodes: int) -> float:
    # Nodes shifted by half a step; the integrand is 2π-periodic in both angles
    omega = 2 * math.pi * (np.arange(nodes) + 0.5) / nodes
    cosines = np.add.outer(np.cos(omega), np.cos(omega))
    integrand = np.log(4 * math.cosh(2 * beta) ** 2 - 4 * math.sinh(2 * beta) * cosines)
    return 0.5 * float(np.mean(integrand))


def onsager_integral(
    beta: float, tol: float = 1e-8, start_nodes: int = 256, max_nodes: int = 2048
) -> QuadratureResult:
    """
    -βf(β) from Onsager's double integral with the periodic trapezoid rule.

    The grid doubles from ``start_nodes`` until two successive values differ by less
    than ``tol`` or ``max_nodes`` is reached.

    Raises:
        DomainError: If beta <= 0
    """
    if beta <= 0:
        raise DomainError(f"Inverse temperature must be positive, got {beta}")
    if abs(beta - BETA_CRITICAL) < 1e-3:
        logger.warning(f"β={beta} is close to β_c; quadrature accuracy is reduced")
    nodes = start_nodes
    previous = _onsager_grid(beta, nodes)
    delta = math.inf
    while nodes < max_nodes:
        nodes *= 2
        current = _onsager_grid(beta, nodes)
        delta = abs(current - previous)
        previous = current
        if delta < tol:
            return QuadratureResult(current, delta, nodes, True)
    logger.warning(f"Onsager quadrature at β={beta} stopped at {nodes} nodes, Δ={delta:.3e}")
    return QuadratureResult(previous, delta, nodes, False)
