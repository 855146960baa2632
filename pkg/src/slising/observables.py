"""Ising partition functions, free energy and spin correlations on lattice rectangles.

Three independent routes are available for every quantity: spin enumeration, the
even-subgraph expansions evaluated by subset enumeration or by the Kac-Ward
determinant, and truncated signed-loop series with explicit tail bounds.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
import scipy.linalg
import scipy.optimize

from config import get_logger, get_settings

from .errors import (
    CapExceededError,
    DomainError,
    EmptyDualError,
    InputError,
    NumericalConsistencyError,
)
from .graph import (
    Coordinate,
    EdgeWeights,
    EmbeddedGraph,
    build_rectangle,
    build_weak_dual,
    dual_crossing_map,
    generating_function_bruteforce,
)
from .kac_ward import (
    BETA_CRITICAL,
    build_transition_matrix,
    certify_spectral_radius,
    determinant_evaluation,
    kac_ward_determinant,
)
from .loops import NORM_CONSTANT, length_sums, odd_on_edges, visits_edge_once

logger = get_logger(__name__)

DEFAULT_R_MAX = 12
# Negative two-point values above this are rounding residue and clamp to 0
DECAY_ROUNDING = 1e-12
_CHUNK = 1 << 16


class Boundary(str, Enum):
    FREE = "free"
    PLUS = "plus"


class Backend(str, Enum):
    ENUMERATION = "enumeration"
    DETERMINANT = "determinant"
    LOOP_SERIES = "loop-series"


@dataclass(frozen=True)
class IsingSpec:
    """Nearest-neighbour Ising model without external field on a lattice rectangle."""

    graph: EmbeddedGraph
    beta: float
    boundary: Boundary = Boundary.FREE

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise DomainError(f"Inverse temperature must be positive, got {self.beta}")
        if self.graph.rectangle is None or self.graph.additional_edges:
            raise InputError("Ising observables are defined on lattice rectangles")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @classmethod
    def rectangle(cls, width: int, height: int, beta: float, boundary: str = "free") -> "IsingSpec":
        return cls(build_rectangle(width, height), beta, Boundary(boundary))


@dataclass(frozen=True)
class SeriesResult:
    """Truncated series value with a bound on the omitted remainder."""

    value: float
    tail: float
    terms: dict[int, float] = field(default_factory=dict)


# Temperatures


def beta_critical() -> float:
    """Root of exp(-2β) = tanh β found by bisection."""
    return scipy.optimize.bisect(
        lambda b: math.exp(-2 * b) - math.tanh(b), 0.1, 1.0, xtol=1e-15, maxiter=200
    )


def dual_beta(beta: float) -> float:
    """β* with exp(-2β*) = tanh β."""
    if beta <= 0:
        raise DomainError(f"Inverse temperature must be positive, got {beta}")
    return -0.5 * math.log(math.tanh(beta))


# Generating functions


def generating_function(
    graph: EmbeddedGraph,
    x: EdgeWeights,
    backend: Backend = Backend.ENUMERATION,
    r_max: int = DEFAULT_R_MAX,
) -> float:
    """
    Z(x) through the chosen backend.

    The loop-series backend truncates exp(sum f_r) at ``r_max`` and needs the norm bound
    (√2+1)‖x‖ < 1.
    """
    backend = Backend(backend)
    if backend is Backend.ENUMERATION:
        return generating_function_bruteforce(graph, x)
    if backend is Backend.DETERMINANT:
        return determinant_evaluation(build_transition_matrix(graph, x))
    if NORM_CONSTANT * x.sup_norm >= 1:
        raise DomainError("Loop series needs (√2+1)‖x‖ < 1")
    return math.exp(length_sums(graph, x, r_max).total())


# Partition functions


def gibbs_bruteforce(spec: IsingSpec, sites: Sequence[int] = (), cap: int | None = None) -> float:
    """
    Exact spin enumeration.

    Args:
        spec: Model definition
        sites: Empty for the partition function, else the vertices whose spin
            product is averaged
        cap: Largest number of free spins, defaults to ``SLISING_MAX_SPINS``

    Returns:
        Z when ``sites`` is empty, otherwise ⟨Π σ_s⟩

    Raises:
        CapExceededError: If there are too many free spins
    """
    g = spec.graph
    cap = get_settings().max_spins if cap is None else cap
    fixed = g.boundary() if spec.boundary is Boundary.PLUS else frozenset()
    free = [v for v in range(g.n_vertices) if v not in fixed]
    if len(free) > cap:
        raise CapExceededError("Free spin count", len(free), cap, "SLISING_MAX_SPINS")
    # Global spin flip symmetry
    if spec.boundary is Boundary.FREE and len(sites) % 2:
        return 0.0

    us = np.array([e.u for e in g.edges], dtype=np.int64)
    vs = np.array([e.v for e in g.edges], dtype=np.int64)
    site_index = np.array(list(sites), dtype=np.int64)
    shift = g.n_edges  # maximal energy, keeps exponentials bounded
    z_scaled, observable = 0.0, 0.0
    total = 1 << len(free)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        spins = np.ones((len(idx), g.n_vertices), dtype=np.int8)
        if free:
            bits = (idx[:, None] >> np.arange(len(free))) & 1
            spins[:, free] = 1 - 2 * bits
        energy = np.sum(spins[:, us].astype(np.int32) * spins[:, vs], axis=1)
        weights = np.exp(spec.beta * (energy - shift))
        z_scaled += float(weights.sum())
        if len(site_index):
            observable += float(np.sum(weights * np.prod(spins[:, site_index], axis=1)))
    if len(site_index):
        return observable / z_scaled
    return math.exp(spec.beta * shift) * z_scaled


def _require(spec: IsingSpec, boundary: Boundary) -> None:
    if spec.boundary is not boundary:
        raise InputError(f"Expected {boundary.value} boundary condition, got {spec.boundary.value}")


def high_temp_partition(spec: IsingSpec, backend: Backend = Backend.ENUMERATION) -> float:
    """Z^free = 2^|V| cosh(β)^|E| Z_G(tanh β)."""
    _require(spec, Boundary.FREE)
    g = spec.graph
    z = generating_function(g, EdgeWeights.constant(g, math.tanh(spec.beta)), backend)
    return 2.0**g.n_vertices * math.cosh(spec.beta) ** g.n_edges * z


def low_temp_partition(spec: IsingSpec, backend: Backend = Backend.ENUMERATION) -> float:
    """Z^+ = exp(β|E|) Z_G*(exp(-2β)) on the weak dual."""
    _require(spec, Boundary.PLUS)
    g = spec.graph
    try:
        dual = build_weak_dual(g)
    except EmptyDualError:
        return math.exp(spec.beta * g.n_edges)
    z = generating_function(dual, EdgeWeights.constant(dual, math.exp(-2 * spec.beta)), backend)
    return math.exp(spec.beta * g.n_edges) * z


# Free energy


def free_energy_series(
    beta: float, box_half_width: int | None = None, r_max: int = DEFAULT_R_MAX
) -> SeriesResult:
    """
    -βf(β) from loops anchored at the centre of a box.

    Below β_c the high-temperature form ln(2cosh²β) + Σ f°_r(tanh β) is used, above
    it the low-temperature form 2β + Σ f°_r(exp(-2β)).

    Raises:
        DomainError: If β <= 0 or β = β_c
        InputError: If the box is narrower than ``r_max``
    """
    if beta <= 0:
        raise DomainError(f"Inverse temperature must be positive, got {beta}")
    if abs(beta - BETA_CRITICAL) < 1e-12:
        raise DomainError("The loop series is not certified at β_c")
    half_width = r_max if box_half_width is None else box_half_width
    if half_width < r_max:
        raise InputError(f"Box half-width {half_width} must be at least r_max={r_max}")
    if abs(beta - BETA_CRITICAL) < 1e-3:
        logger.warning(f"β={beta} is close to β_c; the series converges slowly")

    side = 2 * half_width + 1
    box = build_rectangle(side, side, Coordinate(-half_width * 2, -half_width * 2))
    centre = box.vertex_at(0, 0)
    if beta < BETA_CRITICAL:
        x, base = math.tanh(beta), math.log(2 * math.cosh(beta) ** 2)
    else:
        x, base = math.exp(-2 * beta), 2 * beta
    sums = length_sums(box, EdgeWeights.constant(box, x), r_max, anchors=[centre])
    logger.debug(f"Free energy series at β={beta}: {dict(sums.counts)} anchored loops")
    return SeriesResult(base + sums.total(), sums.tail_bound, dict(sums.sums))


# Paths


def lattice_path(g: EmbeddedGraph, u: int, v: int, horizontal_first: bool = True) -> list[int]:
    """L-shaped lattice path from u to v."""
    return _l_path(g, u, v, horizontal_first)


def _l_path(g: EmbeddedGraph, u: int, v: int, horizontal_first: bool) -> list[int]:
    (ux, uy), (vx, vy) = g.position(u), g.position(v)
    corner = (vx, uy) if horizontal_first else (ux, vy)
    points = _segment_points((ux, uy), corner) + _segment_points(corner, (vx, vy))[1:]
    return [g.vertex_at(px, py) for px, py in points]


def _segment_points(
    a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]
) -> list[tuple[Fraction, Fraction]]:
    dx, dy = b[0] - a[0], b[1] - a[1]
    steps = int(abs(dx) + abs(dy))
    if steps == 0:
        return [a]
    sx, sy = dx / steps, dy / steps
    return [(a[0] + k * sx, a[1] + k * sy) for k in range(steps + 1)]


def _path_edges(g: EmbeddedGraph, path: Sequence[int], u: int, v: int) -> set[int]:
    if not path or path[0] != u or path[-1] != v:
        raise InputError("Path must run from u to v")
    if len(set(path)) != len(path):
        raise InputError("Path must be self-avoiding")
    return {g.edge_id(a, b) for a, b in zip(path, path[1:], strict=False)}


def _tail_sum(term, start: int, limit: int = 1_000_000) -> float:
    total, r = 0.0, start
    while r < start + limit:
        value = term(r)
        total += value
        if value < 1e-18 * max(total, 1e-300) or value < 1e-300:
            return total
        r += 1
    return math.inf


# Plus boundary


def _plus_setup(
    spec: IsingSpec, u: int, v: int, path: Sequence[int] | None, horizontal_first: bool
) -> tuple[EmbeddedGraph, EdgeWeights, EdgeWeights, list[int]]:
    g = spec.graph
    path = list(path) if path is not None else lattice_path(g, u, v, horizontal_first)
    crossed = _path_edges(g, path, u, v)
    dual = build_weak_dual(g)
    flipped = [f for f, e in dual_crossing_map(g, dual).items() if e in crossed]
    x = EdgeWeights.constant(dual, math.exp(-2 * spec.beta))
    x_flipped = x.with_values({f: -x[f] for f in flipped})
    return dual, x, x_flipped, flipped


def two_point_plus(
    spec: IsingSpec,
    u: int,
    v: int,
    backend: Backend = Backend.ENUMERATION,
    path: Sequence[int] | None = None,
    horizontal_first: bool = True,
    r_max: int = 16,
) -> float:
    """
    ⟨σ_u σ_v⟩⁺ = Z_G*(x')/Z_G*(x), where x' flips the dual edges crossing a path u -> v.

    Args:
        spec: Plus-boundary model
        u, v: Distinct vertices
        backend: How the two dual generating functions are evaluated
        path: Self-avoiding lattice path from u to v; L-shaped by default
        horizontal_first: Orientation of the default L-shaped path
        r_max: Truncation for the loop-series backend

    Raises:
        InputError: If u = v or the boundary is not plus
    """
    _require(spec, Boundary.PLUS)
    if u == v:
        raise InputError("Two-point function needs distinct vertices")
    boundary = spec.graph.boundary()
    if u in boundary and v in boundary:
        return 1.0
    backend = Backend(backend)
    if backend is Backend.LOOP_SERIES:
        return two_point_plus_series(spec, u, v, r_max, path, horizontal_first).value
    dual, x, x_flipped, _ = _plus_setup(spec, u, v, path, horizontal_first)
    return generating_function(dual, x_flipped, backend) / generating_function(dual, x, backend)


def two_point_plus_series(
    spec: IsingSpec,
    u: int,
    v: int,
    r_max: int = 16,
    path: Sequence[int] | None = None,
    horizontal_first: bool = True,
) -> SeriesResult:
    """
    exp(-2 Σ_r f^uv_r(x)) over dual loops crossing the path an odd number of times.

    The tail uses a_r <= 2(‖u-v‖+r)² r^-1 exp(-2(β-β_c) r).

    Raises:
        DomainError: Unless β > β_c
    """
    _require(spec, Boundary.PLUS)
    if spec.beta <= BETA_CRITICAL:
        raise DomainError("The plus-boundary loop series needs β > β_c")
    if u == v:
        raise InputError("Two-point function needs distinct vertices")
    dual, x, _, flipped = _plus_setup(spec, u, v, path, horizontal_first)
    sums = length_sums(dual, x, r_max, predicate=odd_on_edges(flipped))
    exponent = -2 * sums.total()
    value = math.exp(exponent)
    (ux, uy), (vx, vy) = spec.graph.position(u), spec.graph.position(v)
    distance = math.hypot(ux - vx, uy - vy)
    rate = 2 * (spec.beta - BETA_CRITICAL)
    tail_exponent = 2 * _tail_sum(
        lambda r: 2 * (distance + r) ** 2 / r * math.exp(-rate * r), r_max + 1
    )
    tail = value * math.expm1(tail_exponent) if math.isfinite(tail_exponent) else math.inf
    return SeriesResult(value, tail, dict(sums.sums))


def one_point_plus(
    spec: IsingSpec,
    u: int,
    v: int | None = None,
    backend: Backend = Backend.ENUMERATION,
) -> float:
    """⟨σ_u⟩⁺ as a two-point function with a boundary vertex (default: same row, left edge)."""
    _require(spec, Boundary.PLUS)
    boundary = spec.graph.boundary()
    if u in boundary:
        return 1.0
    if v is None:
        _, uy = spec.graph.position(u)
        origin = spec.graph.rectangle.origin
        v = spec.graph.vertex_at(Fraction(origin.x, spec.graph.denominator), uy)
    if v not in boundary:
        raise InputError(f"Vertex {v} is not on the boundary")
    return two_point_plus(spec, u, v, backend)


def sign_flip_violations(
    spec: IsingSpec, u: int, v: int, path: Sequence[int] | None = None
) -> int:
    """
    Count plus configurations where σ_u σ_v Π_F x differs from Π_F x'.

    F(σ) is the set of dual edges crossing primal edges with disagreeing spins.
    """
    _require(spec, Boundary.PLUS)
    g = spec.graph
    dual, x, x_flipped, _ = _plus_setup(spec, u, v, path, True)
    primal_to_dual = {e: f for f, e in dual_crossing_map(g, dual).items()}
    boundary = g.boundary()
    free = [w for w in range(g.n_vertices) if w not in boundary]
    cap = get_settings().max_spins
    if len(free) > cap:
        raise CapExceededError("Free spin count", len(free), cap, "SLISING_MAX_SPINS")
    violations = 0
    for mask in range(1 << len(free)):
        spins = [1] * g.n_vertices
        for k, w in enumerate(free):
            if mask >> k & 1:
                spins[w] = -1
        lhs, rhs = float(spins[u] * spins[v]), 1.0
        for e, edge in enumerate(g.edges):
            if spins[edge.u] != spins[edge.v]:
                lhs *= x[primal_to_dual[e]]
                rhs *= x_flipped[primal_to_dual[e]]
        if not math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-300):
            violations += 1
    return violations


# Free boundary


@dataclass(frozen=True)
class DualPathConfig:
    """Dual path γ from u* to v*, both face centres next to u and v."""

    u: int
    v: int
    u_star: Coordinate
    v_star: Coordinate
    gamma: tuple[Coordinate, ...]


_FACE_OFFSETS = ((1, 1), (-1, 1), (1, -1), (-1, -1))


def _faces_near(g: EmbeddedGraph, w: int) -> list[Coordinate]:
    rect, d = g.rectangle, g.denominator
    half = d // 2
    x_lo, y_lo = rect.origin.x, rect.origin.y
    x_hi, y_hi = x_lo + (rect.width - 1) * d, y_lo + (rect.height - 1) * d
    c = g.coordinates[w]
    faces = []
    for sx, sy in _FACE_OFFSETS:
        face = c.shifted(sx * half, sy * half)
        if x_lo < face.x < x_hi and y_lo < face.y < y_hi:
            faces.append(face)
    return faces


def default_dual_path(
    g: EmbeddedGraph,
    u: int,
    v: int,
    horizontal_first: bool = True,
    u_star: Coordinate | None = None,
    v_star: Coordinate | None = None,
) -> DualPathConfig:
    """
    Pick u*, v* and an L-shaped dual path between them.

    Adjacent u, v share a face so that u* = v* and γ is a single point. Otherwise each
    takes the first face centre among the offsets (+½,+½), (-½,+½), (+½,-½), (-½,-½)
    that lies inside the box.

    Raises:
        EmptyDualError: If the rectangle has no faces
        InputError: If u = v or an explicit face centre is not next to its vertex
    """
    if g.rectangle is None or g.rectangle.width < 2 or g.rectangle.height < 2:
        raise EmptyDualError("Free two-point functions need a rectangle with faces")
    if u == v:
        raise InputError("Two-point function needs distinct vertices")
    faces_u, faces_v = _faces_near(g, u), _faces_near(g, v)
    if u_star is None and v_star is None and g.has_edge(u, v):
        u_star = v_star = next(f for f in faces_u if f in faces_v)
    u_star = u_star or faces_u[0]
    v_star = v_star or faces_v[0]
    if u_star not in faces_u or v_star not in faces_v:
        raise InputError("u* and v* must be face centres next to u and v")

    d = g.denominator
    corner = Coordinate(v_star.x, u_star.y) if horizontal_first else Coordinate(u_star.x, v_star.y)
    gamma = [u_star]
    for target in (corner, v_star):
        while gamma[-1] != target:
            last = gamma[-1]
            step_x = (target.x > last.x) - (target.x < last.x)
            step_y = (target.y > last.y) - (target.y < last.y)
            gamma.append(last.shifted(step_x * d, step_y * d))
    return DualPathConfig(u, v, u_star, v_star, tuple(gamma))


@dataclass(frozen=True)
class AugmentedGraph:
    """Rectangle plus the additional edges uu*, γ and v*v."""

    graph: EmbeddedGraph
    lattice_edges: int
    uu_star: int
    gamma_edges: frozenset[int]
    crossing_lattice_edges: frozenset[int]


def augment_with_dual_path(g: EmbeddedGraph, cfg: DualPathConfig) -> AugmentedGraph:
    """Attach E_γ = {uu*, v*v} ∪ γ as additional edges; crossings are found geometrically."""
    n = g.n_vertices
    new_ids = {point: n + k for k, point in enumerate(cfg.gamma)}
    chain = [cfg.u, *(new_ids[p] for p in cfg.gamma), cfg.v]
    augmented = g.with_additional(list(cfg.gamma), list(zip(chain, chain[1:], strict=False)))
    uu_star = augmented.edge_id(cfg.u, new_ids[cfg.u_star])
    gamma_edges = frozenset(augmented.edge_id(a, b) for a, b in zip(chain, chain[1:], strict=False))
    crossing = frozenset(
        e
        for pair in augmented.crossings
        for e in pair
        if e < g.n_edges and any(f in gamma_edges for f in pair if f != e)
    )
    return AugmentedGraph(augmented, g.n_edges, uu_star, gamma_edges, crossing)


def dual_path_weights(aug: AugmentedGraph, beta: float, t: complex | float) -> EdgeWeights:
    """x'_γ(t): ±tanh β on lattice edges (minus where γ crosses), 1 on E_γ, t on uu*."""
    x = math.tanh(beta)
    values: list[complex | float] = []
    for e in range(aug.graph.n_edges):
        if e < aug.lattice_edges:
            values.append(-x if e in aug.crossing_lattice_edges else x)
        elif e == aug.uu_star:
            values.append(t)
        else:
            values.append(1.0)
    return EdgeWeights(aug.graph, values)


def _flipped_lattice_weights(spec: IsingSpec, aug: AugmentedGraph) -> EdgeWeights:
    x = math.tanh(spec.beta)
    return EdgeWeights(
        spec.graph,
        [-x if e in aug.crossing_lattice_edges else x for e in range(spec.graph.n_edges)],
    )


def _free_config(
    spec: IsingSpec, u: int, v: int, cfg: DualPathConfig | None
) -> tuple[DualPathConfig, AugmentedGraph]:
    _require(spec, Boundary.FREE)
    cfg = cfg or default_dual_path(spec.graph, u, v)
    if (cfg.u, cfg.v) != (u, v):
        raise InputError("Dual path configuration belongs to a different vertex pair")
    return cfg, augment_with_dual_path(spec.graph, cfg)


def two_point_free(
    spec: IsingSpec,
    u: int,
    v: int,
    backend: Backend = Backend.ENUMERATION,
    cfg: DualPathConfig | None = None,
    r_max: int = DEFAULT_R_MAX,
) -> float:
    """
    ⟨σ_u σ_v⟩^free from the derivative at t = 0 of Z_Gγ(x'_γ(t)).

    Z_Gγ(x'_γ(t)) = a + b t because uu* is used at most once, so the two-point function
    is b / Z_G(x). Enumeration takes b = Z(1) - Z(0); the determinant backend takes
    b = -(a/2) tr((Id - Λ_0)^-1 Λ_1) with Λ_γ(t) = Λ_0 + t Λ_1.

    Raises:
        InputError: If u = v or the boundary is not free
        DomainError: For the determinant or loop-series backend when not certified
    """
    backend = Backend(backend)
    if backend is Backend.LOOP_SERIES:
        return two_point_free_series(spec, u, v, r_max, cfg).value
    cfg, aug = _free_config(spec, u, v, cfg)
    g = spec.graph
    x = EdgeWeights.constant(g, math.tanh(spec.beta))
    if backend is Backend.ENUMERATION:
        z1 = generating_function_bruteforce(aug.graph, dual_path_weights(aug, spec.beta, 1.0))
        z0 = generating_function_bruteforce(aug.graph, dual_path_weights(aug, spec.beta, 0.0))
        return (z1 - z0) / generating_function_bruteforce(g, x)

    lambda_0 = build_transition_matrix(aug.graph, dual_path_weights(aug, spec.beta, 0.0))
    lambda_1 = build_transition_matrix(aug.graph, dual_path_weights(aug, spec.beta, 1.0))
    certify_spectral_radius(lambda_0)
    det_0 = kac_ward_determinant(lambda_0)
    if abs(det_0.imag) > 1e-9 * abs(det_0) or det_0.real <= 0:
        raise NumericalConsistencyError(f"det(Id - Λ_0) = {det_0} is not real and positive")
    a = math.sqrt(det_0.real)
    identity = np.eye(lambda_0.dimension)
    derivative = lambda_1.matrix - lambda_0.matrix
    solved = scipy.linalg.lu_solve(scipy.linalg.lu_factor(identity - lambda_0.matrix), derivative)
    b = -0.5 * a * complex(np.trace(solved))
    if abs(b.imag) > 1e-9 * max(abs(b), 1.0):
        raise NumericalConsistencyError(f"Derivative {b} is not real")
    return b.real / determinant_evaluation(build_transition_matrix(g, x))


def two_point_free_series(
    spec: IsingSpec,
    u: int,
    v: int,
    r_max: int = DEFAULT_R_MAX,
    cfg: DualPathConfig | None = None,
) -> SeriesResult:
    """
    (Σ_r f^uu*_r(x'_γ(1))) Z_G(x')/Z_G(x) with loops visiting uu* exactly once.

    The tail is 16 Σ_{r > r_max} (tanh β / tanh β_c)^r times the ratio.

    Raises:
        DomainError: Unless β < β_c
    """
    if spec.beta >= BETA_CRITICAL:
        raise DomainError("The free-boundary loop series needs β < β_c")
    cfg, aug = _free_config(spec, u, v, cfg)
    g = spec.graph
    sums = length_sums(
        aug.graph,
        dual_path_weights(aug, spec.beta, 1.0),
        r_max,
        predicate=visits_edge_once(aug.uu_star),
    )
    x = EdgeWeights.constant(g, math.tanh(spec.beta))
    ratio = determinant_evaluation(
        build_transition_matrix(g, _flipped_lattice_weights(spec, aug))
    ) / determinant_evaluation(build_transition_matrix(g, x))
    q = math.tanh(spec.beta) / math.tanh(BETA_CRITICAL)
    tail = 16 * q ** (r_max + 1) / (1 - q) * ratio
    return SeriesResult(sums.total() * ratio, tail, dict(sums.sums))


def affinity_residual(spec: IsingSpec, u: int, v: int, cfg: DualPathConfig | None = None) -> float:
    """|Z(½) - (Z(0) + Z(1))/2| for Z(t) = Z_Gγ(x'_γ(t)), by enumeration."""
    _, aug = _free_config(spec, u, v, cfg)
    z = [
        generating_function_bruteforce(aug.graph, dual_path_weights(aug, spec.beta, t))
        for t in (0.0, 0.5, 1.0)
    ]
    return abs(z[1] - 0.5 * (z[0] + z[2]))


def decay_bound(beta: float, distance: float) -> float:
    """16 Σ_{r >= ‖u-v‖} (tanh β / tanh β_c)^r."""
    q = math.tanh(beta) / math.tanh(BETA_CRITICAL)
    if q >= 1:
        return math.inf
    return 16 * q ** math.ceil(distance) / (1 - q)


@dataclass
class DecayReport:
    beta: float
    rows: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(row["ok"] for row in self.rows)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "ok": self.ok, "rounding": DECAY_ROUNDING, "rows": self.rows}


def decay_bound_check(
    beta: float,
    u: tuple[int, int],
    v: tuple[int, int],
    sizes: Sequence[int] = (4, 5, 6),
    backend: Backend = Backend.DETERMINANT,
) -> DecayReport:
    """
    Check 0 <= ⟨σ_u σ_v⟩^free <= 16 Σ_{r >= ‖u-v‖} (tanh β / tanh β_c)^r on growing boxes.

    ``u`` and ``v`` are lattice coordinates inside every box, whose corner is the origin.
    Values in (-DECAY_ROUNDING, 0) are reported as 0.

    Raises:
        DomainError: Unless β < β_c
    """
    if beta >= BETA_CRITICAL:
        raise DomainError("The decay bound holds for β < β_c")
    distance = math.hypot(u[0] - v[0], u[1] - v[1])
    bound = decay_bound(beta, distance)
    report = DecayReport(beta)
    for size in sizes:
        spec = IsingSpec.rectangle(size, size, beta)
        value = two_point_free(spec, spec.graph.vertex_at(*u), spec.graph.vertex_at(*v), backend)
        if -DECAY_ROUNDING < value < 0:
            value = 0.0
        ok = 0 <= value <= bound
        report.rows.append(
            {
                "size": size,
                "distance": distance,
                "value": value,
                "bound": bound,
                "margin": bound - value,
                "ok": ok,
            }
        )
        if not ok:
            logger.warning(f"Decay bound fails on {size}x{size}: {value} > {bound}")
    return report
