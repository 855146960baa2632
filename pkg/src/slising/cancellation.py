"""Even-subgraph decompositions, loop configurations and the labelled-loop involution.

These are the finite combinatorial identities behind the loop expansion: every even
subset is a signed sum over its loop decompositions, configurations that reuse an edge
cancel, and the cancellation is realised by an explicit sign-reversing involution on
labelled configurations.
"""

import math
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product
from typing import TypeVar

from config import get_logger, get_settings

from .errors import CapExceededError, InputError
from .graph import EdgeWeights, EmbeddedGraph, Weight, enumerate_even_subsets
from .kac_ward import build_transition_matrix
from .loops import (
    Loop,
    canonicalize,
    counterclockwise_neighbors,
    enumerate_loops,
    loop_weight,
    self_crossings,
)

logger = get_logger(__name__)

T = TypeVar("T")

CANCELLATION_TOLERANCE = 1e-12


# Pairings


def pairings(items: Sequence[T]) -> Iterator[list[tuple[T, T]]]:
    """All (2k-1)!! partitions of ``items`` into pairs."""
    if not items:
        yield []
        return
    first, rest = items[0], list(items[1:])
    for i, partner in enumerate(rest):
        for tail in pairings(rest[:i] + rest[i + 1 :]):
            yield [(first, partner), *tail]


def pairing_crossings(pairing: Iterable[tuple[int, int]]) -> int:
    """Crossing pairs of chords between positions in cyclic order."""
    chords = [tuple(sorted(pair)) for pair in pairing]
    count = 0
    for i, (a, b) in enumerate(chords):
        for c, d in chords[i + 1 :]:
            if (a < c < b) != (a < d < b):
                count += 1
    return count


def pairing_parity_census(k: int) -> tuple[int, int]:
    """
    Count even and odd pairings of 2k endpoints in cyclic order.

    Raises:
        InputError: Unless 1 <= k <= 6
    """
    if not 1 <= k <= 6:
        raise InputError(f"Pairing census supports 1 <= k <= 6, got {k}")
    tally = Counter(pairing_crossings(p) % 2 for p in pairings(list(range(2 * k))))
    return tally[0], tally[1]


def pairing_recursion_holds(k: int) -> bool:
    """N+_k = k N+_{k-1} + (k-1) N-_{k-1} and N-_k = k N-_{k-1} + (k-1) N+_{k-1}."""
    if k == 1:
        return pairing_parity_census(1) == (1, 0)
    even, odd = pairing_parity_census(k - 1)
    return pairing_parity_census(k) == (k * even + (k - 1) * odd, k * odd + (k - 1) * even)


# Decompositions


def _check_even(g: EmbeddedGraph, f: Iterable[int]) -> frozenset[int]:
    edges = frozenset(f)
    unknown = [e for e in edges if not (isinstance(e, int) and 0 <= e < g.n_edges)]
    if unknown:
        raise InputError(f"Unknown edge ids: {sorted(unknown, key=str)}")
    degree: Counter[int] = Counter()
    for e in edges:
        degree[g.edges[e].u] += 1
        degree[g.edges[e].v] += 1
    odd = sorted(v for v, d in degree.items() if d % 2)
    if odd:
        raise InputError(f"Subset is not even: odd degree at vertices {odd}")
    return edges


def _cyclic_neighbors(g: EmbeddedGraph, v: int, edges: frozenset[int]) -> list[int]:
    incident = [w for w in g.neighbors(v) if g.edge_id(v, w) in edges]
    return counterclockwise_neighbors(g, v, incident)


def decompose_even_subset(g: EmbeddedGraph, f: Iterable[int]) -> Iterator[tuple[Loop, ...]]:
    """
    Yield every decomposition of an even subset into edge-disjoint loops exactly once.

    Each combination of per-vertex pairings of the incident edges is traced into closed
    paths: arriving at ``v`` from ``a``, the walk leaves towards the partner of ``a``.

    Raises:
        InputError: On unknown edge ids or a vertex of odd degree
    """
    edges = _check_even(g, f)
    if not edges:
        yield ()
        return
    vertices = sorted({g.edges[e].u for e in edges} | {g.edges[e].v for e in edges})
    options = [list(pairings(_cyclic_neighbors(g, v, edges))) for v in vertices]
    for choice in product(*options):
        partner: dict[tuple[int, int], int] = {}
        for v, pairing in zip(vertices, choice, strict=True):
            for a, b in pairing:
                partner[(v, a)] = b
                partner[(v, b)] = a
        unused = set(edges)
        loops = []
        while unused:
            start = g.edges[min(unused)]
            path = [start.u, start.v]
            unused.discard(g.edge_id(start.u, start.v))
            while True:
                nxt = partner[(path[-1], path[-2])]
                if (path[-1], nxt) == (start.u, start.v):
                    break
                unused.discard(g.edge_id(path[-1], nxt))
                path.append(nxt)
            loops.append(canonicalize(g, path[:-1]))
        yield tuple(sorted(loops, key=lambda loop: [g.rank[v] for v in loop.vertices]))


@dataclass(frozen=True)
class DecompositionReport:
    """Signed decomposition count of one even subset."""

    subset: frozenset[int]
    decompositions: int
    signed_sum: int
    expected: int
    whitney_ok: bool

    @property
    def ok(self) -> bool:
        return self.signed_sum == self.expected and self.whitney_ok

    def to_dict(self) -> dict:
        return {
            "subset": sorted(self.subset),
            "decompositions": self.decompositions,
            "signed_sum": self.signed_sum,
            "expected": self.expected,
            "whitney_ok": self.whitney_ok,
            "ok": self.ok,
        }


def whitney_holds(g: EmbeddedGraph, loop: Loop) -> bool:
    """sgn(ℓ) = (-1)^(C_V + C_E) for an edge-disjoint loop."""
    c_vertices, c_edges = self_crossings(g, loop)
    return loop.sign == (-1) ** (c_vertices + c_edges)


def verify_signed_decomposition(g: EmbeddedGraph, f: Iterable[int]) -> DecompositionReport:
    """Compare Σ over decompositions of Π sgn(ℓ_i) with (-1)^C_F and check each loop's sign."""
    edges = _check_even(g, f)
    count, signed, whitney = 0, 0, True
    for decomposition in decompose_even_subset(g, edges):
        count += 1
        signed += math.prod(loop.sign for loop in decomposition)
        whitney = whitney and all(whitney_holds(g, loop) for loop in decomposition)
    expected = -1 if g.crossing_count(edges) % 2 else 1
    report = DecompositionReport(edges, count, signed, expected, whitney)
    if not report.ok:
        logger.warning(f"Signed decomposition mismatch on {sorted(edges)}: {report.to_dict()}")
    return report


def z_from_decompositions(g: EmbeddedGraph, x: EdgeWeights, cap: int | None = None) -> Weight:
    """1 + Σ over nonempty even F of Σ over decompositions of Π w(ℓ_i; x)."""
    total: Weight = 1.0
    for f in enumerate_even_subsets(g, cap=cap):
        if not f:
            continue
        for decomposition in decompose_even_subset(g, f):
            total += math.prod(loop_weight(loop, x) for loop in decomposition)
    return total


# Configurations


@dataclass(frozen=True)
class LoopConfiguration:
    """Ordered sequence of loops; repetitions allowed."""

    loops: tuple[Loop, ...]

    @property
    def total_length(self) -> int:
        return sum(loop.length for loop in self.loops)

    @property
    def is_edge_disjoint(self) -> bool:
        """No loop repeats an edge and no two loops share one."""
        seen: set[int] = set()
        for loop in self.loops:
            if not loop.is_edge_disjoint or seen.intersection(loop.edge_ids):
                return False
            seen.update(loop.edge_ids)
        return True

    def weight(self, x: EdgeWeights) -> Weight:
        """(1/s!) Π w(ℓ_i; x)."""
        return math.prod(loop_weight(loop, x) for loop in self.loops) / math.factorial(
            len(self.loops)
        )


def _check_config_caps(g: EmbeddedGraph, r: int, cap: int | None, edge_cap: int | None) -> None:
    settings = get_settings()
    cap = settings.max_config_length if cap is None else cap
    edge_cap = settings.max_config_edges if edge_cap is None else edge_cap
    if r > cap:
        raise CapExceededError("Configuration length", r, cap, "SLISING_MAX_CONFIG_LENGTH")
    if g.n_edges > edge_cap:
        raise CapExceededError(
            "Configuration graph size", g.n_edges, edge_cap, "SLISING_MAX_CONFIG_EDGES"
        )


def _loops_up_to(g: EmbeddedGraph, r: int) -> list[Loop]:
    n_additional = len(g.additional_edges)
    max_steps = r if n_additional == 0 else r * (1 + n_additional) + n_additional
    return list(enumerate_loops(g, max_steps, max_length=r))


def enumerate_configurations(
    g: EmbeddedGraph, r: int, cap: int | None = None, edge_cap: int | None = None
) -> Iterator[LoopConfiguration]:
    """
    Yield every ordered loop sequence of total length ``r``.

    Raises:
        CapExceededError: If ``r`` or the graph exceeds the configuration caps
    """
    _check_config_caps(g, r, cap, edge_cap)
    loops = _loops_up_to(g, r)

    def extend(prefix: list[Loop], remaining: int) -> Iterator[LoopConfiguration]:
        if remaining == 0:
            yield LoopConfiguration(tuple(prefix))
            return
        for loop in loops:
            if loop.length <= remaining:
                prefix.append(loop)
                yield from extend(prefix, remaining - loop.length)
                prefix.pop()

    if r > 0:
        yield from extend([], r)


@dataclass
class CancellationReport:
    r: int
    n_terms: int
    total: Weight
    terms: list[tuple[str, Weight]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return abs(self.total) < CANCELLATION_TOLERANCE * max(self.n_terms, 1)

    def to_dict(self) -> dict:
        return {"r": self.r, "n_terms": self.n_terms, "total": abs(self.total), "ok": self.ok}


def _describe(config: LoopConfiguration) -> str:
    return " + ".join("-".join(map(str, loop.vertices)) for loop in config.loops)


def verify_cancellation(
    g: EmbeddedGraph,
    r: int,
    x: EdgeWeights,
    cap: int | None = None,
    edge_cap: int | None = None,
) -> CancellationReport:
    """Σ over configurations of length r that reuse an edge of (1/s!) Π w(ℓ_i; x)."""
    terms = [
        (_describe(config), config.weight(x))
        for config in enumerate_configurations(g, r, cap, edge_cap)
        if not config.is_edge_disjoint
    ]
    values = [w for _, w in terms]
    total = sum(values) if x.is_complex else math.fsum(values)
    report = CancellationReport(r, len(terms), total, terms)
    if not report.ok:
        logger.warning(f"Configurations of length {r} do not cancel: {total}")
    return report


def configuration_tail(g: EmbeddedGraph, x: EdgeWeights, r_max: int) -> float:
    """
    Bound on Σ_{r > r_max} |Σ over configurations of length r|.

    With |f_r| <= (d/2) q^r / r, where d is the number of directed edges and q bounds
    ‖Λ(x)‖, the coefficients are dominated by those of (1 - qz)^(-d/2).
    """
    q = build_transition_matrix(g, x).spectral_radius_bound
    if q >= 1:
        return math.inf
    a = len(g.representative_edges)
    if a == 0:
        return 0.0
    r = r_max + 1
    term = math.comb(r + a - 1, r) * q**r
    total = 0.0
    while term > 0:
        total += term
        ratio = q * (r + a) / (r + 1)
        if ratio < 1 and term < 1e-18 * total:
            break
        term *= ratio
        r += 1
    return total


def z_from_configurations(
    g: EmbeddedGraph, x: EdgeWeights, r_max: int, cap: int | None = None
) -> tuple[Weight, float]:
    """
    1 + Σ_{r <= r_max} Σ over all configurations of length r of (1/s!) Π w(ℓ_i; x).

    Returns:
        The truncated sum and a bound on the omitted part
    """
    total: Weight = 1.0
    for r in range(1, r_max + 1):
        total += sum(config.weight(x) for config in enumerate_configurations(g, r, cap))
    return total, configuration_tail(g, x, r_max)


# Labelled loops


@dataclass(frozen=True)
class LabelledLoop:
    """Loop with one distinct positive label per step, in canonical labelled form."""

    base: Loop
    labels: tuple[int, ...]

    @property
    def sign(self) -> int:
        return self.base.sign

    def steps(self) -> list[tuple[int, int, int]]:
        """``(tail, head, label)`` for each step in the stored orientation."""
        vs, n = self.base.vertices, self.base.steps
        return [(vs[j], vs[(j + 1) % n], self.labels[j]) for j in range(n)]


@lru_cache(maxsize=8192)
def _canonical_loop(g: EmbeddedGraph, vertices: tuple[int, ...]) -> Loop:
    return canonicalize(g, vertices)


def label_loop(g: EmbeddedGraph, vertices: Sequence[int], labels: Sequence[int]) -> LabelledLoop:
    """
    Canonical labelled form of a closed walk with step labels.

    ``labels[j]`` tags the step ``vertices[j] -> vertices[j + 1]``. Among the rotations
    and reversals that give the canonical vertex sequence the smallest labels win, so a
    periodic loop starts at its smallest period-shifted label.

    Raises:
        InputError: If the labels are not distinct positive integers, one per step
    """
    vertices, labels = tuple(vertices), tuple(labels)
    n = len(vertices)
    if len(labels) != n or len(set(labels)) != n or min(labels, default=1) < 1:
        raise InputError("Labels must be distinct positive integers, one per step")
    base = _canonical_loop(g, vertices)
    reversed_vertices = tuple(vertices[-j % n] for j in range(n))
    reversed_labels = tuple(labels[(n - j - 1) % n] for j in range(n))
    best: tuple[int, ...] | None = None
    for seq, labs in ((vertices, labels), (reversed_vertices, reversed_labels)):
        for s in range(n):
            if seq[s:] + seq[:s] == base.vertices:
                candidate = labs[s:] + labs[:s]
                if best is None or candidate < best:
                    best = candidate
    return LabelledLoop(base, best)


def labelled_weight(loop: LabelledLoop, x: EdgeWeights) -> Weight:
    """w(ℓ^λ; x) = m(ℓ) w(ℓ; x)."""
    return loop.base.multiplicity * loop_weight(loop.base, x)


LabelledConfiguration = frozenset[LabelledLoop]


def _from_steps(g: EmbeddedGraph, steps: Sequence[tuple[int, int, int]]) -> LabelledLoop:
    return label_loop(g, [t for t, _, _ in steps], [lab for _, _, lab in steps])


def _rotate_to(steps: list[tuple[int, int, int]], label: int) -> list[tuple[int, int, int]]:
    k = next(i for i, step in enumerate(steps) if step[2] == label)
    return steps[k:] + steps[:k]


def _reverse(steps: list[tuple[int, int, int]]) -> list[tuple[int, int, int]]:
    return [(head, tail, lab) for tail, head, lab in reversed(steps)]


def _oriented_at(
    g: EmbeddedGraph, loop: LabelledLoop, label: int
) -> list[tuple[int, int, int]]:
    """Steps starting at ``label``, which runs from its lower-ranked endpoint."""
    steps = _rotate_to(loop.steps(), label)
    tail, head, _ = steps[0]
    if g.rank[tail] > g.rank[head]:
        steps = _rotate_to(_reverse(steps), label)
    return steps


def minimal_label_pair(
    g: EmbeddedGraph, config: LabelledConfiguration
) -> tuple[int, int] | None:
    """Smallest label a on a multiply-visited edge and the next label b on that edge."""
    on_edge: dict[int, list[int]] = {}
    for loop in config:
        for tail, head, lab in loop.steps():
            on_edge.setdefault(g.edge_id(tail, head), []).append(lab)
    shared = [sorted(labs) for labs in on_edge.values() if len(labs) >= 2]
    if not shared:
        return None
    a, b = min(shared)[:2]
    return a, b


def involution(
    g: EmbeddedGraph, config: LabelledConfiguration
) -> tuple[LabelledConfiguration, int]:
    """
    Image of a labelled configuration that reuses an edge, with its case number.

    Steps a and b are the minimal label pair, and step a always runs from its
    lower-ranked endpoint. Case 1 (different loops) merges the two loops at a and b
    after orienting them alike; case 2 (same loop, same direction) splits it there;
    case 3 (same loop, opposite directions) reverses the part between a and b together
    with its labels.

    Raises:
        InputError: If the configuration is edge-disjoint
    """
    pair = minimal_label_pair(g, config)
    if pair is None:
        raise InputError("Edge-disjoint configurations are fixed by the involution")
    a, b = pair
    loops = list(config)
    holder_a = next(loop for loop in loops if a in loop.labels)
    holder_b = next(loop for loop in loops if b in loop.labels)
    rest = [loop for loop in loops if loop is not holder_a and loop is not holder_b]

    if holder_a is not holder_b:
        first = _oriented_at(g, holder_a, a)
        second = _rotate_to(holder_b.steps(), b)
        if second[0][:2] != first[0][:2]:
            second = _rotate_to(_reverse(second), b)
        return frozenset([*rest, _from_steps(g, first + second)]), 1

    steps = _oriented_at(g, holder_a, a)
    k = next(i for i, step in enumerate(steps) if step[2] == b)
    if steps[k][:2] == steps[0][:2]:
        return frozenset([*rest, _from_steps(g, steps[:k]), _from_steps(g, steps[k:])]), 2
    spliced = [steps[0], *_reverse(steps[1:k]), *steps[k:]]
    return frozenset([*rest, _from_steps(g, spliced)]), 3


def _loop_multisets(g: EmbeddedGraph, n: int) -> Iterator[tuple[Loop, ...]]:
    loops = list(enumerate_loops(g, n))

    def extend(start: int, remaining: int, acc: list[Loop]) -> Iterator[tuple[Loop, ...]]:
        if remaining == 0:
            yield tuple(acc)
            return
        for i in range(start, len(loops)):
            if loops[i].steps <= remaining:
                acc.append(loops[i])
                yield from extend(i, remaining - loops[i].steps, acc)
                acc.pop()

    yield from extend(0, n, [])


def expected_labelling_count(loops: Sequence[Loop]) -> int:
    """n! / (Π m(ℓ_i) Π k_j!) for a multiset of loops."""
    n = sum(loop.steps for loop in loops)
    denominator = math.prod(loop.multiplicity for loop in loops)
    denominator *= math.prod(math.factorial(k) for k in Counter(loops).values())
    return math.factorial(n) // denominator


def labelled_configurations(
    g: EmbeddedGraph, loops: Sequence[Loop]
) -> set[LabelledConfiguration]:
    """Every distinct labelling of a multiset of loops by 1..n."""
    concatenated = [(loop, j) for loop in loops for j in range(loop.steps)]
    n = len(concatenated)
    found: set[LabelledConfiguration] = set()
    for perm in permutations(range(1, n + 1)):
        labelled, offset = [], 0
        for loop in loops:
            labelled.append(label_loop(g, loop.vertices, perm[offset : offset + loop.steps]))
            offset += loop.steps
        found.add(frozenset(labelled))
    return found


def _sign(config: LabelledConfiguration) -> int:
    return math.prod(loop.sign for loop in config)


def _abs_weight(config: LabelledConfiguration, x: EdgeWeights) -> float:
    return abs(math.prod(labelled_weight(loop, x) for loop in config))


@dataclass
class BijectionReport:
    """Outcome of auditing the involution on every labelled configuration with n steps."""

    n: int
    configurations: int = 0
    cases: Counter = field(default_factory=Counter)
    involution_ok: bool = True
    sign_flips_ok: bool = True
    weight_matches: bool = True
    counts_ok: bool = True
    case3_winding_ok: bool = True
    counterexample: str | None = None

    @property
    def ok(self) -> bool:
        return (
            self.involution_ok
            and self.sign_flips_ok
            and self.weight_matches
            and self.counts_ok
            and self.case3_winding_ok
        )

    def fail(self, attribute: str, config: LabelledConfiguration) -> None:
        setattr(self, attribute, False)
        if self.counterexample is None:
            self.counterexample = "; ".join(
                f"{loop.base.vertices} labels {loop.labels}" for loop in config
            )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "configurations": self.configurations,
            "case1": self.cases[1],
            "case2": self.cases[2],
            "case3": self.cases[3],
            "involution_ok": self.involution_ok,
            "sign_flips_ok": self.sign_flips_ok,
            "weight_matches": self.weight_matches,
            "counts_ok": self.counts_ok,
            "case3_winding_ok": self.case3_winding_ok,
            "ok": self.ok,
            "counterexample": self.counterexample,
        }


def bijection_audit(
    g: EmbeddedGraph, n: int, x: EdgeWeights | None = None, cap: int | None = None
) -> BijectionReport:
    """
    Exhaustively audit the involution on labelled configurations with ``n`` steps.

    Checks that it is an involution on the enumerated set, flips the sign, keeps the
    absolute weight, that labelling counts match n!/(Π m Π k!), and that case 3 changes
    the winding angle by an odd multiple of 2π.

    Raises:
        CapExceededError: If ``n`` exceeds ``SLISING_MAX_LABELLED_STEPS``
    """
    cap = get_settings().max_labelled_steps if cap is None else cap
    if n > cap:
        raise CapExceededError("Labelled step count", n, cap, "SLISING_MAX_LABELLED_STEPS")
    if x is None:
        x = EdgeWeights(g, [0.3 + 0.01 * e for e in range(g.n_edges)])

    report = BijectionReport(n)
    universe: set[LabelledConfiguration] = set()
    for loops in _loop_multisets(g, n):
        labelled = labelled_configurations(g, loops)
        if len(labelled) != expected_labelling_count(loops):
            report.fail("counts_ok", next(iter(labelled)))
        universe |= labelled
    report.configurations = len(universe)

    for config in universe:
        if minimal_label_pair(g, config) is None:
            continue
        image, case = involution(g, config)
        report.cases[case] += 1
        if image not in universe or involution(g, image)[0] != config:
            report.fail("involution_ok", config)
        if _sign(image) != -_sign(config):
            report.fail("sign_flips_ok", config)
        if not math.isclose(_abs_weight(image, x), _abs_weight(config, x), rel_tol=1e-12):
            report.fail("weight_matches", config)
        if case == 3:
            (before,) = config - image
            (after,) = image - config
            if (after.base.winding_turns - before.base.winding_turns) % 2 != 1:
                report.fail("case3_winding_ok", config)
    logger.info(
        f"Bijection audit at n={n}: {report.configurations} configurations, {dict(report.cases)}"
    )
    return report
