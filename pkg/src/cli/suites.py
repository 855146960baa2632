"""Verification suites run by ``slising verify``."""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from config import get_logger
from slising.cancellation import (
    bijection_audit,
    pairing_parity_census,
    pairing_recursion_holds,
    verify_cancellation,
    verify_signed_decomposition,
    z_from_decompositions,
)
from slising.fixtures import load_fixture, load_fixtures
from slising.graph import (
    EdgeWeights,
    EmbeddedGraph,
    build_rectangle,
    enumerate_even_subsets,
    generating_function_bruteforce,
)
from slising.kac_ward import (
    TorusSpec,
    build_torus,
    build_transition_matrix,
    determinant_evaluation,
    operator_norm,
    torus_determinant,
    torus_fourier_determinant,
    trace_identity_check,
)
from slising.loops import NORM_CONSTANT, length_sums
from slising.observables import (
    IsingSpec,
    gibbs_bruteforce,
    high_temp_partition,
    low_temp_partition,
)

logger = get_logger(__name__)

SUITES = ("identities", "cancellation", "bijection", "norms")

SMALL_RECTANGLES = [(w, h) for w in range(1, 4) for h in range(1, 4)]
FREE_TRIANGLE_RECTANGLES = [(w, h) for w in range(1, 5) for h in range(1, 5)]
PLUS_TRIANGLE_RECTANGLES = [(w, h) for w in range(1, 5) for h in range(1, 6)]
SWEEP_BETAS = (0.2, 0.44, 0.7, 1.0)


@dataclass
class SuiteResult:
    """Checks of one suite; the first failing check is kept as counterexample."""

    name: str
    checks: list[dict[str, Any]] = field(default_factory=list)
    counterexample: dict[str, Any] | None = None

    @property
    def ok(self) -> bool:
        return all(check["ok"] for check in self.checks)

    def record(self, check: str, passed: bool, **detail: Any) -> None:
        entry = {"suite": self.name, "check": check, **detail, "ok": bool(passed)}
        self.checks.append(entry)
        if not passed:
            logger.warning(f"{self.name}: {check} failed ({detail})")
            if self.counterexample is None:
                self.counterexample = entry

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.name,
            "ok": self.ok,
            "checks": self.checks,
            "counterexample": self.counterexample,
        }


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _random_weights(g: EmbeddedGraph, rng: np.random.Generator, bound: float) -> EdgeWeights:
    return EdgeWeights(g, rng.uniform(-bound, bound, size=g.n_edges))


def identities_suite(rng: np.random.Generator) -> SuiteResult:
    """Determinant, partition-function, trace and decomposition identities."""
    result = SuiteResult("identities")
    for w, h in SMALL_RECTANGLES:
        g = build_rectangle(w, h)
        worst = 0.0
        for _ in range(20):
            x = _random_weights(g, rng, 0.4)
            worst = max(
                worst,
                _relative(
                    determinant_evaluation(build_transition_matrix(g, x)),
                    generating_function_bruteforce(g, x),
                ),
            )
        result.record("determinant_identity", worst < 1e-10, graph=g.describe(), residual=worst)

    for boundary, shapes in (
        ("free", FREE_TRIANGLE_RECTANGLES),
        ("plus", PLUS_TRIANGLE_RECTANGLES),
    ):
        partition = high_temp_partition if boundary == "free" else low_temp_partition
        for w, h in shapes:
            g = build_rectangle(w, h)
            for beta in SWEEP_BETAS:
                spec = IsingSpec(g, beta, boundary)
                residual = _relative(partition(spec), gibbs_bruteforce(spec))
                result.record(
                    "partition_triangle",
                    residual < 1e-9,
                    graph=g.describe(),
                    boundary=boundary,
                    beta=beta,
                    residual=residual,
                )

    g = build_rectangle(3, 3)
    x = _random_weights(g, rng, 0.3)
    report = trace_identity_check(build_transition_matrix(g, x), length_sums(g, x, 10), 10)
    result.record("trace_identity", report.ok, graph=g.describe(), **report.to_dict())

    for name, g in load_fixtures().items():
        x = _random_weights(g, rng, 0.5)
        z = generating_function_bruteforce(g, x)
        residual = _relative(z_from_decompositions(g, x), z)
        result.record("z_from_decompositions", residual < 1e-12, graph=name, residual=residual)
        reports = [verify_signed_decomposition(g, f) for f in enumerate_even_subsets(g)]
        failing = [r.to_dict() for r in reports if not r.ok]
        result.record(
            "signed_decomposition",
            not failing,
            graph=name,
            subsets=len(reports),
            first_failure=failing[0] if failing else None,
        )
    return result


def cancellation_suite(rng: np.random.Generator) -> SuiteResult:
    """Non-edge-disjoint configurations cancel; pairing parity census."""
    result = SuiteResult("cancellation")
    for name in ("four_cycle", "two_squares", "rectangle_2x3"):
        g = load_fixture(name)
        x = _random_weights(g, rng, 0.5)
        for r in range(1, 9):
            report = verify_cancellation(g, r, x)
            result.record("cancellation", report.ok, graph=name, **report.to_dict())
    for k in range(1, 6):
        even, odd = pairing_parity_census(k)
        result.record(
            "pairing_parity",
            even - odd == 1 and pairing_recursion_holds(k),
            k=k,
            even=even,
            odd=odd,
        )
    return result


def bijection_suite(rng: np.random.Generator) -> SuiteResult:
    """Labelled-loop involution on the 4-cycle."""
    result = SuiteResult("bijection")
    g = load_fixture("four_cycle")
    x = EdgeWeights(g, rng.uniform(0.1, 0.5, size=g.n_edges))
    for n in (4, 8):
        report = bijection_audit(g, n, x)
        result.record("bijection_audit", report.ok, graph="four_cycle", **report.to_dict())
    return result


def norms_suite(rng: np.random.Generator) -> SuiteResult:
    """Torus operator norm, rectangle norm bound and the torus Fourier product."""
    result = SuiteResult("norms")
    for m_size, n_size in ((2, 2), (3, 3), (4, 4), (2, 4)):
        spec = TorusSpec(m_size, n_size)
        _, matrix = build_torus(spec)
        norm = operator_norm(matrix.matrix)
        result.record(
            "torus_norm",
            abs(norm - NORM_CONSTANT) < 1e-9,
            torus=f"{m_size}x{n_size}",
            norm=norm,
        )
        for x in (0.1, 0.2, 0.3, 0.4):
            residual = _relative(torus_determinant(matrix, x), torus_fourier_determinant(spec, x))
            result.record(
                "torus_fourier",
                residual < 1e-9,
                torus=f"{m_size}x{n_size}",
                x=x,
                residual=residual,
            )
    worst = -math.inf
    for _ in range(50):
        w, h = (int(v) for v in rng.integers(1, 5, size=2))
        g = build_rectangle(w, h)
        x = _random_weights(g, rng, 1.0)
        excess = operator_norm(build_transition_matrix(g, x).matrix) - NORM_CONSTANT * x.sup_norm
        worst = max(worst, excess)
    result.record("rectangle_norm_bound", worst <= 1e-9, draws=50, worst_excess=worst)
    return result


_RUNNERS: dict[str, Callable[[np.random.Generator], SuiteResult]] = {
    "identities": identities_suite,
    "cancellation": cancellation_suite,
    "bijection": bijection_suite,
    "norms": norms_suite,
}


def run_suites(name: str, seed: int = 0) -> list[SuiteResult]:
    """Run one suite, or all of them for ``"all"``, with a seeded generator."""
    names = SUITES if name == "all" else (name,)
    results = []
    for suite in names:
        logger.info(f"Running {suite} suite")
        results.append(_RUNNERS[suite](np.random.default_rng(seed)))
    return results
