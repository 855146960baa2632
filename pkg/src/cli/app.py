"""Command-line entry point for slising.

Commands:
    verify       run the property suites over the bundled fixtures
    free-energy  -βf(β) from Onsager's integral and/or the loop series
    correlate    one- and two-point functions on growing boxes with method cross-checks
    partition    generating function or partition function of one graph
    census       loop census of a graph as CSV
"""

import argparse
import logging
import math
import sys

from cli.suites import SUITES, run_suites
from cli.utils import (
    Record,
    emit,
    parse_beta_grid,
    parse_int_list,
    parse_pair,
    resolve_graph,
    timed,
)
from config import LoggerConfig, get_logger
from slising.errors import (
    CapExceededError,
    DomainError,
    IdentityViolation,
    InputError,
    SlisingError,
)
from slising.graph import EdgeWeights, load_weights
from slising.kac_ward import BETA_CRITICAL, onsager_integral
from slising.loops import census_frame, enumerate_loops, write_census
from slising.observables import (
    Backend,
    Boundary,
    IsingSpec,
    decay_bound,
    free_energy_series,
    generating_function,
    gibbs_bruteforce,
    high_temp_partition,
    low_temp_partition,
    two_point_free,
    two_point_free_series,
    two_point_plus,
    two_point_plus_series,
)

logger = get_logger(__name__)

BACKEND_ALIASES = {
    "enum": Backend.ENUMERATION,
    "enumeration": Backend.ENUMERATION,
    "det": Backend.DETERMINANT,
    "determinant": Backend.DETERMINANT,
    "loop-series": Backend.LOOP_SERIES,
    "series": Backend.LOOP_SERIES,
}

AGREEMENT_TOLERANCE = 1e-9


def _backend(name: str) -> Backend:
    try:
        return BACKEND_ALIASES[name]
    except KeyError:
        raise InputError(f"Unknown backend {name!r}") from None


# Commands


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_suites(args.suite, args.seed)
    ok = all(result.ok for result in results)
    payload = {"ok": ok, "seed": args.seed, "suites": [result.to_dict() for result in results]}
    rows = [check for result in results for check in result.checks]
    emit(payload, rows, args.out)
    for result in results:
        status = "pass" if result.ok else "FAIL"
        logger.info(f"{result.name}: {status} ({len(result.checks)} checks)")
        if result.counterexample is not None:
            logger.error(f"First counterexample in {result.name}: {result.counterexample}")
    return 0 if ok else 1


def cmd_free_energy(args: argparse.Namespace) -> int:
    grid = parse_beta_grid(args.beta)
    if args.method in ("series", "both"):
        near = [beta for beta in grid if abs(beta - BETA_CRITICAL) < 1e-3]
        if near:
            raise DomainError(f"Series method needs |β - β_c| >= 1e-3, got {near}")

    records: list[Record] = []
    failures = []
    for beta in grid:
        onsager = series = None
        if args.method in ("onsager", "both"):
            onsager, ms = timed(lambda b=beta: onsager_integral(b), args.timing)
            records.append(
                Record("-beta*f", "onsager", "Z^2", beta, onsager.value, onsager.error_estimate, ms)
            )
        if args.method in ("series", "both"):
            series, ms = timed(
                lambda b=beta: free_energy_series(b, args.box_half_width, args.r_max), args.timing
            )
            box = 2 * (args.box_half_width or args.r_max) + 1
            records.append(
                Record("-beta*f", "series", f"box {box}x{box}", beta, series.value, series.tail, ms)
            )
        if onsager is not None and series is not None:
            gap = abs(onsager.value - series.value)
            if gap > series.tail + onsager.error_estimate + 1e-8:
                failures.append({"beta": beta, "gap": gap, "tail": series.tail})

    rows = [record.to_dict() for record in records]
    emit({"records": rows, "failures": failures, "ok": not failures}, rows, args.out)
    if failures:
        raise IdentityViolation("Onsager integral and loop series disagree", failures[0])
    return 0


def _correlation_methods(spec: IsingSpec, u: int, v: int, backends: list[Backend]):
    """Yield (method, thunk returning (value, error bound)) for every requested method."""
    yield "gibbs", lambda: (gibbs_bruteforce(spec, (u, v)), 0.0)
    if spec.boundary is Boundary.PLUS:
        for backend in backends:
            if backend is Backend.LOOP_SERIES:
                yield backend.value, lambda: _series(two_point_plus_series(spec, u, v))
            else:
                yield backend.value, lambda b=backend: (two_point_plus(spec, u, v, b), 0.0)
    else:
        for backend in backends:
            if backend is Backend.LOOP_SERIES:
                yield backend.value, lambda: _series(two_point_free_series(spec, u, v))
            else:
                yield backend.value, lambda b=backend: (two_point_free(spec, u, v, b), 0.0)


def _series(result) -> tuple[float, float]:
    return result.value, result.tail


def cmd_correlate(args: argparse.Namespace) -> int:
    u_point, v_point = parse_pair(args.u), parse_pair(args.v)
    if u_point == v_point:
        raise InputError("Two-point function needs distinct vertices")
    sizes = parse_int_list(args.sizes)
    backends = list(Backend) if args.backend == "all" else [_backend(args.backend)]
    boundary = Boundary(args.bc)

    records: list[Record] = []
    disagreements = []
    for size in sizes:
        spec = IsingSpec.rectangle(size, size, args.beta, boundary)
        g = spec.graph
        u, v = g.vertex_at(*u_point), g.vertex_at(*v_point)
        values: list[tuple[str, float, float]] = []
        for method, compute in _correlation_methods(spec, u, v, backends):
            try:
                (value, bound), ms = timed(compute, args.timing)
            except (CapExceededError, DomainError) as e:
                logger.info(f"Skipping {method} on {g.describe()}: {e}")
                continue
            values.append((method, value, bound))
            observable = f"<s{u_point}s{v_point}>{boundary.value}"
            records.append(Record(observable, method, g.describe(), args.beta, value, bound, ms))
        if not values:
            continue
        reference_method, reference, _ = values[0]
        for method, value, bound in values[1:]:
            if abs(value - reference) > AGREEMENT_TOLERANCE + bound:
                disagreements.append(
                    {
                        "size": size,
                        "methods": [reference_method, method],
                        "values": [reference, value],
                    }
                )
        if boundary is Boundary.FREE and args.beta < BETA_CRITICAL:
            distance = math.hypot(u_point[0] - v_point[0], u_point[1] - v_point[1])
            bound = decay_bound(args.beta, distance)
            records.append(
                Record("decay_bound", "bound", g.describe(), args.beta, bound, None, None)
            )
            if not 0 <= reference <= bound + AGREEMENT_TOLERANCE:
                disagreements.append({"size": size, "decay_bound": bound, "value": reference})

    rows = [record.to_dict() for record in records]
    emit({"records": rows, "disagreements": disagreements, "ok": not disagreements}, rows, args.out)
    if disagreements:
        raise IdentityViolation("Correlation methods disagree", disagreements[0])
    return 0


def cmd_partition(args: argparse.Namespace) -> int:
    g = resolve_graph(args.graph, args.rectangle, args.fixture)
    backend = _backend(args.backend)
    if args.bc is not None:
        spec = IsingSpec(g, args.beta, Boundary(args.bc))
        compute = high_temp_partition if spec.boundary is Boundary.FREE else low_temp_partition
        value, ms = timed(lambda: compute(spec, backend), args.timing)
        observable = f"Z^{spec.boundary.value}"
        record = Record(observable, backend.value, g.describe(), args.beta, value, None, ms)
    else:
        if args.weights:
            x = load_weights(args.weights, g)
        else:
            x = EdgeWeights.constant(g, math.tanh(args.beta))
        value, ms = timed(lambda: generating_function(g, x, backend, args.r_max), args.timing)
        record = Record("Z_G(x)", backend.value, g.describe(), args.beta, value, None, ms)
    row = record.to_dict()
    emit({"records": [row]}, [row], args.out)
    return 0


def cmd_census(args: argparse.Namespace) -> int:
    g = resolve_graph(args.graph, args.rectangle, args.fixture)
    loops = list(enumerate_loops(g, args.max_steps))
    if args.out is not None and args.out.lower().endswith(".csv"):
        write_census(g, loops, args.out)
        return 0
    rows = census_frame(g, loops).to_dict(orient="records")
    emit({"graph": g.describe(), "loops": rows}, rows, args.out)
    return 0


# Parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (.json or .csv); JSON on stdout by default")
    common.add_argument("--seed", type=int, default=0, help="seed for random weight sweeps")
    common.add_argument("--verbose", action="store_true", help="debug logging on the console")
    common.add_argument(
        "--no-timing", dest="timing", action="store_false", help="emit runtime_ms as null"
    )

    parser = argparse.ArgumentParser(
        prog="slising", description="Signed loops and the Kac-Ward formula for the 2D Ising model"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", parents=[common], help="run verification suites")
    verify.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    verify.set_defaults(handler=cmd_verify)

    free_energy = commands.add_parser("free-energy", parents=[common], help="free energy density")
    free_energy.add_argument("--beta", required=True, help="'start:step:stop' or 'b1,b2,...'")
    free_energy.add_argument("--method", choices=["onsager", "series", "both"], default="both")
    free_energy.add_argument("--r-max", type=int, default=12)
    free_energy.add_argument("--box-half-width", type=int, default=None)
    free_energy.set_defaults(handler=cmd_free_energy)

    correlate = commands.add_parser("correlate", parents=[common], help="two-point functions")
    correlate.add_argument("--bc", choices=[b.value for b in Boundary], required=True)
    correlate.add_argument("--u", required=True, help="lattice point 'i,j'")
    correlate.add_argument("--v", required=True, help="lattice point 'i,j'")
    correlate.add_argument("--beta", type=float, required=True)
    correlate.add_argument("--sizes", default="3,4,5", help="box side lengths")
    correlate.add_argument("--backend", default="all", choices=[*BACKEND_ALIASES, "all"])
    correlate.set_defaults(handler=cmd_correlate)

    partition = commands.add_parser("partition", parents=[common], help="Z of one graph")
    _add_graph_source(partition)
    partition.add_argument("--beta", type=float, required=True)
    partition.add_argument("--weights", help="weights JSON instead of constant tanh(beta)")
    partition.add_argument("--bc", choices=[b.value for b in Boundary], default=None)
    partition.add_argument("--backend", default="det", choices=list(BACKEND_ALIASES))
    partition.add_argument("--r-max", type=int, default=12)
    partition.set_defaults(handler=cmd_partition)

    census = commands.add_parser("census", parents=[common], help="loop census")
    _add_graph_source(census)
    census.add_argument("--max-steps", type=int, default=8)
    census.set_defaults(handler=cmd_census)
    return parser


def _add_graph_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--graph", help="graph JSON file")
    parser.add_argument("--rectangle", help="builtin rectangle 'WxH'")
    parser.add_argument("--fixture", help="bundled fixture name")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        LoggerConfig.set_console_level(logging.DEBUG)
    if getattr(args, "beta", None) is not None and isinstance(args.beta, float) and args.beta <= 0:
        parser.error("--beta must be positive")

    try:
        logger.info(f"Running {args.command}")
        return args.handler(args)
    except SlisingError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"slising: error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
