"""Tests for partition functions, free energy and correlations against spin enumeration."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slising import observables
from slising.errors import CapExceededError, DomainError, EmptyDualError, InputError
from slising.graph import Coordinate, EdgeWeights, EmbeddedGraph, build_rectangle
from slising.kac_ward import BETA_CRITICAL, onsager_integral
from slising.observables import (
    Backend,
    Boundary,
    IsingSpec,
    affinity_residual,
    augment_with_dual_path,
    beta_critical,
    decay_bound,
    decay_bound_check,
    default_dual_path,
    dual_beta,
    dual_path_weights,
    free_energy_series,
    generating_function,
    gibbs_bruteforce,
    high_temp_partition,
    lattice_path,
    low_temp_partition,
    one_point_plus,
    sign_flip_violations,
    two_point_free,
    two_point_free_series,
    two_point_plus,
    two_point_plus_series,
)

EXACT_BACKENDS = [Backend.ENUMERATION, Backend.DETERMINANT]
GIBBS_PAIRS = [((0, 0), (2, 1)), ((1, 1), (2, 2)), ((1, 1), (0, 2)), ((1, 0), (1, 2))]
FREE_PAIRS_4X4 = [
    ((0, 0), (2, 1)),
    ((1, 1), (2, 1)),
    ((1, 2), (3, 0)),
    ((0, 3), (3, 3)),
    ((1, 1), (2, 2)),
]


def at(spec: IsingSpec, i: int, j: int) -> int:
    return spec.graph.vertex_at(i, j)


def faces_next_to(g: EmbeddedGraph, w: int) -> list[Coordinate]:
    """Face centres diagonally next to w that lie strictly inside the box."""
    c = g.coordinates[w]
    x_hi, y_hi = (g.rectangle.width - 1) * 2, (g.rectangle.height - 1) * 2
    candidates = [c.shifted(dx, dy) for dx in (1, -1) for dy in (1, -1)]
    return [f for f in candidates if 0 < f.x < x_hi and 0 < f.y < y_hi]


class TestTemperatures:
    def test_critical_point_by_bisection(self):
        assert beta_critical() == pytest.approx(math.log(1 + math.sqrt(2)) / 2, abs=1e-12)
        assert BETA_CRITICAL == pytest.approx(math.log(1 + math.sqrt(2)) / 2, abs=1e-15)

    def test_duality_is_an_involution(self):
        assert dual_beta(BETA_CRITICAL) == pytest.approx(BETA_CRITICAL, abs=1e-12)
        assert dual_beta(dual_beta(0.3)) == pytest.approx(0.3, abs=1e-12)
        with pytest.raises(DomainError):
            dual_beta(-1.0)


class TestIsingSpec:
    def test_rejects_nonpositive_beta(self):
        with pytest.raises(DomainError):
            IsingSpec.rectangle(2, 2, 0.0)

    def test_rejects_non_rectangles(self, four_cycle):
        with pytest.raises(InputError):
            IsingSpec(four_cycle, 0.3)

    def test_boundary_from_string(self):
        assert IsingSpec.rectangle(2, 2, 0.3, "plus").boundary is Boundary.PLUS


class TestPartitionFunctions:
    @pytest.mark.parametrize("backend", list(Backend))
    def test_two_by_two_closed_form(self, backend):
        beta = 0.3
        spec = IsingSpec.rectangle(2, 2, beta)
        expected = 16 * math.cosh(beta) ** 4 * (1 + math.tanh(beta) ** 4)
        assert high_temp_partition(spec, backend) == pytest.approx(expected, rel=1e-8)
        assert gibbs_bruteforce(spec) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("beta", [0.2, 0.44, 0.7, 1.0])
    @pytest.mark.parametrize("shape", [(w, h) for w in range(1, 5) for h in range(1, 5)])
    def test_free_partition_triangle(self, shape, beta):
        free = IsingSpec.rectangle(*shape, beta)
        assert high_temp_partition(free) == pytest.approx(gibbs_bruteforce(free), rel=1e-9)

    @pytest.mark.parametrize("beta", [0.2, 0.44, 0.7, 1.0])
    @pytest.mark.parametrize("shape", [(w, h) for w in range(1, 5) for h in range(1, 6)])
    def test_plus_partition_triangle(self, shape, beta):
        plus = IsingSpec.rectangle(*shape, beta, "plus")
        assert low_temp_partition(plus) == pytest.approx(gibbs_bruteforce(plus), rel=1e-9)

    def test_low_temperature_determinant(self):
        plus = IsingSpec.rectangle(4, 4, 0.6, "plus")
        assert low_temp_partition(plus, Backend.DETERMINANT) == pytest.approx(
            gibbs_bruteforce(plus), rel=1e-9
        )

    def test_strip_has_no_free_plus_spins(self):
        spec = IsingSpec.rectangle(1, 3, 0.5, "plus")
        assert low_temp_partition(spec) == pytest.approx(math.exp(0.5 * 2))

    def test_boundary_mismatch(self):
        with pytest.raises(InputError):
            low_temp_partition(IsingSpec.rectangle(3, 3, 0.5))

    def test_spin_cap(self):
        with pytest.raises(CapExceededError):
            gibbs_bruteforce(IsingSpec.rectangle(5, 5, 0.3), cap=10)

    def test_spin_cap_from_environment(self, monkeypatch):
        monkeypatch.setenv("SLISING_MAX_SPINS", "4")
        with pytest.raises(CapExceededError) as info:
            gibbs_bruteforce(IsingSpec.rectangle(3, 3, 0.3))
        assert "SLISING_MAX_SPINS" in str(info.value)

    def test_loop_series_needs_norm_bound(self, square_3x3):
        with pytest.raises(DomainError):
            generating_function(square_3x3, EdgeWeights.constant(square_3x3, 0.5), Backend.LOOP_SERIES)


class TestFreeEnergy:
    @pytest.mark.slow
    @pytest.mark.parametrize("beta", [0.25, 0.3, 0.7, 0.9])
    def test_series_matches_onsager(self, beta):
        series = free_energy_series(beta, box_half_width=12, r_max=12)
        exact = onsager_integral(beta)
        assert abs(series.value - exact.value) <= series.tail + exact.error_estimate + 1e-8

    def test_first_terms_at_high_temperature(self):
        beta = 0.2
        series = free_energy_series(beta, r_max=6)
        x = math.tanh(beta)
        assert series.terms[4] == pytest.approx(x**4)
        assert series.terms[6] == pytest.approx(2 * x**6)

    def test_rejected_at_critical_point(self):
        with pytest.raises(DomainError):
            free_energy_series(BETA_CRITICAL)

    def test_box_must_hold_the_loops(self):
        with pytest.raises(InputError):
            free_energy_series(0.3, box_half_width=4, r_max=6)


class TestPlusCorrelations:
    @pytest.mark.parametrize("backend", EXACT_BACKENDS)
    @pytest.mark.parametrize("beta", [0.5, 0.6, 1.0])
    def test_two_point_matches_gibbs(self, backend, beta):
        spec = IsingSpec.rectangle(4, 4, beta, "plus")
        u, v = at(spec, 1, 1), at(spec, 2, 2)
        exact = gibbs_bruteforce(spec, (u, v))
        assert two_point_plus(spec, u, v, backend) == pytest.approx(exact, abs=1e-10)

    def test_path_choice_does_not_matter(self):
        spec = IsingSpec.rectangle(4, 4, 0.6, "plus")
        u, v = at(spec, 1, 1), at(spec, 2, 2)
        one = two_point_plus(spec, u, v, horizontal_first=True)
        other = two_point_plus(spec, u, v, path=lattice_path(spec.graph, u, v, False))
        assert one == pytest.approx(other, abs=1e-12)

    def test_boundary_pair_is_one(self):
        spec = IsingSpec.rectangle(4, 4, 0.6, "plus")
        assert two_point_plus(spec, at(spec, 0, 0), at(spec, 3, 2)) == 1.0

    def test_sign_flip_identity(self):
        spec = IsingSpec.rectangle(4, 4, 0.6, "plus")
        assert sign_flip_violations(spec, at(spec, 1, 1), at(spec, 2, 2)) == 0

    def test_one_point(self):
        spec = IsingSpec.rectangle(4, 4, 0.6, "plus")
        u = at(spec, 1, 2)
        assert one_point_plus(spec, u) == pytest.approx(gibbs_bruteforce(spec, (u,)), abs=1e-10)
        assert one_point_plus(spec, at(spec, 0, 1)) == 1.0

    def test_one_point_from_any_boundary_vertex(self):
        spec = IsingSpec.rectangle(4, 4, 0.6, "plus")
        u = at(spec, 1, 2)
        reference = one_point_plus(spec, u)
        for v in sorted(spec.graph.boundary()):
            assert one_point_plus(spec, u, v) == pytest.approx(reference, abs=1e-12), v

    def test_one_point_needs_boundary_partner(self):
        spec = IsingSpec.rectangle(4, 4, 0.6, "plus")
        with pytest.raises(InputError):
            one_point_plus(spec, at(spec, 1, 2), at(spec, 2, 2))

    def test_series_within_tail(self):
        spec = IsingSpec.rectangle(4, 4, 1.0, "plus")
        u, v = at(spec, 1, 1), at(spec, 2, 2)
        series = two_point_plus_series(spec, u, v, r_max=8)
        exact = gibbs_bruteforce(spec, (u, v))
        assert abs(series.value - exact) <= series.tail + 1e-12
        assert series.tail < 0.05

    def test_series_needs_low_temperature(self):
        spec = IsingSpec.rectangle(4, 4, 0.3, "plus")
        with pytest.raises(DomainError):
            two_point_plus_series(spec, at(spec, 1, 1), at(spec, 2, 2))

    def test_self_avoiding_path_required(self):
        spec = IsingSpec.rectangle(4, 4, 0.6, "plus")
        u, v = at(spec, 1, 1), at(spec, 2, 1)
        with pytest.raises(InputError):
            two_point_plus(spec, u, v, path=[u, v, u, v])


class TestFreeCorrelations:
    @pytest.mark.parametrize("backend", EXACT_BACKENDS)
    @pytest.mark.parametrize(
        "points", [((0, 0), (2, 1)), ((0, 0), (1, 0)), ((1, 1), (2, 2)), ((2, 0), (0, 2))]
    )
    def test_two_point_matches_gibbs(self, backend, points):
        spec = IsingSpec.rectangle(3, 3, 0.3)
        u, v = at(spec, *points[0]), at(spec, *points[1])
        exact = gibbs_bruteforce(spec, (u, v))
        assert two_point_free(spec, u, v, backend) == pytest.approx(exact, abs=1e-10)

    def test_odd_products_vanish(self):
        spec = IsingSpec.rectangle(3, 3, 0.6)
        assert gibbs_bruteforce(spec, (4,)) == 0.0
        assert gibbs_bruteforce(spec, (0, 4, 8)) == 0.0
        assert gibbs_bruteforce(IsingSpec.rectangle(3, 3, 0.6, "plus"), (4,)) > 0

    @pytest.mark.property_based
    @given(st.data())
    @settings(max_examples=30, deadline=None)
    def test_independent_of_dual_path(self, data):
        spec = IsingSpec.rectangle(4, 4, 0.3)
        g = spec.graph
        first, second = data.draw(st.sampled_from(FREE_PAIRS_4X4))
        u, v = at(spec, *first), at(spec, *second)
        cfg = default_dual_path(
            g,
            u,
            v,
            horizontal_first=data.draw(st.booleans()),
            u_star=data.draw(st.sampled_from(faces_next_to(g, u))),
            v_star=data.draw(st.sampled_from(faces_next_to(g, v))),
        )
        reference = two_point_free(spec, u, v, Backend.DETERMINANT)
        value = two_point_free(spec, u, v, Backend.DETERMINANT, cfg)
        assert value == pytest.approx(reference, abs=1e-12)

    def test_dual_path_construction(self):
        g = build_rectangle(3, 3)
        cfg = default_dual_path(g, g.vertex_at(0, 0), g.vertex_at(2, 1))
        assert cfg.u_star == Coordinate(1, 1)
        assert cfg.v_star == Coordinate(3, 3)
        assert cfg.gamma == (Coordinate(1, 1), Coordinate(3, 1), Coordinate(3, 3))
        aug = augment_with_dual_path(g, cfg)
        crossed = {aug.graph.edge_id(g.vertex_at(1, 0), g.vertex_at(1, 1))}
        crossed.add(aug.graph.edge_id(g.vertex_at(1, 1), g.vertex_at(2, 1)))
        assert aug.crossing_lattice_edges == frozenset(crossed)
        assert len(aug.gamma_edges) == 4
        x = dual_path_weights(aug, 0.3, 0.5)
        assert x[aug.uu_star] == 0.5
        assert all(x[e] == -math.tanh(0.3) for e in crossed)

    def test_adjacent_vertices_share_a_face(self):
        g = build_rectangle(3, 3)
        cfg = default_dual_path(g, g.vertex_at(1, 1), g.vertex_at(2, 1))
        assert cfg.u_star == cfg.v_star
        assert cfg.gamma == (cfg.u_star,)

    def test_dual_path_needs_faces(self):
        g = build_rectangle(1, 4)
        with pytest.raises(EmptyDualError):
            default_dual_path(g, 0, 3)

    def test_affine_in_t(self):
        spec = IsingSpec.rectangle(3, 3, 0.4)
        assert affinity_residual(spec, at(spec, 0, 0), at(spec, 2, 1)) < 1e-12

    @pytest.mark.slow
    def test_series_within_tail(self):
        spec = IsingSpec.rectangle(3, 3, 0.2)
        u, v = at(spec, 0, 0), at(spec, 1, 1)
        series = two_point_free_series(spec, u, v, r_max=8)
        exact = gibbs_bruteforce(spec, (u, v))
        assert abs(series.value - exact) <= series.tail + 1e-12

    def test_series_needs_high_temperature(self):
        spec = IsingSpec.rectangle(3, 3, 0.6)
        with pytest.raises(DomainError):
            two_point_free_series(spec, at(spec, 0, 0), at(spec, 1, 1))


class TestDecayBound:
    def test_formula(self):
        q = math.tanh(0.3) / math.tanh(BETA_CRITICAL)
        assert decay_bound(0.3, math.sqrt(2)) == pytest.approx(16 * q**2 / (1 - q))
        assert decay_bound(0.5, 3.0) == math.inf

    def test_holds_on_growing_boxes(self):
        report = decay_bound_check(0.3, (1, 1), (2, 2), sizes=(3, 4))
        assert report.ok
        assert [row["size"] for row in report.rows] == [3, 4]
        assert all(row["value"] >= 0 for row in report.rows)

    def test_needs_high_temperature(self):
        with pytest.raises(DomainError):
            decay_bound_check(0.5, (0, 0), (1, 1))

    def test_rounding_residue_is_clamped(self, monkeypatch):
        monkeypatch.setattr(observables, "two_point_free", lambda *args: -1e-15)
        report = decay_bound_check(0.3, (0, 0), (1, 1), sizes=(3,))
        assert report.ok
        assert report.rows[0]["value"] == 0.0
        assert report.to_dict()["rounding"] == observables.DECAY_ROUNDING
        monkeypatch.setattr(observables, "two_point_free", lambda *args: -1e-6)
        assert not decay_bound_check(0.3, (0, 0), (1, 1), sizes=(3,)).ok

    @pytest.mark.slow
    def test_all_pairs_within_distance_four(self):
        points = [(i, j) for i in range(5) for j in range(5)]
        for k, u in enumerate(points):
            for v in points[k + 1 :]:
                if math.dist(u, v) > 4:
                    continue
                sizes = tuple(s for s in (3, 4, 5) if max(*u, *v) < s)
                report = decay_bound_check(0.3, u, v, sizes=sizes)
                assert report.ok, (u, v)
                assert all(row["value"] >= 0 for row in report.rows)


class TestCorrelationsAgainstGibbs:
    @pytest.mark.parametrize("backend", EXACT_BACKENDS)
    @pytest.mark.parametrize("boundary", ["free", "plus"])
    @pytest.mark.parametrize("beta", [0.3, 0.7])
    @pytest.mark.parametrize("shape", [(3, 3), (3, 4)])
    def test_two_point(self, shape, beta, boundary, backend):
        spec = IsingSpec.rectangle(*shape, beta, boundary)
        two_point = two_point_free if boundary == "free" else two_point_plus
        for first, second in GIBBS_PAIRS:
            u, v = at(spec, *first), at(spec, *second)
            exact = gibbs_bruteforce(spec, (u, v))
            assert two_point(spec, u, v, backend) == pytest.approx(exact, abs=1e-9), (first, second)
