"""Tests for embedded graphs, crossings and even subsets."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slising.errors import CapExceededError, EmptyDualError, InputError, InvalidGraphError
from slising.fixtures import load_fixture
from slising.graph import (
    Coordinate,
    EdgeKind,
    EdgeWeights,
    EmbeddedGraph,
    build_rectangle,
    build_weak_dual,
    coordinate,
    dual_crossing_map,
    enumerate_even_subsets,
    even_subset_census,
    generating_function_bruteforce,
    segments_cross,
)
from slising.kac_ward import build_transition_matrix, determinant_evaluation


class TestCoordinates:
    def test_half_integers_are_exact(self):
        assert coordinate(0.5, 1) == Coordinate(1, 2)
        assert coordinate("1.5", -2) == Coordinate(3, -4)

    def test_quarter_rejected_over_halves(self):
        with pytest.raises(InputError):
            coordinate(0.25, 0)

    def test_order_compares_x_first(self):
        assert Coordinate(0, 5) < Coordinate(1, 0)
        assert Coordinate(1, 0) < Coordinate(1, 1)

    def test_touching_segments_do_not_cross(self):
        a, b = Coordinate(0, 0), Coordinate(2, 0)
        assert not segments_cross(a, b, Coordinate(2, 0), Coordinate(2, 2))
        assert not segments_cross(a, b, Coordinate(1, 0), Coordinate(1, 2))
        assert segments_cross(a, b, Coordinate(1, -1), Coordinate(1, 1))


class TestValidation:
    def test_duplicate_vertices(self):
        with pytest.raises(InvalidGraphError):
            EmbeddedGraph([(0, 0), (0, 0)], [])

    def test_self_loop(self):
        with pytest.raises(InvalidGraphError):
            EmbeddedGraph([(0, 0), (2, 0)], [(0, 0)])

    def test_multiple_edges(self):
        with pytest.raises(InvalidGraphError):
            EmbeddedGraph([(0, 0), (2, 0)], [(0, 1), (1, 0)])

    def test_vertex_inside_edge(self):
        with pytest.raises(InvalidGraphError):
            EmbeddedGraph([(0, 0), (4, 0), (2, 0)], [(0, 1)])

    def test_additional_cycle(self):
        additional = EdgeKind.ADDITIONAL
        with pytest.raises(InvalidGraphError):
            EmbeddedGraph(
                [(0, 0), (2, 0), (0, 2)],
                [(0, 1, additional), (1, 2, additional), (2, 0, additional)],
            )

    def test_denominator_power_of_two(self):
        with pytest.raises(InvalidGraphError):
            EmbeddedGraph([(0, 0)], [], denominator=3)

    def test_unknown_vertex(self, square_3x3):
        with pytest.raises(InputError):
            square_3x3.vertex_at(5, 5)


class TestStructure:
    def test_crossing_pair_has_one_crossing(self, crossing_pair):
        diagonal_a = crossing_pair.edge_id(0, 2)
        diagonal_b = crossing_pair.edge_id(1, 3)
        assert crossing_pair.crossings == frozenset({(diagonal_a, diagonal_b)})
        assert crossing_pair.crossing_count([diagonal_a, diagonal_b, 0]) == 1

    def test_crossing_count_rejects_unknown_edges(self, crossing_pair):
        with pytest.raises(InputError):
            crossing_pair.crossing_count([99])

    def test_rectangle_layout(self, square_3x3):
        assert square_3x3.n_vertices == 9
        assert square_3x3.n_edges == 12
        assert square_3x3.cycle_space_dimension == 4
        assert square_3x3.vertex_at(1, 2) == 1 * 3 + 2
        assert square_3x3.rank == tuple(range(9))
        assert square_3x3.boundary() == frozenset(range(9)) - {4}

    def test_weak_dual(self, square_3x3):
        dual = build_weak_dual(square_3x3)
        assert dual.n_vertices == 4
        assert dual.coordinates[0] == Coordinate(1, 1)
        mapping = dual_crossing_map(square_3x3, dual)
        assert len(mapping) == dual.n_edges == 4
        assert len(set(mapping.values())) == 4

    def test_weak_dual_of_a_strip_is_empty(self):
        with pytest.raises(EmptyDualError):
            build_weak_dual(build_rectangle(1, 4))

    def test_disjoint_union(self, four_cycle):
        union = four_cycle.disjoint_union(four_cycle)
        assert (union.n_vertices, union.n_edges) == (8, 8)
        assert not union.crossings

    @pytest.mark.parametrize(
        "z",
        [
            generating_function_bruteforce,
            lambda g, x: determinant_evaluation(build_transition_matrix(g, x)),
        ],
        ids=["enumeration", "determinant"],
    )
    def test_disjoint_union_multiplies_generating_functions(self, z, four_cycle, crossing_pair):
        union = four_cycle.disjoint_union(crossing_pair)
        assert len(union.crossings) == len(crossing_pair.crossings)

        def evaluate(g):
            return z(g, EdgeWeights.constant(g, 0.2))

        expected = evaluate(four_cycle) * evaluate(crossing_pair)
        assert evaluate(union) == pytest.approx(expected, rel=1e-10)

    def test_json_round_trip_keeps_kinds(self):
        g = build_rectangle(2, 2).with_additional([Coordinate(1, 1)], [(0, 4)])
        again = EmbeddedGraph.from_json_dict(g.to_json_dict())
        assert again.coordinates == g.coordinates
        assert again.edges == g.edges
        assert again.additional_edges == (g.n_edges - 1,)

    def test_malformed_json(self):
        with pytest.raises(InputError):
            EmbeddedGraph.from_json_dict({"vertices": [{"id": 0, "x": 0}]})

    @pytest.mark.property_based
    @given(st.integers(-20, 20), st.integers(-20, 20))
    @settings(max_examples=30, deadline=None)
    def test_crossings_are_translation_invariant(self, dx, dy):
        g = load_fixture("crossing_pair")
        assert g.translated(dx, dy).crossings == g.crossings


class TestWeights:
    def test_shape_checked(self, four_cycle):
        with pytest.raises(InputError):
            EdgeWeights(four_cycle, [0.1, 0.2])

    def test_overrides(self, four_cycle):
        x = EdgeWeights.from_pairs(four_cycle, 0.5, {(1, 0): -0.25})
        assert x.weight(0, 1) == -0.25
        assert x.sup_norm == 0.5
        assert not x.is_complex
        assert x.with_values({2: 1j}).is_complex


class TestEvenSubsets:
    def test_empty_subset_first(self, square_3x3):
        assert next(enumerate_even_subsets(square_3x3)) == frozenset()

    def test_three_by_three_census(self, square_3x3):
        assert even_subset_census(square_3x3) == {0: 1, 4: 4, 6: 4, 8: 7}

    def test_methods_agree(self, crossing_pair):
        basis = set(enumerate_even_subsets(crossing_pair, method="basis"))
        scan = set(enumerate_even_subsets(crossing_pair, method="subsets"))
        assert basis == scan
        assert len(basis) == 2**crossing_pair.cycle_space_dimension

    def test_every_subset_is_even(self, figure_eight):
        for subset in enumerate_even_subsets(figure_eight):
            degree = [0] * figure_eight.n_vertices
            for e in subset:
                degree[figure_eight.edges[e].u] += 1
                degree[figure_eight.edges[e].v] += 1
            assert all(d % 2 == 0 for d in degree)

    def test_cap(self):
        with pytest.raises(CapExceededError) as info:
            list(enumerate_even_subsets(build_rectangle(5, 5), method="subsets", cap=10))
        assert info.value.exit_code == 3

    def test_unknown_method(self, four_cycle):
        with pytest.raises(InputError):
            list(enumerate_even_subsets(four_cycle, method="magic"))

    def test_crossing_sign_enters_generating_function(self, crossing_pair):
        x = 0.3
        census = even_subset_census(crossing_pair)
        expected = math.fsum(count * x**size for size, count in census.items())
        z = generating_function_bruteforce(crossing_pair, EdgeWeights.constant(crossing_pair, x))
        assert z == pytest.approx(expected, rel=1e-12)
        bowtie = frozenset(crossing_pair.edge_id(a, b) for a, b in ((0, 1), (1, 3), (3, 2), (2, 0)))
        assert bowtie in set(enumerate_even_subsets(crossing_pair))
        assert crossing_pair.crossing_count(bowtie) == 1
